//! Named archetype measurements, one per degeneracy class, for `d = 4`.

use crate::error::{Error, Result};
use crate::measurement::Measurement;
use crate::Pair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub pair: Pair,
    pub lambdas: [f64; 4],
}

impl Preset {
    pub fn measurement(&self) -> Measurement {
        Measurement::new(&self.lambdas).expect("preset values are valid")
    }
}

/// `C_GF ≈ −0.6` with no active constraint.
pub const GF_SMOOTH: [f64; 4] = [1.0, 0.8, 0.5, 0.32];

pub const PRESETS: [Preset; 12] = [
    Preset { name: "smooth", pair: Pair::Gf, lambdas: GF_SMOOTH },
    Preset { name: "optimal", pair: Pair::Gf, lambdas: [1.0, 0.5, 0.5, 0.5] },
    Preset { name: "n1=2", pair: Pair::Gf, lambdas: [1.0, 1.0, 0.5, 0.2] },
    Preset { name: "n0=1", pair: Pair::Gf, lambdas: [1.0, 0.6, 0.3, 0.0] },
    Preset { name: "n1=2,n0=1", pair: Pair::Gf, lambdas: [1.0, 1.0, 0.5, 0.0] },
    Preset { name: "p_r", pair: Pair::Gf, lambdas: [1.0, 1.0, 0.0, 0.0] },
    Preset { name: "smooth", pair: Pair::Gr, lambdas: [1.0, 0.7, 0.4, 0.2] },
    Preset { name: "nd=2", pair: Pair::Gr, lambdas: [1.0, 0.6, 0.3, 0.3] },
    Preset { name: "n1=nd=2", pair: Pair::Gr, lambdas: [1.0, 1.0, 0.4, 0.4] },
    Preset { name: "optimal", pair: Pair::Gr, lambdas: [1.0, 0.31, 0.31, 0.31] },
    Preset { name: "ld=0", pair: Pair::Gr, lambdas: [1.0, 0.6, 0.3, 0.0] },
    Preset { name: "p_d", pair: Pair::Gr, lambdas: [1.0, 1.0, 1.0, 1.0] },
];

pub fn presets(pair: Pair) -> impl Iterator<Item = &'static Preset> {
    PRESETS.iter().filter(move |p| p.pair == pair)
}

pub fn find(pair: Pair, name: &str) -> Result<&'static Preset> {
    presets(pair).find(|p| p.name == name).ok_or_else(|| {
        let known: Vec<_> = presets(pair).map(|p| p.name).collect();
        Error::Parse(format!(
            "unknown {pair} preset {name:?}; known: {}",
            known.join(", ")
        ))
    })
}
