//! Local trade-off geometry between information gain and disturbance for a
//! single measurement outcome on a `d`-level system.
//!
//! A measurement is described by its descending singular values `λ`. From
//! them the crate computes the estimation fidelity `G`, the operation
//! fidelity `F` and the physical reversibility `R`, their gradients, the
//! steepest admissible directions on the boundary of the ordered simplex, and
//! the angles between them. On top of that sit samplers for the joint changes
//! `(ΔG, ΔD)` under small modifications, a greedy improver that follows
//! `g⁺ + d⁺`, and independent numerical checks (Haar Monte Carlo, finite
//! differences, brute-force direction search).

pub mod correlation;
pub mod error;
pub mod geometry;
pub mod improver;
pub mod measurement;
pub mod oracle;
pub mod presets;
mod sampling;
mod vecops;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use geometry::{
    angle_set, boundary_angles, direction_set, gradients, steepest_ascent, steepest_descent,
    successive_projection, unit_gradient_directions, AngleSet, BoundaryAngles, DirectionSet,
};
pub use measurement::{
    canonicalize, degeneracy_profile, family_m, family_p, metrics, outcome_probability,
    parse_lambdas, DegeneracyProfile, Measurement, MetricTriple,
};

/// Which disturbance is paired with the information gain `G`.
///
/// For `Gf` the disturbance is `D = 1 − F`, for `Gr` it is `D = 1 − R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pair {
    Gf,
    Gr,
}

impl Pair {
    /// `D = 1 − F` or `D = 1 − R`.
    pub fn disturbance(self, m: &Measurement) -> f64 {
        let t = m.metrics();
        match self {
            Pair::Gf => 1.0 - t.f,
            Pair::Gr => 1.0 - t.r,
        }
    }

    /// `C⁺⁺`: cosine between the steepest ascents of `G` and of `F` (or `R`).
    pub fn c_pp(self, a: &AngleSet) -> f64 {
        match self {
            Pair::Gf => a.c_gf_pp,
            Pair::Gr => a.c_gr_pp,
        }
    }

    /// `1 + C⁺⁺`; zero means no admissible direction improves both quantities.
    pub fn improvability(self, m: &Measurement) -> f64 {
        1.0 + self.c_pp(&angle_set(m))
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pair::Gf => "gf",
            Pair::Gr => "gr",
        })
    }
}

impl FromStr for Pair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Pair> {
        match s.to_ascii_lowercase().as_str() {
            "gf" => Ok(Pair::Gf),
            "gr" => Ok(Pair::Gr),
            other => Err(Error::Parse(format!("unknown pair {other:?}, expected gf or gr"))),
        }
    }
}
