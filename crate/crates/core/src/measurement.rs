//! Single-outcome measurements described by their singular values.
//!
//! A measurement outcome `m` on a `d`-dimensional system is fully characterized
//! (for a completely unknown pure input state) by the singular values of its
//! measurement operator, stored in descending order with the largest one
//! strictly positive. Everything else in the crate is a function of this
//! vector.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance used to detect equal singular values.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Negative inputs no smaller than `-NEGATIVE_CLAMP` are clamped to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

/// Descending singular-value vector of one measurement outcome.
///
/// Invariants: `d >= 2`, `1 >= λ[0] >= λ[1] >= ... >= λ[d-1] >= 0`, `λ[0] > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    lambdas: Vec<f64>,
}

impl Measurement {
    /// Validates and sorts `raw` without rescaling.
    pub fn new(raw: &[f64]) -> Result<Self> {
        canonicalize(raw, false)
    }

    /// Wraps a vector that is already sorted and in range. Used internally
    /// after steps whose output is known to satisfy the invariants.
    pub(crate) fn from_sorted(lambdas: Vec<f64>) -> Self {
        debug_assert!(lambdas.len() >= 2);
        debug_assert!(lambdas.windows(2).all(|w| w[0] >= w[1]));
        debug_assert!(lambdas[0] > 0.0 && lambdas[0] <= 1.0);
        Measurement { lambdas }
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn into_lambdas(self) -> Vec<f64> {
        self.lambdas
    }

    /// Largest singular value.
    pub fn max(&self) -> f64 {
        self.lambdas[0]
    }

    /// Smallest singular value.
    pub fn min(&self) -> f64 {
        self.lambdas[self.lambdas.len() - 1]
    }

    pub fn moments(&self) -> Moments {
        Moments {
            sigma_sq: self.lambdas.iter().map(|x| x * x).sum(),
            tau: self.lambdas.iter().sum(),
        }
    }

    pub fn profile(&self) -> DegeneracyProfile {
        degeneracy_profile(self, DEFAULT_TOL)
    }

    pub fn metrics(&self) -> MetricTriple {
        metrics(self)
    }
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.lambdas.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

/// Parses the comma-separated text form, e.g. `0.8,0.7,0.4,0`.
pub fn parse_lambdas(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(text.to_string()))
        })
        .collect()
}

impl FromStr for Measurement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measurement::new(&parse_lambdas(s)?)
    }
}

impl<'de> Deserialize<'de> for Measurement {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            lambdas: Vec<f64>,
        }
        let raw = Raw::deserialize(de)?;
        Measurement::new(&raw.lambdas).map_err(serde::de::Error::custom)
    }
}

/// Power sums of the singular values: `σ² = Σ λᵢ²` and `τ = Σ λᵢ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub sigma_sq: f64,
    pub tau: f64,
}

/// Multiplicities of the extreme singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegeneracyProfile {
    /// Multiplicity of the maximum.
    pub n1: usize,
    /// Multiplicity of the minimum.
    pub nd: usize,
    /// Number of zero singular values.
    pub n0: usize,
    /// Relative tolerance the counts were detected with.
    pub tol: f64,
    d: usize,
}

impl DegeneracyProfile {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Indices tied with the maximum.
    pub fn top_block(&self) -> Range<usize> {
        0..self.n1
    }

    /// Indices tied with the minimum.
    pub fn bottom_block(&self) -> Range<usize> {
        self.d - self.nd..self.d
    }

    /// Indices holding a zero singular value.
    pub fn zero_block(&self) -> Range<usize> {
        self.d - self.n0..self.d
    }

    /// `c·(1,…,1,0,…,0)`: all nonzero values equal.
    pub fn is_uniform_projection(&self) -> bool {
        self.n1 + self.n0 == self.d
    }

    /// Rank-1 projective measurement `p₁`.
    pub fn is_rank_one(&self) -> bool {
        self.n1 == 1 && self.n0 == self.d - 1
    }

    /// Identity operation `p_d` (all singular values equal).
    pub fn is_identity(&self) -> bool {
        self.n1 == self.d
    }

    /// No ordering constraint is active.
    pub fn is_smooth(&self) -> bool {
        self.n1 == 1 && self.nd == 1 && self.n0 == 0
    }
}

/// Information and disturbance of one outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    /// Estimation fidelity.
    pub g: f64,
    /// Operation fidelity.
    pub f: f64,
    /// Physical reversibility.
    pub r: f64,
}

/// Sorts `raw` into a valid [`Measurement`].
///
/// Entries in `[-1e-12, 0)` are clamped to zero. With `allow_rescale`, a
/// vector whose maximum exceeds 1 is divided by that maximum; the metrics are
/// invariant under this rescaling. Without it, such input is rejected.
pub fn canonicalize(raw: &[f64], allow_rescale: bool) -> Result<Measurement> {
    if raw.len() < 2 {
        return Err(Error::TooShort(raw.len()));
    }
    let mut lambdas = Vec::with_capacity(raw.len());
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        if value < -NEGATIVE_CLAMP {
            return Err(Error::Negative { index, value });
        }
        lambdas.push(if value <= 0.0 { 0.0 } else { value });
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));

    let max = lambdas[0];
    if max == 0.0 {
        return Err(Error::AllZero);
    }
    if max > 1.0 {
        if allow_rescale {
            lambdas.iter_mut().for_each(|x| *x /= max);
            lambdas[0] = 1.0;
        } else if max <= 1.0 + NEGATIVE_CLAMP {
            lambdas.iter_mut().for_each(|x| *x = x.min(1.0));
        } else {
            let index = raw.iter().position(|&x| x == max).unwrap_or(0);
            return Err(Error::AboveOne { index, value: max });
        }
    }
    Ok(Measurement { lambdas })
}

/// Counts the multiplicities of the maximum, the minimum and zero.
///
/// Two values are treated as equal when they differ by at most `tol·λ₁`.
/// The maximum block is counted first and the minimum block only among the
/// remaining indices, so `n1 + nd <= d` unless all values are equal.
pub fn degeneracy_profile(m: &Measurement, tol: f64) -> DegeneracyProfile {
    let lam = m.lambdas();
    let d = lam.len();
    let scale = tol * lam[0];

    let n1 = lam.iter().take_while(|&&x| lam[0] - x <= scale).count();
    if n1 == d {
        return DegeneracyProfile { n1: d, nd: d, n0: 0, tol, d };
    }
    let n0 = lam.iter().rev().take_while(|&&x| x <= scale).count();
    let nd = if n0 > 0 {
        n0
    } else {
        let min = lam[d - 1];
        lam[n1..].iter().rev().take_while(|&&x| x - min <= scale).count()
    };
    DegeneracyProfile { n1, nd, n0, tol, d }
}

/// `p_r = c·(1,…,1,0,…,0)` with `r` leading ones.
pub fn family_p(d: usize, r: usize, c: f64) -> Result<Measurement> {
    if d < 2 || r < 1 || r > d {
        return Err(Error::Family(format!("p: need 1 <= r <= d and d >= 2, got d={d}, r={r}")));
    }
    check_scale(c)?;
    let mut lambdas = vec![0.0; d];
    lambdas[..r].iter_mut().for_each(|x| *x = c);
    Ok(Measurement { lambdas })
}

/// `m_{k,l}(λ) = c·(1,…,1, λ,…,λ, 0,…,0)` with `k` ones and `l` copies of `λ`.
pub fn family_m(d: usize, k: usize, l: usize, lam: f64, c: f64) -> Result<Measurement> {
    if d < 2 || k < 1 || k + l > d {
        return Err(Error::Family(format!(
            "m: need k >= 1 and k + l <= d, got d={d}, k={k}, l={l}"
        )));
    }
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::Family(format!("m: λ must lie in [0, 1], got {lam}")));
    }
    check_scale(c)?;
    let mut lambdas = vec![0.0; d];
    lambdas[..k].iter_mut().for_each(|x| *x = c);
    lambdas[k..k + l].iter_mut().for_each(|x| *x = c * lam);
    Ok(Measurement { lambdas })
}

fn check_scale(c: f64) -> Result<()> {
    if c > 0.0 && c <= 1.0 {
        Ok(())
    } else {
        Err(Error::Family(format!("scale c must lie in (0, 1], got {c}")))
    }
}

/// Closed-form estimation fidelity, operation fidelity and reversibility.
pub fn metrics(m: &Measurement) -> MetricTriple {
    let d = m.dim() as f64;
    let Moments { sigma_sq, tau } = m.moments();
    let l1 = m.max();
    let ld = m.min();
    MetricTriple {
        g: (1.0 + l1 * l1 / sigma_sq) / (d + 1.0),
        f: (1.0 + tau * tau / sigma_sq) / (d + 1.0),
        r: d * ld * ld / sigma_sq,
    }
}

/// Probability of the outcome for a completely unknown input: `σ²/d`.
pub fn outcome_probability(m: &Measurement) -> f64 {
    m.moments().sigma_sq / m.dim() as f64
}
