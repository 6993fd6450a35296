//! Greedy improvement along `g⁺ + d⁺` and the improvability score `1 + C⁺⁺`.
//!
//! Moving along the sum of the two steepest ascent directions raises the
//! information and lowers the disturbance by the same normalized amount
//! `ε(1 + C⁺⁺)`. A measurement whose improvability is 0 cannot be improved in
//! both quantities at once; the scheme stops there.

use std::fmt;

use serde::Serialize;

use crate::correlation::admissible_normals;
use crate::error::{Error, Result};
use crate::geometry::{angle_set, direction_set, gradients};
use crate::measurement::{canonicalize, Measurement};
use crate::sampling::{par_chunks, satisfies, unit_direction, CHUNK};
use crate::vecops::{axpy, dot, is_zero, normalized, scaled};
use crate::{successive_projection, Pair};

pub const DEFAULT_CONV_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    /// The step pushed `λ₁` above 1 and the vector was rescaled.
    Renormalized,
    /// The step was shortened so that a value lands exactly on a boundary
    /// (joins the minimum block, or reaches zero).
    BoundaryLanded,
    /// Improvability fell below the convergence tolerance.
    Converged,
    /// The measurement is a singular point (rank-1 projection or identity):
    /// no improving direction exists even though the score reads 1.
    Degenerate,
}

impl Event {
    pub fn token(self) -> &'static str {
        match self {
            Event::Renormalized => "renormalized",
            Event::BoundaryLanded => "boundary_landed",
            Event::Converged => "converged",
            Event::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub iteration: usize,
    pub lambdas: Vec<f64>,
    pub metric_g: f64,
    /// `F` for the `G`–`F` pair, `R` for the `G`–`R` pair.
    pub metric_d: f64,
    pub improvability: f64,
    pub nd: usize,
    pub events: Vec<Event>,
}

impl TrajectoryRecord {
    fn new(iteration: usize, m: &Measurement, pair: Pair, events: Vec<Event>) -> Self {
        let t = m.metrics();
        TrajectoryRecord {
            iteration,
            lambdas: m.lambdas().to_vec(),
            metric_g: t.g,
            metric_d: match pair {
                Pair::Gf => t.f,
                Pair::Gr => t.r,
            },
            improvability: improvability(m, pair),
            nd: m.profile().nd,
            events,
        }
    }

    pub fn has(&self, event: Event) -> bool {
        self.events.contains(&event)
    }
}

/// `1 + C⁺⁺` for the pair, in `[0, 2]`.
///
/// At the rank-1 projection and the identity this reads 1 by convention even
/// though no improvement exists; see [`is_singular`].
pub fn improvability(m: &Measurement, pair: Pair) -> f64 {
    (1.0 + pair.c_pp(&angle_set(m))).clamp(0.0, 2.0)
}

/// Rank-1 projection or identity: the improvement direction is undefined.
pub fn is_singular(m: &Measurement) -> bool {
    let prof = m.profile();
    prof.is_rank_one() || prof.is_identity()
}

/// One step `λ' = λ + ε(g⁺ + d⁺)`, shortened if it would cross a boundary.
pub fn improvement_step(
    m: &Measurement,
    pair: Pair,
    eps: f64,
) -> Result<(Measurement, TrajectoryRecord)> {
    step(m, pair, eps, 0)
}

fn step(m: &Measurement, pair: Pair, eps: f64, iteration: usize) -> Result<(Measurement, TrajectoryRecord)> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::NonPositiveStep(eps));
    }
    if is_singular(m) {
        return Err(Error::SingularPoint);
    }
    let prof = m.profile();
    let dirs = direction_set(m);
    let d_plus = match pair {
        Pair::Gf => &dirs.f_plus,
        Pair::Gr => &dirs.r_plus,
    };
    let v: Vec<f64> = dirs.g_plus.iter().zip(d_plus).map(|(a, b)| a + b).collect();
    let lam = m.lambdas();
    let d = lam.len();
    let mut events = Vec::new();

    // Largest admissible step length and the index that limits it.
    let mut step_len = eps;
    let mut landing: Option<(usize, Landing)> = None;
    for i in 0..d {
        if v[i] < 0.0 && lam[i] > 0.0 {
            let t = lam[i] / -v[i];
            if t < step_len {
                step_len = t;
                landing = Some((i, Landing::Zero));
            }
        }
    }
    if pair == Pair::Gr && prof.n0 == 0 {
        let ld = lam[d - 1];
        let vd = v[d - 1];
        for i in 0..d - prof.nd {
            if v[i] < vd {
                let t = (lam[i] - ld) / (vd - v[i]);
                if t < step_len {
                    step_len = t;
                    landing = Some((i, Landing::Bottom));
                }
            }
        }
    }

    let mut next = axpy(lam, step_len, &v);
    let mut bottom_join = None;
    if let Some((i, kind)) = landing {
        events.push(Event::BoundaryLanded);
        match kind {
            Landing::Zero => next[i] = 0.0,
            Landing::Bottom => {
                next[i] = next[d - 1];
                bottom_join = Some(i);
            }
        }
    }
    next.iter_mut().for_each(|x| {
        if *x < 0.0 {
            *x = 0.0
        }
    });

    if pair == Pair::Gr {
        // Values that came within tolerance of the minimum join its block
        // exactly, so the block stays tied from here on.
        let ld = next[d - 1];
        let scale = prof.tol * next.iter().cloned().fold(0.0, f64::max);
        let mut joined = false;
        for (i, x) in next.iter_mut().enumerate() {
            if i < d - prof.nd && Some(i) != bottom_join && *x - ld <= scale && *x != ld {
                *x = ld;
                joined = true;
            }
        }
        if joined && !events.contains(&Event::BoundaryLanded) {
            events.push(Event::BoundaryLanded);
        }
    }

    let max = next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > 1.0 {
        next.iter_mut().for_each(|x| *x /= max);
        events.push(Event::Renormalized);
    }
    next.sort_by(|a, b| b.total_cmp(a));
    next[0] = next[0].min(1.0);

    let out = Measurement::from_sorted(next);
    let record = TrajectoryRecord::new(iteration, &out, pair, events);
    Ok((out, record))
}

#[derive(Debug, Clone, Copy)]
enum Landing {
    Zero,
    Bottom,
}

/// Repeats [`improvement_step`] until the improvability is at most
/// `conv_tol` or `max_iter` steps have been taken.
///
/// Record 0 is the starting point. The last record carries `converged` when
/// the tolerance was met, plus `degenerate` when the run hit a singular
/// point.
pub fn improve(
    m: &Measurement,
    pair: Pair,
    eps: f64,
    max_iter: usize,
    conv_tol: f64,
) -> Result<Vec<TrajectoryRecord>> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::NonPositiveStep(eps));
    }
    let mut current = m.clone();
    let mut records = vec![TrajectoryRecord::new(0, m, pair, Vec::new())];
    for iteration in 1..=max_iter {
        let last = records.last_mut().expect("at least one record");
        if is_singular(&current) {
            last.events.push(Event::Converged);
            last.events.push(Event::Degenerate);
            return Ok(records);
        }
        if last.improvability <= conv_tol {
            last.events.push(Event::Converged);
            return Ok(records);
        }
        let (next, record) = step(&current, pair, eps, iteration)?;
        current = next;
        records.push(record);
    }
    let last = records.last_mut().expect("at least one record");
    if last.improvability <= conv_tol {
        last.events.push(Event::Converged);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawReport {
    pub trials: usize,
    /// Probes satisfying `ΔG > 0` and `ΔD < 0` (information up, disturbance
    /// down) to first order.
    pub tested: usize,
    /// Tested probes whose `ΔC⁺⁺` was not negative.
    pub violations: usize,
    /// Largest `ΔC⁺⁺` among tested probes.
    pub max_delta: f64,
}

/// Checks that every admissible probe improving both quantities lowers
/// `C⁺⁺`.
///
/// For the `G`–`R` pair probes are averaged over the minimum block so that
/// `n_d` is preserved.
pub fn law_of_decrease_check(
    m: &Measurement,
    pair: Pair,
    trials: usize,
    probe_eps: f64,
    seed: u64,
) -> Result<LawReport> {
    if !(probe_eps > 0.0) || !probe_eps.is_finite() {
        return Err(Error::NonPositiveStep(probe_eps));
    }
    if is_singular(m) {
        return Err(Error::SingularPoint);
    }
    let prof = m.profile();
    let normals = admissible_normals(m, pair);
    let grads = gradients(m);
    let grad_d = match pair {
        Pair::Gf => &grads.grad_f,
        Pair::Gr => &grads.grad_r,
    };
    let c0 = pair.c_pp(&angle_set(m));
    let d = m.dim();

    let deltas = par_chunks(seed, trials, CHUNK, |rng, len| {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let mut u = unit_direction(rng, d);
            if pair == Pair::Gr && prof.nd > 1 {
                u = normalized(&successive_projection(&u, prof.bottom_block()));
            }
            if is_zero(&u) || !satisfies(&normals, &u) {
                out.push(None);
                continue;
            }
            let eps = scaled(&u, probe_eps);
            if dot(&eps, &grads.grad_g) <= 0.0 || dot(&eps, grad_d) <= 0.0 {
                out.push(None);
                continue;
            }
            let moved = canonicalize(&axpy(m.lambdas(), 1.0, &eps), true)?;
            out.push(Some(pair.c_pp(&angle_set(&moved)) - c0));
        }
        Ok(out)
    })?;

    let tested: Vec<f64> = deltas.into_iter().flatten().collect();
    Ok(LawReport {
        trials,
        tested: tested.len(),
        violations: tested.iter().filter(|&&x| x >= 0.0).count(),
        max_delta: tested.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}
