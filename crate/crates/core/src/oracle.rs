//! Independent numerical checks of the closed forms.
//!
//! Nothing here reuses the closed-form metric code: the Monte Carlo
//! estimator works from the operational definitions averaged over Haar-random
//! pure states, the finite differences use their own evaluation of the
//! metrics, and the direction search simply tries many admissible directions.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::correlation::{gamma_boundary, gamma_contains, scatter_dataset, sigma_for};
use crate::error::{Error, Result};
use crate::geometry::{active_constraints, direction_set, gradients};
use crate::measurement::{outcome_probability, Measurement};
use crate::sampling::{chunk_rng, par_chunks, satisfies, unit_direction, CHUNK};
use crate::vecops::dot;
use crate::Pair;

/// Smallest standard error reported, so z-scores stay finite for estimators
/// with zero variance.
pub const STD_ERROR_FLOOR: f64 = 1e-15;

/// States per Monte Carlo chunk.
const MC_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl McEstimate {
    pub fn z_score(&self, exact: f64) -> f64 {
        (self.value - exact) / self.std_error
    }

    /// `|value − exact| ≤ k·std_error + 1e−12`.
    pub fn agrees(&self, exact: f64, k: f64) -> bool {
        (self.value - exact).abs() <= k * self.std_error + 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HaarEstimates {
    pub p: McEstimate,
    pub g: McEstimate,
    pub f: McEstimate,
    pub r: McEstimate,
}

/// Running sums over one chunk of states.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    n: u64,
    p: f64,
    pp: f64,
    a: f64,
    aa: f64,
    ap: f64,
    b: f64,
    bb: f64,
    bp: f64,
}

impl Sums {
    fn merge(mut self, o: &Sums) -> Sums {
        self.n += o.n;
        self.p += o.p;
        self.pp += o.pp;
        self.a += o.a;
        self.aa += o.aa;
        self.ap += o.ap;
        self.b += o.b;
        self.bb += o.bb;
        self.bp += o.bp;
        self
    }
}

/// Ratio `E[x]/E[p]` with its delta-method standard error.
fn ratio_estimate(n: f64, sx: f64, sxx: f64, sxp: f64, sp: f64, spp: f64) -> (f64, f64) {
    let (mx, mp) = (sx / n, sp / n);
    let value = mx / mp;
    let var_x = (sxx / n - mx * mx).max(0.0);
    let var_p = (spp / n - mp * mp).max(0.0);
    let cov = sxp / n - mx * mp;
    let var = (var_x - 2.0 * value * cov + value * value * var_p).max(0.0);
    (value, (var / (n - 1.0)).sqrt() / mp)
}

/// Estimates `p`, `G`, `F` and `R` by averaging over Haar-random inputs.
///
/// A state is a normalized complex Gaussian vector written in the eigenbasis
/// of `M†M`, so only its weights `wᵢ = |ψᵢ|²` matter. With
/// `p(ψ) = Σ λᵢ² wᵢ` the outcome probability,
///
/// * `p = E[p(ψ)]`,
/// * `G = E[p(ψ) w₁] / p` (the best guess after the outcome is `e₁`),
/// * `F = E[(Σ λᵢ wᵢ)²] / p`,
/// * `R = inf_ψ p(ψ) / p = λ_d² / p`.
pub fn haar_mc_metrics(m: &Measurement, samples: u64, seed: u64) -> Result<HaarEstimates> {
    if samples < 1000 {
        return Err(Error::Precondition(format!(
            "Monte Carlo needs at least 1000 samples, got {samples}"
        )));
    }
    let lam = m.lambdas();
    let d = lam.len();
    let chunks = samples.div_ceil(MC_CHUNK as u64);
    let parts: Vec<Sums> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(seed, k);
            let len = (MC_CHUNK as u64).min(samples - k * MC_CHUNK as u64);
            let mut s = Sums::default();
            let mut w = vec![0.0; d];
            for _ in 0..len {
                let mut total = 0.0;
                for wi in w.iter_mut() {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *wi = re * re + im * im;
                    total += *wi;
                }
                let (mut p, mut amp) = (0.0, 0.0);
                for (wi, l) in w.iter_mut().zip(lam) {
                    *wi /= total;
                    p += l * l * *wi;
                    amp += l * *wi;
                }
                let a = p * w[0];
                let b = amp * amp;
                s.n += 1;
                s.p += p;
                s.pp += p * p;
                s.a += a;
                s.aa += a * a;
                s.ap += a * p;
                s.b += b;
                s.bb += b * b;
                s.bp += b * p;
            }
            s
        })
        .collect();
    let s = parts.iter().fold(Sums::default(), |acc, x| acc.merge(x));

    let n = s.n as f64;
    let mp = s.p / n;
    let se_p = ((s.pp / n - mp * mp).max(0.0) / (n - 1.0)).sqrt();
    let (g, se_g) = ratio_estimate(n, s.a, s.aa, s.ap, s.p, s.pp);
    let (f, se_f) = ratio_estimate(n, s.b, s.bb, s.bp, s.p, s.pp);
    let ld = m.min();
    let r = ld * ld / mp;
    let se_r = r * se_p / mp;

    let est = |value: f64, se: f64| McEstimate {
        value,
        std_error: se.max(STD_ERROR_FLOOR),
        samples,
    };
    Ok(HaarEstimates {
        p: est(mp, se_p),
        g: est(g, se_g),
        f: est(f, se_f),
        r: est(r, se_r),
    })
}

/// Smallest value of `⟨ψ|M†M|ψ⟩` over `samples` random states and the
/// basis states. For a diagonal `M†M` the infimum is `λ_d²`.
pub fn min_expectation(m: &Measurement, samples: usize, seed: u64) -> Result<f64> {
    let lam = m.lambdas();
    let d = lam.len();
    let basis_min = lam.iter().map(|l| l * l).fold(f64::INFINITY, f64::min);
    let values = par_chunks(seed, samples, CHUNK, |rng, len| {
        Ok((0..len)
            .map(|_| {
                let u = unit_direction(rng, 2 * d);
                (0..d)
                    .map(|i| lam[i] * lam[i] * (u[2 * i].powi(2) + u[2 * i + 1].powi(2)))
                    .sum::<f64>()
            })
            .collect())
    })?;
    Ok(values.into_iter().fold(basis_min, f64::min))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub quantity: String,
    pub closed_form: f64,
    pub mc_value: f64,
    pub std_error: f64,
    pub z_score: f64,
}

/// Closed forms next to their Monte Carlo estimates.
pub fn haar_report(m: &Measurement, samples: u64, seed: u64) -> Result<Vec<OracleRow>> {
    let est = haar_mc_metrics(m, samples, seed)?;
    let t = m.metrics();
    let p = outcome_probability(m);
    Ok([("p", p, est.p), ("G", t.g, est.g), ("F", t.f, est.f), ("R", t.r, est.r)]
        .into_iter()
        .map(|(q, exact, e)| OracleRow {
            quantity: q.to_string(),
            closed_form: exact,
            mc_value: e.value,
            std_error: e.std_error,
            z_score: e.z_score(exact),
        })
        .collect())
}

/// `G`, `F`, `R` of an arbitrary descending vector.
fn raw_metrics(lam: &[f64]) -> [f64; 3] {
    let d = lam.len() as f64;
    let s2: f64 = lam.iter().map(|x| x * x).sum();
    let t: f64 = lam.iter().sum();
    let (l1, ld) = (lam[0], lam[lam.len() - 1]);
    [
        (1.0 + l1 * l1 / s2) / (d + 1.0),
        (1.0 + t * t / s2) / (d + 1.0),
        d * ld * ld / s2,
    ]
}

/// Central-difference gradients of `G`, `F` and `R`.
pub fn finite_difference_gradients(m: &Measurement, h: f64) -> Result<[Vec<f64>; 3]> {
    let lam = m.lambdas();
    if !(h > 0.0) {
        return Err(Error::NonPositiveStep(h));
    }
    let gaps_ok = lam.windows(2).all(|w| w[0] - w[1] > 10.0 * h) && m.min() > 10.0 * h;
    if !gaps_ok {
        return Err(Error::Precondition(format!(
            "finite differences need all gaps and λ_d above 10h = {}",
            10.0 * h
        )));
    }
    let d = lam.len();
    let mut out = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut x = lam.to_vec();
    for i in 0..d {
        x[i] = lam[i] + h;
        let up = raw_metrics(&x);
        x[i] = lam[i] - h;
        let down = raw_metrics(&x);
        x[i] = lam[i];
        for k in 0..3 {
            out[k][i] = (up[k] - down[k]) / (2.0 * h);
        }
    }
    Ok(out)
}

/// Largest componentwise relative error between analytic and
/// finite-difference gradients, relative to the gradient norm.
pub fn gradient_check(m: &Measurement, h: f64) -> Result<f64> {
    let fd = finite_difference_gradients(m, h)?;
    let an = gradients(m);
    let mut worst: f64 = 0.0;
    for (a, n) in [(&an.grad_g, &fd[0]), (&an.grad_f, &fd[1]), (&an.grad_r, &fd[2])] {
        let scale = dot(a, a).sqrt().max(1e-300);
        for (x, y) in a.iter().zip(n) {
            worst = worst.max((x - y).abs() / scale);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Target {
    G,
    F,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sense {
    Ascent,
    Descent,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Target> {
        match s {
            "G" | "g" => Ok(Target::G),
            "F" | "f" => Ok(Target::F),
            "R" | "r" => Ok(Target::R),
            _ => Err(Error::Parse(format!("unknown target {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteepestSearch {
    /// Best sampled admissible unit direction.
    pub best: Vec<f64>,
    /// Its first-order change `best·∇`.
    pub best_change: f64,
    /// The analytic steepest direction (possibly the zero vector).
    pub analytic: Vec<f64>,
    pub analytic_change: f64,
    /// Number of admissible directions tried.
    pub tried: usize,
}

impl SteepestSearch {
    /// How far the best sample beats the analytic direction; `≤ 0` means it
    /// does not.
    pub fn excess(&self, sense: Sense) -> f64 {
        match sense {
            Sense::Ascent => self.best_change - self.analytic_change,
            Sense::Descent => self.analytic_change - self.best_change,
        }
    }

    pub fn alignment(&self) -> f64 {
        dot(&self.best, &self.analytic)
    }
}

/// Searches `dirs` random admissible directions for the largest first-order
/// increase (or decrease) of `target`.
pub fn brute_force_steepest(
    m: &Measurement,
    target: Target,
    sense: Sense,
    dirs: usize,
    seed: u64,
) -> Result<SteepestSearch> {
    if dirs < 10_000 {
        return Err(Error::Precondition(format!(
            "brute-force search needs at least 10000 directions, got {dirs}"
        )));
    }
    let prof = m.profile();
    let normals = active_constraints(&prof, target == Target::R);
    let grads = gradients(m);
    let grad = match target {
        Target::G => grads.grad_g,
        Target::F => grads.grad_f,
        Target::R => grads.grad_r,
    };
    let set = direction_set(m);
    let analytic = match (target, sense) {
        (Target::G, Sense::Ascent) => set.g_plus,
        (Target::F, Sense::Ascent) => set.f_plus,
        (Target::R, Sense::Ascent) => set.r_plus,
        (Target::G, Sense::Descent) => set.g_minus,
        (Target::F, Sense::Descent) => set.f_minus,
        (Target::R, Sense::Descent) => set.r_minus,
    };
    let sign = match sense {
        Sense::Ascent => 1.0,
        Sense::Descent => -1.0,
    };
    let d = m.dim();
    let candidates = par_chunks(seed, dirs, CHUNK, |rng, len| {
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut accepted = 0usize;
        while accepted < len {
            let u = unit_direction(rng, d);
            if !satisfies(&normals, &u) {
                continue;
            }
            accepted += 1;
            let score = sign * dot(&u, &grad);
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, u));
            }
        }
        Ok(best.into_iter().collect())
    })?;
    let (score, best) = candidates
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one direction");
    Ok(SteepestSearch {
        best_change: sign * score,
        analytic_change: dot(&analytic, &grad),
        analytic,
        best,
        tried: dirs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub points: usize,
    pub outside_gamma: usize,
    pub outside_sigma: usize,
    pub vertices: usize,
    pub vertices_outside_sigma: usize,
    /// Largest distance between the end of one arc and the start of the next.
    pub max_joint_gap: f64,
}

impl RegionReport {
    pub fn passed(&self) -> bool {
        self.outside_gamma == 0
            && self.outside_sigma == 0
            && self.vertices_outside_sigma == 0
            && self.max_joint_gap <= 1e-9
    }
}

/// Samples change points and audits them against `Γ` and `Σ`.
pub fn region_membership_check(
    m: &Measurement,
    pair: Pair,
    points: usize,
    seed: u64,
) -> Result<RegionReport> {
    if points < 1000 {
        return Err(Error::Precondition(format!(
            "region audit needs at least 1000 points, got {points}"
        )));
    }
    const SLACK: f64 = 1e-9;
    let arcs = gamma_boundary(m, pair);
    let sigma = sigma_for(m, pair, 2);
    let data = scatter_dataset(m, pair, points, 0.01, seed)?;
    let vertices: Vec<(f64, f64)> = arcs
        .iter()
        .flat_map(|a| a.points.iter().map(|&(_, x, y)| (x, y)))
        .collect();
    let max_joint_gap = (0..arcs.len())
        .map(|k| {
            let a = arcs[k].end;
            let b = arcs[(k + 1) % arcs.len()].start;
            (a[0] - b[0]).hypot(a[1] - b[1])
        })
        .fold(0.0, f64::max);
    Ok(RegionReport {
        points,
        outside_gamma: data
            .iter()
            .filter(|p| !gamma_contains(&arcs, p.dg, p.dd, SLACK))
            .count(),
        outside_sigma: data
            .iter()
            .filter(|p| !sigma.contains(p.dg, p.dd, SLACK))
            .count(),
        vertices: vertices.len(),
        vertices_outside_sigma: vertices
            .iter()
            .filter(|&&(x, y)| !sigma.contains(x, y, SLACK))
            .count(),
        max_joint_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::family_p;

    fn m(v: &[f64]) -> Measurement {
        Measurement::new(v).unwrap()
    }

    #[test]
    fn identity_and_projection_limits() {
        let est = haar_mc_metrics(&family_p(4, 4, 1.0).unwrap(), 20_000, 1).unwrap();
        assert!((est.p.value - 1.0).abs() < 1e-12);
        assert!((est.f.value - 1.0).abs() < 1e-12);
        assert!((est.g.value - 0.25).abs() < 5.0 * est.g.std_error);

        let est = haar_mc_metrics(&family_p(4, 1, 1.0).unwrap(), 50_000, 2).unwrap();
        assert!(est.g.agrees(0.4, 5.0), "{:?}", est.g);
    }

    #[test]
    fn anchor_measurement() {
        let x = m(&[0.8, 0.7, 0.4, 0.0]);
        let est = haar_mc_metrics(&x, 100_000, 3).unwrap();
        let t = x.metrics();
        assert!(est.p.agrees(0.3225, 5.0), "{:?}", est.p);
        assert!(est.g.agrees(t.g, 5.0), "{:?}", est.g);
        assert!(est.f.agrees(t.f, 5.0), "{:?}", est.f);
        assert_eq!(est.r.value, 0.0);
        assert!(est.r.std_error > 0.0);
    }

    #[test]
    fn mc_is_reproducible() {
        let x = m(&[0.9, 0.5, 0.2]);
        assert_eq!(haar_mc_metrics(&x, 10_000, 9).unwrap(), haar_mc_metrics(&x, 10_000, 9).unwrap());
        assert!(haar_mc_metrics(&x, 10, 9).is_err());
    }

    #[test]
    fn infimum_is_smallest_squared_value() {
        let x = m(&[0.9, 0.6, 0.3, 0.1]);
        let v = min_expectation(&x, 5000, 4).unwrap();
        assert_eq!(v, 0.1f64 * 0.1);
    }

    #[test]
    fn gradients_match_differences() {
        let x = m(&[0.9, 0.6, 0.3, 0.1]);
        assert!(gradient_check(&x, 1e-6).unwrap() < 1e-6);
        let fd = finite_difference_gradients(&x, 1e-6).unwrap();
        assert!(dot(&fd[0], x.lambdas()).abs() < 1e-8);
        assert!(finite_difference_gradients(&m(&[0.8, 0.7, 0.4, 0.0]), 1e-6).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let x = m(&[1.0, 0.5, 0.5]);
        let s = brute_force_steepest(&x, Target::R, Sense::Ascent, 100_000, 1).unwrap();
        assert!(s.excess(Sense::Ascent) <= 1e-9);
        assert!(s.alignment() > 0.999, "{}", s.alignment());
        let r = crate::unit_gradient_directions(&x).r;
        assert!(dot(&s.best, &r) <= 0.4f64.sqrt() + 1e-3);

        let y = m(&[0.9, 0.6, 0.3, 0.1]);
        let s = brute_force_steepest(&y, Target::G, Sense::Ascent, 20_000, 2).unwrap();
        assert!(s.alignment() > 0.99);

        let z = m(&[0.8, 0.7, 0.4, 0.0]);
        let s = brute_force_steepest(&z, Target::R, Sense::Descent, 10_000, 3).unwrap();
        assert_eq!(s.best_change, 0.0);
        assert_eq!(s.analytic_change, 0.0);
    }

    #[test]
    fn region_audits() {
        for (v, pair) in [
            (vec![1.0, 0.8, 0.5, 0.32], Pair::Gf),
            (vec![1.0, 1.0, 0.0, 0.0], Pair::Gf),
            (vec![1.0, 0.31, 0.31, 0.31], Pair::Gr),
        ] {
            let report = region_membership_check(&m(&v), pair, 2000, 5).unwrap();
            assert!(report.passed(), "{v:?}: {report:?}");
        }
        let data = scatter_dataset(&m(&[1.0, 0.5, 0.5, 0.5]), Pair::Gf, 2000, 0.01, 6).unwrap();
        assert!(data.iter().all(|p| !(p.dg > 1e-12 && p.dd > 1e-12)));
    }
}
