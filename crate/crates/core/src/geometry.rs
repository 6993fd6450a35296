//! Gradients and constrained steepest directions of `G`, `F` and `R`.
//!
//! Admissible modifications `ε` of a measurement must keep the ordering
//! `λ₁ ≥ λᵢ ≥ λ_d ≥ 0`. Whenever a measurement sits on one of these
//! boundaries (tied maximum, tied minimum, zeros) the plain gradient can point
//! into the forbidden region, and the steepest admissible direction is the
//! normalized projection of the gradient onto the tangent cone. For the cones
//! that occur here that projection is a block average over the tied indices,
//! or a clip to zero over the zero block.
//!
//! Where a unit vector would be `0/0` (rank-1 projection, identity, uniform
//! projections) it is the zero vector, and every cosine involving it is 0.
//! Callers must treat a zero vector as "no direction".

use std::ops::Range;

use serde::Serialize;

use crate::measurement::{DegeneracyProfile, Measurement, Moments};
use crate::vecops::{dot, normalized, scaled};

/// Raw gradients and their magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gradients {
    pub grad_g: Vec<f64>,
    pub grad_f: Vec<f64>,
    pub grad_r: Vec<f64>,
    pub mag_g: f64,
    pub mag_f: f64,
    pub mag_r: f64,
}

/// One unit vector (or zero vector) per metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Triple {
    pub g: Vec<f64>,
    pub f: Vec<f64>,
    pub r: Vec<f64>,
}

/// Every direction the analysis needs at one measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionSet {
    pub grad_g: Vec<f64>,
    pub grad_f: Vec<f64>,
    pub grad_r: Vec<f64>,
    pub mag_g: f64,
    pub mag_f: f64,
    pub mag_r: f64,
    pub g: Vec<f64>,
    pub f: Vec<f64>,
    pub r: Vec<f64>,
    pub g_plus: Vec<f64>,
    pub f_plus: Vec<f64>,
    pub r_plus: Vec<f64>,
    pub g_minus: Vec<f64>,
    pub f_minus: Vec<f64>,
    pub r_minus: Vec<f64>,
}

/// Cosines between the gradient direction and the steepest admissible
/// direction: `θ_g` for descent of `G`, `θ_f` for descent of `F`, `θ_r` for
/// ascent of `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryAngles {
    pub cos_theta_g: f64,
    pub cos_theta_f: f64,
    pub cos_theta_r: f64,
}

/// Cosines between steepest directions of the information and a disturbance.
///
/// `c_gf_mp` is `g⁻·f⁺`, `c_gf_pm` is `g⁺·f⁻`, and so on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleSet {
    pub c_gf: f64,
    pub c_gr: f64,
    pub c_gf_pp: f64,
    pub c_gf_mp: f64,
    pub c_gf_pm: f64,
    pub c_gf_mm: f64,
    pub c_gr_pp: f64,
    pub c_gr_mp: f64,
    pub c_gr_pm: f64,
    pub c_gr_mm: f64,
    pub cos_theta_g: f64,
    pub cos_theta_f: f64,
    pub cos_theta_r: f64,
}

/// Differences of power sums, written so that none of them is computed by
/// subtracting two nearly equal totals.
#[derive(Debug, Clone, Copy)]
struct Gaps {
    /// `σ² − λ₁²`
    g: f64,
    /// `σ² − n₁λ₁²`
    g_top: f64,
    /// `dσ² − τ²`
    f: f64,
    /// `(d − n₀)σ² − τ²`
    f_nonzero: f64,
    /// `σ² − λ_d²`
    r: f64,
    /// `σ² − n_dλ_d²`
    r_bottom: f64,
    /// `τλ₁ − σ²`
    cross: f64,
}

impl Gaps {
    fn new(m: &Measurement, prof: &DegeneracyProfile) -> Gaps {
        let lam = m.lambdas();
        let d = lam.len();
        let l1 = lam[0];
        let ld = lam[d - 1];

        let g = lam[1..].iter().map(|x| x * x).sum();
        let g_top = lam[prof.n1..].iter().map(|x| x * x).sum::<f64>()
            - lam[..prof.n1].iter().map(|x| l1 * l1 - x * x).sum::<f64>();

        let pair_spread = |xs: &[f64]| {
            let mut s = 0.0;
            for i in 0..xs.len() {
                for j in i + 1..xs.len() {
                    s += (xs[i] - xs[j]).powi(2);
                }
            }
            s
        };
        let f = pair_spread(lam);
        let nz = d - prof.n0;
        let f_nonzero = {
            let (head, tail) = lam.split_at(nz);
            let tau_h: f64 = head.iter().sum();
            let tau_t: f64 = tail.iter().sum();
            let sq_t: f64 = tail.iter().map(|x| x * x).sum();
            pair_spread(head) + nz as f64 * sq_t - 2.0 * tau_h * tau_t - tau_t * tau_t
        };

        let r = lam[..d - 1].iter().map(|x| x * x).sum();
        let r_bottom = lam[..d - prof.nd].iter().map(|x| x * x).sum::<f64>()
            + lam[d - prof.nd..].iter().map(|x| x * x - ld * ld).sum::<f64>();

        let cross = lam.iter().map(|x| x * (l1 - x)).sum();

        Gaps {
            g,
            g_top: g_top.max(0.0),
            f,
            f_nonzero: f_nonzero.max(0.0),
            r,
            r_bottom: r_bottom.max(0.0),
            cross,
        }
    }
}

/// `num / sqrt(den)` with the `0/0 = 0` convention.
fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den.sqrt()
    } else {
        0.0
    }
}

pub fn gradients(m: &Measurement) -> Gradients {
    let lam = m.lambdas();
    let d = lam.len();
    let df = d as f64;
    let Moments { sigma_sq, tau } = m.moments();
    let l1 = m.max();
    let ld = m.min();
    let prof = m.profile();
    let gaps = Gaps::new(m, &prof);

    let coef_g = 2.0 / (df + 1.0) * l1 / sigma_sq;
    let coef_f = 2.0 / (df + 1.0) * tau / sigma_sq;
    let coef_r = 2.0 * df * ld / sigma_sq;

    let mut grad_g: Vec<f64> = (0..d).map(|i| -coef_g * l1 / sigma_sq * lam[i]).collect();
    grad_g[0] = coef_g * gaps.g / sigma_sq;
    let grad_f = f_numerators(lam)
        .iter()
        .map(|x| coef_f * x / sigma_sq)
        .collect();
    let mut grad_r: Vec<f64> = (0..d).map(|i| -coef_r * ld / sigma_sq * lam[i]).collect();
    grad_r[d - 1] = coef_r * gaps.r / sigma_sq;

    Gradients {
        grad_g,
        grad_f,
        grad_r,
        mag_g: coef_g * (gaps.g / sigma_sq).sqrt(),
        mag_f: coef_f * (gaps.f / sigma_sq).sqrt(),
        mag_r: coef_r * (gaps.r / sigma_sq).sqrt(),
    }
}

/// `σ² − τλᵢ = Σⱼ λⱼ(λⱼ − λᵢ)` for every `i`.
fn f_numerators(lam: &[f64]) -> Vec<f64> {
    lam.iter()
        .map(|li| lam.iter().map(|lj| lj * (lj - li)).sum())
        .collect()
}

/// Unit vectors along `∇G`, `∇F`, `∇R`.
///
/// `g = 0` at the rank-1 projection and `f = 0` at the identity. When
/// `λ_d = 0`, `r = e_d` even though `∇R` itself vanishes there.
pub fn unit_gradient_directions(m: &Measurement) -> Triple {
    unit_directions_with(m, &m.profile())
}

fn unit_directions_with(m: &Measurement, prof: &DegeneracyProfile) -> Triple {
    let lam = m.lambdas();
    let d = lam.len();
    let l1 = m.max();
    let ld = m.min();
    let gaps = Gaps::new(m, prof);

    let g = if prof.is_rank_one() {
        vec![0.0; d]
    } else {
        let mut v: Vec<f64> = lam.iter().map(|x| -l1 * x).collect();
        v[0] = gaps.g;
        normalized(&v)
    };
    let f = if prof.is_identity() {
        vec![0.0; d]
    } else {
        normalized(&f_numerators(lam))
    };
    let r = if ld == 0.0 {
        let mut e = vec![0.0; d];
        e[d - 1] = 1.0;
        e
    } else {
        let mut r: Vec<f64> = lam.iter().map(|x| -ld * x).collect();
        r[d - 1] = gaps.r;
        normalized(&r)
    };
    Triple { g, f, r }
}

/// Replaces the components of `v` inside `block` by their mean.
///
/// This is the result of projecting `v` successively onto the `len − 1`
/// boundaries `λ_i = λ_j` of a tied block; it is idempotent, and blocks of
/// length 0 or 1 leave `v` unchanged.
pub fn successive_projection(v: &[f64], block: Range<usize>) -> Vec<f64> {
    let mut out = v.to_vec();
    if block.len() > 1 && v[block.clone()].iter().any(|&x| x != v[block.start]) {
        let mean = v[block.clone()].iter().sum::<f64>() / block.len() as f64;
        out[block].iter_mut().for_each(|x| *x = mean);
    }
    out
}

/// Steepest admissible ascent directions `g⁺, f⁺, r⁺`.
pub fn steepest_ascent(m: &Measurement, prof: &DegeneracyProfile) -> Triple {
    let unit = unit_directions_with(m, prof);
    let r = if prof.is_identity() {
        vec![0.0; m.dim()]
    } else {
        // Bottom-block average of the unnormalized r, from the exact gap.
        let ld = m.min();
        let mut v: Vec<f64> = m.lambdas().iter().map(|x| -ld * x + 0.0).collect();
        let avg = if ld == 0.0 {
            1.0
        } else {
            Gaps::new(m, prof).r_bottom / prof.nd as f64
        };
        v[prof.bottom_block()].iter_mut().for_each(|x| *x = avg);
        normalized(&v)
    };
    Triple { g: unit.g, f: unit.f, r }
}

/// Steepest admissible descent directions `g⁻, f⁻, r⁻`.
pub fn steepest_descent(m: &Measurement, prof: &DegeneracyProfile) -> Triple {
    let d = m.dim();
    let unit = unit_directions_with(m, prof);
    let (g, f) = if prof.is_uniform_projection() {
        (vec![0.0; d], vec![0.0; d])
    } else {
        let l1 = m.max();
        let mut g: Vec<f64> = m.lambdas().iter().map(|x| l1 * x).collect();
        let avg = -Gaps::new(m, prof).g_top / prof.n1 as f64;
        g[prof.top_block()].iter_mut().for_each(|x| *x = avg);
        let g = normalized(&g);
        let mut f = scaled(&unit.f, -1.0);
        f[prof.zero_block()].iter_mut().for_each(|x| *x = 0.0);
        (g, normalized(&f))
    };
    let r = if prof.n0 == 0 {
        scaled(&unit.r, -1.0)
    } else {
        vec![0.0; d]
    };
    Triple { g, f, r }
}

pub fn direction_set(m: &Measurement) -> DirectionSet {
    let prof = m.profile();
    let grads = gradients(m);
    let unit = unit_directions_with(m, &prof);
    let plus = steepest_ascent(m, &prof);
    let minus = steepest_descent(m, &prof);
    DirectionSet {
        grad_g: grads.grad_g,
        grad_f: grads.grad_f,
        grad_r: grads.grad_r,
        mag_g: grads.mag_g,
        mag_f: grads.mag_f,
        mag_r: grads.mag_r,
        g: unit.g,
        f: unit.f,
        r: unit.r,
        g_plus: plus.g,
        f_plus: plus.f,
        r_plus: plus.r,
        g_minus: minus.g,
        f_minus: minus.f,
        r_minus: minus.r,
    }
}

pub fn boundary_angles(m: &Measurement, prof: &DegeneracyProfile) -> BoundaryAngles {
    let gaps = Gaps::new(m, prof);
    let cos_theta_g = if prof.is_rank_one() {
        0.0
    } else {
        (gaps.g_top / (prof.n1 as f64 * gaps.g)).sqrt()
    };
    let cos_theta_f = if prof.is_identity() {
        0.0
    } else {
        (gaps.f_nonzero / gaps.f).sqrt()
    };
    let cos_theta_r = (gaps.r_bottom / (prof.nd as f64 * gaps.r)).sqrt();
    BoundaryAngles {
        cos_theta_g: cos_theta_g.min(1.0),
        cos_theta_f: cos_theta_f.min(1.0),
        cos_theta_r: cos_theta_r.min(1.0),
    }
}

/// All ten cosines and the three boundary angles, from closed forms.
pub fn angle_set(m: &Measurement) -> AngleSet {
    angle_set_with(m, &m.profile())
}

pub fn angle_set_with(m: &Measurement, prof: &DegeneracyProfile) -> AngleSet {
    let gaps = Gaps::new(m, prof);
    let l1 = m.max();
    let ld = m.min();
    let n1 = prof.n1 as f64;
    let nd = prof.nd as f64;
    let x = gaps.cross;

    // Which steepest vectors vanish.
    let g_zero = prof.is_rank_one();
    let f_zero = prof.is_identity();
    let minus_zero = prof.is_uniform_projection();
    let r_plus_zero = prof.is_identity();
    let r_minus_zero = prof.n0 > 0;

    let unless = |zero: bool, v: f64| if zero { 0.0 } else { v };

    let c_gf_pp = unless(g_zero || f_zero, -ratio(x, gaps.g * gaps.f));
    let c_gf_mp = unless(minus_zero || f_zero, n1.sqrt() * ratio(x, gaps.g_top * gaps.f));
    let c_gf_pm = unless(g_zero || minus_zero, ratio(x, gaps.g * gaps.f_nonzero));
    let c_gf_mm = unless(minus_zero, -n1.sqrt() * ratio(x, gaps.g_top * gaps.f_nonzero));

    let c_gr = unless(g_zero, -ratio(l1 * ld, gaps.g * gaps.r));
    let c_gr_pp = unless(g_zero || r_plus_zero, -nd.sqrt() * ratio(l1 * ld, gaps.g * gaps.r_bottom));
    let c_gr_mp = unless(
        minus_zero || r_plus_zero,
        (n1 * nd).sqrt() * ratio(l1 * ld, gaps.g_top * gaps.r_bottom),
    );
    let c_gr_pm = unless(g_zero || r_minus_zero, -c_gr);
    let c_gr_mm = unless(minus_zero || r_minus_zero, -n1.sqrt() * ratio(l1 * ld, gaps.g_top * gaps.r));

    let angles = boundary_angles(m, prof);
    // `+ 0.0` turns a negative zero from `−0/x` into a plain zero.
    let clamp = |v: f64| v.clamp(-1.0, 1.0) + 0.0;
    AngleSet {
        c_gf: clamp(c_gf_pp),
        c_gr: clamp(c_gr),
        c_gf_pp: clamp(c_gf_pp),
        c_gf_mp: clamp(c_gf_mp),
        c_gf_pm: clamp(c_gf_pm),
        c_gf_mm: clamp(c_gf_mm),
        c_gr_pp: clamp(c_gr_pp),
        c_gr_mp: clamp(c_gr_mp),
        c_gr_pm: clamp(c_gr_pm),
        c_gr_mm: clamp(c_gr_mm),
        cos_theta_g: angles.cos_theta_g,
        cos_theta_f: angles.cos_theta_f,
        cos_theta_r: angles.cos_theta_r,
    }
}

/// The same cosines as [`angle_set`], taken as dot products of the vectors
/// in a [`DirectionSet`]. Used to cross-check the closed forms.
pub fn angle_set_from_vectors(dirs: &DirectionSet) -> AngleSet {
    AngleSet {
        c_gf: dot(&dirs.g, &dirs.f),
        c_gr: dot(&dirs.g, &dirs.r),
        c_gf_pp: dot(&dirs.g_plus, &dirs.f_plus),
        c_gf_mp: dot(&dirs.g_minus, &dirs.f_plus),
        c_gf_pm: dot(&dirs.g_plus, &dirs.f_minus),
        c_gf_mm: dot(&dirs.g_minus, &dirs.f_minus),
        c_gr_pp: dot(&dirs.g_plus, &dirs.r_plus),
        c_gr_mp: dot(&dirs.g_minus, &dirs.r_plus),
        c_gr_pm: dot(&dirs.g_plus, &dirs.r_minus),
        c_gr_mm: dot(&dirs.g_minus, &dirs.r_minus),
        cos_theta_g: -dot(&dirs.g_minus, &dirs.g),
        cos_theta_f: -dot(&dirs.f_minus, &dirs.f),
        cos_theta_r: dot(&dirs.r_plus, &dirs.r),
    }
}

/// Outward constraint normals `n` (admissible iff `n·ε ≥ 0`) active at `m`.
///
/// The bottom-block constraints `λ_i ≥ λ_d` only matter when `R` is in play;
/// for the `G`–`F` pair rearranging the interior values makes them
/// irrelevant, so they are skipped when `with_bottom` is false. Every zero
/// index gets its own `ε_i ≥ 0` constraint.
pub fn active_constraints(prof: &DegeneracyProfile, with_bottom: bool) -> Vec<Vec<f64>> {
    let d = prof.dim();
    let unit = |i: usize| {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        e
    };
    let mut normals = Vec::new();
    if prof.is_identity() {
        // Every pair is tied; only the orderings against the first index
        // survive rearrangement.
        for i in 1..d {
            let mut n = unit(0);
            n[i] = -1.0;
            normals.push(n);
        }
        if with_bottom {
            for i in 0..d - 1 {
                let mut n = unit(i);
                n[d - 1] = -1.0;
                normals.push(n);
            }
        }
        return normals;
    }
    for i in prof.top_block().skip(1) {
        let mut n = unit(0);
        n[i] = -1.0;
        normals.push(n);
    }
    for i in prof.zero_block() {
        normals.push(unit(i));
    }
    if with_bottom {
        for i in prof.bottom_block().take(prof.nd.saturating_sub(1)) {
            let mut n = unit(i);
            n[d - 1] = -1.0;
            normals.push(n);
        }
    }
    normals
}
