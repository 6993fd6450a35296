//! Joint changes of information and disturbance under small modifications.
//!
//! A modification `ε` moves `G` by `ε·∇G` and the disturbance by `−ε·∇F` (or
//! `−ε·∇R`) to first order. Dividing by `‖ε‖` and the gradient magnitudes
//! gives the normalized changes `Δg = ε̂·g` and `Δd = ε̂·f` (or `ε̂·r`), which
//! live in the ellipse `Σ` fixed by `C = g·f` (or `g·r`). The admissible
//! modifications only reach a sub-region `Γ ⊆ Σ`, bounded by four arcs that
//! connect the images of the steepest directions `G⁺, D⁺, G⁻, D⁻`.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{active_constraints, angle_set_with, direction_set, DirectionSet};
use crate::measurement::{family_m, family_p, Measurement};
use crate::sampling::{par_chunks, satisfies, unit_direction, CHUNK};
use crate::vecops::{dot, norm, scaled};
use crate::Pair;

/// Number of attempts allowed per accepted sample before giving up.
pub const REJECTION_BUDGET: u64 = 1_000_000;

/// Points emitted per Γ arc.
pub const ARC_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Perturbation {
    pub eps: Vec<f64>,
    pub norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChangePoint {
    pub dg: f64,
    pub dd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcKind {
    Ellipse,
    Line,
    Point,
}

/// One of the four pieces of the Γ boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionArc {
    /// 1: `G⁺→D⁺`, 2: `D⁺→G⁻`, 3: `G⁻→D⁻`, 4: `D⁻→G⁺`.
    pub segment: u8,
    pub coefficient: f64,
    pub compress_x: f64,
    pub compress_y: f64,
    pub kind: ArcKind,
    pub start: [f64; 2],
    pub end: [f64; 2],
    /// `(t, x, y)` with `t` running from 0 at `start` to 1 at `end`.
    pub points: Vec<(f64, f64, f64)>,
    /// Cosine between the two generating directions.
    #[serde(skip)]
    cos_ab: f64,
}

impl RegionArc {
    pub fn segment_name(&self) -> &'static str {
        match self.segment {
            1 => "G+D+",
            2 => "D+G-",
            3 => "G-D-",
            _ => "D-G+",
        }
    }

    /// Whether `p` lies in `{αA + βB : α, β ≥ 0, ‖αa + βb‖ ≤ 1}`, the image of
    /// the unit ball restricted to the cone spanned by the arc's generating
    /// directions.
    fn sector_contains(&self, p: [f64; 2], slack: f64) -> bool {
        let [ax, ay] = self.start;
        let [bx, by] = self.end;
        let det = ax * by - ay * bx;
        let scale = (ax * ax + ay * ay).max(bx * bx + by * by);
        if self.kind == ArcKind::Ellipse && det.abs() > 1e-9 * scale.max(1e-300) {
            let alpha = (p[0] * by - p[1] * bx) / det;
            let beta = (ax * p[1] - ay * p[0]) / det;
            if alpha < -slack || beta < -slack {
                return false;
            }
            let (alpha, beta) = (alpha.max(0.0), beta.max(0.0));
            let q = alpha * alpha + beta * beta + 2.0 * self.cos_ab * alpha * beta;
            q <= 1.0 + slack
        } else {
            // Flat sector: the union of segments from the origin to the arc.
            let origin = [0.0, 0.0];
            self.points
                .iter()
                .map(|&(_, x, y)| segment_distance(p, origin, [x, y]))
                .chain(std::iter::once(segment_distance(p, self.start, self.end)))
                .any(|dist| dist <= slack)
        }
    }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

/// The ellipse `Σ: x² + y² − 2cxy ≤ 1 − c²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaEllipse {
    pub c: f64,
    /// Closed polyline `x = cos α`, `y = c cos α + √(1−c²) sin α`.
    pub points: Vec<(f64, f64)>,
}

impl SigmaEllipse {
    pub fn quadratic(&self, x: f64, y: f64) -> f64 {
        x * x + y * y - 2.0 * self.c * x * y
    }

    pub fn rhs(&self) -> f64 {
        1.0 - self.c * self.c
    }

    pub fn contains(&self, x: f64, y: f64, slack: f64) -> bool {
        self.quadratic(x, y) <= self.rhs() + slack
    }
}

pub fn sigma_ellipse(c: f64, points: usize) -> SigmaEllipse {
    let s = (1.0 - c * c).max(0.0).sqrt();
    let n = points.max(2);
    let points = (0..n)
        .map(|j| {
            let a = 2.0 * std::f64::consts::PI * j as f64 / (n - 1) as f64;
            (a.cos(), c * a.cos() + s * a.sin())
        })
        .collect();
    SigmaEllipse { c, points }
}

/// The `Σ` ellipse of a measurement for the given pair.
pub fn sigma_for(m: &Measurement, pair: Pair, points: usize) -> SigmaEllipse {
    let a = crate::angle_set(m);
    sigma_ellipse(
        match pair {
            Pair::Gf => a.c_gf,
            Pair::Gr => a.c_gr,
        },
        points,
    )
}

/// Unit gradient of the disturbance partner: `f` or `r`.
fn partner(dirs: &DirectionSet, pair: Pair) -> &[f64] {
    match pair {
        Pair::Gf => &dirs.f,
        Pair::Gr => &dirs.r,
    }
}

fn project(dirs: &DirectionSet, pair: Pair, v: &[f64]) -> [f64; 2] {
    let n = norm(v);
    if n == 0.0 {
        return [0.0, 0.0];
    }
    [dot(v, &dirs.g) / n, dot(v, partner(dirs, pair)) / n]
}

/// Constraint normals an admissible modification must respect for `pair`.
pub fn admissible_normals(m: &Measurement, pair: Pair) -> Vec<Vec<f64>> {
    active_constraints(&m.profile(), pair == Pair::Gr)
}

/// Draws `count` modifications uniformly from the sphere of radius
/// `eps_norm`, keeping only admissible ones. Returns the samples together
/// with the total number of attempts.
pub fn sample_admissible_counted(
    m: &Measurement,
    pair: Pair,
    eps_norm: f64,
    count: usize,
    seed: u64,
) -> Result<(Vec<Perturbation>, u64)> {
    if !(eps_norm > 0.0) || !eps_norm.is_finite() {
        return Err(Error::NonPositiveStep(eps_norm));
    }
    let normals = admissible_normals(m, pair);
    let d = m.dim();
    let parts = par_chunks(seed, count, CHUNK, |rng, len| {
        let mut out = Vec::with_capacity(len);
        let mut attempts = 0u64;
        for _ in 0..len {
            let mut tries = 0u64;
            loop {
                tries += 1;
                let u = unit_direction(rng, d);
                if satisfies(&normals, &u) {
                    out.push(Perturbation { eps: scaled(&u, eps_norm), norm: eps_norm });
                    break;
                }
                if tries >= REJECTION_BUDGET {
                    return Err(Error::RejectionBudget { attempts: tries });
                }
            }
            attempts += tries;
        }
        Ok(vec![(out, attempts)])
    })?;
    let mut samples = Vec::with_capacity(count);
    let mut attempts = 0;
    for (part, n) in parts {
        samples.extend(part);
        attempts += n;
    }
    Ok((samples, attempts))
}

pub fn sample_admissible(
    m: &Measurement,
    pair: Pair,
    eps_norm: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Perturbation>> {
    sample_admissible_counted(m, pair, eps_norm, count, seed).map(|(s, _)| s)
}

pub fn normalized_changes(m: &Measurement, eps: &Perturbation, pair: Pair) -> ChangePoint {
    changes_with(&direction_set(m), &eps.eps, pair)
}

fn changes_with(dirs: &DirectionSet, eps: &[f64], pair: Pair) -> ChangePoint {
    let [dg, dd] = project(dirs, pair, eps);
    ChangePoint { dg, dd }
}

pub fn scatter_dataset(
    m: &Measurement,
    pair: Pair,
    count: usize,
    eps_norm: f64,
    seed: u64,
) -> Result<Vec<ChangePoint>> {
    let dirs = direction_set(m);
    Ok(sample_admissible(m, pair, eps_norm, count, seed)?
        .iter()
        .map(|p| changes_with(&dirs, &p.eps, pair))
        .collect())
}

/// The four arcs bounding `Γ`, each sampled at [`ARC_POINTS`] points.
pub fn gamma_boundary(m: &Measurement, pair: Pair) -> Vec<RegionArc> {
    let prof = m.profile();
    let dirs = direction_set(m);
    let a = angle_set_with(m, &prof);
    let (cg, cf, cr) = (a.cos_theta_g, a.cos_theta_f, a.cos_theta_r);

    let (d_plus, d_minus) = match pair {
        Pair::Gf => (&dirs.f_plus, &dirs.f_minus),
        Pair::Gr => (&dirs.r_plus, &dirs.r_minus),
    };
    let (coefficients, compress) = match pair {
        Pair::Gf => (
            [a.c_gf_pp, -a.c_gf_mp, a.c_gf_mm, -a.c_gf_pm],
            [(1.0, 1.0), (cg, 1.0), (cg, cf), (1.0, cf)],
        ),
        Pair::Gr => (
            [a.c_gr_pp, -a.c_gr_mp, a.c_gr_mm, -a.c_gr_pm],
            [(1.0, cr), (cg, cr), (cg, 1.0), (1.0, 1.0)],
        ),
    };
    let generators = [
        (&dirs.g_plus, d_plus),
        (d_plus, &dirs.g_minus),
        (&dirs.g_minus, d_minus),
        (d_minus, &dirs.g_plus),
    ];

    generators
        .iter()
        .enumerate()
        .map(|(k, (u, v))| {
            let start = project(&dirs, pair, u);
            let end = project(&dirs, pair, v);
            let cos_ab = dot(u, v);
            let zero = norm(u) == 0.0 || norm(v) == 0.0;
            let same = (start[0] - end[0]).abs() <= 1e-12 && (start[1] - end[1]).abs() <= 1e-12;
            let kind = if zero {
                if same {
                    ArcKind::Point
                } else {
                    ArcKind::Line
                }
            } else if cos_ab >= 1.0 - 1e-12 {
                ArcKind::Point
            } else if cos_ab <= -1.0 + 1e-12 {
                ArcKind::Line
            } else {
                ArcKind::Ellipse
            };
            let points = (0..ARC_POINTS)
                .map(|j| {
                    let t = j as f64 / (ARC_POINTS - 1) as f64;
                    let (x, y) = match kind {
                        ArcKind::Ellipse => {
                            let (s, c) = (t * FRAC_PI_2).sin_cos();
                            let n = (1.0 + 2.0 * cos_ab * c * s).sqrt();
                            ((start[0] * c + end[0] * s) / n, (start[1] * c + end[1] * s) / n)
                        }
                        _ => (
                            start[0] + t * (end[0] - start[0]),
                            start[1] + t * (end[1] - start[1]),
                        ),
                    };
                    (t, x, y)
                })
                .collect();
            RegionArc {
                segment: k as u8 + 1,
                coefficient: coefficients[k],
                compress_x: compress[k].0,
                compress_y: compress[k].1,
                kind,
                start,
                end,
                points,
                cos_ab,
            }
        })
        .collect()
}

/// Whether `(x, y)` lies in the region bounded by `arcs` (within `slack`).
///
/// The reachable set is the image of a convex cone intersected with the unit
/// ball, so it is the union of the four sectors spanned by consecutive
/// steepest directions.
pub fn gamma_contains(arcs: &[RegionArc], x: f64, y: f64, slack: f64) -> bool {
    arcs.iter().any(|arc| arc.sector_contains([x, y], slack))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangePoint {
    pub family: String,
    pub param: f64,
    pub g: f64,
    pub c: f64,
}

/// `(G, C⁺⁺)` along every family `m_{k,l}(λ)`, the points `P_r = p_r`, and
/// for the `G`–`R` pair the limit curves `L_n`.
pub fn coefficient_range_curves(d: usize, pair: Pair, grid: usize) -> Result<Vec<RangePoint>> {
    if d < 2 {
        return Err(Error::TooShort(d));
    }
    if grid < 2 {
        return Err(Error::Precondition(format!("grid must be at least 2, got {grid}")));
    }
    let lam_at = |j: usize| j as f64 / (grid - 1) as f64;
    let mut out = Vec::new();
    for k in 1..d {
        for l in 1..=d - k {
            for j in 0..grid {
                let lam = lam_at(j);
                let m = family_m(d, k, l, lam, 1.0)?;
                out.push(RangePoint {
                    family: format!("m_{k}_{l}"),
                    param: lam,
                    g: m.metrics().g,
                    c: pair.c_pp(&crate::angle_set(&m)),
                });
            }
        }
    }
    if pair == Pair::Gr {
        let df = d as f64;
        for n in 1..d {
            for j in 1..grid {
                let lam = lam_at(j);
                let sigma_sq = 1.0 + (df - 1.0) * lam * lam;
                let c = -(n as f64 / (df - 1.0)).sqrt()
                    / (1.0 + (df - 1.0 - n as f64) * lam * lam).sqrt();
                out.push(RangePoint {
                    family: format!("L_{n}"),
                    param: lam,
                    g: (1.0 + 1.0 / sigma_sq) / (df + 1.0),
                    c,
                });
            }
        }
    }
    for r in 1..=d {
        let m = family_p(d, r, 1.0)?;
        out.push(RangePoint {
            family: format!("P_{r}"),
            param: r as f64,
            g: m.metrics().g,
            c: pair.c_pp(&crate::angle_set(&m)),
        });
    }
    Ok(out)
}

/// Sample Pearson coefficient of `(Δg, Δf)` over isotropic modifications.
pub fn pearson_check(m: &Measurement, count: usize, eps_norm: f64, seed: u64) -> Result<f64> {
    let prof = m.profile();
    if prof.n1 != 1 || prof.n0 != 0 {
        return Err(Error::Precondition(format!(
            "the correlation identity needs a unique maximum and no zero singular value \
             (n1 = {}, n0 = {})",
            prof.n1, prof.n0
        )));
    }
    if count < 2 {
        return Err(Error::Precondition("need at least 2 samples".into()));
    }
    let points = scatter_dataset(m, Pair::Gf, count, eps_norm, seed)?;
    Ok(pearson(points.iter().map(|p| (p.dg, p.dd))))
}

fn pearson(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let n = pairs.clone().count() as f64;
    let (mx, my) = pairs
        .clone()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx, syy) = pairs.fold((0.0, 0.0, 0.0), |(c, a, b), (x, y)| {
        let (dx, dy) = (x - mx, y - my);
        (c + dx * dy, a + dx * dx, b + dy * dy)
    });
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{self, GF_SMOOTH};

    fn m(v: &[f64]) -> Measurement {
        Measurement::new(v).unwrap()
    }

    #[test]
    fn sampler_is_deterministic_and_admissible() {
        let x = m(&[0.8, 0.7, 0.4, 0.0]);
        let a = sample_admissible(&x, Pair::Gf, 0.01, 3000, 7).unwrap();
        let b = sample_admissible(&x, Pair::Gf, 0.01, 3000, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3000);
        for p in &a {
            assert!(p.eps[3] >= 0.0);
            assert!((norm(&p.eps) - 0.01).abs() < 1e-15);
        }
        assert_ne!(a, sample_admissible(&x, Pair::Gf, 0.01, 3000, 8).unwrap());
    }

    #[test]
    fn acceptance_rates() {
        let (_, attempts) =
            sample_admissible_counted(&m(&GF_SMOOTH), Pair::Gf, 0.01, 5000, 1).unwrap();
        assert_eq!(attempts, 5000);
        let n = 100_000;
        let (_, attempts) =
            sample_admissible_counted(&m(&[1.0, 1.0, 0.5, 0.2]), Pair::Gf, 0.01, n, 1).unwrap();
        let rate = n as f64 / attempts as f64;
        assert!((rate - 0.5).abs() < 0.01, "{rate}");
    }

    #[test]
    fn steepest_images() {
        let x = m(&GF_SMOOTH);
        let dirs = direction_set(&x);
        let c = crate::angle_set(&x).c_gf_pp;
        let g = changes_with(&dirs, &dirs.g_plus, Pair::Gf);
        let f = changes_with(&dirs, &dirs.f_plus, Pair::Gf);
        assert!((g.dg - 1.0).abs() < 1e-14 && (g.dd - c).abs() < 1e-14);
        assert!((f.dg - c).abs() < 1e-14 && (f.dd - 1.0).abs() < 1e-14);
        // orthogonal to g, f and λ
        let mut e = vec![0.0; 4];
        let basis = [dirs.g.clone(), dirs.f.clone(), x.lambdas().to_vec()];
        let mut v = vec![0.3, -0.2, 0.7, 0.1];
        // Gram-Schmidt against the three vectors
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        for b in basis.iter() {
            let mut w = b.clone();
            for o in &ortho {
                let k = dot(&w, o);
                w = w.iter().zip(o).map(|(a, b)| a - k * b).collect();
            }
            ortho.push(scaled(&w, 1.0 / norm(&w)));
        }
        for o in &ortho {
            let k = dot(&v, o);
            v = v.iter().zip(o).map(|(a, b)| a - k * b).collect();
        }
        e.copy_from_slice(&v);
        let p = changes_with(&dirs, &e, Pair::Gf);
        assert!(p.dg.abs() < 1e-14 && p.dd.abs() < 1e-14);
    }

    #[test]
    fn sigma_examples() {
        let circle = sigma_ellipse(0.0, 100);
        for &(x, y) in &circle.points {
            assert!((x * x + y * y - 1.0).abs() < 1e-14);
        }
        let line = sigma_ellipse(-1.0, 100);
        for &(x, y) in &line.points {
            assert!((x + y).abs() < 1e-14);
        }
        let e = sigma_ellipse(-0.6, 100);
        assert!((e.quadratic(1.0, -0.6) - e.rhs()).abs() < 1e-14);
        assert!((e.quadratic(-0.6, 1.0) - e.rhs()).abs() < 1e-14);
    }

    #[test]
    fn arcs_join_and_lie_on_compressed_ellipses() {
        for preset in presets::PRESETS.iter() {
            let x = preset.measurement();
            let arcs = gamma_boundary(&x, preset.pair);
            assert_eq!(arcs.len(), 4);
            for k in 0..4 {
                let a = arcs[k].end;
                let b = arcs[(k + 1) % 4].start;
                assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
            }
            for arc in arcs.iter().filter(|a| a.kind == ArcKind::Ellipse) {
                let k = arc.coefficient;
                for &(_, px, py) in &arc.points {
                    let (u, v) = (px / arc.compress_x, py / arc.compress_y);
                    let q = u * u + v * v - 2.0 * k * u * v;
                    assert!(
                        (q - (1.0 - k * k)).abs() < 1e-9,
                        "{} {} arc {}: {q} vs {}",
                        preset.pair,
                        preset.name,
                        arc.segment,
                        1.0 - k * k
                    );
                }
            }
        }
    }

    #[test]
    fn anomalous_shapes() {
        let arcs = gamma_boundary(&m(&[1.0, 0.31, 0.31, 0.31]), Pair::Gr);
        assert_eq!(arcs[0].kind, ArcKind::Line);
        let [x0, y0] = arcs[0].start;
        let [x1, y1] = arcs[0].end;
        let cr = crate::angle_set(&m(&[1.0, 0.31, 0.31, 0.31])).cos_theta_r;
        assert!(((y1 - y0) / (x1 - x0) + cr).abs() < 1e-9);

        // p₂ in d = 4: quarter disc.
        let p2 = family_p(4, 2, 1.0).unwrap();
        let arcs = gamma_boundary(&p2, Pair::Gf);
        assert_eq!(arcs[0].kind, ArcKind::Ellipse);
        for &(_, x, y) in &arcs[0].points {
            assert!((x * x + y * y - 1.0).abs() < 1e-12 && x >= -1e-15 && y >= -1e-15);
        }
        assert!(gamma_contains(&arcs, 0.5, 0.5, 1e-9));
        assert!(!gamma_contains(&arcs, -0.1, 0.5, 1e-9));
        assert!(!gamma_contains(&arcs, 0.8, 0.8, 1e-9));

        let opt = gamma_boundary(&m(&[1.0, 0.5, 0.5, 0.5]), Pair::Gf);
        assert!(!gamma_contains(&opt, 1e-3, 1e-3, 1e-9));
        assert!(gamma_contains(&opt, 0.3, -0.3, 1e-9));
    }

    #[test]
    fn range_curve_examples() {
        let curves = coefficient_range_curves(4, Pair::Gf, 21).unwrap();
        for p in curves.iter().filter(|p| p.family == "m_1_3" && p.param > 0.0 && p.param < 1.0) {
            assert!((p.c + 1.0).abs() < 1e-12);
        }
        let p1 = curves.iter().find(|p| p.family == "P_1").unwrap();
        assert!((p1.g - 0.4).abs() < 1e-15 && p1.c == 0.0);
        let p4 = curves.iter().find(|p| p.family == "P_4").unwrap();
        assert!((p4.g - 0.25).abs() < 1e-15 && p4.c == 0.0);

        let curves = coefficient_range_curves(4, Pair::Gr, 21).unwrap();
        for p in curves.iter().filter(|p| p.param == 0.0 && p.family.starts_with("m_")) {
            assert_eq!(p.c, 0.0);
        }
        // L_{d-1} coincides with the optimal family itself.
        for p in curves.iter().filter(|p| p.family == "L_3" && p.param < 1.0) {
            let q = curves
                .iter()
                .find(|q| q.family == "m_1_3" && q.param == p.param)
                .unwrap();
            assert!((p.c - q.c).abs() < 1e-12 && (p.g - q.g).abs() < 1e-15);
        }
    }

    #[test]
    fn pearson_examples() {
        let r = pearson_check(&m(&[1.0, 0.31, 0.31, 0.31]), 20_000, 0.01, 3).unwrap();
        assert!((r + 1.0).abs() < 0.005, "{r}");
        assert!(pearson_check(&m(&[1.0, 1.0, 0.5, 0.2]), 100, 0.01, 3).is_err());
        assert!(pearson_check(&m(&[1.0, 0.5, 0.2, 0.0]), 100, 0.01, 3).is_err());
    }

    #[test]
    fn scatter_stays_inside_gamma_and_sigma() {
        for preset in presets::PRESETS.iter() {
            let x = preset.measurement();
            let arcs = gamma_boundary(&x, preset.pair);
            let sigma = sigma_for(&x, preset.pair, 16);
            let points = scatter_dataset(&x, preset.pair, 2000, 0.01, 11).unwrap();
            for p in &points {
                assert!(
                    gamma_contains(&arcs, p.dg, p.dd, 1e-9),
                    "{} {}: {p:?} outside Γ",
                    preset.pair,
                    preset.name
                );
                assert!(sigma.contains(p.dg, p.dd, 1e-9));
            }
        }
    }
}
