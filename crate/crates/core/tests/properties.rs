use infodist::correlation::{normalized_changes, Perturbation};
use infodist::geometry::{active_constraints, angle_set_from_vectors};
use infodist::improver::improvability;
use infodist::{
    angle_set, canonicalize, direction_set, family_p, successive_projection, Measurement, Pair,
};
use proptest::prelude::*;

/// Descending vectors that often sit on a boundary: each entry may copy its
/// predecessor or be zero, and the maximum may be 1.
fn measurement() -> impl Strategy<Value = Measurement> {
    (2usize..=7)
        .prop_flat_map(|d| {
            (
                prop::collection::vec((0.0f64..=1.0, 0u8..6), d),
                any::<bool>(),
            )
        })
        .prop_filter_map("all zero", |(raw, unit_max)| {
            let mut v: Vec<f64> = raw.iter().map(|(x, _)| *x).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            for i in 1..v.len() {
                match raw[i].1 {
                    0 => v[i] = v[i - 1],
                    1 => v[i] = 0.0,
                    _ => {}
                }
            }
            v.sort_by(|a, b| b.total_cmp(a));
            if unit_max && v[0] > 0.0 {
                let max = v[0];
                v.iter_mut().for_each(|x| *x /= max);
            }
            Measurement::new(&v).ok()
        })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn metric_bounds(m in measurement()) {
        let d = m.dim() as f64;
        let t = m.metrics();
        let eps = 1e-12;
        prop_assert!(t.g >= 1.0 / d - eps && t.g <= 2.0 / (d + 1.0) + eps);
        prop_assert!(t.f >= 2.0 / (d + 1.0) - eps && t.f <= 1.0 + eps);
        prop_assert!(t.r >= 0.0 && t.r <= 1.0 + eps);
        let p1 = family_p(m.dim(), 1, 1.0).unwrap().metrics();
        let pd = family_p(m.dim(), m.dim(), 1.0).unwrap().metrics();
        prop_assert!(t.g <= p1.g + eps && t.f >= p1.f - eps && t.r >= p1.r - eps);
        prop_assert!(t.g >= pd.g - eps && t.f <= pd.f + eps && t.r <= pd.r + eps);
    }

    #[test]
    fn rescaling_and_interior_permutation(m in measurement(), c in 0.01f64..=1.0) {
        let scaled: Vec<f64> = m.lambdas().iter().map(|x| c * x).collect();
        let s = Measurement::new(&scaled).unwrap();
        let (a, b) = (m.metrics(), s.metrics());
        prop_assert!((a.g - b.g).abs() < 1e-12 && (a.f - b.f).abs() < 1e-12 && (a.r - b.r).abs() < 1e-12);

        let back = canonicalize(&scaled.iter().map(|x| x / c).collect::<Vec<_>>(), true).unwrap();
        prop_assert!((back.metrics().g - a.g).abs() < 1e-12);

        let d = m.dim();
        let mut perm = m.lambdas().to_vec();
        if d > 3 {
            perm[1..d - 1].rotate_left(1);
        }
        prop_assert_eq!(canonicalize(&perm, false).unwrap(), m);
    }

    #[test]
    fn directions_are_unit_orthogonal_admissible(m in measurement()) {
        let dirs = direction_set(&m);
        let prof = m.profile();
        let normals = active_constraints(&prof, true);
        let all = [
            &dirs.g, &dirs.f, &dirs.r,
            &dirs.g_plus, &dirs.f_plus, &dirs.r_plus,
            &dirs.g_minus, &dirs.f_minus, &dirs.r_minus,
        ];
        for v in all {
            let n = norm(v);
            prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-12, "norm {}", n);
            prop_assert!(dot(v, m.lambdas()).abs() < 1e-12);
        }
        let steepest = [
            &dirs.g_plus, &dirs.f_plus, &dirs.r_plus,
            &dirs.g_minus, &dirs.f_minus, &dirs.r_minus,
        ];
        for v in steepest {
            for n in &normals {
                prop_assert!(dot(n, v) >= -1e-12);
            }
        }
        for g in [&dirs.grad_g, &dirs.grad_f, &dirs.grad_r] {
            prop_assert!(dot(g, m.lambdas()).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_forms_agree_with_dot_products(m in measurement()) {
        let closed = angle_set(&m);
        let dots = angle_set_from_vectors(&direction_set(&m));
        let a = [closed.c_gf, closed.c_gr, closed.c_gf_pp, closed.c_gf_mp, closed.c_gf_pm,
                 closed.c_gf_mm, closed.c_gr_pp, closed.c_gr_mp, closed.c_gr_pm, closed.c_gr_mm,
                 closed.cos_theta_g, closed.cos_theta_f, closed.cos_theta_r];
        let b = [dots.c_gf, dots.c_gr, dots.c_gf_pp, dots.c_gf_mp, dots.c_gf_pm,
                 dots.c_gf_mm, dots.c_gr_pp, dots.c_gr_mp, dots.c_gr_pm, dots.c_gr_mm,
                 dots.cos_theta_g, dots.cos_theta_f, dots.cos_theta_r];
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12, "{:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn sign_pattern(m in measurement()) {
        let a = angle_set(&m);
        prop_assert!(a.c_gf_pp <= 0.0 && a.c_gf_mm <= 0.0 && a.c_gf_mp >= 0.0 && a.c_gf_pm >= 0.0);
        prop_assert!(a.c_gr_pp <= 0.0 && a.c_gr_mm <= 0.0 && a.c_gr_mp >= 0.0 && a.c_gr_pm >= 0.0);
        // In two dimensions g and r are both orthogonal to λ, hence antiparallel.
        if m.dim() > 2 {
            prop_assert!(a.c_gr > -1.0);
        }
        for c in [a.cos_theta_g, a.cos_theta_f, a.cos_theta_r] {
            prop_assert!((0.0..=1.0).contains(&c));
        }
        for pair in [Pair::Gf, Pair::Gr] {
            let s = improvability(&m, pair);
            prop_assert!((0.0..=2.0).contains(&s));
        }
    }

    #[test]
    fn change_points_are_bounded(m in measurement(), raw in prop::collection::vec(-1.0f64..1.0, 7)) {
        let eps: Vec<f64> = raw[..m.dim()].to_vec();
        let n = norm(&eps);
        prop_assume!(n > 1e-6);
        let p = Perturbation { eps, norm: n };
        for pair in [Pair::Gf, Pair::Gr] {
            let c = normalized_changes(&m, &p, pair);
            prop_assert!(c.dg * c.dg <= 1.0 + 1e-9 && c.dd * c.dd <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn block_average_is_idempotent(v in prop::collection::vec(-1.0f64..1.0, 2..8), a in 0usize..8, b in 0usize..8) {
        let (lo, hi) = (a.min(b).min(v.len()), a.max(b).min(v.len()));
        let once = successive_projection(&v, lo..hi);
        prop_assert_eq!(successive_projection(&once, lo..hi), once.clone());
        let sum: f64 = v[lo..hi].iter().sum();
        let sum_once: f64 = once[lo..hi].iter().sum();
        prop_assert!((sum - sum_once).abs() < 1e-12);
    }
}
