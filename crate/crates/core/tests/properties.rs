//! Invariants checked on randomly drawn points and parameters.

use std::sync::OnceLock;

use proptest::prelude::*;

use finsler_core::classify::{Thresholds, Verdict};
use finsler_core::connection::{
    chern_coefficients, horizontal_derivative, nonlinear_connection, ChernField, LeviCivitaField,
};
use finsler_core::curvature::flag_curvature;
use finsler_core::expr::Expr;
use finsler_core::indicatrix::{averaged_connection, Source};
use finsler_core::model::{
    berwald_rund_quadratic, cartan_tensor, fundamental_tensor, numata, round_sphere, slope_example,
    sphere_circle_randers, sphere_circle_randers_with, HalfSquare,
};
use finsler_core::ode::{dopri5, OdeOptions};
use finsler_core::sampling::Halton;
use finsler_core::transport::{transport_matrix, Path};
use finsler_core::{FinslerModel, SlitPoint};

fn models() -> &'static [FinslerModel] {
    static M: OnceLock<Vec<FinslerModel>> = OnceLock::new();
    M.get_or_init(|| {
        let e = Expr::c;
        vec![
            round_sphere(),
            sphere_circle_randers(0.3).unwrap(),
            sphere_circle_randers_with(&["0", "0", "0.3*sin(x[1])"]).unwrap(),
            slope_example(),
            berwald_rund_quadratic(),
            numata(
                vec![vec![e(1.0), e(0.2)], vec![e(0.2), e(1.0)]],
                vec![Expr::parse("0.15*x[1]").unwrap(), Expr::parse("0.15*x[0]").unwrap()],
            )
            .unwrap(),
        ]
    })
}

/// One sampled point of model `k`, chosen by `seed`.
fn point(k: usize, seed: u64) -> (&'static FinslerModel, SlitPoint) {
    let m = &models()[k % models().len()];
    let p = m.sample_points(1, seed).pop().expect("a convex direction");
    (m, p)
}

fn max_abs<'a>(a: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn positive_homogeneity(k in 0usize..6, seed in 0u64..10_000, lambda in 0.05f64..20.0) {
        let (m, p) = point(k, seed);
        let f = m.f(&p.x, &p.y);
        let fl = m.f(&p.x, &p.scaled(lambda).y);
        prop_assert!((fl - lambda * f).abs() <= 1e-12 * lambda * f);
    }

    #[test]
    fn fundamental_tensor_reproduces_the_norm(k in 0usize..6, seed in 0u64..10_000) {
        let (m, p) = point(k, seed);
        let g = fundamental_tensor(m, &p).unwrap().g;
        let n = p.dim();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(g[[i, j]], g[[j, i]]);
                q += g[[i, j]] * p.y[i] * p.y[j];
            }
        }
        let f2 = m.f(&p.x, &p.y).powi(2);
        prop_assert!((q - f2).abs() <= 1e-10 * f2);
        prop_assert!(finsler_core::linalg::min_eigenvalue(&g) > 0.0);
    }

    #[test]
    fn cartan_tensor_is_symmetric_and_annihilates_y(k in 0usize..6, seed in 0u64..10_000) {
        let (m, p) = point(k, seed);
        let p = p.scaled(1.0 / m.f(&p.x, &p.y));
        let a = cartan_tensor(m, &p).unwrap().a;
        let scale = max_abs(a.iter()).max(1.0);
        let n = p.dim();
        for i in 0..n {
            for j in 0..n {
                let c: f64 = (0..n).map(|l| a[[i, j, l]] * p.y[l]).sum();
                prop_assert!(c.abs() <= 1e-9 * scale);
                for l in 0..n {
                    prop_assert!((a[[i, j, l]] - a[[l, j, i]]).abs() <= 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn chern_coefficients_are_torsion_free_and_scale_invariant(
        k in 0usize..6, seed in 0u64..10_000, lambda in 0.1f64..10.0,
    ) {
        let (m, p) = point(k, seed);
        let g = chern_coefficients(m, &p).unwrap();
        let gl = chern_coefficients(m, &p.scaled(lambda)).unwrap();
        let scale = max_abs(g.iter()).max(1.0);
        let n = p.dim();
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    prop_assert!((g[[i, j, l]] - g[[i, l, j]]).abs() <= 1e-12 * scale);
                    prop_assert!((g[[i, j, l]] - gl[[i, j, l]]).abs() <= 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn nonlinear_connection_is_one_homogeneous(k in 0usize..6, seed in 0u64..10_000, lambda in 0.1f64..10.0) {
        let (m, p) = point(k, seed);
        let a = nonlinear_connection(m, &p).unwrap().n;
        let b = nonlinear_connection(m, &p.scaled(lambda)).unwrap().n;
        let scale = max_abs(a.iter()).max(1.0);
        for (u, v) in a.iter().zip(b.iter()) {
            prop_assert!((lambda * u - v).abs() <= 1e-10 * lambda * scale);
        }
    }

    #[test]
    fn norm_is_horizontally_constant(k in 0usize..6, seed in 0u64..10_000) {
        let (m, p) = point(k, seed);
        let f2 = m.f(&p.x, &p.y).powi(2);
        for i in 0..p.dim() {
            let d = horizontal_derivative(m, &HalfSquare(m), &p, i).unwrap();
            prop_assert!(d.abs() <= 1e-9 * f2.max(1.0));
        }
    }

    #[test]
    fn unit_sphere_flags_have_curvature_one(seed in 0u64..10_000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let m = &models()[0];
        let p = m.sample_points(1, seed).pop().unwrap();
        let v = [a, b];
        let cross = (p.y[0] * b - p.y[1] * a).abs();
        prop_assume!(cross > 0.1 * p.y_norm() * (a * a + b * b).sqrt());
        let k = flag_curvature(m, &p, &v).unwrap().k;
        prop_assert!((k - 1.0).abs() < 1e-9);
    }

    #[test]
    fn verdicts_are_monotone_in_the_residual(r1 in 0.0f64..1e-4, r2 in 0.0f64..1e-4, scale in 1.0f64..10.0) {
        let t = Thresholds::default();
        let rank = |v: Verdict| match v { Verdict::Yes => 0, Verdict::Inconclusive => 1, Verdict::No => 2 };
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(rank(t.decide(lo, scale)) <= rank(t.decide(hi, scale)));
    }

    #[test]
    fn halton_points_are_reproducible_and_in_the_unit_cube(dim in 1usize..6, seed in 0u64..1_000) {
        let mut a = Halton::new(dim, seed);
        let mut b = Halton::new(dim, seed);
        for _ in 0..20 {
            let u = a.next_point();
            prop_assert_eq!(&u, &b.next_point());
            prop_assert!(u.iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn integrator_reproduces_linear_growth(lambda in -2.0f64..2.0, y0 in -5.0f64..5.0, t in 0.1f64..3.0) {
        let tr = dopri5(|_, y| Ok(vec![lambda * y[0]]), 0.0, &[y0], t, OdeOptions::default()).unwrap();
        let want = y0 * (lambda * t).exp();
        prop_assert!((tr.y_end[0] - want).abs() <= 1e-7 * want.abs().max(1.0));
        let mid = tr.at(0.5 * t)[0];
        prop_assert!((mid - y0 * (0.5 * lambda * t).exp()).abs() <= 1e-7 * want.abs().max(y0.abs()).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn averaged_connection_is_symmetric(k in 0usize..6, seed in 0u64..10_000) {
        let m = &models()[k];
        let x = m.sample_base_points(1, seed).pop().unwrap();
        let c = averaged_connection(m, Source::Chern, &x, 8).unwrap().coefficients;
        let n = x.len();
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    prop_assert_eq!(c[[i, j, l]], c[[i, l, j]]);
                }
            }
        }
    }

    #[test]
    fn levi_civita_holonomy_is_an_isometry(
        a in 0.2f64..0.6, b in 0.2f64..0.6, c0 in 0.8f64..1.4, d0 in 0.0f64..3.0,
    ) {
        let m = &models()[0];
        let lc = LeviCivitaField::new(m.randers.as_ref().unwrap().a.clone());
        let corners = vec![vec![d0, c0], vec![d0 + a, c0], vec![d0 + a, c0 + b], vec![d0, c0 + b]];
        let mat = transport_matrix(&lc, &Path::polygon(&corners), 1e-10).unwrap();
        let s2 = c0.sin().powi(2);
        // g(Mv, Mw) = g(v, w) with g = diag(sin²φ, 1) at the base corner
        let g = |u: [f64; 2], v: [f64; 2]| s2 * u[0] * v[0] + u[1] * v[1];
        let col = |k: usize| [mat[[0, k]], mat[[1, k]]];
        prop_assert!((g(col(0), col(0)) - s2).abs() < 1e-8);
        prop_assert!((g(col(1), col(1)) - 1.0).abs() < 1e-8);
        prop_assert!(g(col(0), col(1)).abs() < 1e-8);
        let _ = ChernField { model: m };
    }
}
