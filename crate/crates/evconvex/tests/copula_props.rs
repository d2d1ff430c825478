mod common;

use common::{builders, interior_point, rng, u_hessian};
use evconvex::copula::{
    big_u_composed, big_u_lenient, copula_value, d_bound, m_matrix_psd, phi_omega, psi, psi_inv,
};
use proptest::prelude::*;
use rand::Rng;

const E_INV: f64 = 0.367_879_441_171_442_33;

#[test]
fn omega_bound_holds_on_the_grid() {
    let mut r = rng(9);
    let mut violations = 0;
    for _ in 0..1000 {
        let y = r.random_range(1e-3..1.0 - 1e-3);
        let p = r.random_range(E_INV..1.0 - 1e-6);
        let d = d_bound(y, p).unwrap();
        for k in 1..=20 {
            let kappa = k as f64 * 0.05;
            let po = phi_omega(kappa, y, p).unwrap();
            assert!(po.phi1 > 0.0 && po.phi2 > 0.0, "kappa={kappa} y={y} p={p}");
            if 1.0 / po.omega < d * kappa {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}

/// U is convex wherever the model is certified at (x, y, p); y runs over the
/// equal-weight constants 1/K. Uncertified points carry no convexity claim.
#[test]
fn u_is_jointly_convex_for_both_builders() {
    let mut r = rng(31);
    for model in builders() {
        let (mut checked, mut drawn) = (0, 0);
        while checked < 200 {
            let p = [E_INV, 0.9, 0.97][drawn % 3];
            let y = 1.0 / r.random_range(2..=6) as f64;
            let x = interior_point(&model, &mut r);
            drawn += 1;
            if !m_matrix_psd(&model, &x, y, p, None).unwrap().certified {
                continue;
            }
            let (lmin, scale) = u_hessian(&model, &x, y, p);
            assert!(
                lmin >= -1e-7 * scale,
                "{model:?} x={x:?} y={y} p={p}: {lmin:e}"
            );
            checked += 1;
        }
        assert!(
            drawn < 400,
            "{model:?}: only 200 of {drawn} points certified"
        );
    }
}

#[test]
fn m_matrix_sign_matches_full_hessian() {
    let mut r = rng(41);
    let models = builders();
    let (mut agree, mut total) = (0, 0);
    for k in 0..500 {
        let model = &models[k % models.len()];
        let p = r.random_range(E_INV..0.99);
        let y = r.random_range(0.02..0.98);
        let x = interior_point(model, &mut r);
        let (h_min, h_scale) = u_hessian(model, &x, y, p);
        let diag = m_matrix_psd(model, &x, y, p, None).unwrap();
        let m_scale = diag.phi1.abs() + diag.phi2.abs();
        let band = h_min.abs() <= 1e-8 * h_scale || diag.m_eig_min.abs() <= 1e-8 * m_scale;
        total += 1;
        if (h_min >= 0.0) == (diag.m_eig_min >= 0.0) || band {
            agree += 1;
        } else {
            panic!("x={x:?} y={y} p={p}: H {h_min:e} vs M {:e}", diag.m_eig_min);
        }
    }
    assert_eq!(agree, total);
}

#[test]
fn builder_models_satisfy_the_auxiliary_matrix_test() {
    let mut r = rng(51);
    for model in builders() {
        for _ in 0..100 {
            let x = interior_point(&model, &mut r);
            let diag = m_matrix_psd(&model, &x, 1.0 / 3.0, 0.97, None).unwrap();
            assert!(diag.assumption4_psd, "{model:?} x={x:?}");
            assert!(diag.kappa > 0.0 && diag.kappa <= 1.0);
        }
    }
}

#[test]
fn frechet_bound_over_random_cases() {
    let mut r = rng(61);
    for _ in 0..10_000 {
        let kappa = r.random_range(0.01..=1.0);
        let n = r.random_range(2..=5);
        let u: Vec<f64> = (0..n).map(|_| r.random_range(1e-6..=1.0)).collect();
        let c = copula_value(kappa, &u).unwrap();
        let lower = (u.iter().sum::<f64>() - (n as f64 - 1.0)).max(0.0);
        let upper = u.iter().cloned().fold(1.0, f64::min);
        assert!(
            c >= lower - 1e-12 && c <= upper + 1e-12,
            "kappa={kappa} u={u:?}: {c}"
        );
    }
}

proptest! {
    #[test]
    fn copula_is_nondecreasing(kappa in 0.01..=1.0f64, u in prop::collection::vec(1e-6..0.999f64, 2..5), i in 0usize..5, bump in 1e-6..0.5f64) {
        let i = i % u.len();
        let mut v = u.clone();
        v[i] = (v[i] + bump).min(1.0);
        prop_assert!(copula_value(kappa, &v).unwrap() >= copula_value(kappa, &u).unwrap() - 1e-15);
    }

    #[test]
    fn psi_round_trip(kappa in 0.01..=1.0f64, t in 1e-6..=1.0f64) {
        let back = psi_inv(kappa, psi(kappa, t).unwrap()).unwrap();
        prop_assert!((back - t).abs() <= 1e-12);
    }

    #[test]
    fn u_closed_form_matches_composition(kappa in 0.05..=1.0f64, y in 1e-3..=1.0f64, p in 1e-3..0.999f64) {
        let a = big_u_lenient(kappa, y, p).unwrap();
        let b = big_u_composed(kappa, y, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-14, "{a} vs {b}");
    }
}
