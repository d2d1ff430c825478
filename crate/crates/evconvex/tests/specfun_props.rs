mod common;

use common::bessel_k_integral;
use evconvex::specfun::{bessel_k, bessel_k_ratio, gaussian_cdf, log_gamma, student_cdf};
use proptest::prelude::*;

#[test]
fn log_gamma_reproduces_factorials() {
    let mut fact = 1.0_f64;
    for n in 1..=20u32 {
        if n > 1 {
            fact *= (n - 1) as f64;
        }
        let rel = (log_gamma(n as f64).unwrap().exp() - fact).abs() / fact;
        assert!(rel <= 1e-12, "n={n}: rel {rel:e}");
    }
    assert!(log_gamma(0.0).is_err());
    assert!(log_gamma(-1.5).is_err());
}

#[test]
fn bessel_matches_integral_representation() {
    for &nu in &[-2.5, -1.0, -0.3, 0.0, 0.3, 0.5, 1.0, 1.7, 2.0, 3.5] {
        for &x in &[0.05, 0.3, 1.0, 1.99, 2.01, 5.0, 12.0, 40.0] {
            let k = bessel_k(nu, x).unwrap();
            let o = bessel_k_integral(nu, x);
            assert!((k - o).abs() <= 1e-10 * o, "nu={nu} x={x}: {k} vs {o}");
        }
    }
}

#[test]
fn bessel_recurrence_matches_central_difference() {
    for i in -4..=4 {
        let nu = i as f64 * 0.5;
        let mut x = 0.5;
        while x <= 20.0 {
            let h = 1e-4 * x;
            let fd = (bessel_k(nu, x + h).unwrap() - bessel_k(nu, x - h).unwrap()) / (2.0 * h);
            let rec = nu / x * bessel_k(nu, x).unwrap() - bessel_k(nu + 1.0, x).unwrap();
            assert!(
                (fd - rec).abs() <= 1e-6 * rec.abs(),
                "nu={nu} x={x}: {fd} vs {rec}"
            );
            x *= 1.25;
        }
    }
}

#[test]
fn bessel_large_argument_asymptotic() {
    let x = 50.0_f64;
    for &nu in &[0.0, 0.5, 1.0, 2.0] {
        let approx = (std::f64::consts::PI / (2.0 * x)).sqrt()
            * (-x).exp()
            * (1.0 + 1.0 / x).powf(nu * nu / 2.0 - 0.125);
        let ratio = bessel_k(nu, x).unwrap() / approx;
        assert!((ratio - 1.0).abs() <= 1e-3, "nu={nu}: ratio {ratio}");
    }
}

#[test]
fn bessel_underflow_and_domain() {
    assert_eq!(bessel_k(1.0, 800.0).unwrap(), 0.0);
    assert!(bessel_k(1.0, 0.0).is_err());
    assert!(bessel_k(1.0, -1.0).is_err());
    assert!(bessel_k_ratio(1.0, 0.0).is_err());
}

#[test]
fn bessel_ratio_limit() {
    // Λ = 1, χ = 1, s = √Λ·η(t) with η(t) = √(χ + t²).
    for &lambda in &[-1.0, 0.5, 2.0] {
        let lim = 2.0 * lambda;
        let at = |t: f64| {
            let j = bessel_k_ratio(lambda, (1.0 + t * t).sqrt()).unwrap();
            t * (1.0 - j * j)
        };
        let (a, b) = (at(1e3), at(1e4));
        assert!(
            (b - lim).abs() <= (a - lim).abs() + 1e-12,
            "lambda={lambda}: not approaching"
        );
        assert!(
            (b - lim).abs() <= 0.02 * lim.abs(),
            "lambda={lambda}: {b} vs {lim}"
        );
    }
}

proptest! {
    #[test]
    fn gaussian_cdf_is_symmetric(t in -40.0..40.0f64) {
        prop_assert!((gaussian_cdf(t) + gaussian_cdf(-t) - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn gaussian_cdf_is_monotone(t in -10.0..10.0f64, dt in 1e-6..1.0f64) {
        prop_assert!(gaussian_cdf(t + dt) >= gaussian_cdf(t));
    }

    #[test]
    fn student_cdf_is_monotone_and_centred(nu in 0.3..50.0f64, t in -30.0..30.0f64, dt in 1e-6..1.0f64) {
        prop_assert!(student_cdf(nu, t + dt).unwrap() >= student_cdf(nu, t).unwrap());
        prop_assert!((student_cdf(nu, 0.0).unwrap() - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn cauchy_is_arctan(t in -50.0..50.0f64) {
        let exact = 0.5 + t.atan() / std::f64::consts::PI;
        prop_assert!((student_cdf(1.0, t).unwrap() - exact).abs() <= 1e-12);
    }

    #[test]
    fn bessel_is_even_in_order(nu in -6.0..6.0f64, x in 0.01..100.0f64) {
        let (a, b) = (bessel_k(nu, x).unwrap(), bessel_k(-nu, x).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn bessel_is_positive_and_decreasing(nu in -4.0..4.0f64, x in 0.01..100.0f64, dx in 1e-3..1.0f64) {
        let a = bessel_k(nu, x).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!(bessel_k(nu, x + dx).unwrap() < a);
    }

    #[test]
    fn half_order_closed_form(x in 0.1..30.0f64) {
        let exact = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp();
        prop_assert!((bessel_k(0.5, x).unwrap() - exact).abs() <= 1e-10 * exact);
    }

    #[test]
    fn ratio_brackets_one(lambda in -4.0..4.0f64, s in 0.05..200.0f64) {
        let j = bessel_k_ratio(lambda, s).unwrap();
        if lambda > 1e-9 {
            prop_assert!(j < 1.0);
        } else if lambda < -1e-9 {
            prop_assert!(j > 1.0);
        }
    }
}
