mod common;

use common::{gh_problem, rng, unit_vector};
use evconvex::copula::Domain;
use evconvex::dist::Marginal1D;
use evconvex::feasibility::{
    grid_export, is_member, joint_probability, minimize_linear, star_shaped_check,
    verify_segment_convexity, CopulaSpec, Method, Problem,
};
use evconvex::fixtures::{three_row_student_problem, three_row_student_rows};
use evconvex::linalg::{dot, norm, SpdMatrix};
use evconvex::thresholds::{assemble_p_star_default, LambdaMode, RowModel};
use evconvex::Error;
use rand::Rng;

fn within_3se(a: f64, mc: f64, se: f64, n: usize) -> bool {
    (a - mc).abs() <= 3.0 * se.max(1.0 / n as f64)
}

#[test]
fn analytic_matches_monte_carlo_for_independent_rows() {
    let mut prob = three_row_student_problem();
    prob.copula = CopulaSpec::Independent;
    let mut r = rng(101);
    let n = 1_000_000;
    for k in 0..10 {
        let x: Vec<f64> = unit_vector(&mut r, 2)
            .iter()
            .map(|v| v * r.random_range(0.5..6.0))
            .collect();
        let a = joint_probability(&prob, &x, Method::Analytic)
            .unwrap()
            .value;
        let mc = joint_probability(&prob, &x, Method::MonteCarlo { n, seed: k }).unwrap();
        assert!(
            within_3se(a, mc.value, mc.std_error, n),
            "x={x:?}: {a} vs {} ± {}",
            mc.value,
            mc.std_error
        );
    }
}

#[test]
fn radial_matches_monte_carlo_for_skewed_rows() {
    let prob = gh_problem();
    let gammas: Vec<Vec<f64>> = prob
        .gh
        .as_ref()
        .unwrap()
        .iter()
        .map(|g| g.as_ref().unwrap().gamma.clone())
        .collect();
    let mut r = rng(202);
    let n = 1_000_000;
    let mut done = 0;
    while done < 5 {
        let x: Vec<f64> = unit_vector(&mut r, 2)
            .iter()
            .map(|v| v * r.random_range(0.5..3.0))
            .collect();
        if gammas.iter().any(|g| dot(g, &x) <= 0.0) {
            continue;
        }
        let rad = joint_probability(&prob, &x, Method::Radial).unwrap().value;
        let mc = joint_probability(
            &prob,
            &x,
            Method::MonteCarlo {
                n,
                seed: 300 + done,
            },
        )
        .unwrap();
        assert!(
            within_3se(rad, mc.value, mc.std_error, n),
            "x={x:?}: {rad} vs {} ± {}",
            mc.value,
            mc.std_error
        );
        let proj = joint_probability(&prob, &x, Method::Analytic)
            .unwrap()
            .value;
        assert!(
            (rad - proj).abs() <= 1e-7,
            "x={x:?}: radial {rad} vs projection {proj}"
        );
        done += 1;
    }
}

#[test]
fn radial_refuses_negative_skew_projection() {
    let prob = gh_problem();
    let err = joint_probability(&prob, &[-1.0, -1.0], Method::Radial).unwrap_err();
    assert!(matches!(err, Error::MethodUnavailable(_)));
}

#[test]
fn probability_decreases_along_rays() {
    let prob = three_row_student_problem();
    let mut r = rng(303);
    for _ in 0..100 {
        let dir = unit_vector(&mut r, 2);
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let t = 0.5 + 6.4 * k as f64 / 39.0;
            let x: Vec<f64> = dir.iter().map(|v| v * t).collect();
            let p = joint_probability(&prob, &x, Method::Analytic)
                .unwrap()
                .value;
            assert!(p <= prev + 1e-12, "dir={dir:?} t={t}");
            prev = p;
        }
    }
}

#[test]
fn row_probability_is_concave_in_the_certified_region() {
    let rows = three_row_student_rows();
    let ps = assemble_p_star_default(&rows, LambdaMode::LMin).unwrap();
    let mut r = rng(404);
    for (i, row) in rows.iter().enumerate() {
        let level = ps.contributions[i].theta.sqrt_theta.unwrap();
        let prep = row.marginal.prepare().unwrap();
        let h_of = |x: &[f64]| prep.cdf(row.g(x).unwrap());
        let inside = |x: &[f64]| {
            let s = row.d - dot(&row.mu, x);
            s > 0.0 && row.g(x).unwrap() >= level && h_of(x) > ps.pstar
        };
        // g(t·x̂) = D/(t·√q̂) − u, so {g ≥ c} meets the ray in t ∈ (0, D/((c+u)·√q̂)].
        let c = level.max(prep.quantile(ps.pstar).unwrap());
        let endpoint = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            let dir = unit_vector(r, 2);
            let q = evconvex::linalg::quad_form(&row.sigma, &dir)
                .unwrap()
                .sqrt();
            let tmax = row.d / ((c + dot(&row.mu, &dir) / q) * q);
            let t = tmax * r.random_range(0.01..1.0);
            dir.iter().map(|v| v * t).collect()
        };
        let mut tested = 0;
        while tested < 100 {
            let a = endpoint(&mut r);
            let b = endpoint(&mut r);
            let pts: Vec<Vec<f64>> = (0..=40)
                .map(|k| {
                    let l = k as f64 / 40.0;
                    a.iter()
                        .zip(&b)
                        .map(|(u, v)| (1.0 - l) * u + l * v)
                        .collect()
                })
                .collect();
            if !pts.iter().all(|x| norm(x) > 1e-6 && inside(x)) {
                continue;
            }
            let vals: Vec<f64> = pts.iter().map(|x| h_of(x)).collect();
            for w in vals.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-7, "row {i}: {a:?} -> {b:?}");
            }
            tested += 1;
        }
    }
}

#[test]
fn membership_examples() {
    let prob = three_row_student_problem();
    assert!(is_member(&prob, &[0.0, 0.0], 0.97).unwrap());
    assert!(matches!(
        is_member(&prob, &[0.0, 0.0], 1.0 + 1e-9),
        Err(Error::DomainError(_))
    ));
    assert!(matches!(
        is_member(&prob, &[8.0, 0.0], 0.5),
        Err(Error::OutsideX)
    ));
    // Along +μ₁ the first row's slack turns negative inside the ball.
    let mu = &prob.rows[0].mu;
    let x: Vec<f64> = mu.iter().map(|v| v / norm(mu) * 6.9).collect();
    assert!(!is_member(&prob, &x, 0.5).unwrap());
}

/// One Gaussian row with μ = 0: S(p) is a Σ-ellipsoid.
fn ball_problem() -> Problem {
    Problem {
        rows: vec![RowModel {
            mu: vec![0.0, 0.0],
            sigma: SpdMatrix::identity(2),
            d: 2.0,
            marginal: Marginal1D::Gaussian,
            r: -2.0,
        }],
        copula: CopulaSpec::Independent,
        gh: None,
        domain: Domain::Box {
            lo: vec![-5.0, -5.0],
            hi: vec![5.0, 5.0],
        },
        origin_allowed: true,
    }
}

#[test]
fn ball_level_sets_are_convex_and_star_shaped() {
    let prob = ball_problem();
    for p in [0.6, 0.8, 0.95] {
        let rep = verify_segment_convexity(&prob, p, 300, 17).unwrap();
        assert!(rep.violations.is_empty(), "p={p}");
        assert!(rep.star_shaped_ok);
        assert!(star_shaped_check(&prob, p, 50, 3).unwrap());
    }
}

#[test]
fn negative_d_origin_is_not_a_member() {
    let mut prob = ball_problem();
    prob.rows[0].d = -1.0;
    assert!(matches!(
        star_shaped_check(&prob, 0.5, 10, 1),
        Err(Error::OriginNotMember)
    ));
}

#[test]
fn infinite_d_gives_a_flat_grid() {
    let mut prob = ball_problem();
    prob.rows[0].d = f64::INFINITY;
    let cells = grid_export(&prob, [-4.0, -4.0], [4.0, 4.0], 6).unwrap();
    assert_eq!(cells.len(), 36);
    assert!(cells.iter().all(|c| c.prob == 1.0));
}

#[test]
fn minimize_matches_grid_scan() {
    let prob = three_row_student_problem();
    let res = minimize_linear(&prob, &[1.0, 1.0], 0.97, 200, false).unwrap();
    assert!(res.certificate.converged);
    let lo = [-0.5, -0.5];
    let hi = [0.5, 0.5];
    let n = 200;
    let cells = grid_export(&prob, lo, hi, n).unwrap();
    let best = cells
        .iter()
        .filter(|c| c.prob >= 0.97)
        .map(|c| c.x1 + c.x2)
        .fold(f64::INFINITY, f64::min);
    let spacing = (hi[0] - lo[0]) / n as f64;
    assert!(res.value <= best + 1e-9, "{} vs grid {best}", res.value);
    assert!(
        res.value >= best - 2.0 * spacing,
        "{} vs grid {best}",
        res.value
    );
}
