//! Independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use evconvex::copula::{big_u_lenient, build_kappa, Domain, KappaModel};
use evconvex::dist::Marginal1D;
use evconvex::feasibility::{CopulaSpec, GhRow, Problem};
use evconvex::linalg::{dot, norm, quad_form, sym_eigen, SpdMatrix};
use evconvex::specfun::gaussian_cdf;
use evconvex::thresholds::{r_concavity_holds, RowModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// ∫₀^∞ e^{−x·cosh u}·cosh(νu) du by the trapezoid rule, which converges
/// geometrically for this analytic, doubly-exponentially decaying integrand.
pub fn bessel_k_integral(nu: f64, x: f64) -> f64 {
    let umax = (1.0 + 750.0 / x).acosh() + nu.abs().max(1.0).ln() + 1.0;
    let h = 2e-3;
    let n = (umax / h).ceil() as usize;
    let f = |u: f64| (-x * u.cosh() + nu * u).exp() * 0.5 + (-x * u.cosh() - nu * u).exp() * 0.5;
    let mut s = 0.5 * f(0.0);
    for k in 1..=n {
        s += f(k as f64 * h);
    }
    s * h
}

/// Central-difference Hessian with step h.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut out = vec![vec![0.0; n]; n];
    let at = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut y = x.to_vec();
        y[di] += si * h;
        y[dj] += sj * h;
        f(&y)
    };
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                let mut yp = x.to_vec();
                let mut ym = x.to_vec();
                yp[i] += h;
                ym[i] -= h;
                (f(&yp) - 2.0 * f(x) + f(&ym)) / (h * h)
            } else {
                (at(i, 1.0, j, 1.0) - at(i, 1.0, j, -1.0) - at(i, -1.0, j, 1.0)
                    + at(i, -1.0, j, -1.0))
                    / (4.0 * h * h)
            };
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

pub fn min_eig(a: &[Vec<f64>]) -> f64 {
    sym_eigen(a).expect("finite symmetric matrix").min()
}

/// Largest absolute entry.
pub fn max_abs(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Kolmogorov–Smirnov distance of a sample against a CDF.
pub fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    ks_distance_batch(sample, |xs| xs.iter().map(|&x| cdf(x)).collect())
}

/// KS distance with the CDF evaluated once over the sorted sample.
pub fn ks_distance_batch(sample: &mut [f64], cdf: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    sample.sort_by(|a, b| a.total_cmp(b));
    let n = sample.len() as f64;
    cdf(sample).iter().enumerate().fold(0.0_f64, |d, (i, &f)| {
        d.max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs())
    })
}

/// Critical KS distance at the 1% level.
pub fn ks_crit(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// B·Bᵀ + 0.5·I with B uniform in [−2, 2].
pub fn random_spd(r: &mut ChaCha8Rng, n: usize) -> SpdMatrix {
    let b: Vec<f64> = (0..n * n).map(|_| r.random_range(-2.0..2.0)).collect();
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum::<f64>()
                        + if i == j { 0.5 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    SpdMatrix::new(rows).unwrap()
}

pub fn unit_vector(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let l = norm(&v);
        if l > 1e-3 && l <= 1.0 {
            return v.iter().map(|c| c / l).collect();
        }
    }
}

pub const HESSIAN_RS: [f64; 6] = [-3.0, -2.0, -0.5, 0.0, 1.0, 2.5];

pub struct AgreementStats {
    pub total: usize,
    pub agree: usize,
    /// Disagreements whose FD eigenvalue lies outside the dead band.
    pub outside_band: usize,
}

/// Compare the closed-form r-concavity test with the FD Hessian of
/// sign(−r)·g^r (or −ln g at r = 0) on random rows and points of E.
pub fn hessian_agreement(n_cases: usize, seed: u64) -> AgreementStats {
    let mut r = rng(seed);
    let mut stats = AgreementStats {
        total: 0,
        agree: 0,
        outside_band: 0,
    };
    while stats.total < n_cases {
        let n = r.random_range(2..=3);
        let mu: Vec<f64> = if r.random_bool(0.1) {
            vec![0.0; n]
        } else {
            (0..n).map(|_| r.random_range(-3.0..3.0)).collect()
        };
        let b = [-4.0, -1.0, 0.0, 1.0, 4.0][r.random_range(0..5)];
        let row = RowModel {
            mu: mu.clone(),
            sigma: random_spd(&mut r, n),
            d: b,
            marginal: Marginal1D::Gaussian,
            r: 1.0,
        };
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let slack = b - evconvex::linalg::dot(&mu, &x);
        let xn = norm(&x);
        if xn < 0.1 || slack <= 0.05 * (b.abs() + norm(&mu) * xn) {
            continue;
        }
        let rr = HESSIAN_RS[r.random_range(0..HESSIAN_RS.len())];
        let f = |y: &[f64]| {
            let g = row.g(y).unwrap();
            if rr == 0.0 {
                -g.ln()
            } else {
                -rr.signum() * g.powf(rr)
            }
        };
        let h = 1e-4 * xn.min(slack / (norm(&mu) + 1e-12));
        let hess = fd_hessian(&f, &x, h);
        let scale = max_abs(&hess).max(1e-300);
        let lmin = min_eig(&hess);
        let fd_convex = lmin >= -1e-6 * scale;
        let closed = r_concavity_holds(&row, &x, rr).unwrap();
        stats.total += 1;
        if fd_convex == closed {
            stats.agree += 1;
        } else if lmin.abs() > 1e-6 * scale {
            stats.outside_band += 1;
        }
    }
    stats
}

/// Richardson-extrapolated central-difference Hessian, O(h⁴) accurate.
pub fn fd_hessian_richardson(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let a = fd_hessian(f, x, h);
    let b = fd_hessian(f, x, h / 2.0);
    a.iter()
        .zip(&b)
        .map(|(ra, rb)| {
            ra.iter()
                .zip(rb)
                .map(|(u, v)| (4.0 * v - u) / 3.0)
                .collect()
        })
        .collect()
}

/// A point of {g ≥ target} on the ray through `dir`; None when the ray never
/// reaches that level.
pub fn point_with_g(row: &RowModel, dir: &[f64], target: f64) -> Option<Vec<f64>> {
    let q = quad_form(&row.sigma, dir).unwrap().sqrt();
    let u = dot(&row.mu, dir) / q;
    if row.d == 0.0 {
        return (-u >= target).then(|| dir.to_vec());
    }
    let t = row.d / ((target + u) * q);
    (t > 0.0 && target + u > 0.0).then(|| dir.iter().map(|c| c * t).collect())
}

pub fn random_row(r: &mut ChaCha8Rng, b: f64, rr: f64) -> RowModel {
    let n = r.random_range(2..=3);
    RowModel {
        mu: (0..n).map(|_| r.random_range(-3.0..3.0)).collect(),
        sigma: random_spd(r, n),
        d: b,
        marginal: Marginal1D::Gaussian,
        r: rr,
    }
}

/// (holds everywhere on 10⁴ points of G(1.001·θ*), fails somewhere on 10⁵ points
/// of G(0.99·θ*), points actually found in the inflated set).
pub fn sharpness(row: &RowModel, theta: f64, r: &mut ChaCha8Rng) -> (bool, bool, usize) {
    let n = row.mu.len();
    let up = (theta * 1.001).sqrt();
    let mut inflated_ok = true;
    let mut found = 0;
    for k in 0..10_000 {
        let dir = unit_vector(r, n);
        // Half the targets hug the boundary, half spread far beyond it.
        let target = if k % 2 == 0 {
            up * (1.0 + 0.01 * r.random::<f64>())
        } else {
            up * (1.0 + 10.0 * r.random::<f64>())
        };
        if let Some(x) = point_with_g(row, &dir, target) {
            found += 1;
            inflated_ok &= r_concavity_holds(row, &x, row.r).unwrap();
        }
    }
    let down = (theta * 0.99).sqrt();
    let mut deflated_fails = false;
    for _ in 0..100_000 {
        let dir = unit_vector(r, n);
        let target = down * (1.0 + 0.005 * r.random::<f64>());
        if let Some(x) = point_with_g(row, &dir, target) {
            if !r_concavity_holds(row, &x, row.r).unwrap() {
                deflated_fails = true;
                break;
            }
        }
    }
    (inflated_ok, deflated_fails, found)
}

/// The two constructors: d ≥ 1 on the radius-7 ball and d < 1 on the
/// radius 9 − d/(4 − 2d) ball.
pub fn builders() -> Vec<KappaModel> {
    let mut out = vec![build_kappa(
        1.0,
        1.0,
        10.0,
        Domain::Ball {
            dim: 2,
            radius: 7.0,
        },
    )
    .unwrap()];
    for d in [0.5, 0.7, 0.9] {
        out.push(
            build_kappa(
                d,
                1.0,
                10.0,
                Domain::Ball {
                    dim: 2,
                    radius: 9.0 - d / (4.0 - 2.0 * d),
                },
            )
            .unwrap(),
        );
    }
    out
}

pub fn interior_point(model: &KappaModel, r: &mut ChaCha8Rng) -> Vec<f64> {
    let (lo, hi) = model.domain().bounds();
    loop {
        let x: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| r.random_range(*a..*b) * 0.999)
            .collect();
        if model.domain().contains(&x) {
            return x;
        }
    }
}

/// Smallest eigenvalue of the (x, y) Hessian of U and its scale.
pub fn u_hessian(model: &KappaModel, x: &[f64], y: f64, p: f64) -> (f64, f64) {
    let n = x.len();
    let f = |v: &[f64]| big_u_lenient(model.kappa(&v[..n]).unwrap(), v[n], p).unwrap();
    let mut v = x.to_vec();
    v.push(y);
    let h = fd_hessian_richardson(&f, &v, 1e-3 * y.min(1.0 - y).min(1.0));
    (min_eig(&h), max_abs(&h))
}

/// Two skewed GH rows in two variables.
pub fn gh_problem() -> Problem {
    let rows = vec![
        RowModel {
            mu: vec![0.5, -0.3],
            sigma: SpdMatrix::new(vec![vec![1.2, 0.3], vec![0.3, 0.9]]).unwrap(),
            d: 4.0,
            marginal: Marginal1D::Gaussian,
            r: -2.0,
        },
        RowModel {
            mu: vec![-0.2, 0.4],
            sigma: SpdMatrix::new(vec![vec![0.7, -0.1], vec![-0.1, 1.5]]).unwrap(),
            d: 3.0,
            marginal: Marginal1D::Gaussian,
            r: -2.0,
        },
    ];
    Problem {
        rows,
        copula: CopulaSpec::Independent,
        gh: Some(vec![
            Some(GhRow {
                lambda: -1.5,
                chi: 2.0,
                psi: 1.0,
                gamma: vec![0.4, 0.2],
            }),
            Some(GhRow {
                lambda: 1.0,
                chi: 1.0,
                psi: 2.0,
                gamma: vec![0.3, 0.5],
            }),
        ]),
        domain: Domain::Box {
            lo: vec![-10.0, -10.0],
            hi: vec![10.0, 10.0],
        },
        origin_allowed: true,
    }
}

/// t ↦ t^α·f(t) strictly decreasing on 100 log-spaced points of (t*, 10·t*).
pub fn decreasing_after(m: &Marginal1D, alpha: f64, tstar: f64) -> bool {
    let vals: Vec<f64> = (1..=100)
        .map(|k| {
            let t = tstar * 10f64.powf(k as f64 / 100.0);
            alpha * t.ln() + m.ln_density(t).unwrap()
        })
        .collect();
    vals.windows(2).all(|w| w[1] < w[0])
}

/// Hessian of the upper tail Φ(−g(x)); PSD exactly where Φ∘g is concave.
pub fn tail_hessian_min(row: &RowModel, x: &[f64]) -> (f64, f64) {
    let f = |y: &[f64]| gaussian_cdf(-row.g(y).unwrap());
    let h = fd_hessian(&f, x, 1e-4 * norm(x));
    (min_eig(&h), max_abs(&h))
}
