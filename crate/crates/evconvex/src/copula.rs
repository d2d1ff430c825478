//! Gumbel-Hougaard copula with a decision-dependent exponent κ(x).
//!
//! Generator ψ_x(t) = (−ln t)^{1/κ(x)}, inverse ψ_x⁻¹(s) = exp(−s^{κ(x)}).
//! The convexity pipeline needs U(x, y) = ψ_x⁻¹(y·ψ_x(p)) = p^{y^{κ(x)}}
//! jointly convex in (x, y).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen;

const E_INV: f64 = 0.367_879_441_171_442_33;

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa <= 1.0 {
        Ok(())
    } else {
        Err(Error::DomainError(format!(
            "kappa must lie in (0, 1], got {kappa}"
        )))
    }
}

pub fn psi(kappa: f64, t: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::DomainError(format!(
            "psi needs t in (0, 1], got {t}"
        )));
    }
    Ok((-t.ln()).powf(1.0 / kappa))
}

pub fn psi_inv(kappa: f64, s: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(s >= 0.0) {
        return Err(Error::DomainError(format!("psi_inv needs s >= 0, got {s}")));
    }
    Ok((-s.powf(kappa)).exp())
}

/// C(u) = exp(−(Σ(−ln u_i)^{1/κ})^κ), summed in log space.
pub fn copula_value(kappa: f64, u: &[f64]) -> Result<f64> {
    check_kappa(kappa)?;
    if u.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::DomainError(
            "copula arguments must lie in (0, 1]".into(),
        ));
    }
    let logs: Vec<f64> = u
        .iter()
        .filter(|&&v| v < 1.0)
        .map(|&v| (-v.ln()).ln() / kappa)
        .collect();
    if logs.is_empty() {
        return Ok(1.0);
    }
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = mx + logs.iter().map(|l| (l - mx).exp()).sum::<f64>().ln();
    Ok((-(kappa * lse).exp()).exp())
}

/// p^{y^κ}.
pub fn big_u_value(kappa: f64, y: f64, p: f64) -> Result<f64> {
    if p < E_INV {
        return Err(Error::DomainError(format!("p = {p} is below 1/e")));
    }
    big_u_lenient(kappa, y, p)
}

/// [`big_u_value`] without the p ≥ 1/e requirement.
pub fn big_u_lenient(kappa: f64, y: f64, p: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(y > 0.0 && y <= 1.0) || !(p > 0.0 && p < 1.0) {
        return Err(Error::DomainError(
            "need y in (0, 1] and p in (0, 1)".into(),
        ));
    }
    Ok((p.ln() * y.powf(kappa)).exp())
}

/// ψ⁻¹(y·ψ(p)) evaluated through the generator.
pub fn big_u_composed(kappa: f64, y: f64, p: f64) -> Result<f64> {
    psi_inv(kappa, y * psi(kappa, p)?)
}

pub fn big_u(model: &KappaModel, x: &[f64], y: f64, p: f64) -> Result<f64> {
    big_u_value(model.kappa(x)?, y, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiOmega {
    pub phi1: f64,
    pub phi2: f64,
    pub omega: f64,
}

pub fn phi_omega(kappa: f64, y: f64, p: f64) -> Result<PhiOmega> {
    if !(kappa > 0.0 && kappa <= 1.0) || !(E_INV..1.0).contains(&p) || !(y > 0.0 && y < 1.0) {
        return Err(Error::AssumptionViolated(format!(
            "need kappa in (0,1], p in [1/e,1), y in (0,1); got kappa={kappa}, p={p}, y={y}"
        )));
    }
    let ly = y.ln();
    let lp = p.ln();
    let yk = y.powf(kappa);
    let phi1 = kappa * ly * (kappa - 1.0 + kappa * lp * yk);
    let sq = 1.0 + kappa * ly + lp * ly * yk * kappa;
    let phi2 = kappa * ly * ly * (1.0 + lp * yk) * (1.0 - kappa - kappa * lp * yk) + sq * sq;
    Ok(PhiOmega {
        phi1,
        phi2,
        omega: phi2 / phi1,
    })
}

/// d = 1/(a₁ + a₂ + a₃), a lower bound of 1/(ω·κ) at fixed (y, p).
pub fn d_bound(y: f64, p: f64) -> Result<f64> {
    if !(y > 0.0 && y < 1.0) || !(E_INV..1.0).contains(&p) {
        return Err(Error::DomainError(format!(
            "d_bound needs y in (0,1), p in [1/e,1); got y={y}, p={p}"
        )));
    }
    let ly = -y.ln();
    let lp = p.ln();
    let a1 = ly * (1.0 + lp * y).powi(2) / (-lp * y);
    let a2 = ly * (1.0 + lp * y);
    let a3 = (1.0 / ly) / (-lp * y);
    Ok(1.0 / (a1 + a2 + a3))
}

/// Region on which a κ model is certified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "camelCase", deny_unknown_fields)]
pub enum Domain {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Euclidean ball centred at the origin.
    Ball {
        dim: usize,
        radius: f64,
    },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lo, .. } => lo.len(),
            Domain::Ball { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.is_empty() {
                    return Err(Error::DimError {
                        expected: lo.len(),
                        got: hi.len(),
                    });
                }
                if lo
                    .iter()
                    .zip(hi)
                    .any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite())
                {
                    return Err(Error::ParamError(
                        "box bounds must be finite with lo <= hi".into(),
                    ));
                }
            }
            Domain::Ball { dim, radius } => {
                if *dim == 0 || !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::ParamError(
                        "ball needs dim >= 1 and a finite positive radius".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v >= *a - 1e-12 && *v <= *b + 1e-12),
            Domain::Ball { radius, .. } => crate::linalg::norm(x) <= radius * (1.0 + 1e-12),
        }
    }

    /// Per-coordinate bounds of the domain.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { lo, hi } => (lo.clone(), hi.clone()),
            Domain::Ball { dim, radius } => (vec![-radius; *dim], vec![*radius; *dim]),
        }
    }

    /// Deterministic validation sample: a tensor grid clipped to the domain
    /// plus the extreme points of each coordinate.
    pub fn sample_points(&self) -> Vec<Vec<f64>> {
        let k = self.dim();
        let per = ((1_000_000f64).powf(1.0 / k as f64).floor() as usize).clamp(2, 32);
        let (lo, hi) = self.bounds();
        let mut pts = Vec::new();
        let total = per.pow(k as u32);
        for idx in 0..total {
            let mut rem = idx;
            let x: Vec<f64> = (0..k)
                .map(|j| {
                    let i = rem % per;
                    rem /= per;
                    lo[j] + (hi[j] - lo[j]) * i as f64 / (per - 1) as f64
                })
                .collect();
            if self.contains(&x) {
                pts.push(x);
            }
        }
        for j in 0..k {
            for v in [lo[j], hi[j]] {
                let mut x = vec![0.0; k];
                if let Domain::Box { lo, hi } = self {
                    for i in 0..k {
                        x[i] = 0.5 * (lo[i] + hi[i]);
                    }
                }
                x[j] = v;
                pts.push(x);
            }
        }
        if let Domain::Ball { radius, .. } = self {
            // Points where every coordinate is at its common minimum.
            let c = -radius / (k as f64).sqrt();
            pts.push(vec![c; k]);
            pts.push(vec![-c; k]);
        }
        pts
    }
}

/// Decision-dependent copula exponent κ(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum KappaModel {
    /// κ(x) = Σ f(x_i) with f from the closed-form constructor.
    BuiltSeparable {
        d: f64,
        c1: f64,
        c2: f64,
        domain: Domain,
    },
    /// κ(x) = Σ_i s_i(x_i), each s_i a natural cubic spline through
    /// `values[i]` at the shared `knots`.
    UserGrid {
        knots: Vec<f64>,
        values: Vec<Vec<f64>>,
        domain: Domain,
    },
    Constant {
        value: f64,
        domain: Domain,
    },
}

impl KappaModel {
    pub fn domain(&self) -> &Domain {
        match self {
            KappaModel::BuiltSeparable { domain, .. }
            | KappaModel::UserGrid { domain, .. }
            | KappaModel::Constant { domain, .. } => domain,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain().dim()
    }

    /// The builder's d for built models.
    pub fn builder_d(&self) -> Option<f64> {
        match self {
            KappaModel::BuiltSeparable { d, .. } => Some(*d),
            _ => None,
        }
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimError {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.domain().contains(x) {
            return Err(Error::DomainError(format!(
                "x = {x:?} lies outside the kappa domain"
            )));
        }
        Ok(())
    }

    /// (f, f′, f″) of coordinate `i` at `t`.
    fn term(&self, i: usize, t: f64) -> (f64, f64, f64) {
        match self {
            KappaModel::BuiltSeparable { d, c1, c2, .. } => separable_term(*d, *c1, *c2, t),
            KappaModel::UserGrid { knots, values, .. } => spline_eval(knots, &values[i], t),
            KappaModel::Constant { value, domain } => (value / domain.dim() as f64, 0.0, 0.0),
        }
    }

    pub fn kappa(&self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        Ok(x.iter().enumerate().map(|(i, &t)| self.term(i, t).0).sum())
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_x(x)?;
        Ok(x.iter()
            .enumerate()
            .map(|(i, &t)| self.term(i, t).1)
            .collect())
    }

    /// Diagonal Hessian, returned as a dense matrix.
    pub fn hessian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_x(x)?;
        let n = x.len();
        let mut h = vec![vec![0.0; n]; n];
        for (i, &t) in x.iter().enumerate() {
            h[i][i] = self.term(i, t).2;
        }
        Ok(h)
    }

    /// Checks 0 < κ ≤ 1 and f″ ≥ 0 on the validation sample.
    pub fn validate(&self) -> Result<()> {
        let dom = self.domain();
        dom.validate()?;
        match self {
            KappaModel::BuiltSeparable { d, c1, c2, .. } => {
                if !(*d > 0.0) || !c1.is_finite() || !c2.is_finite() {
                    return Err(Error::ParamError(
                        "builder needs d > 0 and finite c1, c2".into(),
                    ));
                }
            }
            KappaModel::UserGrid { knots, values, .. } => {
                if knots.len() < 3 || knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::ParamError(
                        "user grid knots must be increasing, at least 3".into(),
                    ));
                }
                if values.len() != dom.dim() || values.iter().any(|v| v.len() != knots.len()) {
                    return Err(Error::ParamError(
                        "user grid needs one value row per coordinate".into(),
                    ));
                }
                let (lo, hi) = dom.bounds();
                if lo
                    .iter()
                    .chain(&hi)
                    .any(|&b| b < knots[0] || b > knots[knots.len() - 1])
                {
                    return Err(Error::ParamError(
                        "user grid knots must cover the domain".into(),
                    ));
                }
            }
            KappaModel::Constant { value, .. } => check_kappa(*value)?,
        }
        for x in dom.sample_points() {
            let k: f64 = x.iter().enumerate().map(|(i, &t)| self.term(i, t).0).sum();
            if !(k > 0.0 && k <= 1.0) {
                return Err(Error::InfeasibleBuild {
                    point: x,
                    reason: format!("kappa = {k} outside (0, 1]"),
                });
            }
            for (i, &t) in x.iter().enumerate() {
                let (f, _, f2) = self.term(i, t);
                let separable = matches!(self, KappaModel::BuiltSeparable { .. });
                if separable && !(f > 0.0 && f2 > 0.0) {
                    return Err(Error::InfeasibleBuild {
                        point: x.clone(),
                        reason: format!("f = {f}, f'' = {f2} at coordinate {i}"),
                    });
                }
                if f2 < -1e-12 {
                    return Err(Error::InfeasibleBuild {
                        point: x.clone(),
                        reason: format!("f'' = {f2} < 0"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// f, f′, f″ of the closed-form separable constructor.
fn separable_term(d: f64, c1: f64, c2: f64, t: f64) -> (f64, f64, f64) {
    let z = c2 + c1 * t;
    if d >= 1.0 {
        // f = 1/z.
        (1.0 / z, -c1 / (z * z), 2.0 * c1 * c1 / (z * z * z))
    } else {
        // f = (a·z)^e with a = 2/d − 1, e = d/(d − 2).
        let a = 2.0 / d - 1.0;
        let e = d / (d - 2.0);
        let base = a * z;
        if !(base > 0.0) {
            return (f64::NAN, f64::NAN, f64::NAN);
        }
        let f = base.powf(e);
        (
            f,
            e * a * c1 * f / base,
            e * (e - 1.0) * (a * c1).powi(2) * f / (base * base),
        )
    }
}

/// Builds and validates a separable κ from (d, C₁, C₂) on the domain.
pub fn build_kappa(d: f64, c1: f64, c2: f64, domain: Domain) -> Result<KappaModel> {
    let m = KappaModel::BuiltSeparable { d, c1, c2, domain };
    m.validate()?;
    Ok(m)
}

/// Natural cubic spline value and first two derivatives.
fn spline_eval(knots: &[f64], vals: &[f64], t: f64) -> (f64, f64, f64) {
    let m = spline_second_derivs(knots, vals);
    let n = knots.len();
    let mut k = match knots.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    };
    k = k.min(n - 2);
    let h = knots[k + 1] - knots[k];
    let a = (knots[k + 1] - t) / h;
    let b = (t - knots[k]) / h;
    let f = a * vals[k]
        + b * vals[k + 1]
        + ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * h * h / 6.0;
    let f1 = (vals[k + 1] - vals[k]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m[k]
        + (3.0 * b * b - 1.0) / 6.0 * h * m[k + 1];
    let f2 = a * m[k] + b * m[k + 1];
    (f, f1, f2)
}

fn spline_second_derivs(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    let mut u = vec![0.0; n];
    for i in 1..n - 1 {
        let sig = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
        let p = sig * m[i - 1] + 2.0;
        m[i] = (sig - 1.0) / p;
        let dd = (y[i + 1] - y[i]) / (x[i + 1] - x[i]) - (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        u[i] = (6.0 * dd / (x[i + 1] - x[i - 1]) - sig * u[i - 1]) / p;
    }
    m[n - 1] = 0.0;
    for i in (0..n - 1).rev() {
        m[i] = m[i] * m[i + 1] + u[i];
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CopulaDiagnostics {
    pub kappa: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub omega: f64,
    /// d = 1/(a₁+a₂+a₃) at this (y, p).
    pub d_bound: f64,
    /// d used in the d·κ·Hκ − ∇κ∇κᵀ test.
    pub d_used: f64,
    /// Smallest eigenvalue of M = φ₁Hκ − φ₂∇κ∇κᵀ.
    pub m_eig_min: f64,
    pub m_psd: bool,
    /// Smallest eigenvalue of d·κ·Hκ − ∇κ∇κᵀ.
    pub assumption4_eig_min: f64,
    pub assumption4_psd: bool,
    /// Auxiliary matrix PSD and d·κ·ω ≤ 1, which together imply M ⪰ 0.
    pub certified: bool,
    /// |det [[Hκ, ∇κ], [∇κᵀ, d·κ]]|.
    pub delta_det: f64,
}

/// PSD diagnostics of M(x, y) and of the auxiliary matrix. `d` defaults to
/// the builder's d for built models and to `d_bound(y, p)` otherwise.
pub fn m_matrix_psd(
    model: &KappaModel,
    x: &[f64],
    y: f64,
    p: f64,
    d: Option<f64>,
) -> Result<CopulaDiagnostics> {
    let kappa = model.kappa(x)?;
    let g = model.gradient(x)?;
    let h = model.hessian(x)?;
    let po = phi_omega(kappa, y, p)?;
    let db = d_bound(y, p)?;
    let d_used = d.or(model.builder_d()).unwrap_or(db);
    let n = x.len();
    let build = |a: f64, b: f64| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| a * h[i][j] - b * g[i] * g[j]).collect())
            .collect()
    };
    let m = build(po.phi1, po.phi2);
    let a4 = build(d_used * kappa, 1.0);
    let eig_min = |mat: &Vec<Vec<f64>>| -> Result<(f64, f64)> {
        let tr: f64 = (0..n).map(|i| mat[i][i].abs()).sum();
        Ok((sym_eigen(mat)?.min(), tr))
    };
    let (m_eig, m_tr) = eig_min(&m)?;
    let (a_eig, a_tr) = eig_min(&a4)?;
    let mut delta = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            delta[i][j] = h[i][j];
        }
        delta[i][n] = g[i];
        delta[n][i] = g[i];
    }
    delta[n][n] = d_used * kappa;
    Ok(CopulaDiagnostics {
        kappa,
        phi1: po.phi1,
        phi2: po.phi2,
        omega: po.omega,
        d_bound: db,
        d_used,
        m_eig_min: m_eig,
        m_psd: m_eig >= -1e-10 * m_tr,
        assumption4_eig_min: a_eig,
        assumption4_psd: a_eig >= -1e-10 * a_tr,
        certified: a_eig >= -1e-10 * a_tr && d_used * kappa * po.omega <= 1.0,
        delta_det: determinant(delta).abs(),
    })
}

/// Determinant by partial-pivot elimination.
pub fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}
