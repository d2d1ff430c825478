//! r-concavity of g(x) = (b − μᵀx)/√(xᵀΣx) and the thresholds built on it.
//!
//! With q = xᵀΣx, u = μᵀx/√q, θ = (b − μᵀx)²/q and m = μᵀΣ⁻¹μ,
//! sign(−r)·g^r is locally convex at x ∈ E iff
//!
//! ```text
//! m ≤ (2 − r)u² − 2r√θ·u − (r + 1)θ        (r ≠ 0)
//! m ≤ 2u² − θ                               (r = 0, concavity of ln g)
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decreasing::{alpha_for_r, certify_alpha_decreasing, t_star_alpha, DEFAULT_EPS0};
use crate::dist::{rng, Marginal1D};
use crate::error::{Error, Result};
use crate::linalg::{dot, inv_quad_form, norm, quad_form, SpdMatrix};

/// One constraint row v_iᵀx ≤ D_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowModel {
    pub mu: Vec<f64>,
    pub sigma: SpdMatrix,
    /// D_i, the b of the concavity condition.
    pub d: f64,
    pub marginal: Marginal1D,
    pub r: f64,
}

impl RowModel {
    pub fn validate(&self) -> Result<()> {
        if self.mu.len() != self.sigma.dim() {
            return Err(Error::DimError {
                expected: self.sigma.dim(),
                got: self.mu.len(),
            });
        }
        if !self.d.is_finite() && self.d != f64::INFINITY {
            return Err(Error::ParamError("D must be finite or +inf".into()));
        }
        self.marginal.validate()
    }

    pub fn m(&self) -> f64 {
        inv_quad_form(&self.sigma, &self.mu).expect("validated dims")
    }

    /// g(x) = (D − μᵀx)/√(xᵀΣx).
    pub fn g(&self, x: &[f64]) -> Result<f64> {
        let q = quad_form(&self.sigma, x)?;
        Ok((self.d - dot(&self.mu, x)) / q.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub enum LambdaMode {
    DefinitionNumeric,
    ClosedForm,
    #[default]
    LMin,
}

/// Right side minus left side of the concavity inequality at x.
pub fn r_concavity_margin(row: &RowModel, x: &[f64], r: f64) -> Result<f64> {
    let q = quad_form(&row.sigma, x)?;
    let slack = row.d - dot(&row.mu, x);
    if !(slack > 0.0) || q == 0.0 {
        return Err(Error::OutsideDomain(slack));
    }
    let u = dot(&row.mu, x) / q.sqrt();
    let st = slack / q.sqrt();
    let th = st * st;
    let rhs = if r == 0.0 {
        2.0 * u * u - th
    } else {
        (2.0 - r) * u * u - 2.0 * r * st * u - (r + 1.0) * th
    };
    Ok(rhs - row.m())
}

pub fn r_concavity_holds(row: &RowModel, x: &[f64], r: f64) -> Result<bool> {
    Ok(r_concavity_margin(row, x, r)? >= 0.0)
}

/// λ_{μ,min}: the inverse square of max over the unit sphere of
/// (μ·x/‖μ‖)/√(xᵀΣx), or one of its stand-ins.
pub fn lambda_mu_min(mu: &[f64], sigma: &SpdMatrix, mode: LambdaMode) -> Result<f64> {
    let nm = norm(mu);
    if nm == 0.0 {
        return Err(Error::DomainError("lambda_mu_min needs mu != 0".into()));
    }
    match mode {
        LambdaMode::LMin => Ok(sigma.lambda_min()),
        LambdaMode::ClosedForm => Ok(nm * nm / inv_quad_form(sigma, mu)?),
        LambdaMode::DefinitionNumeric => {
            let phi = |x: &[f64]| dot(mu, x) / nm / quad_form(sigma, x).expect("dims").sqrt();
            let n = mu.len();
            let mut r = rng(0x5eed);
            let mut best = f64::NEG_INFINITY;
            for restart in 0..32 {
                let mut x: Vec<f64> = if restart == 0 {
                    mu.to_vec()
                } else {
                    (0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()
                };
                normalize(&mut x);
                let mut step = 0.5;
                let mut fx = phi(&x);
                for _ in 0..2000 {
                    let grad = num_grad(&phi, &x);
                    let mut cand: Vec<f64> =
                        x.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
                    normalize(&mut cand);
                    let fc = phi(&cand);
                    if fc > fx {
                        x = cand;
                        fx = fc;
                        step *= 1.2;
                    } else {
                        step *= 0.5;
                        if step < 1e-14 {
                            break;
                        }
                    }
                }
                best = best.max(fx);
            }
            Ok(1.0 / (best * best))
        }
    }
}

fn normalize(x: &mut [f64]) {
    let n = norm(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

fn num_grad<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

/// r° within this distance of 1 counts as 1.
pub const R_CIRCLE_TOL: f64 = 1e-9;

/// (r°, r*) with r* present only when r° > 1.
pub fn tangency_constants(
    mu: &[f64],
    sigma: &SpdMatrix,
    mode: LambdaMode,
) -> Result<(f64, Option<f64>)> {
    let lm = lambda_mu_min(mu, sigma, mode)?;
    let nm2 = dot(mu, mu);
    let rc = nm2 / (inv_quad_form(sigma, mu)? * lm);
    let rs = (rc > 1.0 + R_CIRCLE_TOL).then(|| -2.0 * (1.0 / (rc - 1.0) + 1.0).sqrt());
    Ok((rc, rs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ThetaResult {
    pub exists: bool,
    pub theta: Option<f64>,
    pub sqrt_theta: Option<f64>,
    /// Item of the best-threshold case table, 1 to 11.
    pub case_id: u8,
    pub is_best: bool,
    pub lambda_mu_min: Option<f64>,
    pub r_circle: Option<f64>,
    pub r_star: Option<f64>,
    pub lambda_mode: LambdaMode,
}

impl ThetaResult {
    pub fn reason(&self) -> String {
        format!("no threshold (case item {})", self.case_id)
    }
}

/// θ* for the row at exponent r.
pub fn best_theta(row: &RowModel, r: f64, mode: LambdaMode) -> Result<ThetaResult> {
    row.validate()?;
    let nm = norm(&row.mu);
    let b = row.d;
    let mut out = ThetaResult {
        exists: false,
        theta: None,
        sqrt_theta: None,
        case_id: 0,
        is_best: false,
        lambda_mu_min: None,
        r_circle: None,
        r_star: None,
        lambda_mode: mode,
    };
    let set = |out: &mut ThetaResult, case: u8, theta: Option<f64>, best: bool| {
        out.case_id = case;
        out.exists = theta.is_some();
        out.theta = theta;
        out.sqrt_theta = theta.map(f64::sqrt);
        out.is_best = best && theta.is_some();
    };
    if nm == 0.0 {
        set(&mut out, 1, (r < -1.0).then_some(0.0), false);
        return Ok(out);
    }
    let m = row.m();
    let lmin = row.sigma.lambda_min();
    let lm = lambda_mu_min(&row.mu, &row.sigma, mode)?;
    let (rc, rs) = tangency_constants(&row.mu, &row.sigma, mode)?;
    out.lambda_mu_min = Some(lm);
    out.r_circle = Some(rc);
    out.r_star = rs;
    let nm2 = nm * nm;

    if r == 0.0 {
        if b == 0.0 {
            set(&mut out, 9, Some(m), true);
        } else if b < 0.0 {
            set(&mut out, 10, Some(m + 2.0 * nm2 / lmin), false);
        } else {
            set(&mut out, 11, None, false);
        }
        return Ok(out);
    }
    if b == 0.0 {
        set(&mut out, 2, Some(m), true);
    } else if b < 0.0 {
        if r <= -2.0 {
            set(
                &mut out,
                3,
                Some((m - (2.0 + r) * nm2 / lmin) / (-1.0 - r)),
                false,
            );
        } else if r < -1.0 {
            set(&mut out, 4, Some(m / (-1.0 - r)), false);
        } else {
            set(&mut out, 5, Some(m + (2.0 + r) * nm2 / lmin), false);
        }
    } else if r >= -1.0 {
        set(&mut out, 6, None, false);
    } else if let Some(l0) = row.sigma.isotropic() {
        let s = nm / l0.sqrt() * (-r + 1.0) / (-r - 1.0);
        set(&mut out, 8, Some(s * s), true);
    } else {
        let s = item7_sqrt_theta(r, nm, m, lm, rc, rs);
        set(&mut out, 7, Some(s * s), true);
    }
    Ok(out)
}

/// √θ* of the b > 0, r < −1 case.
pub fn item7_sqrt_theta(r: f64, nm: f64, m: f64, lm: f64, rc: f64, rs: Option<f64>) -> f64 {
    match rs {
        Some(rs) if r <= rs && rc > 1.0 + R_CIRCLE_TOL => {
            ((-r + 2.0) / (-r - 2.0)).sqrt() * m.sqrt()
        }
        _ => {
            let a = nm / lm.sqrt();
            ((-r) * a + ((2.0 + r) * a * a + (-1.0 - r) * m).sqrt()) / (-1.0 - r)
        }
    }
}

/// h(t̄, s̄) and g(t̄, s̄) of the planar reformulation, for region tables.
pub fn planar_h_g(row: &RowModel, r: f64, tbar: f64, sbar: f64) -> (f64, f64) {
    let u = norm(&row.mu) * sbar;
    let g = row.d * tbar - u;
    let h = if r == 0.0 {
        2.0 * u * u - g * g
    } else {
        (2.0 - r) * u * u - 2.0 * r * g * u - (r + 1.0) * g * g
    };
    (h, g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GaussianPStar {
    pub exists: bool,
    pub sqrt_theta: Option<f64>,
    pub pstar: Option<f64>,
    pub is_best: bool,
}

/// Gaussian concavity defect at (τ, u) = (b·t̄, ‖μ‖·s̄); negative means
/// Φ∘g is not locally concave there.
pub fn gaussian_defect(m: f64, tau: f64, u: f64) -> f64 {
    let t2 = tau * tau;
    t2 * t2 - 2.0 * t2 * tau * u + t2 * (u * u - 2.0) + 2.0 * tau * u + u * u - m
}

/// Best probability threshold of a single Gaussian row.
pub fn gaussian_best_p(row: &RowModel) -> Result<GaussianPStar> {
    row.validate()?;
    if row.marginal != Marginal1D::Gaussian {
        return Err(Error::WrongMarginal);
    }
    let m = row.m();
    let b = row.d;
    if b < 0.0 {
        return Ok(GaussianPStar {
            exists: false,
            sqrt_theta: None,
            pstar: None,
            is_best: false,
        });
    }
    let s = if b == 0.0 {
        m.sqrt()
    } else {
        gaussian_sup_g(m)
    };
    Ok(GaussianPStar {
        exists: true,
        sqrt_theta: Some(s),
        pstar: Some(crate::specfun::gaussian_cdf(s)),
        is_best: true,
    })
}

/// sup of g = τ − u over {τ > 0, |u| ≤ √m, defect < 0}.
fn gaussian_sup_g(m: f64) -> f64 {
    let a = m.sqrt();
    let g_at = |u: f64| -> f64 {
        // Largest τ > 0 with defect < 0, by downward scan then bisection.
        let coeffs = [
            1.0,
            2.0 * u.abs(),
            (u * u - 2.0).abs(),
            2.0 * u.abs(),
            (u * u - m).abs(),
        ];
        let tmax = 1.0 + coeffs.iter().cloned().fold(0.0, f64::max);
        let n = 1024;
        let mut hi = tmax;
        for k in (0..n).rev() {
            let lo = tmax * k as f64 / n as f64;
            if gaussian_defect(m, lo.max(1e-300), u) < 0.0 {
                let (mut l, mut h) = (lo, hi);
                while h - l > 1e-13 * h.max(1.0) {
                    let mid = 0.5 * (l + h);
                    if gaussian_defect(m, mid, u) < 0.0 {
                        l = mid;
                    } else {
                        h = mid;
                    }
                }
                return l - u;
            }
            hi = lo;
        }
        f64::NEG_INFINITY
    };
    let n = 1024;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=n {
        let u = -a + 2.0 * a * k as f64 / n as f64;
        let g = g_at(u);
        if g > best.0 {
            best = (g, u);
        }
    }
    // Golden-section refinement around the best grid cell.
    let h = 2.0 * a / n as f64;
    let (mut lo, mut hi) = ((best.1 - h).max(-a), (best.1 + h).min(a));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    while hi - lo > 1e-9 {
        let c = hi - phi * (hi - lo);
        let d = lo + phi * (hi - lo);
        if g_at(c) > g_at(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    best.0.max(g_at(0.5 * (lo + hi))).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Binding {
    Half,
    Theta { row: usize },
    TStar { row: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RowContribution {
    pub theta: ThetaResult,
    /// F_i(√θ*_i).
    pub theta_term: f64,
    /// t*_i(−r_i + 1).
    pub tstar: f64,
    /// F_i(t*_i(−r_i + 1)).
    pub tstar_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PStarResult {
    pub pstar: f64,
    pub contributions: Vec<RowContribution>,
    pub binding: Binding,
}

/// p* = max(1/2, max_i F_i(√θ*_i), max_i F_i(t*_i(−r_i+1))).
pub fn assemble_p_star(rows: &[RowModel], mode: LambdaMode, eps0: f64) -> Result<PStarResult> {
    let mut contributions = Vec::with_capacity(rows.len());
    let mut pstar = 0.5;
    let mut binding = Binding::Half;
    for (i, row) in rows.iter().enumerate() {
        let theta = if row.r == 0.0 {
            let log_case = best_theta(row, 0.0, mode)?.case_id;
            let mut t = best_theta(row, -eps0, mode)?;
            t.case_id = log_case;
            t
        } else {
            best_theta(row, row.r, mode)?
        };
        let Some(st) = theta.sqrt_theta else {
            return Err(Error::MissingTheta {
                row: i,
                reason: theta.reason(),
            });
        };
        let prep = row.marginal.prepare()?;
        let theta_term = prep.cdf(st);
        let alpha = alpha_for_r(row.r, eps0);
        let tstar = match row.marginal {
            Marginal1D::Gh1 { .. } => {
                let c = certify_alpha_decreasing(&row.marginal, alpha)?;
                c.tstar.ok_or_else(|| Error::MissingTheta {
                    row: i,
                    reason: format!("density not {alpha}-decreasing"),
                })?
            }
            _ => t_star_alpha(&row.marginal, alpha)?,
        };
        let tstar_term = prep.cdf(tstar);
        if theta_term > pstar {
            pstar = theta_term;
            binding = Binding::Theta { row: i };
        }
        if tstar_term > pstar {
            pstar = tstar_term;
            binding = Binding::TStar { row: i };
        }
        contributions.push(RowContribution {
            theta,
            theta_term,
            tstar,
            tstar_term,
        });
    }
    Ok(PStarResult {
        pstar,
        contributions,
        binding,
    })
}

/// [`assemble_p_star`] with the default ε₀.
pub fn assemble_p_star_default(rows: &[RowModel], mode: LambdaMode) -> Result<PStarResult> {
    assemble_p_star(rows, mode, DEFAULT_EPS0)
}
