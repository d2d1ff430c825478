//! α-decreasing thresholds t*(α) and the revealed-concavity bridge
//! t**(r) = t*(−r+1)^r.
//!
//! t*(α) is located by scanning the sign of α·f(t) + t·f′(t) on a geometric
//! grid and bisecting the last sign change.

use serde::{Deserialize, Serialize};

use crate::dist::Marginal1D;
use crate::error::{domain, Error, Result};
use crate::specfun::bessel_k_ratio;

/// Default ε₀ replacing r = 0 by −ε₀.
pub const DEFAULT_EPS0: f64 = 0.1;

const GRID_LO: f64 = 1e-8;
const GRID_HI: f64 = 1e6;
const PER_DECADE: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Branch {
    PsiPositive,
    PsiZeroPhiNeg,
    PsiZeroPhiPos,
    PsiZeroPhiZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecreasingCert {
    pub alpha: f64,
    pub admissible: bool,
    pub tstar: Option<f64>,
    pub branch: Branch,
}

/// A quantity with the sign of α·f(t) + t·f′(t) for t > 0.
pub fn decrease_sign(m: &Marginal1D, alpha: f64, t: f64) -> Result<f64> {
    m.validate()?;
    Ok(match *m {
        Marginal1D::Gaussian => alpha - t * t,
        Marginal1D::Student { nu } => alpha - (nu + 1.0) * t * t / (nu + t * t),
        Marginal1D::Gh1 {
            lambda,
            chi,
            psi,
            phi,
        } => {
            let big = (psi + phi * phi).sqrt();
            if big == 0.0 {
                (2.0 * lambda - 1.0 + alpha) * t * t + alpha * chi
            } else {
                let eta2 = chi + t * t;
                let eta = eta2.sqrt();
                let j = bessel_k_ratio(lambda, big * eta)?;
                -big * t * t / eta + (t * t / eta2 * (2.0 * lambda - 1.0) + t * phi + alpha) * j
            }
        }
        Marginal1D::Gig { lambda, chi, psi } => {
            alpha + lambda - 1.0 + chi / (2.0 * t) - psi * t / 2.0
        }
    })
}

fn grid() -> impl DoubleEndedIterator<Item = f64> {
    let decades = (GRID_HI / GRID_LO).log10().round() as usize;
    let n = decades * PER_DECADE;
    (0..=n).map(move |k| GRID_LO * 10f64.powf(k as f64 / PER_DECADE as f64))
}

/// Smallest t₀ on the scan grid with t^α f(t) strictly decreasing beyond it.
pub fn t_star_alpha(m: &Marginal1D, alpha: f64) -> Result<f64> {
    let pts: Vec<f64> = grid().collect();
    let mut last_nonneg = None;
    for (k, &t) in pts.iter().enumerate().rev() {
        if decrease_sign(m, alpha, t)? >= 0.0 {
            last_nonneg = Some(k);
            break;
        }
    }
    let Some(k) = last_nonneg else {
        return Ok(GRID_LO);
    };
    if k + 1 == pts.len() {
        return Err(Error::NotDecreasing(GRID_HI));
    }
    let (mut lo, mut hi) = (pts[k], pts[k + 1]);
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if decrease_sign(m, alpha, mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Admissibility of α for a GH1 marginal and, when admissible, its t*(α).
pub fn certify_alpha_decreasing(m: &Marginal1D, alpha: f64) -> Result<DecreasingCert> {
    let Marginal1D::Gh1 {
        lambda, psi, phi, ..
    } = *m
    else {
        return Err(Error::ParamError(
            "certifyAlphaDecreasing needs a GH1 marginal".into(),
        ));
    };
    m.validate()?;
    let (branch, admissible) = if psi > 0.0 {
        (Branch::PsiPositive, true)
    } else if phi < 0.0 {
        (Branch::PsiZeroPhiNeg, true)
    } else if phi > 0.0 {
        (Branch::PsiZeroPhiPos, alpha < 1.0 - lambda)
    } else {
        (
            Branch::PsiZeroPhiZero,
            lambda < 0.0 && alpha < 1.0 - 2.0 * lambda,
        )
    };
    let tstar = if admissible {
        Some(t_star_alpha(m, alpha)?)
    } else {
        None
    };
    Ok(DecreasingCert {
        alpha,
        admissible,
        tstar,
        branch,
    })
}

/// t**(r) = tstar^r.
pub fn t_double_star(r: f64, tstar: f64) -> Result<f64> {
    if r == 0.0 {
        return domain("t** is undefined at r = 0; use the -eps0 route");
    }
    if !(tstar > 0.0) {
        return domain(format!("t* must be positive, got {tstar}"));
    }
    Ok(tstar.powf(r))
}

/// The α at which t* enters p*: −r+1, or 1+ε₀ when r = 0.
pub fn alpha_for_r(r: f64, eps0: f64) -> f64 {
    if r == 0.0 {
        1.0 + eps0
    } else {
        -r + 1.0
    }
}
