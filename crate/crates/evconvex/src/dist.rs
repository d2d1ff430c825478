//! One-dimensional marginals and the normal mean-variance mixture sampler.
//!
//! GH1 here is the projection GH₁(λ, χ, ψ, 0, 1, φ): location 0, unit scale,
//! skew φ. Its density is
//!
//! ```text
//! f(t) = c · K_{λ−1/2}(Λη) · e^{tφ} / (Λη)^{1/2−λ},   η = √(χ+t²),  Λ = √(ψ+φ²)
//! ```
//!
//! with the ψ = 0, φ = 0 case replaced by its closed form ĉ(χ+t²)^{λ−1/2}.
//! CDFs without a closed form are integrated in the variable s = asinh t
//! (or s = ln t on the half line), which turns power-law tails into
//! exponential ones.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{dot, SpdMatrix};
use crate::quad::paneled_simpson;
use crate::specfun::{
    gaussian_cdf, gaussian_pdf, ln_bessel_k, ln_bessel_k_scaled, log_gamma, student_cdf,
    student_pdf,
};

/// GIG / GH mixing parameters (λ, χ, ψ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GigParams {
    pub lambda: f64,
    pub chi: f64,
    pub psi: f64,
}

impl GigParams {
    pub fn new(lambda: f64, chi: f64, psi: f64) -> Result<Self> {
        let p = GigParams { lambda, chi, psi };
        p.validate()?;
        Ok(p)
    }

    /// Admissible region: λ<0 ⇒ χ>0, ψ≥0; λ=0 ⇒ χ>0, ψ>0; λ>0 ⇒ χ≥0, ψ>0.
    pub fn validate(&self) -> Result<()> {
        let GigParams {
            lambda: l,
            chi: c,
            psi: p,
        } = *self;
        let ok = l.is_finite()
            && c.is_finite()
            && p.is_finite()
            && if l < 0.0 {
                c > 0.0 && p >= 0.0
            } else if l == 0.0 {
                c > 0.0 && p > 0.0
            } else {
                c >= 0.0 && p > 0.0
            };
        if ok {
            Ok(())
        } else {
            Err(Error::ParamError(format!(
                "inadmissible (lambda, chi, psi) = ({l}, {c}, {p})"
            )))
        }
    }

    /// ln of the GIG normalizing constant.
    fn ln_norm(&self) -> f64 {
        let GigParams {
            lambda: l,
            chi: c,
            psi: p,
        } = *self;
        if p == 0.0 {
            -l * (c / 2.0).ln() - ln_gamma_unchecked(-l)
        } else if c == 0.0 {
            l * (p / 2.0).ln() - ln_gamma_unchecked(l)
        } else {
            0.5 * l * (p.ln() - c.ln()) - 2f64.ln() - ln_k((c * p).sqrt(), l)
        }
    }

    pub fn ln_density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.ln_norm() + (self.lambda - 1.0) * t.ln() - 0.5 * (self.chi / t + self.psi * t)
    }

    pub fn mean(&self) -> f64 {
        let GigParams {
            lambda: l,
            chi: c,
            psi: p,
        } = *self;
        if p == 0.0 {
            c / 2.0 / (-l - 1.0)
        } else if c == 0.0 {
            2.0 * l / p
        } else {
            let w = (c * p).sqrt();
            let ks = |nu: f64| ln_bessel_k_scaled(nu, w).unwrap_or(f64::NAN);
            (c / p).sqrt() * (ks(l + 1.0) - ks(l)).exp()
        }
    }
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    log_gamma(x).unwrap_or(f64::NAN)
}

fn ln_k(x: f64, nu: f64) -> f64 {
    ln_bessel_k(nu, x).unwrap_or(f64::NAN)
}

/// Tagged 1-D distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum Marginal1D {
    Gaussian,
    Student {
        nu: f64,
    },
    Gh1 {
        lambda: f64,
        chi: f64,
        psi: f64,
        phi: f64,
    },
    Gig {
        lambda: f64,
        chi: f64,
        psi: f64,
    },
}

impl Marginal1D {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Marginal1D::Gaussian => Ok(()),
            Marginal1D::Student { nu } => {
                if nu > 0.0 && nu.is_finite() {
                    Ok(())
                } else {
                    Err(Error::ParamError(format!(
                        "Student nu must be positive, got {nu}"
                    )))
                }
            }
            Marginal1D::Gh1 {
                lambda,
                chi,
                psi,
                phi,
            } => {
                GigParams { lambda, chi, psi }.validate()?;
                if !phi.is_finite() {
                    return Err(Error::ParamError("phi must be finite".into()));
                }
                Ok(())
            }
            Marginal1D::Gig { lambda, chi, psi } => GigParams { lambda, chi, psi }.validate(),
        }
    }

    /// Symmetric about zero.
    pub fn is_symmetric(&self) -> bool {
        match *self {
            Marginal1D::Gaussian | Marginal1D::Student { .. } => true,
            Marginal1D::Gh1 { phi, .. } => phi == 0.0,
            Marginal1D::Gig { .. } => false,
        }
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        Ok(self.ln_density(t)?.exp())
    }

    pub fn ln_density(&self, t: f64) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            Marginal1D::Gaussian => gaussian_pdf(t).ln(),
            Marginal1D::Student { nu } => student_pdf(nu, t)?.ln(),
            Marginal1D::Gh1 {
                lambda,
                chi,
                psi,
                phi,
            } => gh1_ln_density(lambda, chi, psi, phi, t),
            Marginal1D::Gig { lambda, chi, psi } => GigParams { lambda, chi, psi }.ln_density(t),
        })
    }

    /// Precompute the integration range once for repeated CDF calls.
    pub fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let support = match self {
            Marginal1D::Gaussian | Marginal1D::Student { .. } => None,
            Marginal1D::Gh1 { .. } | Marginal1D::Gig { .. } => Some(self.scan_range()),
        };
        Ok(Prepared { m: *self, support })
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        Ok(self.prepare()?.cdf(t))
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.prepare()?.quantile(p)
    }

    /// Map from the integration variable s to t.
    #[allow(clippy::wrong_self_convention)]
    pub(crate) fn to_t(&self, s: f64) -> f64 {
        match self {
            Marginal1D::Gig { .. } => s.exp(),
            _ => s.sinh(),
        }
    }

    #[allow(clippy::wrong_self_convention)]
    fn to_s(&self, t: f64) -> f64 {
        match self {
            Marginal1D::Gig { .. } => {
                if t <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    t.ln()
                }
            }
            _ => t.asinh(),
        }
    }

    /// ln of the integrand in s: ln f(t(s)) + ln dt/ds.
    pub(crate) fn ln_integrand(&self, s: f64) -> f64 {
        let t = self.to_t(s);
        let jac = match self {
            Marginal1D::Gig { .. } => s,
            _ => s.cosh().ln(),
        };
        self.ln_density(t).unwrap_or(f64::NEG_INFINITY) + jac
    }

    /// s-interval outside of which the integrand is below 1e−18 of its peak.
    fn scan_range(&self) -> (f64, f64) {
        const LIM: f64 = 340.0;
        let mut peak = f64::NEG_INFINITY;
        let mut vals = Vec::with_capacity(2 * LIM as usize + 1);
        let mut s = -LIM;
        while s <= LIM {
            let v = self.ln_integrand(s);
            if v > peak {
                peak = v;
            }
            vals.push((s, v));
            s += 0.5;
        }
        let cut = peak - 18.0 * 10f64.ln();
        let lo = vals
            .iter()
            .find(|(_, v)| *v >= cut)
            .map_or(-LIM, |(s, _)| *s);
        let hi = vals
            .iter()
            .rev()
            .find(|(_, v)| *v >= cut)
            .map_or(LIM, |(s, _)| *s);
        ((lo - 1.0).max(-LIM), (hi + 1.0).min(LIM))
    }
}

/// A validated marginal with its cached integration range.
#[derive(Debug, Clone, Copy)]
pub struct Prepared {
    m: Marginal1D,
    support: Option<(f64, f64)>,
}

const CDF_TOL: f64 = 1e-13;

impl Prepared {
    pub fn marginal(&self) -> &Marginal1D {
        &self.m
    }

    /// Integration range in s, for the families integrated numerically.
    pub(crate) fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    pub fn density(&self, t: f64) -> f64 {
        self.m.ln_density(t).map_or(0.0, f64::exp)
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let panels = ((b - a) / 2.0).ceil().max(1.0) as usize;
        paneled_simpson(
            &|s: f64| self.m.ln_integrand(s).exp(),
            a,
            b,
            panels,
            CDF_TOL,
        )
    }

    /// ∫ density over the whole line, computed with the printed constant.
    pub fn total_mass(&self) -> f64 {
        match self.support {
            Some((lo, hi)) => self.integrate(lo, hi),
            None => 1.0,
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self.m {
            Marginal1D::Gaussian => gaussian_cdf(t),
            Marginal1D::Student { nu } => student_cdf(nu, t).unwrap_or(f64::NAN),
            _ => {
                let (lo, hi) = self.support.expect("prepared support");
                let s = self.m.to_s(t).clamp(lo, hi);
                let lower = self.integrate(lo, s);
                let upper = self.integrate(s, hi);
                lower / (lower + upper)
            }
        }
    }

    /// CDF at many points, sharing one pass of quadrature over sorted input.
    pub fn cdf_sorted(&self, ts: &[f64]) -> Vec<f64> {
        match self.support {
            None => ts.iter().map(|&t| self.cdf(t)).collect(),
            Some((lo, hi)) => {
                let total = self.integrate(lo, hi);
                let mut acc = 0.0;
                let mut prev = lo;
                ts.iter()
                    .map(|&t| {
                        let s = self.m.to_s(t).clamp(lo, hi);
                        if s > prev {
                            acc += self.integrate(prev, s);
                            prev = s;
                        }
                        (acc / total).min(1.0)
                    })
                    .collect()
            }
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("quantile needs p in (0,1), got {p}"));
        }
        let (mut lo, mut hi) = self.support.unwrap_or((-40f64.asinh(), 40f64.asinh()));
        if let Marginal1D::Student { .. } = self.m {
            lo = -340.0;
            hi = 340.0;
        }
        // Numeric families: acc = ∫ from the support start to lo, so each
        // step integrates only over the shrinking bracket.
        let total = self.support.map(|(a, b)| self.integrate(a, b));
        let mut acc = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let below = match total {
                Some(total) => {
                    let piece = self.integrate(lo, mid);
                    if (acc + piece) / total < p {
                        acc += piece;
                        true
                    } else {
                        false
                    }
                }
                None => self.cdf(self.m.to_t(mid)) < p,
            };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(self.m.to_t(0.5 * (lo + hi)))
    }
}

/// ln ĉ for the ψ = 0, φ = 0 closed form.
pub fn gh1_ln_c_hat(lambda: f64, chi: f64) -> f64 {
    ln_gamma_unchecked(0.5 - lambda)
        - ln_gamma_unchecked(-lambda)
        - 0.5 * PI.ln()
        - lambda * chi.ln()
}

/// ln c of the GH1 density (Λ > 0), including the ψ = 0 and χ = 0 limits.
pub fn gh1_ln_c(lambda: f64, chi: f64, psi: f64, phi: f64) -> f64 {
    let big = (psi + phi * phi).sqrt();
    let tail = (1.0 - 2.0 * lambda) * big.ln() - 0.5 * (2.0 * PI).ln();
    if psi == 0.0 {
        -lambda * chi.ln() + (lambda + 1.0) * 2f64.ln() - ln_gamma_unchecked(-lambda) + tail
    } else if chi == 0.0 {
        lambda * psi.ln() - ln_gamma_unchecked(lambda) - (lambda - 1.0) * 2f64.ln() + tail
    } else {
        let w = (chi * psi).sqrt();
        -lambda * w.ln() + lambda * psi.ln() - ln_k(w, lambda) + tail
    }
}

fn gh1_ln_density(lambda: f64, chi: f64, psi: f64, phi: f64, t: f64) -> f64 {
    if psi == 0.0 && phi == 0.0 {
        return gh1_ln_c_hat(lambda, chi) + (lambda - 0.5) * (chi + t * t).ln();
    }
    let big = (psi + phi * phi).sqrt();
    let eta = (chi + t * t).sqrt();
    let z = big * eta;
    let nu = lambda - 0.5;
    let ln_c = gh1_ln_c(lambda, chi, psi, phi);
    if z == 0.0 {
        // χ = 0, t = 0: K_ν(z)·z^ν → Γ(ν)·2^{ν−1} for ν > 0.
        return if nu > 0.0 {
            ln_c + ln_gamma_unchecked(nu) + (nu - 1.0) * 2f64.ln()
        } else {
            f64::INFINITY
        };
    }
    // tφ − Λη evaluated without cancellation on the heavy side.
    let expo = if t * phi > 0.0 {
        -(psi * t * t + big * big * chi) / (t * phi + z)
    } else {
        t * phi - z
    };
    let ln_ks = ln_bessel_k_scaled(nu, z).unwrap_or(f64::NAN);
    ln_c + ln_ks + expo + nu * z.ln()
}

/// Mixing law W of a normal mean-variance mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Mixing {
    Gig {
        lambda: f64,
        chi: f64,
        psi: f64,
    },
    /// Finite table of atoms; `shift`, when present, replaces μ + ωγ.
    Discrete {
        atoms: Vec<Atom>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub omega: f64,
    pub weight: f64,
    #[serde(default)]
    pub shift: Option<Vec<f64>>,
}

/// v = m(W) + √W·A·Z with m(W) = μ + Wγ unless an atom overrides it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmvmModel {
    pub mu: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma: SpdMatrix,
    pub mixing: Mixing,
}

impl NmvmModel {
    pub fn validate(&self) -> Result<()> {
        let n = self.sigma.dim();
        for v in [&self.mu, &self.gamma] {
            if v.len() != n {
                return Err(Error::DimError {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        match &self.mixing {
            Mixing::Gig { lambda, chi, psi } => GigParams::new(*lambda, *chi, *psi).map(|_| ()),
            Mixing::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::ParamError("empty mixing table".into()));
                }
                let total: f64 = atoms.iter().map(|a| a.weight).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::ParamError(format!("weights sum to {total}")));
                }
                for a in atoms {
                    if !(a.omega > 0.0) || a.weight < 0.0 {
                        return Err(Error::ParamError(
                            "atoms need omega > 0, weight >= 0".into(),
                        ));
                    }
                    if let Some(s) = &a.shift {
                        if s.len() != n {
                            return Err(Error::DimError {
                                expected: n,
                                got: s.len(),
                            });
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// GIG mixing parameters of a GH model.
    pub fn gig(&self) -> Option<GigParams> {
        match self.mixing {
            Mixing::Gig { lambda, chi, psi } => Some(GigParams { lambda, chi, psi }),
            Mixing::Discrete { .. } => None,
        }
    }

    /// The 1-D law of (vᵀx − μᵀx)/√(xᵀΣx) for GIG mixing.
    pub fn projection(&self, x: &[f64]) -> Result<Marginal1D> {
        let g = self
            .gig()
            .ok_or_else(|| Error::ParamError("projection needs GIG mixing".into()))?;
        let q = crate::linalg::quad_form(&self.sigma, x)?;
        Ok(Marginal1D::Gh1 {
            lambda: g.lambda,
            chi: g.chi,
            psi: g.psi,
            phi: dot(x, &self.gamma) / q.sqrt(),
        })
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// n GIG variates, deterministic in `seed`.
pub fn gig_sample(p: GigParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    let mut r = rng(seed);
    let sampler = GigSampler::new(p);
    Ok((0..n).map(|_| sampler.draw(&mut r)).collect())
}

/// n draws of the mixture, deterministic in `seed`.
pub fn nmvm_sample(model: &NmvmModel, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    model.validate()?;
    let mut r = rng(seed);
    let dim = model.sigma.dim();
    let gig = model.gig().map(GigSampler::new);
    let cumulative: Vec<f64> = match &model.mixing {
        Mixing::Discrete { atoms } => atoms
            .iter()
            .scan(0.0, |acc, a| {
                *acc += a.weight;
                Some(*acc)
            })
            .collect(),
        Mixing::Gig { .. } => Vec::new(),
    };
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (omega, shift) = match (&model.mixing, &gig) {
            (Mixing::Gig { .. }, Some(s)) => (s.draw(&mut r), None),
            (Mixing::Discrete { atoms }, _) => {
                let u: f64 = r.random::<f64>() * cumulative[cumulative.len() - 1];
                let k = cumulative
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(atoms.len() - 1);
                (atoms[k].omega, atoms[k].shift.as_ref())
            }
            _ => unreachable!("validated mixing"),
        };
        let z: Vec<f64> = (0..dim).map(|_| r.sample(StandardNormal)).collect();
        let az = model.sigma.chol_mul(&z);
        let sw = omega.sqrt();
        let v = (0..dim)
            .map(|i| {
                let m = match shift {
                    Some(s) => s[i],
                    None => model.mu[i] + omega * model.gamma[i],
                };
                m + sw * az[i]
            })
            .collect();
        out.push(v);
    }
    Ok(out)
}

/// GIG variate generator after Hörmann and Leydold (2014): ratio-of-uniforms
/// with or without mode shift, or a piecewise hat for small ω and λ < 1.
/// The ψ = 0 and χ = 0 boundaries use the inverse-gamma and gamma laws.
#[derive(Debug, Clone)]
enum GigSampler {
    InvGamma {
        shape: Gamma<f64>,
        beta: f64,
    },
    Gamma {
        shape: Gamma<f64>,
    },
    Std {
        lambda: f64,
        omega: f64,
        alpha: f64,
        invert: bool,
        method: StdMethod,
    },
}

#[derive(Debug, Clone)]
enum StdMethod {
    Shift {
        xm: f64,
        nc: f64,
        uminus: f64,
        uplus: f64,
    },
    NoShift {
        nc: f64,
        um: f64,
    },
    Hat {
        x0: f64,
        k0: f64,
        k1: f64,
        k2: f64,
        a: [f64; 3],
    },
}

impl GigSampler {
    fn new(p: GigParams) -> Self {
        let GigParams { lambda, chi, psi } = p;
        if psi == 0.0 {
            return GigSampler::InvGamma {
                shape: Gamma::new(-lambda, 1.0).expect("shape > 0"),
                beta: chi / 2.0,
            };
        }
        if chi == 0.0 {
            return GigSampler::Gamma {
                shape: Gamma::new(lambda, 2.0 / psi).expect("shape > 0"),
            };
        }
        let omega = (chi * psi).sqrt();
        let alpha = (chi / psi).sqrt();
        let invert = lambda < 0.0;
        let l = lambda.abs();
        let method = if l > 2.0 || omega > 3.0 {
            let t = 0.5 * (l - 1.0);
            let s = 0.25 * omega;
            let xm = gig_mode(l, omega);
            let nc = t * xm.ln() - s * (xm + 1.0 / xm);
            let a = -(2.0 * (l + 1.0) / omega + xm);
            let b = 2.0 * (l - 1.0) * xm / omega - 1.0;
            let c = xm;
            let p = b - a * a / 3.0;
            let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
            let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt()))
                .clamp(-1.0, 1.0)
                .acos();
            let fak = 2.0 * (-p / 3.0).sqrt();
            let y1 = fak * (fi / 3.0).cos() - a / 3.0;
            let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * PI).cos() - a / 3.0;
            let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
            let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
            StdMethod::Shift {
                xm,
                nc,
                uminus,
                uplus,
            }
        } else if l >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
            let t = 0.5 * (l - 1.0);
            let s = 0.25 * omega;
            let xm = gig_mode(l, omega);
            let nc = t * xm.ln() - s * (xm + 1.0 / xm);
            let ym = ((l + 1.0) + ((l + 1.0).powi(2) + omega * omega).sqrt()) / omega;
            let um = (0.5 * (l + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
            StdMethod::NoShift { nc, um }
        } else {
            let xm = gig_mode(l, omega);
            let x0 = omega / (1.0 - l);
            let k0 = ((l - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
            let mut a = [k0 * x0, 0.0, 0.0];
            let (k1, k2);
            if x0 >= 2.0 / omega {
                k1 = 0.0;
                k2 = x0.powf(l - 1.0);
                a[2] = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
            } else {
                k1 = (-omega).exp();
                a[1] = if l == 0.0 {
                    k1 * (2.0 / (omega * omega)).ln()
                } else {
                    k1 / l * ((2.0 / omega).powf(l) - x0.powf(l))
                };
                k2 = (2.0 / omega).powf(l - 1.0);
                a[2] = k2 * 2.0 * (-1f64).exp() / omega;
            }
            StdMethod::Hat { x0, k0, k1, k2, a }
        };
        GigSampler::Std {
            lambda: l,
            omega,
            alpha,
            invert,
            method,
        }
    }

    fn draw<R: Rng>(&self, r: &mut R) -> f64 {
        match self {
            GigSampler::InvGamma { shape, beta } => beta / shape.sample(r),
            GigSampler::Gamma { shape } => shape.sample(r),
            GigSampler::Std {
                lambda: l,
                omega,
                alpha,
                invert,
                method,
            } => {
                let l = *l;
                let omega = *omega;
                let x = match *method {
                    StdMethod::Shift {
                        xm,
                        nc,
                        uminus,
                        uplus,
                    } => {
                        let t = 0.5 * (l - 1.0);
                        let s = 0.25 * omega;
                        loop {
                            let u = uminus + r.random::<f64>() * (uplus - uminus);
                            let v: f64 = r.random();
                            let x = u / v + xm;
                            if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
                                break x;
                            }
                        }
                    }
                    StdMethod::NoShift { nc, um } => {
                        let t = 0.5 * (l - 1.0);
                        let s = 0.25 * omega;
                        loop {
                            let u = um * r.random::<f64>();
                            let v: f64 = r.random();
                            let x = u / v;
                            if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
                                break x;
                            }
                        }
                    }
                    StdMethod::Hat { x0, k0, k1, k2, a } => loop {
                        let mut v = (a[0] + a[1] + a[2]) * r.random::<f64>();
                        let (x, hx);
                        if v <= a[0] {
                            x = x0 * v / a[0];
                            hx = k0;
                        } else {
                            v -= a[0];
                            if v <= a[1] {
                                if l == 0.0 {
                                    x = omega * (omega.exp() * v).exp();
                                    hx = k1 / x;
                                } else {
                                    x = (x0.powf(l) + l / k1 * v).powf(1.0 / l);
                                    hx = k1 * x.powf(l - 1.0);
                                }
                            } else {
                                v -= a[1];
                                let lo = x0.max(2.0 / omega);
                                x = -2.0 / omega
                                    * ((-omega / 2.0 * lo).exp() - omega / (2.0 * k2) * v).ln();
                                hx = k2 * (-omega / 2.0 * x).exp();
                            }
                        }
                        let u = r.random::<f64>() * hx;
                        if u.ln() <= (l - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
                            break x;
                        }
                    },
                };
                if *invert {
                    alpha / x
                } else {
                    alpha * x
                }
            }
        }
    }
}

/// Mode of y^{λ−1}·exp(−ω(y + 1/y)/2).
fn gig_mode(l: f64, omega: f64) -> f64 {
    if l >= 1.0 {
        (((l - 1.0).powi(2) + omega * omega).sqrt() + (l - 1.0)) / omega
    } else {
        omega / (((1.0 - l).powi(2) + omega * omega).sqrt() + (1.0 - l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_examples() {
        let g = Marginal1D::Gaussian;
        assert!((g.density(0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(g.cdf(0.0).unwrap(), 0.5);
        assert!(g.quantile(0.5).unwrap().abs() < 1e-12);
        assert!((g.quantile(0.841_344_7).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn closed_form_value_at_zero() {
        let m = Marginal1D::Gh1 {
            lambda: -2.0,
            chi: 4.0,
            psi: 0.0,
            phi: 0.0,
        };
        assert!((gh1_ln_c_hat(-2.0, 4.0).exp() - 12.0).abs() < 1e-12);
        assert!((m.density(0.0).unwrap() - 0.375).abs() < 1e-14);
    }

    #[test]
    fn inadmissible_parameters() {
        let bad = Marginal1D::Gh1 {
            lambda: 1.0,
            chi: 1.0,
            psi: 0.0,
            phi: 0.0,
        };
        assert!(matches!(bad.density(0.0), Err(Error::ParamError(_))));
        assert!(GigParams::new(0.0, 0.0, 1.0).is_err());
        assert!(Marginal1D::Gaussian.quantile(1.0).is_err());
    }

    #[test]
    fn gig_sampler_is_deterministic() {
        let p = GigParams::new(0.5, 1.0, 2.0).unwrap();
        assert_eq!(gig_sample(p, 50, 9).unwrap(), gig_sample(p, 50, 9).unwrap());
    }

    #[test]
    fn discrete_weights_must_sum_to_one() {
        let m = NmvmModel {
            mu: vec![0.0],
            gamma: vec![0.0],
            sigma: SpdMatrix::identity(1),
            mixing: Mixing::Discrete {
                atoms: vec![Atom {
                    omega: 1.0,
                    weight: 0.5,
                    shift: None,
                }],
            },
        };
        assert!(m.validate().is_err());
    }
}
