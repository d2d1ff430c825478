//! The feasible set S(p) = {x ∈ X : P(v_iᵀx ≤ D_i for all i) ≥ p}: joint
//! probability, membership, empirical convexity checks, grid export and a
//! supporting-hyperplane minimizer.

use minilp::{ComparisonOp, OptimizationDirection};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{copula_value, Domain, KappaModel};
use crate::dist::{
    gig_sample, nmvm_sample, rng, GigParams, Marginal1D, Mixing, NmvmModel, Prepared,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, quad_form};
use crate::quad::gl256_integrate;
use crate::specfun::gaussian_cdf;
use crate::thresholds::{assemble_p_star, LambdaMode, RowModel};

/// Dependence between rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum CopulaSpec {
    #[default]
    Independent,
    Gumbel {
        kappa: KappaModel,
    },
}

/// Skewed GH row: v = μ + Wγ + √W·A·Z with W ~ GIG(λ, χ, ψ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GhRow {
    pub lambda: f64,
    pub chi: f64,
    pub psi: f64,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Problem {
    pub rows: Vec<RowModel>,
    #[serde(default)]
    pub copula: CopulaSpec,
    /// Per-row GH parameters; a present entry overrides the row's marginal.
    #[serde(default)]
    pub gh: Option<Vec<Option<GhRow>>>,
    pub domain: Domain,
    #[serde(default = "yes")]
    pub origin_allowed: bool,
}

fn yes() -> bool {
    true
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.rows.is_empty() {
            return Err(Error::ParamError("problem has no rows".into()));
        }
        let n = self.dim();
        for row in &self.rows {
            row.validate()?;
            if row.mu.len() != n {
                return Err(Error::DimError {
                    expected: n,
                    got: row.mu.len(),
                });
            }
        }
        if let Some(gh) = &self.gh {
            if gh.len() != self.rows.len() {
                return Err(Error::DimError {
                    expected: self.rows.len(),
                    got: gh.len(),
                });
            }
            for g in gh.iter().flatten() {
                GigParams::new(g.lambda, g.chi, g.psi)?;
                if g.gamma.len() != n {
                    return Err(Error::DimError {
                        expected: n,
                        got: g.gamma.len(),
                    });
                }
            }
        }
        if let CopulaSpec::Gumbel { kappa } = &self.copula {
            kappa.validate()?;
            if let Some(x) = self
                .domain
                .sample_points()
                .into_iter()
                .find(|x| !kappa.domain().contains(x))
            {
                return Err(Error::ParamError(format!(
                    "kappa domain does not cover X at {x:?}"
                )));
            }
        }
        Ok(())
    }

    fn gh_row(&self, i: usize) -> Option<&GhRow> {
        self.gh.as_ref().and_then(|g| g[i].as_ref())
    }

    pub fn nmvm_row(&self, i: usize) -> Option<NmvmModel> {
        self.gh_row(i).map(|g| NmvmModel {
            mu: self.rows[i].mu.clone(),
            gamma: g.gamma.clone(),
            sigma: self.rows[i].sigma.clone(),
            mixing: Mixing::Gig {
                lambda: g.lambda,
                chi: g.chi,
                psi: g.psi,
            },
        })
    }

    pub fn min_d(&self) -> f64 {
        self.rows.iter().map(|r| r.d).fold(f64::INFINITY, f64::min)
    }
}

/// Per-problem cache of prepared marginals.
struct Evaluator<'a> {
    prob: &'a Problem,
    prepared: Vec<Option<Prepared>>,
}

impl<'a> Evaluator<'a> {
    fn new(prob: &'a Problem) -> Result<Self> {
        prob.validate()?;
        let prepared = (0..prob.rows.len())
            .map(|i| {
                if prob.gh_row(i).is_some() {
                    Ok(None)
                } else {
                    prob.rows[i].marginal.prepare().map(Some)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { prob, prepared })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "camelCase")]
pub enum Method {
    Analytic,
    Radial,
    MonteCarlo { n: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbEstimate {
    pub value: f64,
    /// Binomial standard error for Monte Carlo, zero otherwise.
    pub std_error: f64,
}

/// P(all rows hold) at x.
pub fn joint_probability(prob: &Problem, x: &[f64], method: Method) -> Result<ProbEstimate> {
    let ev = Evaluator::new(prob)?;
    joint_probability_with(&ev, x, method)
}

fn origin_probability(prob: &Problem, x: &[f64]) -> Result<Option<f64>> {
    if x.iter().all(|&v| v == 0.0) {
        if !prob.origin_allowed {
            return Err(Error::DomainError(
                "x = 0 is excluded for this problem".into(),
            ));
        }
        return Ok(Some(if prob.min_d() >= 0.0 { 1.0 } else { 0.0 }));
    }
    Ok(None)
}

fn joint_probability_with(ev: &Evaluator, x: &[f64], method: Method) -> Result<ProbEstimate> {
    let prob = ev.prob;
    if x.len() != prob.dim() {
        return Err(Error::DimError {
            expected: prob.dim(),
            got: x.len(),
        });
    }
    if let Some(v) = origin_probability(prob, x)? {
        return Ok(ProbEstimate {
            value: v,
            std_error: 0.0,
        });
    }
    match method {
        Method::MonteCarlo { n, seed } => monte_carlo(ev, x, n, seed),
        Method::Analytic | Method::Radial => {
            let mut u = Vec::with_capacity(prob.rows.len());
            for i in 0..prob.rows.len() {
                u.push(row_probability(ev, i, x, method == Method::Radial)?);
            }
            Ok(ProbEstimate {
                value: compose(prob, x, &u)?,
                std_error: 0.0,
            })
        }
    }
}

/// C_x(u₁, …, u_K).
fn compose(prob: &Problem, x: &[f64], u: &[f64]) -> Result<f64> {
    if u.iter().any(|&v| v <= 0.0) {
        return Ok(0.0);
    }
    let u: Vec<f64> = u.iter().map(|v| v.min(1.0)).collect();
    match &prob.copula {
        CopulaSpec::Independent => Ok(u.iter().product()),
        CopulaSpec::Gumbel { kappa } => {
            let k = kappa.kappa(x).map_err(|_| Error::OutsideX)?;
            copula_value(k, &u)
        }
    }
}

fn row_probability(ev: &Evaluator, i: usize, x: &[f64], radial: bool) -> Result<f64> {
    let row = &ev.prob.rows[i];
    if row.d == f64::INFINITY {
        return Ok(1.0);
    }
    let q = quad_form(&row.sigma, x)?;
    let slack = row.d - dot(&row.mu, x);
    match (ev.prob.gh_row(i), &ev.prepared[i]) {
        (None, Some(prep)) => Ok(prep.cdf(slack / q.sqrt())),
        (Some(g), _) => {
            let gig = GigParams::new(g.lambda, g.chi, g.psi)?;
            let c = dot(&g.gamma, x);
            if radial {
                radial_probability(gig, slack, c, q.sqrt())
            } else {
                let m = ev.prob.nmvm_row(i).expect("gh row").projection(x)?;
                Ok(m.prepare()?.cdf(slack / q.sqrt()))
            }
        }
        (None, None) => unreachable!("non-GH rows are prepared"),
    }
}

/// P(a₀ − Wc − √W·s·Z ≥ 0) for W ~ GIG, Z ~ N(0, 1), with c = γᵀx ≥ 0.
///
/// On ω < ub = a₀/c the integrand is ½ + ½F_R with F_R the half-normal
/// CDF; beyond ub it is Φ of a negative argument.
pub fn radial_probability(gig: GigParams, a0: f64, c: f64, s: f64) -> Result<f64> {
    if c < 0.0 {
        return Err(Error::MethodUnavailable(format!(
            "radial form needs gamma'x >= 0, got {c:e}"
        )));
    }
    mixture_probability(gig, a0, c, s)
}

fn mixture_probability(gig: GigParams, a0: f64, c: f64, s: f64) -> Result<f64> {
    let w = Marginal1D::Gig {
        lambda: gig.lambda,
        chi: gig.chi,
        psi: gig.psi,
    };
    let prep = w.prepare()?;
    let (lo, hi) = prep.support().expect("GIG is integrated numerically");
    let arg = |omega: f64| (a0 - omega * c) / (omega.sqrt() * s);
    // Integrand in σ = ln ω, weighted by the GIG density.
    let weight = |sig: f64| w.ln_integrand(sig).exp();
    let inner = |sig: f64| {
        let a = arg(sig.exp());
        0.5 * libm::erf(a / std::f64::consts::SQRT_2) * weight(sig)
    };
    let outer = |sig: f64| (gaussian_cdf(arg(sig.exp())) - 0.5) * weight(sig);
    let ub = if a0 <= 0.0 {
        lo
    } else if c == 0.0 {
        hi
    } else {
        (a0 / c).ln().clamp(lo, hi)
    };
    let mass = panels(&weight, lo, hi);
    let body = panels(&inner, lo, ub);
    let tail = panels(&outer, ub, hi);
    Ok(((0.5 * mass + body + tail) / mass).clamp(0.0, 1.0))
}

/// Composite GL-256 over panels of width at most 8.
fn panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = ((b - a) / 8.0).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|k| gl256_integrate(f, a + k as f64 * h, a + (k + 1) as f64 * h))
        .sum()
}

fn monte_carlo(ev: &Evaluator, x: &[f64], n: usize, seed: u64) -> Result<ProbEstimate> {
    let prob = ev.prob;
    let independent = match &prob.copula {
        CopulaSpec::Independent => true,
        CopulaSpec::Gumbel { kappa } => {
            matches!(kappa, KappaModel::Constant { value, .. } if *value == 1.0)
        }
    };
    if !independent {
        return Err(Error::MethodUnavailable(
            "Monte Carlo covers independent rows only".into(),
        ));
    }
    if n == 0 {
        return Err(Error::DomainError("Monte Carlo needs n > 0".into()));
    }
    let mut hit = vec![true; n];
    for i in 0..prob.rows.len() {
        let row = &prob.rows[i];
        let task_seed = task_seed(seed, i as u64);
        if let Some(model) = prob.nmvm_row(i) {
            for (h, v) in hit.iter_mut().zip(nmvm_sample(&model, n, task_seed)?) {
                *h &= dot(&v, x) <= row.d;
            }
        } else {
            let g = (row.d - dot(&row.mu, x)) / quad_form(&row.sigma, x)?.sqrt();
            for (h, xi) in hit
                .iter_mut()
                .zip(sample_marginal(&row.marginal, n, task_seed)?)
            {
                *h &= xi <= g;
            }
        }
    }
    let k = hit.iter().filter(|&&h| h).count() as f64;
    let p = k / n as f64;
    Ok(ProbEstimate {
        value: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
    })
}

fn sample_marginal(m: &Marginal1D, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut r = rng(seed);
    Ok(match *m {
        Marginal1D::Gaussian => (0..n).map(|_| r.sample(StandardNormal)).collect(),
        Marginal1D::Student { nu } => {
            let t = StudentT::new(nu).map_err(|e| Error::ParamError(e.to_string()))?;
            (0..n).map(|_| t.sample(&mut r)).collect()
        }
        Marginal1D::Gh1 {
            lambda,
            chi,
            psi,
            phi,
        } => {
            let w = gig_sample(GigParams::new(lambda, chi, psi)?, n, seed ^ 0x9e37_79b9)?;
            w.into_iter()
                .map(|w| {
                    let z: f64 = r.sample(StandardNormal);
                    phi * w + w.sqrt() * z
                })
                .collect()
        }
        Marginal1D::Gig { lambda, chi, psi } => {
            gig_sample(GigParams::new(lambda, chi, psi)?, n, seed)?
        }
    })
}

/// Seed of an independent stream for task `i`.
pub(crate) fn task_seed(seed: u64, i: u64) -> u64 {
    // SplitMix64 finalizer.
    let mut z = seed ^ i.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::DomainError(format!("p must lie in (0, 1], got {p}")))
    }
}

fn member_probability(ev: &Evaluator, x: &[f64]) -> Result<f64> {
    let prob = ev.prob;
    if !prob.domain.contains(x) {
        return Err(Error::OutsideX);
    }
    if let Some(v) = origin_probability(prob, x)? {
        return Ok(v);
    }
    let mut u = Vec::with_capacity(prob.rows.len());
    for i in 0..prob.rows.len() {
        let v = match prob.gh_row(i) {
            Some(g) => {
                let row = &prob.rows[i];
                let q = quad_form(&row.sigma, x)?;
                let gig = GigParams::new(g.lambda, g.chi, g.psi)?;
                mixture_probability(gig, row.d - dot(&row.mu, x), dot(&g.gamma, x), q.sqrt())?
            }
            None => row_probability(ev, i, x, false)?,
        };
        u.push(v);
    }
    compose(prob, x, &u)
}

pub fn is_member(prob: &Problem, x: &[f64], p: f64) -> Result<bool> {
    check_p(p)?;
    let ev = Evaluator::new(prob)?;
    Ok(member_probability(&ev, x)? >= p - 1e-9)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub lambda: f64,
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvexityReport {
    pub p: f64,
    pub segments_tested: usize,
    pub violations: Vec<Violation>,
    pub star_shaped_ok: bool,
}

/// Probability slack below which a midpoint counts as a violation.
pub const SEGMENT_SLACK: f64 = 1e-4;
const DRAW_BUDGET: usize = 1_000_000;
const TASK_DRAWS: usize = 512;
const ROUND_TASKS: usize = 64;

/// Runs `f` on a pool capped at `threads` workers, or at `EVCONVEX_THREADS`.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    let n = threads.or_else(|| {
        std::env::var("EVCONVEX_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    match n {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

fn in_e(prob: &Problem, x: &[f64]) -> bool {
    x.iter().any(|&v| v != 0.0) && prob.rows.iter().all(|r| r.d - dot(&r.mu, x) > 0.0)
}

fn uniform_in(dom: &Domain, r: &mut ChaCha8Rng) -> Vec<f64> {
    let (lo, hi) = dom.bounds();
    lo.iter()
        .zip(&hi)
        .map(|(a, b)| a + (b - a) * r.random::<f64>())
        .collect()
}

/// `wanted` members of S(p) ∩ E, drawn uniformly from the part of X inside
/// an enlarged bounding box of S(p). Order is independent of worker count.
fn sample_members(ev: &Evaluator, p: f64, wanted: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let prob = ev.prob;
    let region = match interior_member(ev, p, seed) {
        Ok(x0) => member_box(ev, p, &x0)?,
        Err(Error::Infeasible(_)) => {
            return Err(Error::SamplingExhausted {
                found: 0,
                wanted,
                draws: DRAW_BUDGET,
            })
        }
        Err(e) => return Err(e),
    };
    let mut found = Vec::with_capacity(wanted);
    let mut draws = 0;
    let mut task = 0u64;
    while found.len() < wanted && draws < DRAW_BUDGET {
        let batch: Vec<Result<Vec<Vec<f64>>>> = (task..task + ROUND_TASKS as u64)
            .into_par_iter()
            .map(|t| {
                let mut r = rng(task_seed(seed, t));
                let mut out = Vec::new();
                for _ in 0..TASK_DRAWS {
                    let x = uniform_in(&region, &mut r);
                    if prob.domain.contains(&x)
                        && in_e(prob, &x)
                        && member_probability(ev, &x)? >= p
                    {
                        out.push(x);
                    }
                }
                Ok(out)
            })
            .collect();
        for b in batch {
            found.extend(b?);
        }
        task += ROUND_TASKS as u64;
        draws += ROUND_TASKS * TASK_DRAWS;
    }
    if found.len() < wanted {
        return Err(Error::SamplingExhausted {
            found: found.len(),
            wanted,
            draws,
        });
    }
    found.truncate(wanted);
    Ok(found)
}

/// Box around the ray extents of S(p) seen from `x0`, enlarged by a quarter
/// of its width on each side and clipped to the bounds of X.
fn member_box(ev: &Evaluator, p: f64, x0: &[f64]) -> Result<Domain> {
    let prob = ev.prob;
    let n = prob.dim();
    let dirs: Vec<Vec<f64>> = if n == 2 {
        (0..128)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 128.0;
                vec![a.cos(), a.sin()]
            })
            .collect()
    } else {
        let mut r = rng(0xb0c5);
        let mut d: Vec<Vec<f64>> = (0..n)
            .flat_map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                let m: Vec<f64> = e.iter().map(|v| -v).collect();
                [e, m]
            })
            .collect();
        for _ in 0..64 * n {
            let mut v: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
            let l = norm(&v);
            v.iter_mut().for_each(|c| *c /= l);
            d.push(v);
        }
        d
    };
    let (xlo, xhi) = prob.domain.bounds();
    let mut lo = x0.to_vec();
    let mut hi = x0.to_vec();
    for d in &dirs {
        let far: Vec<f64> = x0
            .iter()
            .zip(d)
            .zip(xlo.iter().zip(&xhi))
            .map(|((a, b), (l, h))| a + b * (h - l))
            .collect();
        let edge = clip_to_domain(&prob.domain, x0, &far);
        let xb = if member_probability(ev, &edge)? >= p {
            edge
        } else {
            boundary_point(ev, x0, &edge, p)?
        };
        for i in 0..n {
            lo[i] = lo[i].min(xb[i]);
            hi[i] = hi[i].max(xb[i]);
        }
    }
    for i in 0..n {
        let pad = 0.25 * (hi[i] - lo[i]).max(1e-9);
        lo[i] = (lo[i] - pad).max(xlo[i]);
        hi[i] = (hi[i] + pad).min(xhi[i]);
    }
    Ok(Domain::Box { lo, hi })
}

/// Last point of the segment from `inside` to `outside` that lies in X.
fn clip_to_domain(dom: &Domain, inside: &[f64], outside: &[f64]) -> Vec<f64> {
    let at = |t: f64| -> Vec<f64> {
        inside
            .iter()
            .zip(outside)
            .map(|(a, b)| a + t * (b - a))
            .collect()
    };
    if dom.contains(outside) {
        return outside.to_vec();
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if dom.contains(&at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}

/// Tests 9 interior points on each of `n_segments` random member pairs.
pub fn verify_segment_convexity(
    prob: &Problem,
    p: f64,
    n_segments: usize,
    seed: u64,
) -> Result<ConvexityReport> {
    check_p(p)?;
    let ev = Evaluator::new(prob)?;
    let members = sample_members(&ev, p, 2 * n_segments, seed)?;
    let per_segment: Vec<Result<Vec<Violation>>> = members
        .par_chunks(2)
        .map(|pair| {
            let (a, b) = (&pair[0], &pair[1]);
            let mut out = Vec::new();
            for k in 1..=9 {
                let lambda = k as f64 / 10.0;
                let z: Vec<f64> = a
                    .iter()
                    .zip(b)
                    .map(|(u, v)| lambda * u + (1.0 - lambda) * v)
                    .collect();
                let deficit = p - member_probability(&ev, &z)?;
                if deficit > SEGMENT_SLACK {
                    out.push(Violation {
                        x1: a.clone(),
                        x2: b.clone(),
                        lambda,
                        deficit,
                    });
                }
            }
            Ok(out)
        })
        .collect();
    let mut violations = Vec::new();
    for v in per_segment {
        violations.extend(v?);
    }
    let star_shaped_ok =
        prob.min_d() >= 0.0 && star_shaped_with(&ev, p, n_segments.min(100), seed ^ 0x5a5a)?;
    Ok(ConvexityReport {
        p,
        segments_tested: n_segments,
        violations,
        star_shaped_ok,
    })
}

/// True when λx stays in S(p) for λ ∈ {0.05, 0.10, …, 1} on `rays` members.
pub fn star_shaped_check(prob: &Problem, p: f64, rays: usize, seed: u64) -> Result<bool> {
    check_p(p)?;
    let ev = Evaluator::new(prob)?;
    if prob.min_d() < 0.0 || !prob.origin_allowed {
        return Err(Error::OriginNotMember);
    }
    star_shaped_with(&ev, p, rays, seed)
}

fn star_shaped_with(ev: &Evaluator, p: f64, rays: usize, seed: u64) -> Result<bool> {
    let members = sample_members(ev, p, rays, seed)?;
    let ok: Vec<Result<bool>> = members
        .par_iter()
        .map(|x| {
            for k in 1..=20 {
                let l = k as f64 / 20.0;
                let z: Vec<f64> = x.iter().map(|v| l * v).collect();
                if member_probability(ev, &z)? < p - SEGMENT_SLACK {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect();
    for r in ok {
        if !r? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub x1: f64,
    pub x2: f64,
    /// NaN outside X.
    pub prob: f64,
}

/// Cell-centre probabilities on a resolution² grid, x1 outer, x2 inner.
pub fn grid_export(
    prob: &Problem,
    lo: [f64; 2],
    hi: [f64; 2],
    resolution: usize,
) -> Result<Vec<GridCell>> {
    if prob.dim() != 2 {
        return Err(Error::DimError {
            expected: 2,
            got: prob.dim(),
        });
    }
    if resolution == 0 {
        return Err(Error::DomainError("resolution must be positive".into()));
    }
    let ev = Evaluator::new(prob)?;
    let at = |i: usize, k: usize| lo[k] + (hi[k] - lo[k]) * (i as f64 + 0.5) / resolution as f64;
    let rows: Vec<Result<Vec<GridCell>>> = (0..resolution)
        .into_par_iter()
        .map(|i| {
            (0..resolution)
                .map(|j| {
                    let x = [at(i, 0), at(j, 1)];
                    let p = match member_probability(&ev, &x) {
                        Ok(v) => v,
                        Err(Error::OutsideX) => f64::NAN,
                        Err(e) => return Err(e),
                    };
                    Ok(GridCell {
                        x1: x[0],
                        x2: x[1],
                        prob: p,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(resolution * resolution);
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// CSV with header `x1,x2,prob` and 17 significant digits.
pub fn grid_csv(cells: &[GridCell]) -> String {
    let mut s = String::from("x1,x2,prob\n");
    for c in cells {
        s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", c.x1, c.x2, c.prob));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MinimizeCertificate {
    /// Value of the outer relaxation at the last iterate.
    pub lower_bound: f64,
    /// Objective at the best feasible point found.
    pub upper_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub probability: f64,
    pub cuts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub certificate: MinimizeCertificate,
}

/// Feasibility slack at which the cutting-plane loop stops.
pub const MINIMIZE_SLACK: f64 = 1e-5;

/// min cᵀx over S(p) by supporting hyperplanes: each infeasible iterate is
/// pulled back to the boundary along the ray from an interior member, and
/// the probability gradient there defines the cut.
pub fn minimize_linear(
    prob: &Problem,
    c: &[f64],
    p: f64,
    max_iter: usize,
    override_cert: bool,
) -> Result<MinimizeResult> {
    check_p(p)?;
    let ev = Evaluator::new(prob)?;
    let n = prob.dim();
    if c.len() != n {
        return Err(Error::DimError {
            expected: n,
            got: c.len(),
        });
    }
    if !override_cert {
        let ps = assemble_p_star(
            &prob.rows,
            LambdaMode::LMin,
            crate::decreasing::DEFAULT_EPS0,
        )?;
        if p <= ps.pstar {
            return Err(Error::NotCertified { p, pstar: ps.pstar });
        }
    }
    let interior = interior_member(&ev, p, 1)?;
    if norm(c) == 0.0 {
        let pr = member_probability(&ev, &interior)?;
        let cert = MinimizeCertificate {
            lower_bound: 0.0,
            upper_bound: 0.0,
            iterations: 0,
            converged: true,
            probability: pr,
            cuts: 0,
        };
        return Ok(MinimizeResult {
            x: interior,
            value: 0.0,
            certificate: cert,
        });
    }
    let (lo, hi) = prob.domain.bounds();
    let mut cuts: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut best = (dot(c, &interior), interior.clone());
    let mut lower = f64::NEG_INFINITY;
    let mut last_prob = member_probability(&ev, &interior)?;
    for iter in 1..=max_iter {
        let xk = solve_lp(c, &lo, &hi, &cuts)?;
        lower = dot(c, &xk);
        let inside = prob.domain.contains(&xk);
        let xe = if inside {
            xk.clone()
        } else {
            clip_to_domain(&prob.domain, &interior, &xk)
        };
        let pe = member_probability(&ev, &xe)?;
        if inside && pe >= p - MINIMIZE_SLACK {
            let cert = MinimizeCertificate {
                lower_bound: lower,
                upper_bound: lower,
                iterations: iter,
                converged: true,
                probability: pe,
                cuts: cuts.len(),
            };
            return Ok(MinimizeResult {
                value: lower,
                x: xk,
                certificate: cert,
            });
        }
        if pe >= p {
            // S(p) reaches the boundary of X here; cut with the ball tangent.
            if dot(c, &xe) < best.0 {
                best = (dot(c, &xe), xe.clone());
                last_prob = pe;
            }
            if let Domain::Ball { radius, .. } = prob.domain {
                let nx = norm(&xe);
                cuts.push((xe.iter().map(|v| v / nx).collect(), radius));
            }
            continue;
        }
        let xb = boundary_point(&ev, &interior, &xe, p)?;
        let pb = member_probability(&ev, &xb)?;
        if dot(c, &xb) < best.0 {
            best = (dot(c, &xb), xb.clone());
            last_prob = pb;
        }
        let grad = probability_gradient(&ev, &xb)?;
        // ∇P(x_b)ᵀ(x − x_b) ≥ 0, stored as aᵀx ≤ β.
        let a: Vec<f64> = grad.iter().map(|g| -g).collect();
        let beta = dot(&a, &xb);
        cuts.push((a, beta));
    }
    let cert = MinimizeCertificate {
        lower_bound: lower,
        upper_bound: best.0,
        iterations: max_iter,
        converged: (best.0 - lower).abs() <= 1e-6 * best.0.abs().max(1.0),
        probability: last_prob,
        cuts: cuts.len(),
    };
    Ok(MinimizeResult {
        x: best.1,
        value: best.0,
        certificate: cert,
    })
}

fn interior_member(ev: &Evaluator, p: f64, seed: u64) -> Result<Vec<f64>> {
    let prob = ev.prob;
    let origin = vec![0.0; prob.dim()];
    if prob.origin_allowed && prob.domain.contains(&origin) && member_probability(ev, &origin)? >= p
    {
        return Ok(origin);
    }
    let mut r = rng(task_seed(seed, u64::MAX));
    for _ in 0..DRAW_BUDGET {
        let x = uniform_in(&prob.domain, &mut r);
        if prob.domain.contains(&x) && in_e(prob, &x) && member_probability(ev, &x)? >= p {
            return Ok(x);
        }
    }
    Err(Error::Infeasible("no member of S(p) found".into()))
}

fn boundary_point(ev: &Evaluator, inside: &[f64], outside: &[f64], p: f64) -> Result<Vec<f64>> {
    let at = |t: f64| -> Vec<f64> {
        inside
            .iter()
            .zip(outside)
            .map(|(a, b)| a + t * (b - a))
            .collect()
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if member_probability(ev, &at(mid))? >= p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(lo))
}

fn probability_gradient(ev: &Evaluator, x: &[f64]) -> Result<Vec<f64>> {
    let h = 1e-6 * norm(x).max(1.0);
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            let fa = grad_eval(ev, &a)?;
            let fb = grad_eval(ev, &b)?;
            Ok((fa - fb) / (2.0 * h))
        })
        .collect()
}

/// Probability without the X check, so gradients work on the boundary of X.
fn grad_eval(ev: &Evaluator, x: &[f64]) -> Result<f64> {
    if ev.prob.domain.contains(x) {
        member_probability(ev, x)
    } else {
        let mut u = Vec::with_capacity(ev.prob.rows.len());
        for i in 0..ev.prob.rows.len() {
            u.push(row_probability(ev, i, x, false)?);
        }
        match &ev.prob.copula {
            CopulaSpec::Gumbel { kappa } => {
                // κ is only certified on X; clamp the point radially for κ.
                let scale = match &ev.prob.domain {
                    Domain::Ball { radius, .. } => radius / norm(x),
                    Domain::Box { .. } => 1.0,
                };
                let xc: Vec<f64> = x.iter().map(|v| v * scale.min(1.0)).collect();
                copula_value(kappa.kappa(&xc)?, &u)
            }
            CopulaSpec::Independent => Ok(u.iter().product()),
        }
    }
}

fn solve_lp(c: &[f64], lo: &[f64], hi: &[f64], cuts: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
    let mut lp = minilp::Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..c.len())
        .map(|i| lp.add_var(c[i], (lo[i], hi[i])))
        .collect();
    for (a, beta) in cuts {
        let terms: Vec<_> = vars.iter().zip(a).map(|(&v, &ai)| (v, ai)).collect();
        lp.add_constraint(&terms[..], ComparisonOp::Le, *beta);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Infeasible(format!("outer relaxation: {e}")))?;
    Ok(vars.iter().map(|&v| sol[v]).collect())
}
