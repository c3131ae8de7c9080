//! Multinomial maximum likelihood over the no-signalling polytope and over
//! its intersection with a one-sided CHSH facet, plus the boundary Wilks
//! test comparing the two.
//!
//! Under no-signalling the sixteen probabilities are an affine function of
//! eight parameters (four marginals, four correlations):
//!
//! ```text
//! p(x,y|a,b) = ¼ + ½(p_a(x) − ½) + ½(q_b(y) − ½) + xy·ρ_ab/4
//! ```
//!
//! so the log-likelihood is concave in the parameters and its derivatives
//! are exact and cheap. Fits use damped Newton ascent with a log-barrier on
//! the sixteen probabilities; the feasible line search never leaves the
//! interior of the polytope.

use crate::data::{chsh_values, flatten, BellDataset, SignVector, ONE_SIDED_CHSH};
use crate::dist::{wilks_mixture_sf, TailProb};
use crate::error::{Error, Result};
use crate::gls::{project_nosignalling, ConstraintMatrix};
use crate::linalg::{self, Matrix};

/// Probabilities below this are not accepted as a starting point.
pub const MIN_PROB: f64 = 1e-12;

/// Local-realism check tolerance on fitted CHSH values.
pub const CHSH_TOL: f64 = 1e-8;

/// Eight free parameters of a no-signalling behaviour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsParams {
    /// Alice's `P(+ | a)`.
    pub pa: [f64; 2],
    /// Bob's `P(+ | b)`.
    pub qb: [f64; 2],
    /// ρ_ab in setting-pair order.
    pub rho: [f64; 4],
}

impl NsParams {
    /// Uniform point: every probability ¼.
    pub fn center() -> Self {
        NsParams {
            pa: [0.5; 2],
            qb: [0.5; 2],
            rho: [0.0; 4],
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.pa[0], self.pa[1], self.qb[0], self.qb[1], self.rho[0], self.rho[1], self.rho[2], self.rho[3],
        ]
    }

    pub fn from_array(t: &[f64; 8]) -> Self {
        NsParams {
            pa: [t[0], t[1]],
            qb: [t[2], t[3]],
            rho: [t[4], t[5], t[6], t[7]],
        }
    }

    /// Canonical CHSH value ρ₁₁ + ρ₁₂ + ρ₂₁ − ρ₂₂.
    pub fn chsh(&self) -> f64 {
        SignVector::CANONICAL.apply(&self.rho)
    }
}

/// `p = offset + jacobian·θ`, the affine parametrization.
fn param_map() -> ([f64; 16], Matrix<16, 8>) {
    let mut offset = [0.0; 16];
    let mut jac = [[0.0; 8]; 16];
    for blk in 0..4 {
        let (a, b) = (blk / 2, blk % 2);
        for cell in 0..4 {
            let x = if cell < 2 { 1.0 } else { -1.0 };
            let y = if cell % 2 == 0 { 1.0 } else { -1.0 };
            let k = 4 * blk + cell;
            offset[k] = 0.25 - 0.25 * x - 0.25 * y;
            jac[k][a] = 0.5 * x;
            jac[k][2 + b] = 0.5 * y;
            jac[k][4 + blk] = 0.25 * x * y;
        }
    }
    (offset, jac)
}

fn raw_probs(th: &[f64; 8]) -> [f64; 16] {
    let (offset, jac) = param_map();
    let mut p = linalg::mat_vec(&jac, th);
    for k in 0..16 {
        p[k] += offset[k];
    }
    p
}

fn check_feasible(p: &[f64; 16], floor: f64) -> Result<()> {
    for (cell, &v) in p.iter().enumerate() {
        if !(v >= floor) {
            return Err(Error::InfeasibleParams { cell, value: v });
        }
    }
    Ok(())
}

pub fn params_to_probs(th: &NsParams) -> Result<[f64; 16]> {
    let p = raw_probs(&th.to_array());
    check_feasible(&p, 0.0)?;
    Ok(p)
}

/// Inverse of [`params_to_probs`] on the no-signalling subspace.
pub fn probs_to_params(p: &[f64; 16]) -> Result<NsParams> {
    const TOL: f64 = 1e-8;
    let mut worst = 0.0_f64;
    for i in 0..4 {
        worst = worst.max((p[4 * i..4 * i + 4].iter().sum::<f64>() - 1.0).abs());
    }
    for r in ConstraintMatrix::new().residual(p) {
        worst = worst.max(r.abs());
    }
    if !(worst <= TOL) {
        return Err(Error::SignallingViolated { residual: worst });
    }
    let mut rho = [0.0; 4];
    for i in 0..4 {
        rho[i] = p[4 * i] - p[4 * i + 1] - p[4 * i + 2] + p[4 * i + 3];
    }
    Ok(NsParams {
        // Alice from blocks (1,1) and (2,1); Bob from (1,1) and (1,2)
        pa: [p[0] + p[1], p[8] + p[9]],
        qb: [p[0] + p[2], p[4] + p[6]],
        rho,
    })
}

/// Log-likelihood with exact derivatives in the eight parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLik {
    pub value: f64,
    pub gradient: [f64; 8],
    pub hessian: Matrix<8, 8>,
}

pub fn loglik(th: &NsParams, ds: &BellDataset) -> Result<LogLik> {
    let p = raw_probs(&th.to_array());
    check_feasible(&p, MIN_PROB)?;
    let counts = ds.counts().map(|c| c as f64);
    let problem = Problem::<8>::new(counts, &Subspace::full());
    let (gradient, neg_hess) = problem.derivatives(&p, &counts);
    let mut hessian = neg_hess;
    for row in hessian.iter_mut() {
        for h in row.iter_mut() {
            *h = -*h;
        }
    }
    Ok(LogLik {
        value: log_value(&counts, &p),
        gradient,
        hessian,
    })
}

/// `Σ X log p` with `0·log 0 = 0`.
fn log_value(counts: &[f64; 16], p: &[f64; 16]) -> f64 {
    counts
        .iter()
        .zip(p)
        .filter(|(&x, _)| x > 0.0)
        .map(|(&x, &q)| x * libm::log(q))
        .sum()
}

/// `Σ X log(p_new / p_old)`, accurate when the two are close.
fn log_ratio(counts: &[f64; 16], new: &[f64; 16], old: &[f64; 16]) -> f64 {
    (0..16)
        .filter(|&k| counts[k] > 0.0)
        .map(|k| counts[k] * libm::log1p((new[k] - old[k]) / old[k]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    NoSignalling,
    LocalRealism,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Newton-decrement tolerance.
    pub grad_tol: f64,
    pub step_tol: f64,
    /// Initial barrier weight, in units of total trials per cell.
    pub barrier_mu0: f64,
    pub barrier_factor: f64,
    pub barrier_stages: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 500,
            grad_tol: 1e-9,
            step_tol: 1e-12,
            barrier_mu0: 1e-4,
            barrier_factor: 0.1,
            barrier_stages: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleFit {
    pub params: NsParams,
    pub probs: [f64; 16],
    /// `Σ X log p`, natural log.
    pub loglik: f64,
    pub model: Model,
    pub converged: bool,
    pub iterations: usize,
    /// Index into [`ONE_SIDED_CHSH`] of the facet the fit was forced onto.
    pub active_constraint: Option<usize>,
    /// Newton decrement `√(gᵀ(−H)⁻¹g)` at the final point, barrier included.
    pub grad_norm: f64,
    /// No improvement over the starting point was resolvable in floating
    /// point, so the start was returned as the fit.
    pub terminated_at_start: bool,
}

/// Affine slice `θ = origin + basis·φ` of parameter space.
struct Subspace<const D: usize> {
    origin: [f64; 8],
    basis: Matrix<8, D>,
}

impl Subspace<8> {
    fn full() -> Self {
        Subspace {
            origin: [0.0; 8],
            basis: linalg::identity::<8>(),
        }
    }
}

impl Subspace<7> {
    /// Facet `Σ sᵢρᵢ = 2` with the last correlation eliminated.
    fn facet(s: SignVector) -> Self {
        let s = s.as_f64();
        let mut origin = [0.0; 8];
        origin[7] = 2.0 * s[3];
        let mut basis = [[0.0; 7]; 8];
        for i in 0..7 {
            basis[i][i] = 1.0;
        }
        for i in 0..3 {
            basis[7][4 + i] = -s[3] * s[i];
        }
        Subspace { origin, basis }
    }

    fn coords(th: &[f64; 8]) -> [f64; 7] {
        let mut phi = [0.0; 7];
        phi.copy_from_slice(&th[..7]);
        phi
    }
}

impl<const D: usize> Subspace<D> {
    fn theta(&self, phi: &[f64; D]) -> [f64; 8] {
        let mut th = linalg::mat_vec(&self.basis, phi);
        for k in 0..8 {
            th[k] += self.origin[k];
        }
        th
    }
}

/// Log-likelihood restricted to a subspace: `p = offset + jac·φ`.
struct Problem<const D: usize> {
    counts: [f64; 16],
    offset: [f64; 16],
    jac: Matrix<16, D>,
}

impl<const D: usize> Problem<D> {
    fn new(counts: [f64; 16], sub: &Subspace<D>) -> Self {
        let (off, jac8) = param_map();
        let jac = linalg::mat_mul(&jac8, &sub.basis);
        let shift = linalg::mat_vec(&jac8, &sub.origin);
        let mut offset = off;
        for k in 0..16 {
            offset[k] += shift[k];
        }
        Problem { counts, offset, jac }
    }

    fn probs(&self, phi: &[f64; D]) -> [f64; 16] {
        let mut p = linalg::mat_vec(&self.jac, phi);
        for k in 0..16 {
            p[k] += self.offset[k];
        }
        p
    }

    /// Gradient and negated Hessian of `Σ w log p`.
    fn derivatives(&self, p: &[f64; 16], w: &[f64; 16]) -> ([f64; D], Matrix<D, D>) {
        let mut g = [0.0; D];
        let mut h = [[0.0; D]; D];
        for k in 0..16 {
            if w[k] == 0.0 {
                continue;
            }
            let r = w[k] / p[k];
            let r2 = r / p[k];
            let row = &self.jac[k];
            for i in 0..D {
                if row[i] == 0.0 {
                    continue;
                }
                g[i] += r * row[i];
                for j in 0..D {
                    h[i][j] += r2 * row[i] * row[j];
                }
            }
        }
        (g, h)
    }

    /// Newton direction `(−H)⁻¹g` and whether a pseudo-inverse was needed.
    fn direction(&self, g: &[f64; D], neg_h: &Matrix<D, D>) -> ([f64; D], bool) {
        if let Some(l) = linalg::cholesky(neg_h) {
            let d = linalg::cholesky_solve(&l, g);
            if d.iter().all(|x| x.is_finite()) {
                return (d, false);
            }
        }
        let (inv, _) = linalg::spd_inverse(neg_h, 1e14);
        (linalg::mat_vec(&inv, g), true)
    }

    /// Largest step along `dp` that leaves every probability at least 1% of
    /// its current value, capped at 1.
    fn max_step(p: &[f64; 16], dp: &[f64; 16]) -> f64 {
        let mut t = 1.0_f64;
        for k in 0..16 {
            if dp[k] < 0.0 {
                t = t.min(0.99 * p[k] / -dp[k]);
            }
        }
        t
    }
}

struct Ascent<const D: usize> {
    phi: [f64; D],
    iterations: usize,
    decrement: f64,
    hit_cap: bool,
}

/// Barrier-staged damped Newton ascent from a strictly feasible `phi`.
fn maximize<const D: usize>(problem: &Problem<D>, phi0: [f64; D], opts: &FitOptions) -> Ascent<D> {
    // With every count positive the log-likelihood is its own barrier, so
    // only zero cells need the staged μ-weighted pseudo-counts.
    let total: f64 = problem.counts.iter().sum();
    let all_positive = problem.counts.iter().all(|&x| x > 0.0);
    let stages: alloc::vec::Vec<f64> = if all_positive || opts.barrier_stages == 0 {
        alloc::vec![0.0]
    } else {
        (0..opts.barrier_stages)
            .map(|k| opts.barrier_mu0 * libm::pow(opts.barrier_factor, k as f64) * total)
            .collect()
    };

    let mut phi = phi0;
    let mut iterations = 0;
    let mut decrement = f64::INFINITY;
    let mut hit_cap = false;
    'stages: for mu in stages {
        let mut w = problem.counts;
        for x in w.iter_mut() {
            *x += mu;
        }
        loop {
            let p = problem.probs(&phi);
            let (g, neg_h) = problem.derivatives(&p, &w);
            let (d, _) = problem.direction(&g, &neg_h);
            let lam2 = linalg::dot(&g, &d).max(0.0);
            decrement = libm::sqrt(lam2);
            if decrement <= opts.grad_tol {
                break;
            }
            if iterations >= opts.max_iter {
                hit_cap = true;
                break 'stages;
            }
            iterations += 1;

            let dp = linalg::mat_vec(&problem.jac, &d);
            let mut t = Problem::<D>::max_step(&p, &dp);
            let mut accepted = false;
            for _ in 0..60 {
                let gain: f64 = (0..16)
                    .filter(|&k| w[k] > 0.0)
                    .map(|k| w[k] * libm::log1p(t * dp[k] / p[k]))
                    .sum();
                if gain >= 1e-4 * t * lam2 && gain > 0.0 {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // no ascent resolvable at this precision
                break;
            }
            let step: [f64; D] = core::array::from_fn(|i| t * d[i]);
            for i in 0..D {
                phi[i] += step[i];
            }
            if linalg::norm(&step) <= opts.step_tol {
                break;
            }
        }
    }
    Ascent {
        phi,
        iterations,
        decrement,
        hit_cap,
    }
}

/// Floating-point resolution of `Σ X log p` around `p`.
fn loglik_resolution(counts: &[f64; 16], p: &[f64; 16]) -> f64 {
    let mag: f64 = (0..16)
        .filter(|&k| counts[k] > 0.0)
        .map(|k| (counts[k] * libm::log(p[k])).abs() + counts[k] * f64::EPSILON)
        .sum();
    64.0 * f64::EPSILON * mag
}

fn run_fit<const D: usize>(
    ds: &BellDataset,
    sub: &Subspace<D>,
    phi0: [f64; D],
    model: Model,
    active_constraint: Option<usize>,
    opts: &FitOptions,
) -> MleFit {
    let counts = ds.counts().map(|c| c as f64);
    let problem = Problem::new(counts, sub);
    let start = problem.probs(&phi0);
    let ascent = maximize(&problem, phi0, opts);
    let end = problem.probs(&ascent.phi);
    let gain = log_ratio(&counts, &end, &start);
    let terminated_at_start = gain <= loglik_resolution(&counts, &start);
    let (phi, probs) = if terminated_at_start {
        (phi0, start)
    } else {
        (ascent.phi, end)
    };
    let th = sub.theta(&phi);
    // report probabilities as reconstructed from the parameters, bit for bit
    let probs = if terminated_at_start { probs } else { raw_probs(&th) };
    MleFit {
        params: NsParams::from_array(&th),
        probs,
        loglik: log_value(&counts, &probs),
        model,
        converged: !ascent.hit_cap,
        iterations: ascent.iterations,
        active_constraint,
        grad_norm: ascent.decrement,
        terminated_at_start,
    }
}

fn require_interior(th: &NsParams) -> Result<()> {
    check_feasible(&raw_probs(&th.to_array()), MIN_PROB)
}

/// Maximum likelihood over all eight no-signalling parameters.
pub fn fit_nosignalling(ds: &BellDataset, init: &NsParams, opts: &FitOptions) -> Result<MleFit> {
    flatten(ds)?;
    require_interior(init)?;
    Ok(run_fit(
        ds,
        &Subspace::full(),
        init.to_array(),
        Model::NoSignalling,
        None,
        opts,
    ))
}

/// Maximum likelihood over the local polytope, assuming (as is always the
/// case for a no-signalling point) that at most one one-sided CHSH
/// inequality is violated at the unconstrained fit.
pub fn fit_localrealism(ds: &BellDataset, init: &NsParams, opts: &FitOptions) -> Result<MleFit> {
    let ns = fit_nosignalling(ds, init, opts)?;
    localrealism_from(ds, &ns, opts)
}

fn violated_facets(rho: &[f64; 4], tol: f64) -> alloc::vec::Vec<usize> {
    chsh_values(rho)
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 2.0 + tol)
        .map(|(i, _)| i)
        .collect()
}

fn localrealism_from(ds: &BellDataset, ns: &MleFit, opts: &FitOptions) -> Result<MleFit> {
    let violated = violated_facets(&ns.params.rho, 0.0);
    match violated.len() {
        0 => {
            return Ok(MleFit {
                model: Model::LocalRealism,
                ..*ns
            })
        }
        1 => {}
        _ => return Err(Error::UnsupportedGeometry { violated }),
    }
    let idx = violated[0];
    let s = ONE_SIDED_CHSH[idx];
    let sub = Subspace::facet(s);
    let start = facet_start(ds, &ns.params, s);
    let fit = run_fit(
        ds,
        &sub,
        Subspace::coords(&start.to_array()),
        Model::LocalRealism,
        Some(idx),
        opts,
    );
    let still = violated_facets(&fit.params.rho, CHSH_TOL);
    if !still.is_empty() {
        return Err(Error::UnsupportedGeometry { violated: still });
    }
    Ok(fit)
}

/// Strictly feasible point on the facet `Σ sᵢρᵢ = 2` near `from`: the
/// projection in the observed-information metric, pulled toward the facet
/// centre (marginals ½, ρ = s/2) if the projection leaves the polytope.
fn facet_start(ds: &BellDataset, from: &NsParams, s: SignVector) -> NsParams {
    let th = from.to_array();
    let mut e = [0.0; 8];
    for i in 0..4 {
        e[4 + i] = s.0[i] as f64;
    }
    let excess = linalg::dot(&e, &th) - 2.0;
    let counts = ds.counts().map(|c| c as f64 + 0.5);
    let problem = Problem::<8>::new(counts, &Subspace::full());
    let p = raw_probs(&th);
    let (_, info) = problem.derivatives(&p, &counts);
    let (inv, _) = linalg::spd_inverse(&info, 1e14);
    let fe = linalg::mat_vec(&inv, &e);
    let denom = linalg::dot(&e, &fe);
    let mut target = th;
    if denom > 0.0 {
        for k in 0..8 {
            target[k] -= fe[k] * excess / denom;
        }
    }
    // re-impose the facet exactly through the eliminated coordinate
    let s4 = s.0[3] as f64;
    target[7] = s4 * (2.0 - (0..3).map(|i| s.0[i] as f64 * target[4 + i]).sum::<f64>());

    let centre = NsParams {
        pa: [0.5; 2],
        qb: [0.5; 2],
        rho: s.as_f64().map(|x| 0.5 * x),
    }
    .to_array();
    shrink_into_interior(&target, &centre)
}

/// Point on the segment from `centre` toward `target`, as close to
/// `target` as strict feasibility allows.
fn shrink_into_interior(target: &[f64; 8], centre: &[f64; 8]) -> NsParams {
    let pc = raw_probs(centre);
    let pt = raw_probs(target);
    let mut lambda = 1.0_f64;
    for k in 0..16 {
        let floor = 1e-9 * pc[k];
        if pt[k] < floor {
            lambda = lambda.min(0.99 * (pc[k] - floor) / (pc[k] - pt[k]));
        }
    }
    let th: [f64; 8] = core::array::from_fn(|k| centre[k] + lambda * (target[k] - centre[k]));
    NsParams::from_array(&th)
}

/// Starting parameters from the GLS projection, kept strictly interior.
pub fn initial_params(ds: &BellDataset) -> Result<NsParams> {
    let fv = flatten(ds)?;
    let proj = project_nosignalling(&fv)?;
    let th = match probs_to_params(&proj.probs) {
        Ok(t) => t,
        Err(_) => {
            let c = crate::data::correlations(ds)?;
            NsParams {
                pa: c.alice_marginals,
                qb: c.bob_marginals,
                rho: c.rho,
            }
        }
    };
    Ok(shrink_into_interior(&th.to_array(), &NsParams::center().to_array()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilksResult {
    /// `2(ℓ_NS − ℓ_LR)`, clamped at 0.
    pub statistic: f64,
    pub p: TailProb,
    pub fit_ns: MleFit,
    pub fit_lr: MleFit,
    /// One of the fits hit the iteration cap.
    pub unconverged: bool,
}

impl WilksResult {
    pub fn z_equivalent(&self) -> f64 {
        libm::sqrt(self.statistic)
    }
}

/// Wilks test of local realism against no-signalling, with the 50-50
/// chi-square(1)/chi-square(0) boundary null distribution.
pub fn wilks_test(ds: &BellDataset, opts: &FitOptions) -> Result<WilksResult> {
    let init = initial_params(ds)?;
    let fit_ns = fit_nosignalling(ds, &init, opts)?;
    let fit_lr = localrealism_from(ds, &fit_ns, opts)?;
    let counts = ds.counts().map(|c| c as f64);
    let raw = 2.0 * log_ratio(&counts, &fit_ns.probs, &fit_lr.probs);
    let statistic = if raw < 0.0 { 0.0 } else { raw };
    Ok(WilksResult {
        statistic,
        p: wilks_mixture_sf(statistic)?,
        fit_ns,
        fit_lr,
        unconverged: !(fit_ns.converged && fit_lr.converged) || raw < -1e-8,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneStep {
    pub params: NsParams,
    pub step_norm: f64,
    /// The Hessian could not be factored; `params` is the start.
    pub singular: bool,
}

/// A single Newton step on the no-signalling log-likelihood, shortened only
/// as far as needed to stay strictly inside the polytope.
pub fn one_step_estimate(ds: &BellDataset, init: &NsParams) -> Result<OneStep> {
    flatten(ds)?;
    require_interior(init)?;
    let counts = ds.counts().map(|c| c as f64);
    let problem = Problem::<8>::new(counts, &Subspace::full());
    let th = init.to_array();
    let p = problem.probs(&th);
    let (g, neg_h) = problem.derivatives(&p, &counts);
    let Some(l) = linalg::cholesky(&neg_h) else {
        return Ok(OneStep {
            params: *init,
            step_norm: 0.0,
            singular: true,
        });
    };
    let d = linalg::cholesky_solve(&l, &g);
    let dp = linalg::mat_vec(&problem.jac, &d);
    let t = Problem::<8>::max_step(&p, &dp);
    let step: [f64; 8] = core::array::from_fn(|i| t * d[i]);
    let out: [f64; 8] = core::array::from_fn(|i| th[i] + step[i]);
    Ok(OneStep {
        params: NsParams::from_array(&out),
        step_norm: linalg::norm(&step),
        singular: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::load_embedded;
    use crate::gls::{functional, optimized_estimate, FunctionalKind};

    #[test]
    fn reconstruction_examples() {
        assert_eq!(params_to_probs(&NsParams::center()).unwrap(), [0.25; 16]);
        let perfect = NsParams {
            rho: [1.0, 0.0, 0.0, 0.0],
            ..NsParams::center()
        };
        let p = params_to_probs(&perfect).unwrap();
        assert_eq!(&p[..4], &[0.5, 0.0, 0.0, 0.5]);
        let skew = NsParams {
            pa: [0.8, 0.5],
            ..NsParams::center()
        };
        let p = params_to_probs(&skew).unwrap();
        for (got, want) in p[..4].iter().zip([0.4, 0.4, 0.1, 0.1]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn infeasible_reports_cell() {
        let bad = NsParams {
            rho: [1.0, 0.0, 0.0, 0.0],
            pa: [0.9, 0.5],
            ..NsParams::center()
        };
        match params_to_probs(&bad) {
            Err(Error::InfeasibleParams { cell, value }) => {
                assert_eq!(cell, 2);
                assert!(value < 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn probs_to_params_inverse() {
        let th = NsParams {
            pa: [0.3, 0.6],
            qb: [0.45, 0.55],
            rho: [0.2, -0.1, 0.3, -0.25],
        };
        let back = probs_to_params(&params_to_probs(&th).unwrap()).unwrap();
        for (a, b) in back.to_array().iter().zip(th.to_array()) {
            assert!((a - b).abs() < 1e-12);
        }
        let u = probs_to_params(&[0.25; 16]).unwrap();
        assert_eq!(u, NsParams::center());
        let raw = flatten(&load_embedded("delft").unwrap()).unwrap().phat;
        assert!(matches!(probs_to_params(&raw), Err(Error::SignallingViolated { .. })));
    }

    #[test]
    fn delft_projected_params() {
        let fv = flatten(&load_embedded("delft").unwrap()).unwrap();
        let th = probs_to_params(&project_nosignalling(&fv).unwrap().probs).unwrap();
        let want = [0.745068, 0.606865, 0.500052, -0.610673];
        for (r, w) in th.rho.iter().zip(want) {
            assert!((r - w).abs() < 1e-6, "{:?}", th);
        }
        assert!((th.chsh() - 2.462658).abs() < 1e-6, "{}", th.chsh());
    }

    #[test]
    fn loglik_center_uniform_counts() {
        let ds = BellDataset::from_cells("ones", [[1; 4]; 4]);
        let l = loglik(&NsParams::center(), &ds).unwrap();
        assert!((l.value - 16.0 * 0.25_f64.ln()).abs() < 1e-13);
        for i in 0..8 {
            for j in 0..8 {
                assert!((l.hessian[i][j] - l.hessian[j][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delft_fits() {
        let ds = load_embedded("delft").unwrap();
        let init = initial_params(&ds).unwrap();
        let opts = FitOptions::default();
        let ns = fit_nosignalling(&ds, &init, &opts).unwrap();
        assert!(ns.converged);
        assert!(ns.loglik.is_finite());
        assert!((ns.params.chsh() - 2.46).abs() < 0.05);
        assert!(ns.loglik >= loglik(&init, &ds).unwrap().value);
        let lr = fit_localrealism(&ds, &init, &opts).unwrap();
        assert_eq!(lr.active_constraint, Some(0));
        assert!((lr.params.chsh() - 2.0).abs() < 1e-10);
        for v in chsh_values(&lr.params.rho) {
            assert!(v <= 2.0 + CHSH_TOL);
        }
    }

    #[test]
    fn delft_wilks() {
        let w = wilks_test(&load_embedded("delft").unwrap(), &FitOptions::default()).unwrap();
        assert!(((w.p.p - 0.02352081) / 0.02352081).abs() < 1e-3, "{}", w.p.p);
        assert!(!w.unconverged);
    }

    #[test]
    fn interior_data_has_zero_statistic() {
        // weak correlations: S well below 2
        let ds = BellDataset::from_cells("lr", [[30, 20, 20, 30], [28, 22, 22, 28], [30, 20, 20, 30], [22, 28, 28, 22]]);
        let w = wilks_test(&ds, &FitOptions::default()).unwrap();
        assert_eq!(w.statistic, 0.0);
        assert_eq!(w.p.p, 1.0);
        assert_eq!(w.fit_lr.active_constraint, None);
        assert_eq!(w.fit_lr.model, Model::LocalRealism);
        assert_eq!(w.fit_lr.probs, w.fit_ns.probs);
    }

    #[test]
    fn one_step_from_optimum_is_small_and_improves_delft() {
        let ds = load_embedded("delft").unwrap();
        let opts = FitOptions::default();
        let init = initial_params(&ds).unwrap();
        let ns = fit_nosignalling(&ds, &init, &opts).unwrap();
        let at_opt = one_step_estimate(&ds, &ns.params).unwrap();
        assert!(at_opt.step_norm <= 1e-9, "{}", at_opt.step_norm);
        let one = one_step_estimate(&ds, &init).unwrap();
        assert!(!one.singular);
        let target = ns.params.chsh();
        assert!((one.params.chsh() - target).abs() <= (init.chsh() - target).abs());
    }

    #[test]
    fn gls_start_matches_optimized_estimate() {
        let ds = load_embedded("munich").unwrap();
        let init = initial_params(&ds).unwrap();
        let opt = optimized_estimate(&ds, FunctionalKind::S).unwrap();
        assert!((init.chsh() - opt.value).abs() < 1e-10);
        let p = params_to_probs(&init).unwrap();
        assert!((functional(FunctionalKind::S).apply(&p) - opt.value).abs() < 1e-10);
    }

    #[test]
    fn rejects_infeasible_start() {
        let ds = load_embedded("delft").unwrap();
        let edge = NsParams {
            rho: [1.0, 0.0, 0.0, 0.0],
            ..NsParams::center()
        };
        assert!(matches!(
            fit_nosignalling(&ds, &edge, &FitOptions::default()),
            Err(Error::InfeasibleParams { .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let ds = load_embedded("weihs").unwrap();
        let opts = FitOptions {
            max_iter: 2,
            ..FitOptions::default()
        };
        let fit = fit_nosignalling(&ds, &NsParams::center(), &opts).unwrap();
        assert!(!fit.converged);
    }
}
