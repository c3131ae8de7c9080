//! Generalized least squares on the sixteen relative frequencies.
//!
//! The estimator of `θ = aᵀp` is `aᵀp̂ − cᵀBᵀp̂`, where the columns of `B`
//! are the four no-signalling contrasts (zero in expectation under the
//! model). The variance-minimizing `c` is `Σ_BB⁻¹ Σ_Ba` with the plug-in
//! multinomial covariance.

use crate::data::{flatten, BellDataset, FlatView};
use crate::dist::{normal_sf, TailProb};
use crate::error::Result;
use crate::linalg::{self, Matrix};

/// Condition number of `Σ̂_BB` above which the pseudo-inverse is used.
pub const MAX_CONDITION: f64 = 1e12;

/// Floor applied to projected probabilities that come out non-positive.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionalKind {
    /// CHSH `S = ρ₁₁ + ρ₁₂ + ρ₂₁ − ρ₂₂`; local bound 2.
    S,
    /// Eberhard `J = p(++|11) − p(+−|12) − p(−+|21) − p(++|22)`; local bound 0.
    J,
}

impl FunctionalKind {
    pub fn bound(self) -> f64 {
        match self {
            FunctionalKind::S => 2.0,
            FunctionalKind::J => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionalKind::S => "S",
            FunctionalKind::J => "J",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFunctional {
    pub a: [f64; 16],
    pub kind: FunctionalKind,
}

impl LinearFunctional {
    pub fn apply(&self, p: &[f64; 16]) -> f64 {
        linalg::dot(&self.a, p)
    }
}

pub fn functional(kind: FunctionalKind) -> LinearFunctional {
    let mut a = [0.0; 16];
    match kind {
        FunctionalKind::S => {
            let signs = [1.0, 1.0, 1.0, -1.0];
            for (i, s) in signs.iter().enumerate() {
                a[4 * i] = *s;
                a[4 * i + 1] = -s;
                a[4 * i + 2] = -s;
                a[4 * i + 3] = *s;
            }
        }
        FunctionalKind::J => {
            a[0] = 1.0; // ++ | 11
            a[5] = -1.0; // +− | 12
            a[10] = -1.0; // −+ | 21
            a[12] = -1.0; // ++ | 22
        }
    }
    LinearFunctional { a, kind }
}

/// The no-signalling contrasts as columns: Alice's marginal under setting 1
/// and 2, then Bob's under setting 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintMatrix {
    pub b: Matrix<16, 4>,
}

impl ConstraintMatrix {
    pub fn new() -> Self {
        let mut b = [[0.0; 4]; 16];
        // Alice setting a: p(+·|a,1) − p(+·|a,2); blocks (a,1), (a,2)
        for (col, (blk1, blk2)) in [(0usize, 1usize), (2, 3)].into_iter().enumerate() {
            for j in [0, 1] {
                b[4 * blk1 + j][col] = 1.0;
                b[4 * blk2 + j][col] = -1.0;
            }
        }
        // Bob setting b: p(·+|1,b) − p(·+|2,b); blocks (1,b), (2,b)
        for (k, (blk1, blk2)) in [(0usize, 2usize), (1, 3)].into_iter().enumerate() {
            for j in [0, 2] {
                b[4 * blk1 + j][2 + k] = 1.0;
                b[4 * blk2 + j][2 + k] = -1.0;
            }
        }
        ConstraintMatrix { b }
    }

    /// `Bᵀp`, the observed no-signalling deviations.
    pub fn residual(&self, p: &[f64; 16]) -> [f64; 4] {
        linalg::mat_t_vec(&self.b, p)
    }
}

impl Default for ConstraintMatrix {
    fn default() -> Self {
        Self::new()
    }
}

/// Plug-in covariance of `p̂`: four multinomial blocks on the diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCovariance {
    pub blocks: [Matrix<4, 4>; 4],
}

impl BlockCovariance {
    pub fn full(&self) -> Matrix<16, 16> {
        let mut m = [[0.0; 16]; 16];
        for (i, blk) in self.blocks.iter().enumerate() {
            for r in 0..4 {
                for c in 0..4 {
                    m[4 * i + r][4 * i + c] = blk[r][c];
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64; 16]) -> [f64; 16] {
        let mut y = [0.0; 16];
        for (i, blk) in self.blocks.iter().enumerate() {
            for r in 0..4 {
                y[4 * i + r] = (0..4).map(|c| blk[r][c] * x[4 * i + c]).sum();
            }
        }
        y
    }

    pub fn quad(&self, x: &[f64; 16], y: &[f64; 16]) -> f64 {
        linalg::dot(x, &self.mul_vec(y))
    }
}

pub fn covariance_matrix(fv: &FlatView) -> BlockCovariance {
    covariance_from_probs(&fv.phat, &fv.n)
}

pub(crate) fn covariance_from_probs(p: &[f64; 16], n: &[u64; 4]) -> BlockCovariance {
    let mut blocks = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        let ni = n[i] as f64;
        for r in 0..4 {
            for c in 0..4 {
                let (pr, pc) = (p[4 * i + r], p[4 * i + c]);
                blocks[i][r][c] = if r == c { pr * (1.0 - pr) / ni } else { -pr * pc / ni };
            }
        }
    }
    BlockCovariance { blocks }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Naive,
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    /// `(value − bound) / se`.
    pub z: f64,
    /// One-sided `P(Z ≥ z)`.
    pub p: TailProb,
    /// Coefficients on the no-signalling deviations; zero for naive.
    pub c: [f64; 4],
    pub kind: FunctionalKind,
    pub method: Method,
    /// `Σ̂_BB` was too ill-conditioned and a pseudo-inverse was used.
    pub regularized: bool,
}

fn finish(value: f64, se: f64, c: [f64; 4], kind: FunctionalKind, method: Method, regularized: bool) -> Estimate {
    let z = (value - kind.bound()) / se;
    Estimate {
        value,
        se,
        z,
        p: normal_sf(z),
        c,
        kind,
        method,
        regularized,
    }
}

pub fn naive_estimate(ds: &BellDataset, kind: FunctionalKind) -> Result<Estimate> {
    let fv = flatten(ds)?;
    let a = functional(kind);
    let sigma = covariance_matrix(&fv);
    let value = a.apply(&fv.phat);
    let se = libm::sqrt(sigma.quad(&a.a, &a.a).max(0.0));
    Ok(finish(value, se, [0.0; 4], kind, Method::Naive, false))
}

/// `Σ_BB`, `Σ_Ba` and the (possibly regularized) inverse of `Σ_BB`.
struct ConstraintMoments {
    sigma_b: [[f64; 16]; 4],
    bb_inv: Matrix<4, 4>,
    regularized: bool,
}

fn constraint_moments(sigma: &BlockCovariance, b: &ConstraintMatrix) -> ConstraintMoments {
    // columns of Σ B, stored as rows
    let bt = linalg::transpose(&b.b);
    let sigma_b = bt.map(|col| sigma.mul_vec(&col));
    let mut bb = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            bb[i][j] = linalg::dot(&bt[i], &sigma_b[j]);
        }
    }
    let (bb_inv, regularized) = linalg::spd_inverse(&bb, MAX_CONDITION);
    ConstraintMoments {
        sigma_b,
        bb_inv,
        regularized,
    }
}

pub fn optimized_estimate(ds: &BellDataset, kind: FunctionalKind) -> Result<Estimate> {
    let fv = flatten(ds)?;
    let a = functional(kind);
    let b = ConstraintMatrix::new();
    let sigma = covariance_matrix(&fv);
    let m = constraint_moments(&sigma, &b);
    let sigma_ab: [f64; 4] = m.sigma_b.map(|col| linalg::dot(&a.a, &col));
    let c = linalg::mat_vec(&m.bb_inv, &sigma_ab);
    let dev = b.residual(&fv.phat);
    let value = a.apply(&fv.phat) - linalg::dot(&c, &dev);
    let var = sigma.quad(&a.a, &a.a) - linalg::dot(&sigma_ab, &c);
    let se = libm::sqrt(var.max(0.0));
    Ok(finish(value, se, c, kind, Method::Optimized, m.regularized))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub probs: [f64; 16],
    /// Some entries came out below [`PROB_FLOOR`] and were raised, with the
    /// affected blocks renormalized.
    pub clamped: bool,
    pub regularized: bool,
}

/// GLS projection `p̃ = p̂ − Σ̂B(BᵀΣ̂B)⁻¹Bᵀp̂` onto the no-signalling subspace.
pub fn project_nosignalling(fv: &FlatView) -> Result<Projection> {
    let b = ConstraintMatrix::new();
    let sigma = covariance_matrix(fv);
    let m = constraint_moments(&sigma, &b);
    let dev = b.residual(&fv.phat);
    let w = linalg::mat_vec(&m.bb_inv, &dev);
    let mut probs = fv.phat;
    for k in 0..4 {
        for j in 0..16 {
            probs[j] -= m.sigma_b[k][j] * w[k];
        }
    }
    let mut clamped = false;
    for i in 0..4 {
        let blk = &mut probs[4 * i..4 * i + 4];
        if blk.iter().any(|&x| x < PROB_FLOOR) {
            clamped = true;
            for x in blk.iter_mut() {
                *x = x.max(PROB_FLOOR);
            }
            let s: f64 = blk.iter().sum();
            for x in blk.iter_mut() {
                *x /= s;
            }
        }
    }
    Ok(Projection {
        probs,
        clamped,
        regularized: m.regularized,
    })
}
