//! Dense batch solvers used as ground truth for the online trackers.
//!
//! * nuclear-norm regularized completion,
//!   `min_X ½‖P_Ω(Y − X)‖_F² + λ‖X‖_*`, by proximal gradient with
//!   singular-value soft-thresholding;
//! * its factored form,
//!   `min_{L,Q} ½‖P_Ω(Y − LQ')‖_F² + (λ/2)(‖L‖_F² + ‖Q‖_F²)`, by exact
//!   alternating ridge solves;
//! * the certificate that turns a stationary factored point into a global
//!   minimizer of the convex problem, and the matching primal/dual residuals.
//!
//! Everything here is dense and meant for desk-scale verification only.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::data::MaskedVector;
use crate::error::{config_err, Error, Result};
use crate::linalg;
use crate::synth::{normal, rng_from_seed};

/// Largest `rows × cols` accepted by the dense oracles.
pub const MAX_ENTRIES: usize = 1_000_000;

/// Observed batch `P_Ω(Y)` with its mask and regularization weight.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchProblem {
    y: DMatrix<f64>,
    mask: DMatrix<bool>,
    lambda: f64,
    rho: usize,
}

impl BatchProblem {
    /// Unobserved entries of `y` are ignored (stored as zero).
    pub fn new(y: DMatrix<f64>, mask: DMatrix<bool>, lambda: f64, rho: usize) -> Result<Self> {
        if y.shape() != mask.shape() {
            return Err(Error::DimensionMismatch { expected: y.len(), found: mask.len() });
        }
        if y.len() > MAX_ENTRIES {
            return Err(Error::TooLarge { rows: y.nrows(), cols: y.ncols(), limit: MAX_ENTRIES });
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(config_err("lambda must be finite and nonnegative"));
        }
        let mut y = y;
        for (v, &m) in y.iter_mut().zip(mask.iter()) {
            if !m {
                *v = 0.0;
            }
        }
        Ok(Self { y, mask, lambda, rho })
    }

    /// Stack a stream window as the columns of a `P×t` batch.
    pub fn from_stream(history: &[MaskedVector], lambda: f64, rho: usize) -> Result<Self> {
        let t = history.len();
        if t == 0 {
            return Err(Error::EmptyHistory);
        }
        let p = history[0].ambient_dim();
        if p * t > MAX_ENTRIES {
            return Err(Error::TooLarge { rows: p, cols: t, limit: MAX_ENTRIES });
        }
        let mut y = DMatrix::zeros(p, t);
        let mut mask = DMatrix::from_element(p, t, false);
        for (j, obs) in history.iter().enumerate() {
            if obs.ambient_dim() != p {
                return Err(Error::DimensionMismatch { expected: p, found: obs.ambient_dim() });
            }
            for (i, v) in obs.iter() {
                y[(i, j)] = v;
                mask[(i, j)] = true;
            }
        }
        Self::new(y, mask, lambda, rho)
    }

    pub fn observed(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.y.shape()
    }

    /// `P_Ω(Y − X)`.
    pub fn residual(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut r = &self.y - x;
        for (v, &m) in r.iter_mut().zip(self.mask.iter()) {
            if !m {
                *v = 0.0;
            }
        }
        r
    }

    /// `½‖P_Ω(Y − X)‖_F² + λ‖X‖_*`.
    pub fn p1_objective(&self, x: &DMatrix<f64>) -> f64 {
        0.5 * self.residual(x).norm_squared() + self.lambda * nuclear_norm(x)
    }

    /// `½‖P_Ω(Y − LQ')‖_F² + (λ/2)(‖L‖_F² + ‖Q‖_F²)`.
    pub fn p2_objective(&self, l: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
        let x = l * q.transpose();
        0.5 * self.residual(&x).norm_squared() + 0.5 * self.lambda * (l.norm_squared() + q.norm_squared())
    }
}

/// Sum of singular values.
pub fn nuclear_norm(x: &DMatrix<f64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.clone().singular_values().sum()
}

/// Largest singular value (spectral norm).
pub fn spectral_norm(x: &DMatrix<f64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.clone().singular_values().max()
}

/// Thin SVD `X = U diag(s) V'` with singular values in decreasing order.
pub fn thin_svd(x: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let mut svd = x.clone().svd(true, true);
    svd.sort_by_singular_values();
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V'");
    (u, svd.singular_values, v_t.transpose())
}

/// Singular-value soft-thresholding: `U diag((s − τ)₊) V'`, the proximal
/// operator of `τ‖·‖_*`.
pub fn singular_value_threshold(x: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let (u, s, v) = thin_svd(x);
    let keep = s.iter().take_while(|&&v| v > tau).count();
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for k in 0..keep {
        let w = s[k] - tau;
        out += w * u.column(k) * v.column(k).transpose();
    }
    out
}

/// Balanced factors of `X`: `L = U Σ^{1/2}`, `Q = V Σ^{1/2}`, padded with
/// zero columns (or truncated) to width `rho`. They attain
/// `½(‖L‖_F² + ‖Q‖_F²) = ‖X‖_*` whenever `rho ≥ rank(X)`.
pub fn balanced_factors(x: &DMatrix<f64>, rho: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (u, s, v) = thin_svd(x);
    let mut l = DMatrix::zeros(x.nrows(), rho);
    let mut q = DMatrix::zeros(x.ncols(), rho);
    for k in 0..rho.min(s.len()) {
        let w = libm::sqrt(s[k]);
        l.set_column(k, &(u.column(k) * w));
        q.set_column(k, &(v.column(k) * w));
    }
    (l, q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct P1Solution {
    pub x: DMatrix<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every iteration.
    pub trace: Vec<f64>,
}

/// Proximal gradient with unit step from `X = 0`. The smooth part has a
/// 1-Lipschitz gradient, so every iterate decreases the objective.
pub fn solve_p1(prob: &BatchProblem, tol: f64, max_iter: usize) -> Result<P1Solution> {
    let (p, t) = prob.shape();
    solve_p1_from(prob, DMatrix::zeros(p, t), tol, max_iter)
}

/// As [`solve_p1`] from a given starting point.
pub fn solve_p1_from(prob: &BatchProblem, x0: DMatrix<f64>, tol: f64, max_iter: usize) -> Result<P1Solution> {
    if !(prob.lambda > 0.0) {
        return Err(config_err("the nuclear-norm solver needs lambda > 0"));
    }
    if !(tol > 0.0) {
        return Err(config_err("tolerance must be positive"));
    }
    if x0.shape() != prob.shape() {
        return Err(Error::DimensionMismatch { expected: prob.y.len(), found: x0.len() });
    }
    let mut x = x0;
    let mut obj = prob.p1_objective(&x);
    let mut trace = Vec::new();
    for it in 1..=max_iter {
        let step = &x + prob.residual(&x);
        let next = singular_value_threshold(&step, prob.lambda);
        let next_obj = prob.p1_objective(&next);
        trace.push(next_obj);
        let change = (obj - next_obj).abs();
        x = next;
        let done = change <= tol * obj.abs().max(f64::MIN_POSITIVE);
        obj = next_obj;
        if done {
            return Ok(P1Solution { x, objective: obj, iterations: it, trace });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, last_objective: obj })
}

#[derive(Debug, Clone, PartialEq)]
pub struct P2Solution {
    pub l: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

/// Random `P×ρ` and `t×ρ` starting factors with `N(0, 1/P)` entries.
pub fn random_factors(rows: usize, cols: usize, rho: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = rng_from_seed(seed);
    let sd = 1.0 / libm::sqrt(rows as f64);
    let l = DMatrix::from_fn(rows, rho, |_, _| sd * normal(&mut rng));
    let q = DMatrix::from_fn(cols, rho, |_, _| sd * normal(&mut rng));
    (l, q)
}

/// Exact block minimization over `Q` then `L`, starting from `(l0, q0)`.
/// Each block is a set of independent ridge regressions, so the objective
/// never increases.
pub fn solve_p2(
    prob: &BatchProblem,
    l0: DMatrix<f64>,
    q0: DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<P2Solution> {
    let (p, t) = prob.shape();
    let rho = l0.ncols();
    if rho == 0 || q0.ncols() != rho {
        return Err(config_err("factor width must be positive and shared by L and Q"));
    }
    if l0.nrows() != p || q0.nrows() != t {
        return Err(Error::DimensionMismatch { expected: p + t, found: l0.nrows() + q0.nrows() });
    }
    if !(tol > 0.0) {
        return Err(config_err("tolerance must be positive"));
    }
    let (mut l, mut q) = (l0, q0);
    let mut obj = prob.p2_objective(&l, &q);
    let mut trace = Vec::new();
    let y_t = prob.y.transpose();
    let mask_t = prob.mask.transpose();
    for it in 1..=max_iter {
        q = ridge_rows(&prob.y, &prob.mask, &l, prob.lambda)?;
        l = ridge_rows(&y_t, &mask_t, &q, prob.lambda)?;
        let next = prob.p2_objective(&l, &q);
        trace.push(next);
        let done = (obj - next).abs() <= tol * obj.abs().max(f64::MIN_POSITIVE);
        obj = next;
        if done {
            return Ok(P2Solution { l, q, objective: obj, iterations: it, trace });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, last_objective: obj })
}

/// For each column `j` of `Y` (`n×m`), solve
/// `min_z ½‖P_{Ω_j}(y_j − F z)‖² + (λ/2)‖z‖²` with `F` the `n×ρ` factor;
/// returns the `m×ρ` matrix of solutions.
fn ridge_rows(y: &DMatrix<f64>, mask: &DMatrix<bool>, f: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let (n, m) = y.shape();
    let rho = f.ncols();
    let f_rows = linalg::to_row_major(f);
    let mut out = DMatrix::zeros(m, rho);
    let mut gram = vec![0.0; rho * rho];
    let mut rhs = vec![0.0; rho];
    for j in 0..m {
        gram.iter_mut().for_each(|v| *v = 0.0);
        rhs.iter_mut().for_each(|v| *v = 0.0);
        let mut any = false;
        for i in 0..n {
            if !mask[(i, j)] {
                continue;
            }
            any = true;
            let fi = &f_rows[i * rho..(i + 1) * rho];
            for a in 0..rho {
                for b in 0..=a {
                    gram[a * rho + b] += fi[a] * fi[b];
                }
            }
            linalg::axpy(y[(i, j)], fi, &mut rhs);
        }
        if rhs.iter().all(|&v| v == 0.0) && (any || lambda > 0.0) {
            continue;
        }
        for a in 0..rho {
            gram[a * rho + a] += lambda;
        }
        linalg::spd_solve(&mut gram, rho, &mut rhs)?;
        for a in 0..rho {
            out[(j, a)] = rhs[a];
        }
    }
    Ok(out)
}

/// Outcome of [`certify_global`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Certificate {
    pub certified: bool,
    /// `σ_max[P_Ω(Y − LQ')] / λ`; at most one at a certified point.
    pub sigma_ratio: f64,
    /// Larger of the two relative stationarity residuals of the factored
    /// problem (see [`stationarity_residual`]).
    pub stationarity_residual: f64,
}

/// Relative stationarity of `(L, Q)` for the factored problem:
/// `max(‖P_Ω(R)Q − λL‖_F / (‖P_Ω(R)Q‖_F + λ‖L‖_F),
///      ‖P_Ω(R)'L − λQ‖_F / (‖P_Ω(R)'L‖_F + λ‖Q‖_F))`
/// with `R = Y − LQ'`; a vanishing numerator counts as zero.
pub fn stationarity_residual(l: &DMatrix<f64>, q: &DMatrix<f64>, prob: &BatchProblem) -> f64 {
    let r = prob.residual(&(l * q.transpose()));
    let rel = |a: DMatrix<f64>, b: DMatrix<f64>| {
        let num = (&a - &b).norm();
        if num == 0.0 { 0.0 } else { num / (a.norm() + b.norm()) }
    };
    let gl = rel(&r * q, l * prob.lambda);
    let gq = rel(r.transpose() * l, q * prob.lambda);
    gl.max(gq)
}

/// Certify `LQ'` as the global minimizer of the nuclear-norm problem: the
/// masked residual must satisfy `σ_max ≤ λ(1 + tol)` and `(L, Q)` must be
/// stationary for the factored problem to relative tolerance `tol`.
pub fn certify_global(l: &DMatrix<f64>, q: &DMatrix<f64>, prob: &BatchProblem, tol: f64) -> Certificate {
    let r = prob.residual(&(l * q.transpose()));
    let smax = spectral_norm(&r);
    let sigma_ratio = if prob.lambda > 0.0 {
        smax / prob.lambda
    } else if smax == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let stationarity = stationarity_residual(l, q, prob);
    Certificate {
        certified: sigma_ratio <= 1.0 + tol && stationarity <= tol,
        sigma_ratio,
        stationarity_residual: stationarity,
    }
}

/// Primal/dual residuals of the semidefinite reformulation of the
/// nuclear-norm problem at the candidate built from `(L, Q)`:
/// `W₁ = LL'`, `W₂ = QQ'`, `X = LQ'`, dual blocks `M₁ = (λ/2t)I`,
/// `M₃ = (λ/2t)I`, `M₂ = −(1/2t)P_Ω(Y − LQ')`. Here `t` is the number of
/// columns of the batch.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KktReport {
    /// `|⟨M, W⟩|`; the dual blocks carry the `1/2t` normalization.
    pub slackness: f64,
    /// `λ_min(M) = (λ − σ_max[P_Ω(Y − LQ')]) / 2t`; dual feasibility needs
    /// this to be nonnegative.
    pub dual_min_eig: f64,
    /// `‖∇_X‖_F = ‖−(1/t)P_Ω(Y − X) − M₂ − M₂'‖_F`.
    pub grad_x: f64,
    /// `‖∇_{W₁}‖_F = ‖(λ/2t)I − M₁‖_F` (zero by construction).
    pub grad_w1: f64,
    /// `‖∇_{W₂}‖_F = ‖(λ/2t)I − M₃‖_F` (zero by construction).
    pub grad_w2: f64,
    /// `(1/t)‖P_Ω(Y − LQ')Q − λL‖_F`, normalized by `t`.
    pub grad_l: f64,
    /// `(1/t)‖L'P_Ω(Y − LQ') − λQ'‖_F`, normalized by `t`.
    pub grad_q: f64,
}

impl KktReport {
    /// Largest residual, with dual infeasibility counted as `max(0, −λ_min)`.
    pub fn max_residual(&self) -> f64 {
        [self.slackness, (-self.dual_min_eig).max(0.0), self.grad_x, self.grad_w1, self.grad_w2, self.grad_l, self.grad_q]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn kkt_check_p1(l: &DMatrix<f64>, q: &DMatrix<f64>, prob: &BatchProblem) -> KktReport {
    let t = prob.shape().1 as f64;
    let lam = prob.lambda;
    let x = l * q.transpose();
    let r = prob.residual(&x);
    let m2 = &r * (-1.0 / (2.0 * t));
    let slack = lam / (2.0 * t) * (l.norm_squared() + q.norm_squared()) + 2.0 * m2.dot(&x);
    let grad_x = (&r * (-1.0 / t) - &m2 * 2.0).norm();
    KktReport {
        slackness: slack.abs(),
        dual_min_eig: (lam - spectral_norm(&r)) / (2.0 * t),
        grad_x,
        grad_w1: 0.0,
        grad_w2: 0.0,
        grad_l: (&r * q - l * lam).norm() / t,
        grad_q: (r.transpose() * l - q * lam).norm() / t,
    }
}

/// [`kkt_check_p1`] at the balanced factorization of `X`.
pub fn kkt_check_from_x(x: &DMatrix<f64>, prob: &BatchProblem) -> KktReport {
    let rank = x.nrows().min(x.ncols());
    let (l, q) = balanced_factors(x, rank);
    kkt_check_p1(&l, &q, prob)
}
