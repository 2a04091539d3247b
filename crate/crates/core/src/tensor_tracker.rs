//! Online PARAFAC decomposition and imputation of a stream of incomplete
//! `M×N` slices `X_t ≈ A diag(γ_t) B'`.
//!
//! Per slice the weights `γ_t` are a ridge fit on the observed cells, then
//! `A` and `B` take one gradient step on
//! `f̄_t(A, B) = ½‖Ω_t ⊙ (Y_t − A diag(γ_t) B')‖_F² + (λ/2)‖γ_t‖²
//!              + (λ/2t)(‖A‖_F² + ‖B‖_F²)`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::data::MaskedSlice;
use crate::error::{config_err, Error, Result};
use crate::linalg::{self, axpy};
use crate::synth::{normal, rng_from_seed};

/// Regularization weight rule.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum TensorLambda {
    Fixed { value: f64 },
    /// `λ = √(2MNπ)·σ`.
    Heuristic { pi: f64, sigma: f64 },
}

impl TensorLambda {
    pub fn value(&self, rows: usize, cols: usize) -> f64 {
        match *self {
            TensorLambda::Fixed { value } => value,
            TensorLambda::Heuristic { pi, sigma } => libm::sqrt(2.0 * (rows * cols) as f64 * pi) * sigma,
        }
    }
}

/// Step size `(μ̄[t])⁻¹` schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum StepPolicy {
    /// `(μ̄[t])⁻¹ = step` for all `t`.
    Constant { step: f64 },
    /// `μ̄[t] = mu0 · t`.
    LinearGrowth { mu0: f64 },
}

impl StepPolicy {
    pub fn mu(&self, t: usize) -> f64 {
        match *self {
            StepPolicy::Constant { step } => 1.0 / step,
            StepPolicy::LinearGrowth { mu0 } => mu0 * t as f64,
        }
    }
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::Constant { step: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TensorTrackerConfig {
    pub rows: usize,
    pub cols: usize,
    /// Rank bound `R̂`.
    pub rank: usize,
    pub lambda: TensorLambda,
    pub step: StepPolicy,
    /// Keep every slice in memory so the third factor can be recomputed
    /// with the final `A`, `B`.
    pub retain_slices: bool,
    pub seed: u64,
}

impl TensorTrackerConfig {
    pub fn new(rows: usize, cols: usize, rank: usize, lambda: TensorLambda, seed: u64) -> Self {
        Self { rows, cols, rank, lambda, step: StepPolicy::default(), retain_slices: false, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.rank == 0 {
            return Err(config_err("slice dimensions and rank must be positive"));
        }
        match self.lambda {
            TensorLambda::Fixed { value } if !(value >= 0.0) || !value.is_finite() => {
                return Err(config_err("lambda must be finite and nonnegative"));
            }
            TensorLambda::Heuristic { pi, sigma } if !(pi > 0.0 && pi <= 1.0) || !(sigma >= 0.0) => {
                return Err(config_err("heuristic lambda needs pi in (0, 1] and sigma >= 0"));
            }
            _ => {}
        }
        match self.step {
            StepPolicy::Constant { step } if !(step >= 0.0) || !step.is_finite() => {
                Err(config_err("step size must be finite and nonnegative"))
            }
            StepPolicy::LinearGrowth { mu0 } if !(mu0 > 0.0) || !mu0.is_finite() => {
                Err(config_err("mu0 must be positive"))
            }
            _ => Ok(()),
        }
    }
}

fn check_dims(a: &DMatrix<f64>, b: &DMatrix<f64>, slice: &MaskedSlice) -> Result<()> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch { expected: a.ncols(), found: b.ncols() });
    }
    let (m, n) = slice.dims();
    if (m, n) != (a.nrows(), b.nrows()) {
        return Err(Error::DimensionMismatch { expected: a.nrows() * b.nrows(), found: m * n });
    }
    Ok(())
}

/// `γ = [λI + Σ_Ω (α_m⊙β_n)(α_m⊙β_n)']⁻¹ Σ_Ω Y(m,n)(α_m⊙β_n)`.
pub fn gamma_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, slice: &MaskedSlice, lambda: f64) -> Result<DVector<f64>> {
    check_dims(a, b, slice)?;
    let r = a.ncols();
    let (ar, br) = (linalg::to_row_major(a), linalg::to_row_major(b));
    let mut gram = vec![0.0; r * r];
    let mut h = vec![0.0; r];
    gamma_rows(&ar, &br, r, slice, lambda, &mut gram, &mut h).map(DVector::from_vec)
}

fn gamma_rows(
    a: &[f64],
    b: &[f64],
    r: usize,
    slice: &MaskedSlice,
    lambda: f64,
    gram: &mut [f64],
    h: &mut [f64],
) -> Result<Vec<f64>> {
    if slice.is_empty() && lambda > 0.0 {
        return Ok(vec![0.0; r]);
    }
    gram.iter_mut().for_each(|v| *v = 0.0);
    let mut rhs = vec![0.0; r];
    for &(m, n, y) in slice.entries() {
        let (am, bn) = (&a[m * r..(m + 1) * r], &b[n * r..(n + 1) * r]);
        for i in 0..r {
            h[i] = am[i] * bn[i];
        }
        for i in 0..r {
            for j in 0..=i {
                gram[i * r + j] += h[i] * h[j];
            }
        }
        axpy(y, h, &mut rhs);
    }
    for i in 0..r {
        gram[i * r + i] += lambda;
    }
    linalg::spd_solve(gram, r, &mut rhs)?;
    Ok(rhs)
}

/// `X̂ = A diag(γ) B'`.
pub fn impute(a: &DMatrix<f64>, b: &DMatrix<f64>, gamma: &[f64]) -> DMatrix<f64> {
    let mut ag = a.clone();
    for (j, &g) in gamma.iter().enumerate() {
        ag.column_mut(j).scale_mut(g);
    }
    ag * b.transpose()
}

/// `Ω ⊙ (Y − A diag(γ) B')` as a dense matrix.
fn masked_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, gamma: &[f64], slice: &MaskedSlice) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(a.nrows(), b.nrows());
    for &(m, n, y) in slice.entries() {
        let pred: f64 = (0..a.ncols()).map(|k| a[(m, k)] * gamma[k] * b[(n, k)]).sum();
        e[(m, n)] = y - pred;
    }
    e
}

/// `ḡ_t(A, B, γ) = ½‖Ω ⊙ (Y − A diag(γ) B')‖_F² + (λ/2)‖γ‖²`.
pub fn g_bar(a: &DMatrix<f64>, b: &DMatrix<f64>, gamma: &[f64], slice: &MaskedSlice, lambda: f64) -> f64 {
    0.5 * masked_residual(a, b, gamma, slice).norm_squared() + 0.5 * lambda * linalg::norm_sq(gamma)
}

/// `f̄_t(A, B) = ḡ_t(A, B, γ) + (λ/2t)(‖A‖_F² + ‖B‖_F²)`.
pub fn loss_f_bar(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    gamma: &[f64],
    slice: &MaskedSlice,
    lambda: f64,
    t: usize,
) -> f64 {
    g_bar(a, b, gamma, slice, lambda) + lambda / (2.0 * t as f64) * (a.norm_squared() + b.norm_squared())
}

/// `∇_A f̄_t = −[Ω ⊙ (Y − A diag(γ) B')] B diag(γ) + (λ/t)A`.
pub fn grad_a(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    gamma: &[f64],
    slice: &MaskedSlice,
    lambda: f64,
    t: usize,
) -> DMatrix<f64> {
    let e = masked_residual(a, b, gamma, slice);
    let mut bg = b.clone();
    for (j, &g) in gamma.iter().enumerate() {
        bg.column_mut(j).scale_mut(g);
    }
    a * (lambda / t as f64) - e * bg
}

/// `∇_B f̄_t = −[Ω ⊙ (Y − A diag(γ) B')]' A diag(γ) + (λ/t)B`.
pub fn grad_b(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    gamma: &[f64],
    slice: &MaskedSlice,
    lambda: f64,
    t: usize,
) -> DMatrix<f64> {
    let e = masked_residual(a, b, gamma, slice);
    let mut ag = a.clone();
    for (j, &g) in gamma.iter().enumerate() {
        ag.column_mut(j).scale_mut(g);
    }
    b * (lambda / t as f64) - e.transpose() * ag
}

/// `Q̄_{μ,t}((A₁,B₁), (A₂,B₂)) = f̄_t(A₂,B₂) + ⟨(A₁,B₁) − (A₂,B₂), ∇f̄_t(A₂,B₂)⟩
///  + (μ/2)‖(A₁,B₁) − (A₂,B₂)‖²`.
#[allow(clippy::too_many_arguments)]
pub fn majorizer_bar(
    a1: &DMatrix<f64>,
    b1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    b2: &DMatrix<f64>,
    gamma: &[f64],
    slice: &MaskedSlice,
    lambda: f64,
    t: usize,
    mu: f64,
) -> f64 {
    let (da, db) = (a1 - a2, b1 - b2);
    loss_f_bar(a2, b2, gamma, slice, lambda, t)
        + da.dot(&grad_a(a2, b2, gamma, slice, lambda, t))
        + db.dot(&grad_b(a2, b2, gamma, slice, lambda, t))
        + 0.5 * mu * (da.norm_squared() + db.norm_squared())
}

/// Third factor with frozen `A`, `B`: row `t` is `gamma_solve` on slice `t`.
pub fn finalize_c<'a, I>(a: &DMatrix<f64>, b: &DMatrix<f64>, slices: I, lambda: f64) -> Result<DMatrix<f64>>
where
    I: IntoIterator<Item = &'a MaskedSlice>,
{
    let r = a.ncols();
    let mut rows = Vec::new();
    for slice in slices {
        rows.extend(gamma_solve(a, b, slice, lambda)?.iter().copied());
    }
    Ok(DMatrix::from_row_slice(rows.len() / r, r, &rows))
}

/// Average cost `C̄_t(A, B) = (1/t) Σ_τ min_γ ḡ_τ(A, B, γ) + (λ/2t)(‖A‖² + ‖B‖²)`.
pub fn average_cost(a: &DMatrix<f64>, b: &DMatrix<f64>, history: &[MaskedSlice], lambda: f64) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let mut total = 0.0;
    for slice in history {
        let g = gamma_solve(a, b, slice, lambda)?;
        total += g_bar(a, b, g.as_slice(), slice, lambda);
    }
    let t = history.len() as f64;
    Ok(total / t + lambda / (2.0 * t) * (a.norm_squared() + b.norm_squared()))
}

/// `(∇_A C̄_t, ∇_B C̄_t)`, the weights `γ_τ` being refit to `(A, B)`.
pub fn cost_gradient(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    history: &[MaskedSlice],
    lambda: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let r = a.ncols();
    let (ar, br) = (linalg::to_row_major(a), linalg::to_row_major(b));
    let (mut gram, mut h) = (vec![0.0; r * r], vec![0.0; r]);
    let mut ga = vec![0.0; ar.len()];
    let mut gb = vec![0.0; br.len()];
    for slice in history {
        check_dims(a, b, slice)?;
        let gamma = gamma_rows(&ar, &br, r, slice, lambda, &mut gram, &mut h)?;
        for &(m, n, y) in slice.entries() {
            let (am, bn) = (&ar[m * r..(m + 1) * r], &br[n * r..(n + 1) * r]);
            let e = y - (0..r).map(|k| am[k] * gamma[k] * bn[k]).sum::<f64>();
            for k in 0..r {
                ga[m * r + k] -= e * bn[k] * gamma[k];
                gb[n * r + k] -= e * am[k] * gamma[k];
            }
        }
    }
    let t = history.len() as f64;
    for (g, v) in ga.iter_mut().zip(&ar) {
        *g = (*g + lambda * v) / t;
    }
    for (g, v) in gb.iter_mut().zip(&br) {
        *g = (*g + lambda * v) / t;
    }
    Ok((linalg::to_dmatrix(&ga, a.nrows(), r), linalg::to_dmatrix(&gb, b.nrows(), r)))
}

/// Degrees-of-freedom condition `(1 − p_m)MNT ≥ R̂(M + N + T)` for a miss
/// fraction `p_m`.
pub fn dof_satisfied(rows: usize, cols: usize, slices: usize, rank: usize, miss_fraction: f64) -> bool {
    let observed = (1.0 - miss_fraction) * (rows * cols * slices) as f64;
    observed >= (rank * (rows + cols + slices)) as f64
}

/// Output of one tracking step.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorStep {
    pub gamma: Vec<f64>,
    /// `A[t] diag(γ[t]) B'[t]` with the updated factors.
    pub x_hat: DMatrix<f64>,
}

/// State of the online tensor tracker.
#[derive(Debug, Clone)]
pub struct TensorTracker {
    cfg: TensorTrackerConfig,
    lambda: f64,
    /// Row-major `M×R̂` and `N×R̂`.
    a: Vec<f64>,
    b: Vec<f64>,
    next_a: Vec<f64>,
    next_b: Vec<f64>,
    t: usize,
    c_rows: Vec<Vec<f64>>,
    retained: Vec<MaskedSlice>,
    gram: Vec<f64>,
    h: Vec<f64>,
}

impl TensorTracker {
    /// Factors drawn i.i.d. `N(0, 1/R̂)` from `cfg.seed`, `A` then `B`,
    /// row-major.
    pub fn new(cfg: TensorTrackerConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng_from_seed(cfg.seed);
        let sd = 1.0 / libm::sqrt(cfg.rank as f64);
        let a: Vec<f64> = (0..cfg.rows * cfg.rank).map(|_| sd * normal(&mut rng)).collect();
        let b: Vec<f64> = (0..cfg.cols * cfg.rank).map(|_| sd * normal(&mut rng)).collect();
        Ok(Self::build(cfg, a, b))
    }

    pub fn with_initial(cfg: TensorTrackerConfig, a0: &DMatrix<f64>, b0: &DMatrix<f64>) -> Result<Self> {
        cfg.validate()?;
        if a0.shape() != (cfg.rows, cfg.rank) || b0.shape() != (cfg.cols, cfg.rank) {
            return Err(Error::DimensionMismatch {
                expected: (cfg.rows + cfg.cols) * cfg.rank,
                found: a0.len() + b0.len(),
            });
        }
        Ok(Self::build(cfg, linalg::to_row_major(a0), linalg::to_row_major(b0)))
    }

    fn build(cfg: TensorTrackerConfig, a: Vec<f64>, b: Vec<f64>) -> Self {
        let r = cfg.rank;
        Self {
            lambda: cfg.lambda.value(cfg.rows, cfg.cols),
            next_a: a.clone(),
            next_b: b.clone(),
            a,
            b,
            t: 0,
            c_rows: Vec::new(),
            retained: Vec::new(),
            gram: vec![0.0; r * r],
            h: vec![0.0; r],
            cfg,
        }
    }

    pub fn config(&self) -> &TensorTrackerConfig {
        &self.cfg
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn factors(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let r = self.cfg.rank;
        (linalg::to_dmatrix(&self.a, self.cfg.rows, r), linalg::to_dmatrix(&self.b, self.cfg.cols, r))
    }

    /// `γ[τ]` for every processed slice.
    pub fn c_rows(&self) -> &[Vec<f64>] {
        &self.c_rows
    }

    pub fn retained(&self) -> &[MaskedSlice] {
        &self.retained
    }

    /// Third factor recomputed from the retained slices with the current
    /// `A`, `B`.
    pub fn finalize_c(&self) -> Result<DMatrix<f64>> {
        if !self.cfg.retain_slices {
            return Err(Error::NotRetained);
        }
        let (a, b) = self.factors();
        finalize_c(&a, &b, &self.retained, self.lambda)
    }

    pub fn step(&mut self, slice: &MaskedSlice) -> Result<TensorStep> {
        let (rows, cols, r) = (self.cfg.rows, self.cfg.cols, self.cfg.rank);
        if slice.dims() != (rows, cols) {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: slice.dims().0 * slice.dims().1 });
        }
        let t = self.t + 1;
        let lam = self.lambda;
        let gamma = gamma_rows(&self.a, &self.b, r, slice, lam, &mut self.gram, &mut self.h)?;

        let mu = self.cfg.step.mu(t);
        let (shrink, w) = if mu.is_finite() { (1.0 - lam / (t as f64 * mu), 1.0 / mu) } else { (1.0, 0.0) };
        for (n, o) in self.next_a.iter_mut().zip(&self.a) {
            *n = shrink * o;
        }
        for (n, o) in self.next_b.iter_mut().zip(&self.b) {
            *n = shrink * o;
        }
        for &(m, n, y) in slice.entries() {
            let (am, bn) = (&self.a[m * r..(m + 1) * r], &self.b[n * r..(n + 1) * r]);
            let e = y - (0..r).map(|k| am[k] * gamma[k] * bn[k]).sum::<f64>();
            let we = w * e;
            let na = &mut self.next_a[m * r..(m + 1) * r];
            for k in 0..r {
                na[k] += we * bn[k] * gamma[k];
            }
            let nb = &mut self.next_b[n * r..(n + 1) * r];
            for k in 0..r {
                nb[k] += we * am[k] * gamma[k];
            }
        }
        core::mem::swap(&mut self.a, &mut self.next_a);
        core::mem::swap(&mut self.b, &mut self.next_b);
        self.t = t;

        let (a, b) = self.factors();
        let x_hat = impute(&a, &b, &gamma);
        self.c_rows.push(gamma.clone());
        if self.cfg.retain_slices {
            self.retained.push(slice.clone());
        }
        Ok(TensorStep { gamma, x_hat })
    }
}
