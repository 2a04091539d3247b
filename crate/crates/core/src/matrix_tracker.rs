//! Second-order subspace tracker: alternating exponentially-weighted least
//! squares over the projection coefficients `q[t]` and the subspace rows
//! `l_p[t]`, with a recursive least-squares fast path for infinite memory.
//!
//! Each step solves one `ρ×ρ` ridge system for `q[t]` and then refreshes the
//! rows of `L`. The rows decouple: row `p` only reads its own accumulators.
//!
//! * Direct path: `G_p ← θG_p + ω_p q q'`, `s_p ← θs_p + ω_p y_p q`,
//!   `l_p = (G_p + λ_t I)⁻¹ s_p` via a Cholesky solve. `O(Pρ³)` per step.
//! * RLS path (`θ = 1`, fixed `λ`): keeps `M_p = (G_p + λI)⁻¹` and applies a
//!   Sherman–Morrison update to observed rows only. `O(|ω_t|ρ²)` per step.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::data::MaskedVector;
use crate::error::{config_err, Error, Result};
use crate::linalg::{self, axpy, dot};
use crate::synth::{normal, rng_from_seed};

/// Rule producing the regularization weight `λ_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum LambdaPolicy {
    Fixed { value: f64 },
    /// `λ_t = (√P + √t_e)·√π·σ`, recomputed every step.
    Heuristic { pi: f64, sigma: f64 },
}

impl LambdaPolicy {
    pub fn fixed(value: f64) -> Self {
        LambdaPolicy::Fixed { value }
    }

    pub fn value(&self, dim: usize, effective_window: f64) -> f64 {
        match *self {
            LambdaPolicy::Fixed { value } => value,
            LambdaPolicy::Heuristic { pi, sigma } => lambda_heuristic(dim, effective_window, pi, sigma),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            LambdaPolicy::Fixed { value } if !(value >= 0.0) || !value.is_finite() => {
                Err(config_err("lambda must be finite and nonnegative"))
            }
            LambdaPolicy::Heuristic { pi, sigma } if !(pi > 0.0 && pi <= 1.0) || !(sigma > 0.0) => {
                Err(config_err("heuristic lambda needs pi in (0, 1] and sigma > 0"))
            }
            _ => Ok(()),
        }
    }
}

/// Row-update strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RowSolver {
    /// RLS when `θ = 1` and `λ` is fixed, direct otherwise.
    #[default]
    Auto,
    Direct,
    Rls,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatrixTrackerConfig {
    /// Ambient dimension `P`.
    pub dim: usize,
    /// Subspace width `ρ`.
    pub rho: usize,
    /// Forgetting factor `θ ∈ (0, 1]`.
    pub theta: f64,
    pub lambda: LambdaPolicy,
    #[cfg_attr(feature = "serde", serde(default))]
    pub solver: RowSolver,
    /// Seed for the random `L[0]`.
    pub seed: u64,
}

impl MatrixTrackerConfig {
    pub fn new(dim: usize, rho: usize, theta: f64, lambda: LambdaPolicy, seed: u64) -> Self {
        Self { dim, rho, theta, lambda, solver: RowSolver::Auto, seed }
    }

    pub fn with_solver(mut self, solver: RowSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.rho == 0 {
            return Err(config_err("dim and rho must be positive"));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(config_err("theta must lie in (0, 1]"));
        }
        self.lambda.validate()?;
        if self.solver == RowSolver::Rls && !self.rls_compatible() {
            return Err(Error::Unsupported(
                "the RLS path needs theta = 1 and a fixed lambda; with forgetting the \
                 regularized Gram matrix is not a rank-one update of its predecessor"
                    .into(),
            ));
        }
        Ok(())
    }

    fn rls_compatible(&self) -> bool {
        self.theta == 1.0 && matches!(self.lambda, LambdaPolicy::Fixed { value } if value > 0.0)
    }

    fn uses_rls(&self) -> bool {
        match self.solver {
            RowSolver::Auto => self.rls_compatible(),
            RowSolver::Direct => false,
            RowSolver::Rls => true,
        }
    }
}

/// `λ_t = (√P + √t_e)·√π·σ`.
pub fn lambda_heuristic(dim: usize, effective_window: f64, pi: f64, sigma: f64) -> f64 {
    (libm::sqrt(dim as f64) + libm::sqrt(effective_window)) * libm::sqrt(pi) * sigma
}

#[derive(Debug, Clone)]
enum Accumulators {
    /// `G_p` (row-major `ρ×ρ` blocks) and `s_p`.
    Direct { g: Vec<f64>, s: Vec<f64> },
    /// `M_p = (G_p + λI)⁻¹` and `s_p`.
    Rls { m: Vec<f64>, s: Vec<f64> },
}

/// Output of one tracking step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// Projection coefficients `q[t]`, computed from `L[t-1]`.
    pub q: Vec<f64>,
    /// Estimate `x̂_t = L[t] q[t]`.
    pub x_hat: Vec<f64>,
}

/// Copy of the quantities needed for read-only evaluation of a tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub subspace: DMatrix<f64>,
    pub t: usize,
    pub lambda: f64,
}

/// State of the second-order tracker.
#[derive(Debug, Clone)]
pub struct MatrixTracker {
    cfg: MatrixTrackerConfig,
    /// `L[t]`, row-major `P×ρ`.
    l: Vec<f64>,
    acc: Accumulators,
    lambda: f64,
    t: usize,
    t_eff: f64,
    gram: Vec<f64>,
    rhs: Vec<f64>,
}

impl MatrixTracker {
    /// Tracker with `L[0]` drawn i.i.d. `N(0, 1/P)` from `cfg.seed`.
    pub fn new(cfg: MatrixTrackerConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng_from_seed(cfg.seed);
        let sd = 1.0 / libm::sqrt(cfg.dim as f64);
        let l0: Vec<f64> = (0..cfg.dim * cfg.rho).map(|_| sd * normal(&mut rng)).collect();
        Self::build(cfg, l0)
    }

    /// Tracker starting from a given `L[0]` (`P×ρ`).
    pub fn with_initial(cfg: MatrixTrackerConfig, l0: &DMatrix<f64>) -> Result<Self> {
        cfg.validate()?;
        if l0.shape() != (cfg.dim, cfg.rho) {
            return Err(Error::DimensionMismatch { expected: cfg.dim * cfg.rho, found: l0.len() });
        }
        Self::build(cfg, linalg::to_row_major(l0))
    }

    fn build(cfg: MatrixTrackerConfig, l: Vec<f64>) -> Result<Self> {
        let (p, r) = (cfg.dim, cfg.rho);
        let lambda = cfg.lambda.value(p, 0.0);
        let acc = if cfg.uses_rls() {
            let mut m = vec![0.0; p * r * r];
            for block in m.chunks_exact_mut(r * r) {
                for i in 0..r {
                    block[i * r + i] = 1.0 / lambda;
                }
            }
            Accumulators::Rls { m, s: vec![0.0; p * r] }
        } else {
            Accumulators::Direct { g: vec![0.0; p * r * r], s: vec![0.0; p * r] }
        };
        Ok(Self { l, acc, lambda, t: 0, t_eff: 0.0, gram: vec![0.0; r * r], rhs: vec![0.0; r], cfg })
    }

    pub fn config(&self) -> &MatrixTrackerConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.cfg.dim
    }

    pub fn rho(&self) -> usize {
        self.cfg.rho
    }

    pub fn theta(&self) -> f64 {
        self.cfg.theta
    }

    /// Number of steps processed.
    pub fn t(&self) -> usize {
        self.t
    }

    /// `λ_t` used by the most recent step.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `t_e = Σ_τ θ^{t-τ}`.
    pub fn effective_window(&self) -> f64 {
        self.t_eff
    }

    pub fn is_rls(&self) -> bool {
        matches!(self.acc, Accumulators::Rls { .. })
    }

    /// `L[t]` as a `P×ρ` matrix.
    pub fn subspace(&self) -> DMatrix<f64> {
        linalg::to_dmatrix(&self.l, self.cfg.dim, self.cfg.rho)
    }

    pub fn row(&self, p: usize) -> &[f64] {
        let r = self.cfg.rho;
        &self.l[p * r..(p + 1) * r]
    }

    /// `G_p[t]` (row-major), direct path only.
    pub fn gram(&self, p: usize) -> Option<&[f64]> {
        let rr = self.cfg.rho * self.cfg.rho;
        match &self.acc {
            Accumulators::Direct { g, .. } => Some(&g[p * rr..(p + 1) * rr]),
            Accumulators::Rls { .. } => None,
        }
    }

    /// `M_p[t] = H_p[t]⁻¹` (row-major), RLS path only.
    pub fn inverse(&self, p: usize) -> Option<&[f64]> {
        let rr = self.cfg.rho * self.cfg.rho;
        match &self.acc {
            Accumulators::Rls { m, .. } => Some(&m[p * rr..(p + 1) * rr]),
            Accumulators::Direct { .. } => None,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { subspace: self.subspace(), t: self.t, lambda: self.lambda }
    }

    fn check_dim(&self, obs: &MaskedVector) -> Result<()> {
        if obs.ambient_dim() != self.cfg.dim {
            return Err(Error::DimensionMismatch { expected: self.cfg.dim, found: obs.ambient_dim() });
        }
        Ok(())
    }

    /// Process one observation along the configured path.
    pub fn step(&mut self, obs: &MaskedVector) -> Result<StepOutput> {
        if self.is_rls() {
            self.rls_step(obs)
        } else {
            self.direct_step(obs)
        }
    }

    /// Direct row solves with forgetting factor `θ`.
    pub fn direct_step(&mut self, obs: &MaskedVector) -> Result<StepOutput> {
        self.check_dim(obs)?;
        if self.is_rls() {
            return Err(Error::Unsupported("tracker was built for the RLS path".into()));
        }
        let (p_dim, r) = (self.cfg.dim, self.cfg.rho);
        let theta = self.cfg.theta;
        let t_eff = theta * self.t_eff + 1.0;
        let lambda = self.cfg.lambda.value(p_dim, t_eff);
        let q = project_rows(&self.l, r, obs, lambda, &mut self.gram, &mut self.rhs)?;

        // Unobserved rows only change when their inputs change.
        let rows_static = theta == 1.0 && lambda == self.lambda && self.t > 0;
        let mut observed: Vec<Option<f64>> = vec![None; p_dim];
        for (p, y) in obs.iter() {
            observed[p] = Some(y);
        }
        let Accumulators::Direct { g, s } = &mut self.acc else { unreachable!() };
        update_rows(&mut self.l, g, s, &observed, &q, r, theta, lambda, rows_static)?;

        self.t += 1;
        self.t_eff = t_eff;
        self.lambda = lambda;
        let x_hat = self.reconstruct(&q);
        Ok(StepOutput { q, x_hat })
    }

    /// Recursive least-squares step; only observed rows are touched.
    pub fn rls_step(&mut self, obs: &MaskedVector) -> Result<StepOutput> {
        self.check_dim(obs)?;
        if !self.is_rls() {
            return Err(Error::Unsupported(
                "the RLS path needs theta = 1 and a fixed lambda held since initialization".into(),
            ));
        }
        let r = self.cfg.rho;
        let lambda = self.lambda;
        let q = project_rows(&self.l, r, obs, lambda, &mut self.gram, &mut self.rhs)?;
        if self.t == 0 {
            // s_p[0] = 0, so every row of L[1] not touched below is zero.
            self.l.iter_mut().for_each(|v| *v = 0.0);
        }
        let Accumulators::Rls { m, s } = &mut self.acc else { unreachable!() };
        let u = &mut self.rhs;
        for (p, y) in obs.iter() {
            let m_p = &mut m[p * r * r..(p + 1) * r * r];
            let s_p = &mut s[p * r..(p + 1) * r];
            axpy(y, &q, s_p);
            // u = M_p q; M_p q q' M_p = u u' since M_p is symmetric.
            for i in 0..r {
                u[i] = dot(&m_p[i * r..(i + 1) * r], &q);
            }
            let denom = 1.0 + dot(&q, u);
            for i in 0..r {
                let ui = u[i] / denom;
                for j in 0..r {
                    m_p[i * r + j] -= ui * u[j];
                }
            }
            let l_p = &mut self.l[p * r..(p + 1) * r];
            for i in 0..r {
                l_p[i] = dot(&m_p[i * r..(i + 1) * r], s_p);
            }
        }
        self.t += 1;
        self.t_eff += 1.0;
        let x_hat = self.reconstruct(&q);
        Ok(StepOutput { q, x_hat })
    }

    /// `L[t] q`.
    pub fn reconstruct(&self, q: &[f64]) -> Vec<f64> {
        self.l.chunks_exact(self.cfg.rho).map(|row| dot(row, q)).collect()
    }
}

#[allow(clippy::too_many_arguments)]
fn update_rows(
    l: &mut [f64],
    g: &mut [f64],
    s: &mut [f64],
    observed: &[Option<f64>],
    q: &[f64],
    r: usize,
    theta: f64,
    lambda: f64,
    rows_static: bool,
) -> Result<()> {
    let rows = l.chunks_exact_mut(r).zip(g.chunks_exact_mut(r * r)).zip(s.chunks_exact_mut(r)).zip(observed);

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let rows: Vec<_> = rows.collect();
        return rows
            .into_par_iter()
            .map_init(
                || vec![0.0; r * r],
                |scratch, (((l_p, g_p), s_p), &y)| update_row(l_p, g_p, s_p, y, q, theta, lambda, rows_static, scratch),
            )
            .collect::<Result<()>>();
    }

    #[cfg(not(feature = "parallel"))]
    {
        let mut scratch = vec![0.0; r * r];
        for (((l_p, g_p), s_p), &y) in rows {
            update_row(l_p, g_p, s_p, y, q, theta, lambda, rows_static, &mut scratch)?;
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn update_row(
    l_p: &mut [f64],
    g_p: &mut [f64],
    s_p: &mut [f64],
    y: Option<f64>,
    q: &[f64],
    theta: f64,
    lambda: f64,
    rows_static: bool,
    scratch: &mut [f64],
) -> Result<()> {
    let r = q.len();
    if theta != 1.0 {
        g_p.iter_mut().for_each(|v| *v *= theta);
        s_p.iter_mut().for_each(|v| *v *= theta);
    }
    match y {
        Some(y) => {
            for i in 0..r {
                let qi = q[i];
                let row = &mut g_p[i * r..(i + 1) * r];
                for j in 0..r {
                    row[j] += qi * q[j];
                }
            }
            axpy(y, q, s_p);
        }
        None if rows_static => return Ok(()),
        None => {}
    }
    solve_row(g_p, s_p, lambda, l_p, scratch)
}

/// `l = (G + λI)⁻¹ s`; a zero right-hand side yields `l = 0` without a solve.
fn solve_row(g_p: &[f64], s_p: &[f64], lambda: f64, l_p: &mut [f64], scratch: &mut [f64]) -> Result<()> {
    let r = s_p.len();
    if s_p.iter().all(|&v| v == 0.0) {
        l_p.iter_mut().for_each(|v| *v = 0.0);
        return Ok(());
    }
    scratch.copy_from_slice(g_p);
    for i in 0..r {
        scratch[i * r + i] += lambda;
    }
    l_p.copy_from_slice(s_p);
    linalg::spd_solve(scratch, r, l_p)
}

/// Ridge projection onto a row-major `P×ρ` subspace:
/// `q = (λI + L'ΩL)⁻¹ L' P_ω(y)`.
pub(crate) fn project_rows(
    l: &[f64],
    r: usize,
    obs: &MaskedVector,
    lambda: f64,
    gram: &mut [f64],
    rhs: &mut [f64],
) -> Result<Vec<f64>> {
    if obs.is_empty() && lambda > 0.0 {
        return Ok(vec![0.0; r]);
    }
    gram.iter_mut().for_each(|v| *v = 0.0);
    rhs.iter_mut().for_each(|v| *v = 0.0);
    for (p, y) in obs.iter() {
        let l_p = &l[p * r..(p + 1) * r];
        for i in 0..r {
            let li = l_p[i];
            let row = &mut gram[i * r..i * r + i + 1];
            for j in 0..=i {
                row[j] += li * l_p[j];
            }
        }
        axpy(y, l_p, rhs);
    }
    for i in 0..r {
        gram[i * r + i] += lambda;
    }
    let mut q = rhs.to_vec();
    linalg::spd_solve(gram, r, &mut q)?;
    Ok(q)
}

/// `q = (λI_ρ + L'Ω_tL)⁻¹ L' P_ω(y_t)`.
///
/// With `λ = 0` the system must be nonsingular, otherwise
/// [`Error::Singular`] is returned.
pub fn project_coefficients(l: &DMatrix<f64>, obs: &MaskedVector, lambda: f64) -> Result<DVector<f64>> {
    if obs.ambient_dim() != l.nrows() {
        return Err(Error::DimensionMismatch { expected: l.nrows(), found: obs.ambient_dim() });
    }
    let r = l.ncols();
    let rows = linalg::to_row_major(l);
    let mut gram = vec![0.0; r * r];
    let mut rhs = vec![0.0; r];
    project_rows(&rows, r, obs, lambda, &mut gram, &mut rhs).map(DVector::from_vec)
}

/// `g_τ(L, q) = ½‖P_ω(y − Lq)‖² + (λ/2)‖q‖²`.
pub fn fit_cost(l: &DMatrix<f64>, obs: &MaskedVector, q: &[f64], lambda: f64) -> f64 {
    let mut misfit = 0.0;
    for (p, y) in obs.iter() {
        let pred: f64 = (0..l.ncols()).map(|j| l[(p, j)] * q[j]).sum();
        misfit += (y - pred) * (y - pred);
    }
    0.5 * misfit + 0.5 * lambda * linalg::norm_sq(q)
}

fn check_history(l: &DMatrix<f64>, history: &[MaskedVector]) -> Result<()> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    for obs in history {
        if obs.ambient_dim() != l.nrows() {
            return Err(Error::DimensionMismatch { expected: l.nrows(), found: obs.ambient_dim() });
        }
    }
    Ok(())
}

/// Average cost `C_t(L) = (1/t) Σ_τ ℓ_τ(L) + (λ/2t)‖L‖_F²` with
/// `ℓ_τ(L) = min_q g_τ(L, q)` (infinite memory). `O(t)` per call.
pub fn average_cost(l: &DMatrix<f64>, history: &[MaskedVector], lambda: f64) -> Result<f64> {
    check_history(l, history)?;
    let r = l.ncols();
    let rows = linalg::to_row_major(l);
    let (mut gram, mut rhs) = (vec![0.0; r * r], vec![0.0; r]);
    let mut total = 0.0;
    for obs in history {
        let q = project_rows(&rows, r, obs, lambda, &mut gram, &mut rhs)?;
        total += fit_cost(l, obs, &q, lambda);
    }
    let t = history.len() as f64;
    Ok(total / t + lambda / (2.0 * t) * l.norm_squared())
}

/// Approximate cost `Ĉ_t(L) = (1/t) Σ_τ g_τ(L, q[τ]) + (λ/2t)‖L‖_F²` for
/// stored coefficients `q[τ]`.
pub fn surrogate_cost(l: &DMatrix<f64>, history: &[MaskedVector], coeffs: &[Vec<f64>], lambda: f64) -> Result<f64> {
    check_history(l, history)?;
    if coeffs.len() != history.len() {
        return Err(Error::DimensionMismatch { expected: history.len(), found: coeffs.len() });
    }
    let total: f64 = history.iter().zip(coeffs).map(|(obs, q)| fit_cost(l, obs, q, lambda)).sum();
    let t = history.len() as f64;
    Ok(total / t + lambda / (2.0 * t) * l.norm_squared())
}

/// `∇C_t(L) = (1/t)[λL − Σ_τ P_ω(y_τ − L q_τ) q_τ']` with `q_τ` the ridge
/// projection onto `L` (Danskin).
pub fn cost_gradient(l: &DMatrix<f64>, history: &[MaskedVector], lambda: f64) -> Result<DMatrix<f64>> {
    check_history(l, history)?;
    let r = l.ncols();
    let rows = linalg::to_row_major(l);
    let (mut gram, mut rhs) = (vec![0.0; r * r], vec![0.0; r]);
    let mut grad = vec![0.0; rows.len()];
    for obs in history {
        let q = project_rows(&rows, r, obs, lambda, &mut gram, &mut rhs)?;
        for (p, y) in obs.iter() {
            let resid = y - dot(&rows[p * r..(p + 1) * r], &q);
            axpy(-resid, &q, &mut grad[p * r..(p + 1) * r]);
        }
    }
    let t = history.len() as f64;
    for (g, l) in grad.iter_mut().zip(&rows) {
        *g = (*g + lambda * l) / t;
    }
    Ok(linalg::to_dmatrix(&grad, l.nrows(), r))
}
