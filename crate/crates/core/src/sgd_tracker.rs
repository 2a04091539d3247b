//! First-order subspace tracker: one stochastic-gradient step on
//! `f_t(L) = ½‖P_ω(y_t − Lq[t])‖² + (λ/2t)‖L‖_F² + (λ/2)‖q[t]‖²` per datum,
//! with a backtracking step size and optional Nesterov extrapolation.
//!
//! In plain mode the iterate is stored as `scale · base`, so that the
//! shrinkage by `(1 − λ/(tμ))` costs O(1) and a step touches only the
//! observed rows.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::data::MaskedVector;
use crate::error::{config_err, Error, Result};
use crate::linalg::{self, dot, norm_sq};
use crate::matrix_tracker::{project_rows, Snapshot, StepOutput};
use crate::synth::{normal, rng_from_seed};

/// How the step-size denominator `μ[t]` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum StepRule {
    /// Grow `μ` geometrically by `η` until the quadratic majorizer holds at
    /// the candidate point.
    #[default]
    Backtracking,
    /// `μ[t] = Σ_τ α_τ` with `α_τ = ‖q[τ]‖²·[ω_τ ≠ ∅] + λ/τ`, the curvature
    /// of `f_τ`.
    Cumulative,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SgdTrackerConfig {
    pub dim: usize,
    pub rho: usize,
    pub lambda: f64,
    /// Backtracking growth factor `η > 1`.
    pub eta: f64,
    /// Initial step-size denominator `μ[0] > 0`.
    pub mu0: f64,
    /// Largest number of growth steps tried per datum.
    pub max_backtracks: usize,
    pub accelerated: bool,
    /// Reset the momentum when the mean loss over this many steps exceeds
    /// that of the previous window. Accelerated mode only.
    pub restart_window: Option<usize>,
    pub step_rule: StepRule,
    pub seed: u64,
}

impl SgdTrackerConfig {
    pub fn new(dim: usize, rho: usize, lambda: f64, seed: u64) -> Self {
        Self {
            dim,
            rho,
            lambda,
            eta: 2.0,
            mu0: 1.0,
            max_backtracks: 100,
            accelerated: false,
            restart_window: None,
            step_rule: StepRule::Backtracking,
            seed,
        }
    }

    pub fn accelerated(mut self, on: bool) -> Self {
        self.accelerated = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.rho == 0 {
            return Err(config_err("dimension and rank must be positive"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(config_err("lambda must be finite and nonnegative"));
        }
        if !(self.eta > 1.0) || !self.eta.is_finite() {
            return Err(config_err("eta must exceed 1"));
        }
        if !(self.mu0 > 0.0) || !self.mu0.is_finite() {
            return Err(config_err("mu0 must be positive"));
        }
        if self.restart_window == Some(0) {
            return Err(config_err("restart window must be positive"));
        }
        Ok(())
    }
}

/// `f_t(L)` for given coefficients `q`.
pub fn loss_f(l: &DMatrix<f64>, obs: &MaskedVector, q: &[f64], lambda: f64, t: usize) -> f64 {
    let mut misfit = 0.0;
    for (p, y) in obs.iter() {
        let pred: f64 = (0..l.ncols()).map(|j| l[(p, j)] * q[j]).sum();
        misfit += (y - pred) * (y - pred);
    }
    0.5 * misfit + lambda / (2.0 * t as f64) * l.norm_squared() + 0.5 * lambda * norm_sq(q)
}

/// `∇f_t(L) = −P_ω(y_t − Lq)q' + (λ/t)L`.
pub fn grad_f(l: &DMatrix<f64>, obs: &MaskedVector, q: &[f64], lambda: f64, t: usize) -> DMatrix<f64> {
    let mut g = l * (lambda / t as f64);
    for (p, y) in obs.iter() {
        let pred: f64 = (0..l.ncols()).map(|j| l[(p, j)] * q[j]).sum();
        for j in 0..l.ncols() {
            g[(p, j)] -= (y - pred) * q[j];
        }
    }
    g
}

/// `Q_{μ,t}(L₁, L₂) = f_t(L₂) + ⟨L₁ − L₂, ∇f_t(L₂)⟩ + (μ/2)‖L₁ − L₂‖_F²`.
#[allow(clippy::too_many_arguments)]
pub fn majorizer(
    l1: &DMatrix<f64>,
    l2: &DMatrix<f64>,
    obs: &MaskedVector,
    q: &[f64],
    lambda: f64,
    t: usize,
    mu: f64,
) -> f64 {
    let d = l1 - l2;
    loss_f(l2, obs, q, lambda, t) + d.dot(&grad_f(l2, obs, q, lambda, t)) + 0.5 * mu * d.norm_squared()
}

/// Acceptance test of the backtracking search, with a rounding allowance
/// relative to `f(L̃)`.
pub fn majorization_holds(f_candidate: f64, f_anchor: f64, grad_norm_sq: f64, mu: f64) -> bool {
    f_candidate <= f_anchor - grad_norm_sq / (2.0 * mu) + 1e-12 * f_anchor.abs()
}

/// Result of one backtracking search.
#[derive(Debug, Clone, PartialEq)]
pub struct Backtrack {
    pub l: DMatrix<f64>,
    pub mu: f64,
    /// Number of growth steps `i[t]`.
    pub growths: usize,
}

/// Dense backtracking step at `L̃`: smallest `i ≥ 0` with
/// `μ̄ = η^i μ_prev` such that `L̃ − ∇f_t(L̃)/μ̄` satisfies the majorization
/// inequality.
#[allow(clippy::too_many_arguments)]
pub fn backtracking_step(
    l_tilde: &DMatrix<f64>,
    obs: &MaskedVector,
    q: &[f64],
    lambda: f64,
    t: usize,
    mu_prev: f64,
    eta: f64,
    cap: usize,
) -> Result<Backtrack> {
    let f0 = loss_f(l_tilde, obs, q, lambda, t);
    let g = grad_f(l_tilde, obs, q, lambda, t);
    let gg = g.norm_squared();
    let mut mu = mu_prev;
    for growths in 0..=cap {
        let cand = l_tilde - &g / mu;
        if majorization_holds(loss_f(&cand, obs, q, lambda, t), f0, gg, mu) {
            return Ok(Backtrack { l: cand, mu, growths });
        }
        mu *= eta;
    }
    Err(Error::BacktrackingCap { cap })
}

/// `k[t+1] = (1 + √(1 + 4k[t]²)) / 2`.
pub fn next_momentum(k: f64) -> f64 {
    0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * k * k))
}

/// `L̃[t+1] = L[t] + ((k[t] − 1)/k[t+1])(L[t] − L[t−1])`.
pub fn extrapolate(l: &DMatrix<f64>, l_prev: &DMatrix<f64>, k: f64, k_next: f64) -> DMatrix<f64> {
    l + (l - l_prev) * ((k - 1.0) / k_next)
}

/// Row-major matrix stored as `scale · base`, with `‖base‖_F²` cached.
#[derive(Debug, Clone)]
struct Scaled {
    base: Vec<f64>,
    scale: f64,
    base_norm_sq: f64,
}

impl Scaled {
    fn dense(base: Vec<f64>) -> Self {
        let base_norm_sq = norm_sq(&base);
        Self { base, scale: 1.0, base_norm_sq }
    }

    fn norm_sq(&self) -> f64 {
        self.scale * self.scale * self.base_norm_sq
    }

    fn materialize(&self) -> Vec<f64> {
        self.base.iter().map(|v| v * self.scale).collect()
    }

    fn normalize(&mut self) {
        if self.scale != 1.0 {
            *self = Self::dense(self.materialize());
        }
    }

    /// `self ← a·self + b·P_ω(r)q'`.
    fn update(&mut self, a: f64, b: f64, idx: &[usize], resid: &[f64], q: &[f64]) {
        let r = q.len();
        if !(a > 1e-8) {
            self.normalize();
            self.base.iter_mut().for_each(|v| *v *= a);
            self.scale = 1.0;
            for (&p, &rp) in idx.iter().zip(resid) {
                linalg::axpy(b * rp, q, &mut self.base[p * r..(p + 1) * r]);
            }
            self.base_norm_sq = norm_sq(&self.base);
            return;
        }
        self.scale *= a;
        let w = b / self.scale;
        for (&p, &rp) in idx.iter().zip(resid) {
            let row = &mut self.base[p * r..(p + 1) * r];
            let before = norm_sq(row);
            linalg::axpy(w * rp, q, row);
            self.base_norm_sq += norm_sq(row) - before;
        }
        if !(1e-100..=1e100).contains(&self.scale.abs()) {
            self.normalize();
        }
    }
}

#[derive(Debug, Clone)]
struct Momentum {
    /// `L[t−1]`, dense row-major.
    prev: Vec<f64>,
    /// `L̃[t+1]`.
    tilde: Scaled,
    k: f64,
    window_sum: f64,
    window_len: usize,
    last_window_mean: Option<f64>,
}

/// State of the first-order tracker.
#[derive(Debug, Clone)]
pub struct SgdTracker {
    cfg: SgdTrackerConfig,
    /// `L[t]`.
    cur: Scaled,
    momentum: Option<Momentum>,
    mu: f64,
    t: usize,
    last_growths: usize,
    restarts: usize,
    gram: Vec<f64>,
    rhs: Vec<f64>,
    resid: Vec<f64>,
    pred: Vec<f64>,
}

impl SgdTracker {
    /// Tracker with `L[0]` drawn i.i.d. `N(0, 1/P)` from `cfg.seed`.
    pub fn new(cfg: SgdTrackerConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng_from_seed(cfg.seed);
        let sd = 1.0 / libm::sqrt(cfg.dim as f64);
        let l0: Vec<f64> = (0..cfg.dim * cfg.rho).map(|_| sd * normal(&mut rng)).collect();
        Ok(Self::build(cfg, l0))
    }

    pub fn with_initial(cfg: SgdTrackerConfig, l0: &DMatrix<f64>) -> Result<Self> {
        cfg.validate()?;
        if l0.shape() != (cfg.dim, cfg.rho) {
            return Err(Error::DimensionMismatch { expected: cfg.dim * cfg.rho, found: l0.len() });
        }
        Ok(Self::build(cfg, linalg::to_row_major(l0)))
    }

    fn build(cfg: SgdTrackerConfig, l0: Vec<f64>) -> Self {
        let momentum = cfg.accelerated.then(|| Momentum {
            prev: l0.clone(),
            tilde: Scaled::dense(l0.clone()),
            k: 1.0,
            window_sum: 0.0,
            window_len: 0,
            last_window_mean: None,
        });
        let mu = match cfg.step_rule {
            StepRule::Backtracking => cfg.mu0,
            StepRule::Cumulative => 0.0,
        };
        let r = cfg.rho;
        Self {
            cur: Scaled::dense(l0),
            momentum,
            mu,
            t: 0,
            last_growths: 0,
            restarts: 0,
            gram: vec![0.0; r * r],
            rhs: vec![0.0; r],
            resid: Vec::new(),
            pred: Vec::new(),
            cfg,
        }
    }

    pub fn config(&self) -> &SgdTrackerConfig {
        &self.cfg
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn lambda(&self) -> f64 {
        self.cfg.lambda
    }

    /// Current step-size denominator `μ[t]`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Momentum scalar `k[t+1]` (1 in plain mode).
    pub fn k(&self) -> f64 {
        self.momentum.as_ref().map_or(1.0, |m| m.k)
    }

    /// Growth steps taken by the last backtracking search.
    pub fn last_growths(&self) -> usize {
        self.last_growths
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    /// `L[t]`.
    pub fn subspace(&self) -> DMatrix<f64> {
        linalg::to_dmatrix(&self.cur.materialize(), self.cfg.dim, self.cfg.rho)
    }

    /// Anchor of the next gradient step, `L̃[t+1]`.
    pub fn extrapolated(&self) -> DMatrix<f64> {
        match &self.momentum {
            Some(m) => linalg::to_dmatrix(&m.tilde.materialize(), self.cfg.dim, self.cfg.rho),
            None => self.subspace(),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { subspace: self.subspace(), t: self.t, lambda: self.cfg.lambda }
    }

    pub fn step(&mut self, obs: &MaskedVector) -> Result<StepOutput> {
        let (p_dim, r) = (self.cfg.dim, self.cfg.rho);
        if obs.ambient_dim() != p_dim {
            return Err(Error::DimensionMismatch { expected: p_dim, found: obs.ambient_dim() });
        }
        let lam = self.cfg.lambda;
        let t = self.t + 1;
        let tf = t as f64;

        // q[t] from L[t-1] = scale · base, solved on the base rows.
        let s = self.cur.scale;
        let qb = project_rows(&self.cur.base, r, obs, lam / (s * s), &mut self.gram, &mut self.rhs)?;
        let q: Vec<f64> = qb.iter().map(|v| v / s).collect();
        let qn2 = norm_sq(&q);

        let anchor = self.momentum.as_ref().map_or(&self.cur, |m| &m.tilde);
        self.pred.clear();
        self.resid.clear();
        for (p, y) in obs.iter() {
            let pr = anchor.scale * dot(&anchor.base[p * r..(p + 1) * r], &q);
            self.pred.push(pr);
            self.resid.push(y - pr);
        }
        let n_anchor = anchor.norm_sq();
        let rr = norm_sq(&self.resid);
        let cross = dot(&self.resid, &self.pred);
        let f0 = 0.5 * rr + lam / (2.0 * tf) * n_anchor + 0.5 * lam * qn2;
        let c = lam / tf;
        let gg = (rr * qn2 - 2.0 * c * cross + c * c * n_anchor).max(0.0);
        let l_dot_g = -cross + c * n_anchor;

        let (mu, growths) = match self.cfg.step_rule {
            StepRule::Cumulative => {
                let alpha = if obs.is_empty() { 0.0 } else { qn2 } + c;
                (self.mu + alpha, 0)
            }
            StepRule::Backtracking => {
                let mut mu = self.mu;
                let mut found = None;
                for i in 0..=self.cfg.max_backtracks {
                    let a = 1.0 - c / mu;
                    let b = 1.0 / mu;
                    let mut misfit = 0.0;
                    for ((&pr, &res), (_, y)) in self.pred.iter().zip(&self.resid).zip(obs.iter()) {
                        let rc = y - a * pr - b * res * qn2;
                        misfit += rc * rc;
                    }
                    let n_cand = n_anchor - 2.0 * b * l_dot_g + b * b * gg;
                    let fc = 0.5 * misfit + lam / (2.0 * tf) * n_cand + 0.5 * lam * qn2;
                    if majorization_holds(fc, f0, gg, mu) {
                        found = Some((mu, i));
                        break;
                    }
                    mu *= self.cfg.eta;
                }
                found.ok_or(Error::BacktrackingCap { cap: self.cfg.max_backtracks })?
            }
        };
        self.mu = mu;
        self.last_growths = growths;
        self.t = t;

        if mu > 0.0 {
            let (a, b) = (1.0 - c / mu, 1.0 / mu);
            match self.momentum.as_mut() {
                None => self.cur.update(a, b, obs.indices(), &self.resid, &q),
                Some(m) => {
                    let mut next = m.tilde.clone();
                    next.update(a, b, obs.indices(), &self.resid, &q);
                    m.prev = self.cur.materialize();
                    self.cur = next;
                    self.cur.normalize();
                }
            }
        }

        if let Some(m) = self.momentum.as_mut() {
            let mut restart = false;
            if let Some(w) = self.cfg.restart_window {
                m.window_sum += f0;
                m.window_len += 1;
                if m.window_len == w {
                    let mean = m.window_sum / w as f64;
                    restart = m.last_window_mean.is_some_and(|prev| mean > prev);
                    m.last_window_mean = Some(mean);
                    m.window_sum = 0.0;
                    m.window_len = 0;
                }
            }
            if restart {
                m.k = 1.0;
                self.restarts += 1;
            }
            let k_next = next_momentum(m.k);
            let w = (m.k - 1.0) / k_next;
            let tilde: Vec<f64> =
                self.cur.base.iter().zip(&m.prev).map(|(&l, &lp)| l + w * (l - lp)).collect();
            m.tilde = Scaled::dense(tilde);
            m.k = k_next;
        }

        let mut x_hat = vec![0.0; p_dim];
        for (p, x) in x_hat.iter_mut().enumerate() {
            *x = self.cur.scale * dot(&self.cur.base[p * r..(p + 1) * r], &q);
        }
        Ok(StepOutput { q, x_hat })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_tracker::project_coefficients;
    use crate::synth::{gen_matrix_stream, SynthMatrixConfig};

    fn random_instance(seed: u64, p: usize, r: usize) -> (DMatrix<f64>, MaskedVector, Vec<f64>) {
        let mut rng = rng_from_seed(seed);
        let l = DMatrix::from_fn(p, r, |_, _| normal(&mut rng));
        let y: Vec<f64> = (0..p).map(|_| normal(&mut rng)).collect();
        let mask: Vec<bool> = (0..p).map(|i| !(i * 7 + seed as usize).is_multiple_of(3)).collect();
        let q: Vec<f64> = (0..r).map(|_| normal(&mut rng)).collect();
        (l, MaskedVector::from_dense(1, &y, &mask).unwrap(), q)
    }

    #[test]
    fn loss_on_trivial_inputs() {
        let l = DMatrix::from_element(3, 1, 1.0);
        let obs = MaskedVector::new(1, 3, vec![0, 2], vec![2.0, 2.0]).unwrap();
        assert_eq!(loss_f(&l, &obs, &[2.0], 0.0, 1), 0.0);
        let z = DMatrix::zeros(3, 1);
        assert_eq!(loss_f(&z, &obs, &[0.0], 1.0, 4), 4.0);
    }

    #[test]
    fn loss_matches_naive_sum() {
        let (l, obs, q) = random_instance(3, 9, 3);
        let mut total = 0.0;
        for (p, y) in obs.iter() {
            let mut pred = 0.0;
            for j in 0..3 {
                pred += l[(p, j)] * q[j];
            }
            total += 0.5 * (y - pred) * (y - pred);
        }
        for v in l.iter() {
            total += 0.7 / (2.0 * 5.0) * v * v;
        }
        for v in &q {
            total += 0.35 * v * v;
        }
        assert!((loss_f(&l, &obs, &q, 0.7, 5) - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn gradient_of_empty_observation() {
        let (l, _, q) = random_instance(4, 6, 2);
        let g = grad_f(&l, &MaskedVector::empty(1, 6), &q, 2.0, 4);
        assert!((g - &l * 0.5).norm() < 1e-15);
    }

    #[test]
    fn majorizer_is_tight_at_anchor() {
        let (l, obs, q) = random_instance(5, 8, 3);
        let f = loss_f(&l, &obs, &q, 0.3, 2);
        assert!((majorizer(&l, &l, &obs, &q, 0.3, 2, 17.0) - f).abs() <= 1e-12 * f.abs());
    }

    #[test]
    fn zero_gradient_keeps_anchor() {
        let (l, obs, _) = random_instance(6, 5, 2);
        let bt = backtracking_step(&l, &obs, &[0.0, 0.0], 0.0, 3, 1.0, 2.0, 100).unwrap();
        assert_eq!(bt.l, l);
        assert_eq!(bt.growths, 0);
    }

    #[test]
    fn large_initial_mu_accepted_immediately() {
        let (l, obs, q) = random_instance(7, 10, 3);
        let curvature = norm_sq(&q) + 0.5;
        let bt = backtracking_step(&l, &obs, &q, 0.5, 1, curvature, 2.0, 100).unwrap();
        assert_eq!(bt.growths, 0);
    }

    #[test]
    fn accepted_step_is_minimal() {
        for seed in 0..20 {
            let (l, obs, q) = random_instance(seed, 12, 4);
            let bt = backtracking_step(&l, &obs, &q, 0.2, 3, 1e-3, 2.0, 100).unwrap();
            let f0 = loss_f(&l, &obs, &q, 0.2, 3);
            let g = grad_f(&l, &obs, &q, 0.2, 3);
            let gg = g.norm_squared();
            assert!(majorization_holds(loss_f(&bt.l, &obs, &q, 0.2, 3), f0, gg, bt.mu));
            assert!(loss_f(&bt.l, &obs, &q, 0.2, 3) <= majorizer(&bt.l, &l, &obs, &q, 0.2, 3, bt.mu) + 1e-12 * f0);
            if bt.growths > 0 {
                let smaller = bt.mu / 2.0;
                let cand = &l - &g / smaller;
                assert!(!majorization_holds(loss_f(&cand, &obs, &q, 0.2, 3), f0, gg, smaller));
            }
        }
    }

    #[test]
    fn backtracking_cap_is_reported() {
        let (l, obs, q) = random_instance(8, 10, 3);
        assert_eq!(
            backtracking_step(&l, &obs, &q, 0.1, 1, 1e-9, 2.0, 2),
            Err(Error::BacktrackingCap { cap: 2 })
        );
    }

    #[test]
    fn momentum_recursion() {
        assert!((next_momentum(1.0) - 1.618_033_988_749_895).abs() < 1e-12);
        let mut k = 1.0;
        for _ in 1..100 {
            k = next_momentum(k);
        }
        assert!((50.0..=52.0).contains(&k));
        let l = DMatrix::from_element(2, 2, 3.0);
        assert_eq!(extrapolate(&l, &l, 5.0, 6.0), l);
    }

    #[test]
    fn tracker_step_matches_dense_reference() {
        let cfg = SynthMatrixConfig::new(12, 2, 0.1, 0.6, 21);
        let stream: Vec<_> = gen_matrix_stream(&cfg, 60).unwrap().collect();
        let tc = SgdTrackerConfig::new(12, 3, 0.4, 5);
        let mut tracker = SgdTracker::new(tc).unwrap();
        let mut l = tracker.subspace();
        let mut mu = 1.0;
        for (i, s) in stream.iter().enumerate() {
            let q = project_coefficients(&l, &s.obs, 0.4).unwrap();
            let bt = backtracking_step(&l, &s.obs, q.as_slice(), 0.4, i + 1, mu, 2.0, 100).unwrap();
            let out = tracker.step(&s.obs).unwrap();
            l = bt.l;
            mu = bt.mu;
            assert_eq!(tracker.mu(), mu);
            assert!((tracker.subspace() - &l).norm() <= 1e-10 * l.norm());
            let x = &l * q;
            assert!(out.x_hat.iter().zip(x.iter()).all(|(a, b)| (a - b).abs() <= 1e-10 * (1.0 + b.abs())));
        }
    }

    #[test]
    fn accelerated_step_matches_dense_reference() {
        let cfg = SynthMatrixConfig::new(10, 2, 0.1, 0.7, 2);
        let stream: Vec<_> = gen_matrix_stream(&cfg, 40).unwrap().collect();
        let tc = SgdTrackerConfig::new(10, 3, 0.2, 9).accelerated(true);
        let mut tracker = SgdTracker::new(tc).unwrap();
        let mut l = tracker.subspace();
        let mut tilde = l.clone();
        let (mut mu, mut k) = (1.0, 1.0);
        for (i, s) in stream.iter().enumerate() {
            let q = project_coefficients(&l, &s.obs, 0.2).unwrap();
            let bt = backtracking_step(&tilde, &s.obs, q.as_slice(), 0.2, i + 1, mu, 2.0, 100).unwrap();
            tracker.step(&s.obs).unwrap();
            let l_prev = core::mem::replace(&mut l, bt.l);
            mu = bt.mu;
            let k_next = next_momentum(k);
            tilde = extrapolate(&l, &l_prev, k, k_next);
            k = k_next;
            assert!((tracker.subspace() - &l).norm() <= 1e-10 * l.norm());
            assert!((tracker.extrapolated() - &tilde).norm() <= 1e-10 * tilde.norm());
        }
        assert!((tracker.k() - k).abs() < 1e-12);
    }

    #[test]
    fn mu_is_nondecreasing_and_plain_k_is_one() {
        let cfg = SynthMatrixConfig::new(20, 3, 0.05, 0.5, 4);
        let mut tracker = SgdTracker::new(SgdTrackerConfig::new(20, 4, 0.5, 1)).unwrap();
        let mut last = tracker.mu();
        for s in gen_matrix_stream(&cfg, 300).unwrap() {
            tracker.step(&s.obs).unwrap();
            assert!(tracker.mu() >= last);
            assert_eq!(tracker.k(), 1.0);
            last = tracker.mu();
        }
    }

    #[test]
    fn cumulative_rule_sums_curvatures() {
        let mut tc = SgdTrackerConfig::new(4, 1, 1.0, 0);
        tc.step_rule = StepRule::Cumulative;
        let l0 = DMatrix::from_element(4, 1, 1.0);
        let mut tracker = SgdTracker::with_initial(tc, &l0).unwrap();
        tracker.step(&MaskedVector::empty(1, 4)).unwrap();
        assert!((tracker.mu() - 1.0).abs() < 1e-15);
        tracker.step(&MaskedVector::empty(2, 4)).unwrap();
        assert!((tracker.mu() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = SgdTrackerConfig::new(4, 2, 1.0, 0);
        c.eta = 1.0;
        assert!(SgdTracker::new(c.clone()).is_err());
        c.eta = 2.0;
        c.mu0 = 0.0;
        assert!(SgdTracker::new(c).is_err());
        let mut tracker = SgdTracker::new(SgdTrackerConfig::new(4, 2, 1.0, 0)).unwrap();
        assert!(tracker.step(&MaskedVector::empty(1, 5)).is_err());
    }
}
