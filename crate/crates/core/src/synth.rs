//! Seeded synthetic streams.
//!
//! All generators draw from `ChaCha8Rng::seed_from_u64(seed)` in a fixed
//! order, so a seed fully determines a stream:
//!
//! * matrix streams: the basis `U` (row-major, entries `N(0, 1/P)`), then per
//!   step the coefficients `w_t ~ N(0, I_r)` followed by one
//!   `(noise, Bernoulli)` pair per coordinate;
//! * tensor streams: `A` then `B` (row-major, entries `N(0, 1)`), then per
//!   slice `γ_t ~ N(0, I_R)` followed by one `(noise, Bernoulli)` pair per
//!   cell in row-major order.

use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{MaskedSlice, MaskedVector};
use crate::error::{config_err, Result};

/// Seeded generator used by every stochastic component of the crate.
pub type StreamRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub(crate) fn normal(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

/// What happens to the basis at `change_at`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum SubspaceChange {
    /// Draw a fresh, independent basis.
    Redraw,
    /// Add `scale` times a fresh `N(0, 1/P)` basis to the current one.
    Perturb { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthMatrixConfig {
    /// Ambient dimension `P`.
    pub dim: usize,
    /// True subspace dimension `r`.
    pub rank: usize,
    /// Noise standard deviation.
    pub sigma: f64,
    /// Per-entry observation probability.
    pub pi: f64,
    pub seed: u64,
    /// Time step at which the basis changes, if any.
    #[cfg_attr(feature = "serde", serde(default))]
    pub change_at: Option<usize>,
    #[cfg_attr(feature = "serde", serde(default = "default_change"))]
    pub change: SubspaceChange,
}

#[cfg(feature = "serde")]
fn default_change() -> SubspaceChange {
    SubspaceChange::Redraw
}

impl SynthMatrixConfig {
    pub fn new(dim: usize, rank: usize, sigma: f64, pi: f64, seed: u64) -> Self {
        Self { dim, rank, sigma, pi, seed, change_at: None, change: SubspaceChange::Redraw }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(config_err("dim must be positive"));
        }
        if self.rank == 0 || self.rank > self.dim {
            return Err(config_err("rank must lie in [1, dim]"));
        }
        if !(self.pi > 0.0 && self.pi <= 1.0) {
            return Err(config_err("pi must lie in (0, 1]"));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(config_err("sigma must be finite and nonnegative"));
        }
        if let SubspaceChange::Perturb { scale } = self.change {
            if !scale.is_finite() {
                return Err(config_err("perturbation scale must be finite"));
            }
        }
        Ok(())
    }
}

/// One generated time step: the incomplete noisy observation and the clean
/// signal `x_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSample {
    pub obs: MaskedVector,
    pub truth: Vec<f64>,
}

/// Iterator over a synthetic low-rank vector stream.
#[derive(Debug, Clone)]
pub struct MatrixStream {
    cfg: SynthMatrixConfig,
    rng: StreamRng,
    basis: Vec<f64>,
    t: usize,
    horizon: usize,
}

pub fn gen_matrix_stream(cfg: &SynthMatrixConfig, horizon: usize) -> Result<MatrixStream> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let basis = draw_basis(&mut rng, cfg.dim, cfg.rank);
    Ok(MatrixStream { cfg: cfg.clone(), rng, basis, t: 0, horizon })
}

fn draw_basis(rng: &mut StreamRng, dim: usize, rank: usize) -> Vec<f64> {
    let sd = 1.0 / libm::sqrt(dim as f64);
    (0..dim * rank).map(|_| sd * normal(rng)).collect()
}

impl MatrixStream {
    /// Current basis `U` (`P×r`).
    pub fn basis(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.cfg.dim, self.cfg.rank, &self.basis)
    }

    pub fn config(&self) -> &SynthMatrixConfig {
        &self.cfg
    }
}

impl Iterator for MatrixStream {
    type Item = VectorSample;

    fn next(&mut self) -> Option<VectorSample> {
        if self.t >= self.horizon {
            return None;
        }
        self.t += 1;
        let (p_dim, r) = (self.cfg.dim, self.cfg.rank);
        if self.cfg.change_at == Some(self.t) {
            let fresh = draw_basis(&mut self.rng, p_dim, r);
            match self.cfg.change {
                SubspaceChange::Redraw => self.basis = fresh,
                SubspaceChange::Perturb { scale } => {
                    for (u, f) in self.basis.iter_mut().zip(&fresh) {
                        *u += scale * f;
                    }
                }
            }
        }
        let w: Vec<f64> = (0..r).map(|_| normal(&mut self.rng)).collect();
        let truth: Vec<f64> = self.basis.chunks_exact(r).map(|row| crate::linalg::dot(row, &w)).collect();
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (p, &x) in truth.iter().enumerate() {
            let noise = self.cfg.sigma * normal(&mut self.rng);
            if self.rng.random::<f64>() < self.cfg.pi {
                indices.push(p);
                values.push(x + noise);
            }
        }
        let obs = MaskedVector::new(self.t, p_dim, indices, values).expect("generated indices are valid");
        Some(VectorSample { obs, truth })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.horizon - self.t;
        (left, Some(left))
    }
}

impl ExactSizeIterator for MatrixStream {}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthTensorConfig {
    pub rows: usize,
    pub cols: usize,
    /// True tensor rank `R`.
    pub rank: usize,
    pub sigma: f64,
    pub pi: f64,
    pub seed: u64,
}

impl SynthTensorConfig {
    pub fn new(rows: usize, cols: usize, rank: usize, sigma: f64, pi: f64, seed: u64) -> Self {
        Self { rows, cols, rank, sigma, pi, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(config_err("slice dimensions must be positive"));
        }
        if self.rank == 0 || self.rank > self.rows.min(self.cols) {
            return Err(config_err("rank must lie in [1, min(rows, cols)]"));
        }
        if !(self.pi > 0.0 && self.pi <= 1.0) {
            return Err(config_err("pi must lie in (0, 1]"));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(config_err("sigma must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// One generated slice: the incomplete noisy observation, the clean slice
/// `X_t = A diag(γ_t) B'` and the coefficients `γ_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSample {
    pub obs: MaskedSlice,
    pub truth: DMatrix<f64>,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TensorStream {
    cfg: SynthTensorConfig,
    rng: StreamRng,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    t: usize,
    horizon: usize,
}

pub fn gen_tensor_stream(cfg: &SynthTensorConfig, horizon: usize) -> Result<TensorStream> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let a_data: Vec<f64> = (0..cfg.rows * cfg.rank).map(|_| normal(&mut rng)).collect();
    let b_data: Vec<f64> = (0..cfg.cols * cfg.rank).map(|_| normal(&mut rng)).collect();
    let a = DMatrix::from_row_slice(cfg.rows, cfg.rank, &a_data);
    let b = DMatrix::from_row_slice(cfg.cols, cfg.rank, &b_data);
    Ok(TensorStream { cfg: cfg.clone(), rng, a, b, t: 0, horizon })
}

impl TensorStream {
    /// True factors `(A, B)`.
    pub fn factors(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.a, &self.b)
    }

    pub fn config(&self) -> &SynthTensorConfig {
        &self.cfg
    }
}

impl Iterator for TensorStream {
    type Item = SliceSample;

    fn next(&mut self) -> Option<SliceSample> {
        if self.t >= self.horizon {
            return None;
        }
        self.t += 1;
        let gamma: Vec<f64> = (0..self.cfg.rank).map(|_| normal(&mut self.rng)).collect();
        let mut scaled_a = self.a.clone();
        for (r, g) in gamma.iter().enumerate() {
            scaled_a.column_mut(r).scale_mut(*g);
        }
        let truth = &scaled_a * self.b.transpose();
        let mut entries = Vec::new();
        for m in 0..self.cfg.rows {
            for n in 0..self.cfg.cols {
                let noise = self.cfg.sigma * normal(&mut self.rng);
                if self.rng.random::<f64>() < self.cfg.pi {
                    entries.push((m, n, truth[(m, n)] + noise));
                }
            }
        }
        let obs = MaskedSlice::new(self.t, (self.cfg.rows, self.cfg.cols), entries)
            .expect("generated entries are valid");
        Some(SliceSample { obs, truth, gamma })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.horizon - self.t;
        (left, Some(left))
    }
}

impl ExactSizeIterator for TensorStream {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_full_sampling_is_exact() {
        let cfg = SynthMatrixConfig::new(4, 1, 0.0, 1.0, 11);
        let samples: Vec<_> = gen_matrix_stream(&cfg, 3).unwrap().collect();
        assert_eq!(samples.len(), 3);
        for (i, s) in samples.iter().enumerate() {
            assert_eq!(s.obs.t(), i + 1);
            assert_eq!(s.obs.len(), 4);
            assert_eq!(s.obs.values(), s.truth.as_slice());
        }
    }

    #[test]
    fn streams_are_deterministic() {
        let cfg = SynthMatrixConfig::new(30, 3, 0.1, 0.4, 5);
        let a: Vec<_> = gen_matrix_stream(&cfg, 20).unwrap().collect();
        let b: Vec<_> = gen_matrix_stream(&cfg, 20).unwrap().collect();
        assert_eq!(a, b);
        let tcfg = SynthTensorConfig::new(4, 5, 2, 0.1, 0.5, 5);
        let a: Vec<_> = gen_tensor_stream(&tcfg, 5).unwrap().collect();
        let b: Vec<_> = gen_tensor_stream(&tcfg, 5).unwrap().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(SynthMatrixConfig::new(4, 5, 0.0, 0.5, 0).validate().is_err());
        assert!(SynthMatrixConfig::new(4, 2, 0.0, 0.0, 0).validate().is_err());
        assert!(SynthMatrixConfig::new(4, 2, 0.0, 1.5, 0).validate().is_err());
        assert!(SynthMatrixConfig::new(4, 2, -1.0, 0.5, 0).validate().is_err());
        assert!(gen_matrix_stream(&SynthMatrixConfig::new(0, 0, 0.0, 0.5, 0), 1).is_err());
        assert!(SynthTensorConfig::new(3, 2, 3, 0.0, 0.5, 0).validate().is_err());
        assert!(gen_tensor_stream(&SynthTensorConfig::new(3, 3, 1, 0.0, 0.0, 0), 1).is_err());
    }

    #[test]
    fn redraw_changes_basis() {
        let mut cfg = SynthMatrixConfig::new(10, 2, 0.0, 1.0, 3);
        cfg.change_at = Some(3);
        let mut stream = gen_matrix_stream(&cfg, 5).unwrap();
        let before = stream.basis();
        stream.next();
        stream.next();
        assert_eq!(stream.basis(), before);
        stream.next();
        assert_ne!(stream.basis(), before);
    }

    #[test]
    fn rank_one_slices() {
        let cfg = SynthTensorConfig::new(2, 2, 1, 0.0, 1.0, 9);
        for s in gen_tensor_stream(&cfg, 10).unwrap() {
            let det = s.truth[(0, 0)] * s.truth[(1, 1)] - s.truth[(0, 1)] * s.truth[(1, 0)];
            assert!(det.abs() < 1e-12 * (1.0 + s.truth.norm_squared()));
            assert!(s.truth.norm() > 0.0);
            for &(m, n, v) in s.obs.entries() {
                assert_eq!(v, s.truth[(m, n)]);
            }
        }
    }
}
