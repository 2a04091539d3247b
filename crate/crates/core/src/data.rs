//! Observation types for incomplete vector and slice streams.
//!
//! Indices are 0-based everywhere in this crate. The 1-based convention of
//! the on-disk formats is handled by the readers and writers only.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One time step of an incomplete vector stream: the observed coordinates
/// `ω_t` of `y_t` and their values. An empty index set is a legal, fully
/// missing step.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedVector {
    t: usize,
    ambient_dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl MaskedVector {
    pub fn new(t: usize, ambient_dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidObservation("time index must be positive".into()));
        }
        if indices.len() != values.len() {
            return Err(Error::InvalidObservation(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidObservation(format!(
                    "indices not strictly increasing at {}",
                    w[1]
                )));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= ambient_dim {
                return Err(Error::InvalidObservation(format!(
                    "index {last} outside ambient dimension {ambient_dim}"
                )));
            }
        }
        Ok(Self { t, ambient_dim, indices, values })
    }

    pub fn empty(t: usize, ambient_dim: usize) -> Self {
        Self { t: t.max(1), ambient_dim, indices: Vec::new(), values: Vec::new() }
    }

    /// Keep the entries of `dense` selected by `mask`.
    pub fn from_dense(t: usize, dense: &[f64], mask: &[bool]) -> Result<Self> {
        if dense.len() != mask.len() {
            return Err(Error::DimensionMismatch { expected: dense.len(), found: mask.len() });
        }
        let (indices, values) = dense
            .iter()
            .zip(mask)
            .enumerate()
            .filter(|(_, (_, &m))| m)
            .map(|(i, (&v, _))| (i, v))
            .unzip();
        Self::new(t, dense.len(), indices, values)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// `P_ω(y)`: the observed values with zeros elsewhere.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient_dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut out = vec![false; self.ambient_dim];
        for &i in &self.indices {
            out[i] = true;
        }
        out
    }
}

/// One incomplete `M×N` tensor slice `Ω_t ⊙ Y_t`, stored as its observed
/// `(m, n, value)` triplets in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSlice {
    t: usize,
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl MaskedSlice {
    pub fn new(t: usize, dims: (usize, usize), mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        let (rows, cols) = dims;
        if t == 0 {
            return Err(Error::InvalidObservation("time index must be positive".into()));
        }
        for &(m, n, _) in &entries {
            if m >= rows || n >= cols {
                return Err(Error::InvalidObservation(format!(
                    "entry ({m}, {n}) outside {rows}x{cols} slice"
                )));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        for w in entries.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::InvalidObservation(format!(
                    "duplicate entry ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        Ok(Self { t, rows, cols, entries })
    }

    pub fn empty(t: usize, dims: (usize, usize)) -> Self {
        Self { t: t.max(1), rows: dims.0, cols: dims.1, entries: Vec::new() }
    }

    /// Keep the entries of `dense` where `mask` is true.
    pub fn from_dense(t: usize, dense: &DMatrix<f64>, mask: &DMatrix<bool>) -> Result<Self> {
        if dense.shape() != mask.shape() {
            return Err(Error::DimensionMismatch { expected: dense.len(), found: mask.len() });
        }
        let mut entries = Vec::new();
        for m in 0..dense.nrows() {
            for n in 0..dense.ncols() {
                if mask[(m, n)] {
                    entries.push((m, n, dense[(m, n)]));
                }
            }
        }
        Self::new(t, dense.shape(), entries)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `Ω_t ⊙ Y_t` as a dense matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for &(m, n, v) in &self.entries {
            out[(m, n)] = v;
        }
        out
    }

    pub fn mask(&self) -> DMatrix<bool> {
        let mut out = DMatrix::from_element(self.rows, self.cols, false);
        for &(m, n, _) in &self.entries {
            out[(m, n)] = true;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_vector_validation() {
        assert!(MaskedVector::new(1, 5, vec![1, 3], vec![0.5, 1.0]).is_ok());
        assert!(MaskedVector::new(1, 5, vec![3, 1], vec![0.5, 1.0]).is_err());
        assert!(MaskedVector::new(1, 5, vec![1, 1], vec![0.5, 1.0]).is_err());
        assert!(MaskedVector::new(1, 5, vec![5], vec![0.5]).is_err());
        assert!(MaskedVector::new(1, 5, vec![1], vec![]).is_err());
        assert!(MaskedVector::new(0, 5, vec![], vec![]).is_err());
        let empty = MaskedVector::new(3, 5, vec![], vec![]).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.to_dense(), vec![0.0; 5]);
    }

    #[test]
    fn masked_vector_dense_views() {
        let v = MaskedVector::from_dense(2, &[1.0, 2.0, 3.0], &[true, false, true]).unwrap();
        assert_eq!(v.indices(), &[0, 2]);
        assert_eq!(v.to_dense(), vec![1.0, 0.0, 3.0]);
        assert_eq!(v.mask(), vec![true, false, true]);
    }

    #[test]
    fn masked_slice_validation() {
        let s = MaskedSlice::new(1, (2, 3), vec![(1, 2, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(s.entries()[0], (0, 0, 2.0));
        assert!(MaskedSlice::new(1, (2, 3), vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(MaskedSlice::new(1, (2, 3), vec![(2, 0, 1.0)]).is_err());
        assert!(MaskedSlice::new(1, (2, 3), vec![(0, 3, 1.0)]).is_err());
        let d = s.to_dense();
        assert_eq!(d[(1, 2)], 1.0);
        assert_eq!(d[(0, 1)], 0.0);
    }
}
