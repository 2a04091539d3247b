//! Small dense kernels on row-major slices.
//!
//! The trackers solve many tiny `ρ×ρ` ridge systems per step. These routines
//! work on caller-owned scratch buffers so the hot loops never allocate.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// In-place Cholesky factorization `A = L L'` of a symmetric positive-definite
/// row-major `n×n` matrix. Only the lower triangle is read; on success it
/// holds `L`.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    let floor = (n as f64) * f64::EPSILON * scale;
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > floor) || d <= 0.0 {
            return Err(Error::Singular { dim: n });
        }
        let d = libm::sqrt(d);
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(())
}

/// Solve `L L' x = b` given the factor from [`cholesky_in_place`]; `b` is
/// overwritten with `x`.
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solve the SPD system `A x = b` in place. `a` is destroyed.
pub fn spd_solve(a: &mut [f64], n: usize, b: &mut [f64]) -> Result<()> {
    cholesky_in_place(a, n)?;
    cholesky_solve(a, n, b);
    Ok(())
}

/// Copy a row-major `rows×cols` buffer into a column-major `DMatrix`.
pub fn to_dmatrix(data: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

/// Row-major copy of a `DMatrix`.
pub fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn solves_small_spd_system() {
        // [[4,2],[2,3]] x = [2,1]  ->  x = [0.5, 0]
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![2.0, 1.0];
        spd_solve(&mut a, 2, &mut b).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-15);
        assert!(b[1].abs() < 1e-15);
    }

    #[test]
    fn rejects_singular() {
        let mut a = vec![1.0, 1.0, 1.0, 1.0];
        let mut b = vec![1.0, 1.0];
        assert_eq!(spd_solve(&mut a, 2, &mut b), Err(Error::Singular { dim: 2 }));
        let mut z = vec![0.0; 4];
        assert!(spd_solve(&mut z, 2, &mut b).is_err());
    }

    #[test]
    fn row_major_round_trip() {
        let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let m = to_dmatrix(&data, 2, 3);
        assert_eq!(m[(1, 0)], 4.0);
        assert_eq!(to_row_major(&m), data.to_vec());
    }
}
