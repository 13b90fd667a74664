//! Small dense linear algebra over any [`Scalar`].

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::error::{FinslerError, Result};
use crate::scalar::Scalar;

/// Relative pivot floor for the Cholesky factorization.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Lower Cholesky factor of a symmetric positive-definite matrix.
///
/// Fails when a pivot drops below `PIVOT_FLOOR · trace`.
pub fn cholesky<S: Scalar>(a: &Array2<S>) -> Result<Array2<S>> {
    let n = a.nrows();
    let trace: f64 = (0..n).map(|i| a[[i, i]].re()).sum();
    let floor = PIVOT_FLOOR * trace.abs().max(f64::MIN_POSITIVE);
    let mut l = Array2::from_elem((n, n), S::zero());
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d.re() > floor) {
            return Err(FinslerError::NotPositiveDefinite(format!(
                "pivot {j} = {:e} (floor {floor:e})",
                d.re()
            )));
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn spd_inverse<S: Scalar>(a: &Array2<S>) -> Result<Array2<S>> {
    let n = a.nrows();
    let l = cholesky(a)?;
    let mut inv = Array2::from_elem((n, n), S::zero());
    for col in 0..n {
        // forward: L z = e_col
        let mut z = vec![S::zero(); n];
        for i in 0..n {
            let mut s = if i == col { S::one() } else { S::zero() };
            for k in 0..i {
                s -= l[[i, k]] * z[k];
            }
            z[i] = s / l[[i, i]];
        }
        // backward: Lᵀ w = z
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= l[[k, i]] * inv[[k, col]];
            }
            inv[[i, col]] = s / l[[i, i]];
        }
    }
    Ok(inv)
}

/// Determinant of a symmetric positive-definite matrix.
pub fn spd_det<S: Scalar>(a: &Array2<S>) -> Result<S> {
    let l = cholesky(a)?;
    let mut d = S::one();
    for i in 0..a.nrows() {
        d *= l[[i, i]];
    }
    Ok(d * d)
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eigenvalue(a: &Array2<f64>) -> f64 {
    eigenvalues(a).into_iter().fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of a real symmetric matrix in ascending order.
pub fn eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[[i, j]] + a[[j, i]]));
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn max_abs<'a, I: IntoIterator<Item = &'a f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}
