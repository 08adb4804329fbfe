//! Minimum-norm linear least squares.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Solves `min ||A b - y||_2`, returning the minimum-norm minimiser.
///
/// Uses a singular value decomposition; singular values below
/// `max(rows, cols) * eps * sigma_max` are treated as zero, so rank-deficient
/// designs (duplicate or all-zero columns) get the minimum-norm solution.
pub fn solve(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != y.len() {
        return Err(Error::arg("design matrix and response lengths differ"));
    }
    if a.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = SVD::try_new(a.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::numeric("singular value decomposition did not converge"))?;
    let smax = svd.singular_values.max();
    let tol = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * smax;
    svd.solve(y, tol).map_err(|e| Error::numeric(e.to_string()))
}
