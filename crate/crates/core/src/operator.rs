//! Grid discretisation of the covariance integral operator
//! `(Kf)(t) = int_0^1 K(t, s) f(s) ds`.
//!
//! The quadrature is the left-Riemann rule with uniform weight `1/m`, so the
//! operator matrix is `Gram / m` and its eigenvalues estimate those of the
//! integral operator.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::{gram, symmetrize, CovarianceKernel};

/// Relative cut-off below which eigenvalues are treated as numerical noise.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 10_000;

/// `(1/m) sum_i a_i b_i`: the quadrature approximation of `<a, b>_2`.
pub fn quad_inner(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

/// Quadrature L2 norm.
pub fn quad_norm(a: &[f64]) -> f64 {
    quad_inner(a, a).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    grid: Grid,
    matrix: DMatrix<f64>,
}

impl DiscreteOperator {
    /// Discretises the integral operator of `kernel` on a uniform grid.
    pub fn discretize(kernel: &CovarianceKernel, grid: &Grid) -> Result<Self> {
        if !grid.is_uniform() {
            return Err(Error::arg(
                "operator discretisation requires a uniform grid",
            ));
        }
        let m = grid.len() as f64;
        let matrix = gram(kernel, grid)? / m;
        Ok(Self {
            grid: grid.clone(),
            matrix,
        })
    }

    /// Wraps an already-scaled operator matrix. The matrix is symmetrised.
    pub fn from_matrix(grid: Grid, mut matrix: DMatrix<f64>) -> Result<Self> {
        if !grid.is_uniform() {
            return Err(Error::arg(
                "operator discretisation requires a uniform grid",
            ));
        }
        if matrix.nrows() != grid.len() || matrix.ncols() != grid.len() {
            return Err(Error::arg("operator matrix must be m x m"));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(Error::arg("operator matrix is not symmetric"));
        }
        symmetrize(&mut matrix);
        Ok(Self { grid, matrix })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::arg(format!(
                "vector of length {len} does not match operator grid of {} points",
                self.dim()
            )));
        }
        Ok(())
    }

    /// `(Kf)(t_i) ~ (1/m) sum_k K(t_i, t_k) f(t_k)`.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f.len())?;
        let v = &self.matrix * DVector::from_column_slice(f);
        Ok(v.iter().copied().collect())
    }

    /// Spectral decomposition; eigenvalues below `rank_tol * lambda_1` are dropped.
    pub fn eigen(&self, rank_tol: f64) -> Result<EigenSystem> {
        let m = self.dim();
        let eig = SymmetricEigen::try_new(self.matrix.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
            .ok_or_else(|| Error::numeric("symmetric eigensolver did not converge"))?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let top = eig.eigenvalues[order[0]];
        let keep: Vec<usize> = if top > 0.0 {
            order
                .into_iter()
                .take_while(|&k| eig.eigenvalues[k] >= rank_tol * top && eig.eigenvalues[k] > 0.0)
                .collect()
        } else {
            Vec::new()
        };

        let scale = (m as f64).sqrt();
        let mut vectors = DMatrix::zeros(m, keep.len());
        for (c, &k) in keep.iter().enumerate() {
            let mut v = eig.eigenvectors.column(k).into_owned() * scale;
            orient(&mut v);
            vectors.set_column(c, &v);
        }
        Ok(EigenSystem {
            grid: self.grid.clone(),
            eigenvalues: keep.iter().map(|&k| eig.eigenvalues[k]).collect(),
            eigenfunctions: vectors,
        })
    }

    /// Solves `(M + gamma I) x = M g`: the Tikhonov filter applied to `g`.
    pub fn tikhonov_apply(&self, gamma: f64, g: &[f64]) -> Result<Vec<f64>> {
        if !(gamma > 0.0) {
            return Err(Error::arg(format!(
                "regularisation gamma = {gamma} must be positive"
            )));
        }
        self.check_len(g.len())?;
        let m = self.dim();
        let shifted = &self.matrix + DMatrix::identity(m, m) * gamma;
        let chol = Cholesky::new(shifted)
            .ok_or_else(|| Error::numeric("(M + gamma I) is not positive definite"))?;
        let rhs = &self.matrix * DVector::from_column_slice(g);
        Ok(chol.solve(&rhs).iter().copied().collect())
    }

    /// Operator 2-norm of `(M + gamma I)^-1`.
    pub fn resolvent_norm(&self, gamma: f64) -> Result<f64> {
        let m = self.dim();
        let shifted = &self.matrix + DMatrix::identity(m, m) * gamma;
        let eig = SymmetricEigen::try_new(shifted, EIGEN_EPS, EIGEN_MAX_ITER)
            .ok_or_else(|| Error::numeric("symmetric eigensolver did not converge"))?;
        let smallest = eig.eigenvalues.min();
        if smallest <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(1.0 / smallest)
    }

    /// Checks `||(M + gamma I)^-1|| <= 1/gamma` up to a relative `1e-10`.
    pub fn resolvent_norm_bound_check(&self, gamma: f64) -> bool {
        gamma > 0.0
            && self
                .resolvent_norm(gamma)
                .map(|norm| norm <= (1.0 / gamma) * (1.0 + 1e-10))
                .unwrap_or(false)
    }
}

/// Flips `v` so its first non-negligible entry is positive.
fn orient(v: &mut DVector<f64>) {
    let thresh = 1e-8 * v.amax();
    if let Some(&first) = v.iter().find(|x| x.abs() > thresh) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Eigenpairs of a discrete operator, eigenvalues in descending order,
/// eigenfunctions sampled on the grid with unit quadrature norm.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    grid: Grid,
    eigenvalues: Vec<f64>,
    eigenfunctions: DMatrix<f64>,
}

impl EigenSystem {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are the eigenfunctions.
    pub fn eigenfunctions(&self) -> &DMatrix<f64> {
        &self.eigenfunctions
    }

    pub fn eigenfunction(&self, j: usize) -> Vec<f64> {
        self.eigenfunctions.column(j).iter().copied().collect()
    }

    /// Number of retained eigenpairs.
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Quadrature coefficients `<f, e_j>` for `j < n_terms`.
    pub fn coefficients(&self, f: &[f64], n_terms: usize) -> Vec<f64> {
        (0..n_terms.min(self.rank()))
            .map(|j| quad_inner(f, self.eigenfunctions.column(j).as_slice()))
            .collect()
    }
}
