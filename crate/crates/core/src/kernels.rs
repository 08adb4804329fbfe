//! Covariance kernels and their Gram matrices.

use nalgebra::DMatrix;

use crate::data::FunctionalDataset;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Covariance function `K(s, t)` of a centered process on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceKernel {
    /// Standard Brownian motion, `K(s, t) = min(s, t)`.
    Brownian,
    /// Fractional Brownian motion,
    /// `K(s, t) = (|s|^2H + |t|^2H - |t - s|^2H) / 2`.
    FractionalBrownian { hurst: f64 },
    /// A kernel known only on a grid, e.g. the sample covariance.
    Empirical { grid: Grid, values: DMatrix<f64> },
}

impl CovarianceKernel {
    pub fn fbm(hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::arg(format!(
                "Hurst exponent {hurst} is not in (0, 1)"
            )));
        }
        Ok(Self::FractionalBrownian { hurst })
    }

    /// Builds an empirical kernel from its values on `grid`.
    pub fn empirical(grid: Grid, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != grid.len() || values.ncols() != grid.len() {
            return Err(Error::arg("empirical kernel values must be m x m"));
        }
        Ok(Self::Empirical { grid, values })
    }

    /// Evaluates `K(s, t)`.
    ///
    /// Empirical kernels snap `s` and `t` to their grid and fail with a
    /// domain error when either is farther than half a grid spacing away.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        match self {
            Self::Empirical { grid, values } => {
                let i = grid.snap(s)?;
                let j = grid.snap(t)?;
                Ok(values[(i, j)])
            }
            _ => Ok(self.eval_closed(s, t)),
        }
    }

    fn eval_closed(&self, s: f64, t: f64) -> f64 {
        match *self {
            Self::Brownian => s.min(t),
            Self::FractionalBrownian { hurst } => {
                let e = 2.0 * hurst;
                0.5 * (s.abs().powf(e) + t.abs().powf(e) - (t - s).abs().powf(e))
            }
            Self::Empirical { .. } => unreachable!("empirical kernels are evaluated by lookup"),
        }
    }

    /// Whether the kernel has a closed form valid at every point of `[0, 1]`.
    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Self::Empirical { .. })
    }
}

/// Gram matrix `[K(t_i, t_j)]` over arbitrary points, exactly symmetric.
pub fn gram_points(kernel: &CovarianceKernel, points: &[f64]) -> Result<DMatrix<f64>> {
    let m = points.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = kernel.eval(points[i], points[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Gram matrix of `kernel` on `grid`.
pub fn gram(kernel: &CovarianceKernel, grid: &Grid) -> Result<DMatrix<f64>> {
    gram_points(kernel, grid.points())
}

/// Sample covariance kernel `K(s,t) = n^-1 sum_i Xc_i(s) Xc_i(t)` of the
/// pointwise-centered trajectories.
pub fn empirical_kernel(data: &FunctionalDataset) -> Result<CovarianceKernel> {
    data.require_nonempty()?;
    let n = data.n() as f64;
    let mut xc = data.x().clone();
    for mut col in xc.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let mut values = xc.tr_mul(&xc) / n;
    symmetrize(&mut values);
    CovarianceKernel::empirical(data.grid().clone(), values)
}

pub(crate) fn symmetrize(a: &mut DMatrix<f64>) {
    let m = a.nrows();
    for i in 0..m {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}
