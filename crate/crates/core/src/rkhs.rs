//! Elements of the RKHS `H_K` in computable form.
//!
//! A [`KernelExpansion`] `alpha = sum_j beta_j K(t_j, .)` is an exact element
//! of `H_K`; its squared norm is `beta' K_T beta` by the reproducing property
//! `<K(., s), K(., t)>_K = K(s, t)`. Under the inverse Loeve map the same
//! expansion corresponds to the random variable `sum_j beta_j X(t_j)`, which
//! is what [`loeve_predict`] evaluates on a trajectory.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::CovarianceKernel;
use crate::operator::{quad_inner, EigenSystem};

/// Points closer than this are merged when building an expansion.
const MERGE_TOL: f64 = 1e-12;
/// Negative squared norms above `-NORM_CLAMP` are round-off and reported as 0.
const NORM_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelExpansion {
    kernel: CovarianceKernel,
    points: Vec<f64>,
    coefficients: Vec<f64>,
}

impl KernelExpansion {
    /// Builds `sum_j coefficients[j] K(points[j], .)`, merging duplicate points
    /// by summing their coefficients. Points are kept in first-seen order.
    pub fn new(kernel: CovarianceKernel, points: Vec<f64>, coefficients: Vec<f64>) -> Result<Self> {
        if points.len() != coefficients.len() {
            return Err(Error::arg(format!(
                "{} expansion points but {} coefficients",
                points.len(),
                coefficients.len()
            )));
        }
        if let Some(t) = points.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::domain(format!(
                "expansion point {t} is outside [0, 1]"
            )));
        }
        let mut merged_pts: Vec<f64> = Vec::with_capacity(points.len());
        let mut merged_coef: Vec<f64> = Vec::with_capacity(points.len());
        for (t, b) in points.into_iter().zip(coefficients) {
            match merged_pts.iter().position(|&s| (s - t).abs() <= MERGE_TOL) {
                Some(k) => merged_coef[k] += b,
                None => {
                    merged_pts.push(t);
                    merged_coef.push(b);
                }
            }
        }
        Ok(Self {
            kernel,
            points: merged_pts,
            coefficients: merged_coef,
        })
    }

    /// The single representer `K(t, .)`.
    pub fn representer(kernel: CovarianceKernel, t: f64) -> Result<Self> {
        Self::new(kernel, vec![t], vec![1.0])
    }

    pub fn zero(kernel: CovarianceKernel) -> Self {
        Self {
            kernel,
            points: Vec::new(),
            coefficients: Vec::new(),
        }
    }

    pub fn kernel(&self) -> &CovarianceKernel {
        &self.kernel
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same points and coefficients under a different kernel.
    pub fn with_kernel(&self, kernel: CovarianceKernel) -> Self {
        Self {
            kernel,
            points: self.points.clone(),
            coefficients: self.coefficients.clone(),
        }
    }

    /// `alpha(t) = sum_j beta_j K(t_j, t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (&s, &b) in self.points.iter().zip(&self.coefficients) {
            acc += b * self.kernel.eval(s, t)?;
        }
        Ok(acc)
    }

    /// Samples the expansion on every point of `grid`.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        grid.points().iter().map(|&t| self.eval(t)).collect()
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.require_same_kernel(other)?;
        let points = self.points.iter().chain(&other.points).copied().collect();
        let coefficients = self
            .coefficients
            .iter()
            .map(|c| a * c)
            .chain(other.coefficients.iter().map(|c| b * c))
            .collect();
        Self::new(self.kernel.clone(), points, coefficients)
    }

    /// `self - other`, on the union of the two point sets.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    fn require_same_kernel(&self, other: &Self) -> Result<()> {
        if self.kernel != other.kernel {
            return Err(Error::arg("expansions are built on different kernels"));
        }
        Ok(())
    }
}

/// `<a, b>_K = beta_a' K(points_a, points_b) beta_b`.
pub fn rkhs_inner(a: &KernelExpansion, b: &KernelExpansion) -> Result<f64> {
    a.require_same_kernel(b)?;
    let mut acc = 0.0;
    for (&s, &ba) in a.points.iter().zip(&a.coefficients) {
        for (&t, &bb) in b.points.iter().zip(&b.coefficients) {
            acc += ba * bb * a.kernel.eval(s, t)?;
        }
    }
    Ok(acc)
}

/// `||a||_K^2`, with round-off negatives clamped to zero.
pub fn rkhs_norm_sq(a: &KernelExpansion) -> Result<f64> {
    let v = rkhs_inner(a, a)?;
    Ok(if v < 0.0 && v > -NORM_CLAMP { 0.0 } else { v })
}

/// A function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::arg(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at the grid point `t` snaps to.
    pub fn at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.grid.snap(t)?])
    }

    /// Quadrature L2 norm `sqrt((1/m) sum f(t_i)^2)`.
    pub fn l2_norm(&self) -> f64 {
        quad_inner(&self.values, &self.values).sqrt()
    }

    /// Quadrature L2 distance to another function on the same grid.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::arg("functions live on different grids"));
        }
        let d: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(quad_inner(&d, &d).sqrt())
    }

    /// Largest absolute pointwise difference.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::arg("functions live on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Truncated spectral RKHS norm `sum_{j <= n_terms} <f, e_j>^2 / lambda_j`.
///
/// The truncation level is the caller's choice: the `1/lambda_j` weights
/// amplify noise in the trailing coefficients.
pub fn rkhs_norm_sq_spectral(f: &GridFunction, es: &EigenSystem, n_terms: usize) -> Result<f64> {
    if f.grid() != es.grid() {
        return Err(Error::arg(
            "function and eigensystem live on different grids",
        ));
    }
    if n_terms > es.rank() {
        return Err(Error::arg(format!(
            "n_terms = {n_terms} exceeds the retained rank {}",
            es.rank()
        )));
    }
    let coefs = es.coefficients(f.values(), n_terms);
    Ok(coefs
        .iter()
        .zip(es.eigenvalues())
        .map(|(c, lam)| c * c / lam)
        .sum())
}

/// `sum_j beta_j x(t_j)`: the noiseless response the model assigns to the
/// trajectory `x` observed on `grid`.
pub fn loeve_predict(a: &KernelExpansion, grid: &Grid, x: &[f64]) -> Result<f64> {
    if x.len() != grid.len() {
        return Err(Error::arg("trajectory length does not match its grid"));
    }
    let mut acc = 0.0;
    for (&t, &b) in a.points.iter().zip(&a.coefficients) {
        acc += b * x[grid.snap(t)?];
    }
    Ok(acc)
}
