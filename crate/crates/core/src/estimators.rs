//! Slope estimators for the functional linear model and prediction.
//!
//! * [`cross_covariance`]: the sample cross-covariance `(1/n) sum Y_i X_i(t)`,
//!   which estimates `alpha` but does not itself lie in `H_K`.
//! * [`fit_tikhonov`]: `(K + gamma I)^-1 K` applied to the cross-covariance,
//!   either with a supplied kernel (the oracle estimator) or with the sample
//!   covariance kernel (the plug-in estimator).
//! * [`fit_grid_ols`] / [`fit_impact_ols`]: least squares on the marginals
//!   `X(t_1), ..., X(t_p)`, equivalent to a finite kernel-expansion slope.
//! * [`fit_fpcr`]: regression on the leading principal component scores.

use nalgebra::{DMatrix, DVector};

use crate::data::FunctionalDataset;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::{empirical_kernel, CovarianceKernel};
use crate::lstsq;
use crate::operator::{quad_inner, DiscreteOperator, DEFAULT_RANK_TOL};
use crate::rkhs::{rkhs_norm_sq, GridFunction, KernelExpansion};

/// How `p` equispaced impact points are laid over an observation range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImpactRule {
    /// `lo + (hi - lo) j / p` for `j = 1..=p`: includes `hi`, excludes `lo`.
    #[default]
    RightEndpoints,
    /// `lo + (hi - lo) (j - 1) / p` for `j = 1..=p`: includes `lo`, excludes `hi`.
    LeftEndpoints,
}

impl ImpactRule {
    pub fn points(self, lo: f64, hi: f64, p: usize) -> Vec<f64> {
        let offset = match self {
            Self::RightEndpoints => 1.0,
            Self::LeftEndpoints => 0.0,
        };
        (0..p)
            .map(|j| lo + (hi - lo) * (j as f64 + offset) / p as f64)
            .collect()
    }
}

/// Kernel used by the Tikhonov estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelChoice {
    /// A known covariance kernel (the oracle estimator).
    Supplied(CovarianceKernel),
    /// The sample covariance kernel of the training trajectories.
    Empirical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    /// Least squares on the marginals at `points` (grid indices `indices`).
    GridOls {
        grid: Grid,
        intercept: f64,
        points: Vec<f64>,
        indices: Vec<usize>,
        coefficients: Vec<f64>,
    },
    /// Tikhonov-regularised slope; predictions use the quadrature pairing
    /// `(1/m) sum alpha_hat(t_j) x(t_j)`.
    Tikhonov { alpha_hat: GridFunction, gamma: f64 },
    /// Principal component regression on `q` components.
    Fpcr {
        intercept: f64,
        q: usize,
        score_coefs: Vec<f64>,
        beta_fn: GridFunction,
    },
}

impl FittedModel {
    pub fn grid(&self) -> &Grid {
        match self {
            Self::GridOls { grid, .. } => grid,
            Self::Tikhonov { alpha_hat, .. } => alpha_hat.grid(),
            Self::Fpcr { beta_fn, .. } => beta_fn.grid(),
        }
    }

    /// Number of slope parameters (`p` or `q`), as used by adjusted R².
    pub fn num_parameters(&self) -> usize {
        match self {
            Self::GridOls { coefficients, .. } => coefficients.len(),
            Self::Tikhonov { alpha_hat, .. } => alpha_hat.grid().len(),
            Self::Fpcr { q, .. } => *q,
        }
    }

    /// Predicted response for a trajectory observed on the training grid.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.grid().len() {
            return Err(Error::arg(format!(
                "trajectory has {} values but the model grid has {} points",
                x.len(),
                self.grid().len()
            )));
        }
        Ok(match self {
            Self::GridOls {
                intercept,
                indices,
                coefficients,
                ..
            } => {
                intercept
                    + indices
                        .iter()
                        .zip(coefficients)
                        .map(|(&i, b)| b * x[i])
                        .sum::<f64>()
            }
            Self::Tikhonov { alpha_hat, .. } => quad_inner(alpha_hat.values(), x),
            Self::Fpcr {
                intercept, beta_fn, ..
            } => intercept + quad_inner(beta_fn.values(), x),
        })
    }

    /// Predictions for every trajectory of `data`, which must share the model's grid.
    pub fn predict_all(&self, data: &FunctionalDataset) -> Result<DVector<f64>> {
        if data.grid() != self.grid() {
            return Err(Error::arg("dataset grid differs from the training grid"));
        }
        let mut out = DVector::zeros(data.n());
        for i in 0..data.n() {
            let row: Vec<f64> = data.x().row(i).iter().copied().collect();
            out[i] = self.predict(&row)?;
        }
        Ok(out)
    }

    /// The slope of a grid/impact-point fit as a kernel expansion under `kernel`.
    pub fn expansion(&self, kernel: CovarianceKernel) -> Result<KernelExpansion> {
        match self {
            Self::GridOls {
                points,
                coefficients,
                ..
            } => KernelExpansion::new(kernel, points.clone(), coefficients.clone()),
            _ => Err(Error::arg(
                "only grid least-squares fits are kernel expansions",
            )),
        }
    }
}

/// `alpha_tilde(t) = (1/n) sum_i Y_i X_i(t)`.
pub fn cross_covariance(data: &FunctionalDataset) -> Result<GridFunction> {
    data.require_nonempty()?;
    let v = data.x().tr_mul(data.y()) / data.n() as f64;
    GridFunction::new(data.grid().clone(), v.iter().copied().collect())
}

/// Tikhonov estimator `(K + gamma I)^-1 K alpha_tilde`.
pub fn fit_tikhonov(
    data: &FunctionalDataset,
    gamma: f64,
    kernel: &KernelChoice,
) -> Result<FittedModel> {
    if !(gamma > 0.0) {
        return Err(Error::arg(format!(
            "regularisation gamma = {gamma} must be positive"
        )));
    }
    let alpha_tilde = cross_covariance(data)?;
    let kernel = match kernel {
        KernelChoice::Supplied(k) => k.clone(),
        KernelChoice::Empirical => empirical_kernel(data)?,
    };
    let op = DiscreteOperator::discretize(&kernel, data.grid())?;
    let values = op.tikhonov_apply(gamma, alpha_tilde.values())?;
    Ok(FittedModel::Tikhonov {
        alpha_hat: GridFunction::new(data.grid().clone(), values)?,
        gamma,
    })
}

/// Least squares on `p` equispaced impact points `t_j = j/p` over the grid's range.
pub fn fit_grid_ols(data: &FunctionalDataset, p: usize, intercept: bool) -> Result<FittedModel> {
    fit_grid_ols_with(data, p, intercept, ImpactRule::RightEndpoints)
}

/// [`fit_grid_ols`] with an explicit impact-point layout.
pub fn fit_grid_ols_with(
    data: &FunctionalDataset,
    p: usize,
    intercept: bool,
    rule: ImpactRule,
) -> Result<FittedModel> {
    if p == 0 {
        return Err(Error::arg("p must be at least 1"));
    }
    if p > data.m() {
        return Err(Error::arg(format!(
            "p = {p} exceeds the {} grid points",
            data.m()
        )));
    }
    let grid = data.grid();
    let targets = rule.points(grid.first(), grid.last(), p);
    let indices: Vec<usize> = targets.iter().map(|&t| grid.nearest(t)).collect();
    ols_on_indices(data, indices, intercept)
}

/// Least squares on user-chosen impact points, which must snap to the grid.
pub fn fit_impact_ols(
    data: &FunctionalDataset,
    points: &[f64],
    intercept: bool,
) -> Result<FittedModel> {
    if points.is_empty() {
        return Err(Error::arg("at least one impact point is required"));
    }
    let indices = points
        .iter()
        .map(|&t| data.grid().snap(t))
        .collect::<Result<Vec<_>>>()?;
    ols_on_indices(data, indices, intercept)
}

fn ols_on_indices(
    data: &FunctionalDataset,
    indices: Vec<usize>,
    intercept: bool,
) -> Result<FittedModel> {
    data.require_nonempty()?;
    let offset = usize::from(intercept);
    let design = DMatrix::from_fn(data.n(), indices.len() + offset, |i, j| {
        if intercept && j == 0 {
            1.0
        } else {
            data.x()[(i, indices[j - offset])]
        }
    });
    let beta = lstsq::solve(&design, data.y())?;
    let points = indices.iter().map(|&i| data.grid().points()[i]).collect();
    Ok(FittedModel::GridOls {
        grid: data.grid().clone(),
        intercept: if intercept { beta[0] } else { 0.0 },
        points,
        indices,
        coefficients: beta.iter().skip(offset).copied().collect(),
    })
}

/// Functional principal component regression on `q` components of the
/// sample covariance operator, with intercept.
pub fn fit_fpcr(data: &FunctionalDataset, q: usize) -> Result<FittedModel> {
    data.require_nonempty()?;
    let op = DiscreteOperator::discretize(&empirical_kernel(data)?, data.grid())?;
    let es = op.eigen(DEFAULT_RANK_TOL)?;
    if q == 0 || q > es.rank() {
        return Err(Error::arg(format!(
            "q exceeds retained rank: q = {q}, retained rank = {}",
            es.rank()
        )));
    }
    let m = data.m() as f64;
    let basis = es.eigenfunctions().columns(0, q).into_owned();
    let scores = data.x() * &basis / m;
    let design = DMatrix::from_fn(data.n(), q + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            scores[(i, j - 1)]
        }
    });
    let b = lstsq::solve(&design, data.y())?;
    let score_coefs: Vec<f64> = b.iter().skip(1).copied().collect();
    let beta = &basis * DVector::from_column_slice(&score_coefs);
    Ok(FittedModel::Fpcr {
        intercept: b[0],
        q,
        score_coefs,
        beta_fn: GridFunction::new(data.grid().clone(), beta.iter().copied().collect())?,
    })
}

/// `||alpha_hat - alpha||_K^2` for a grid least-squares fit, computed under
/// `kernel` (the true kernel, or a plug-in estimate of it).
pub fn rkhs_error(
    fit: &FittedModel,
    truth: &KernelExpansion,
    kernel: &CovarianceKernel,
) -> Result<f64> {
    let fitted = fit.expansion(kernel.clone())?;
    let truth = truth.with_kernel(kernel.clone());
    rkhs_norm_sq(&fitted.difference(&truth)?)
}

/// Regularisation level `n^(-1/5)`.
///
/// Satisfies both `gamma^2 sqrt(n) -> inf` and `n gamma^2 -> inf`.
pub fn default_gamma(n: usize) -> f64 {
    (n.max(1) as f64).powf(-0.2)
}
