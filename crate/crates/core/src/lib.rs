//! Scalar-on-function linear regression in the reproducing kernel Hilbert
//! space of the regressor's covariance function.
//!
//! The model is `Y = <X, alpha>_K + eps`, where `alpha` lives in the RKHS
//! `H_K` generated by the covariance kernel `K` of the process `X`. The crate
//! provides:
//!
//! * [`kernels`]: Brownian, fractional Brownian and empirical covariance
//!   kernels, Gram matrices on grids.
//! * [`operator`]: the grid discretisation of the integral operator
//!   `(Kf)(t) = int K(t,s) f(s) ds`, its eigensystem and the Tikhonov
//!   resolvent.
//! * [`rkhs`]: finite kernel expansions `sum_j beta_j K(t_j, .)`, their RKHS
//!   inner products and the action of the inverse Loeve map on them.
//! * [`estimators`]: cross-covariance, oracle and plug-in Tikhonov, grid and
//!   impact-point least squares, functional principal component regression.
//! * [`simulate`]: Gaussian process sampling and the benchmark scenarios.
//! * [`harness`]: seeded, parallel Monte-Carlo experiments and report tables.
//! * [`io`]: the dataset CSV format.
//!
//! Everything works on the fixed domain `[0, 1]`.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod lstsq;
pub mod operator;
pub mod rkhs;
pub mod simulate;

pub use data::FunctionalDataset;
pub use error::{Error, Result};
pub use estimators::{FittedModel, ImpactRule, KernelChoice};
pub use grid::Grid;
pub use harness::{ExperimentPlan, ReportTable};
pub use kernels::CovarianceKernel;
pub use operator::{DiscreteOperator, EigenSystem};
pub use rkhs::{GridFunction, KernelExpansion};
pub use simulate::{Scenario, ScenarioSpec};

/// Matrix and vector types used throughout the crate.
pub use nalgebra::{DMatrix, DVector};
