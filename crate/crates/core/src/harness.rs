//! Seeded Monte-Carlo experiments: train/test splitting, metrics,
//! replication loops and report tables.
//!
//! Every replication draws its data from a seed derived from the base seed
//! and the replication index, and results are reduced in index order, so a
//! table depends only on the plan, never on thread scheduling.

use std::fmt::Write as _;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::FunctionalDataset;
use crate::error::{Error, Result};
use crate::estimators::{
    default_gamma, fit_fpcr, fit_grid_ols_with, fit_tikhonov, rkhs_error, FittedModel, ImpactRule,
    KernelChoice,
};
use crate::kernels::CovarianceKernel;
use crate::simulate::{derive_seed, estimate_hurst, generate, Scenario, ScenarioSpec, Truth};

pub const DEFAULT_REPLICATIONS: usize = 100;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Splits row indices `0..n` into a uniformly random training set of
/// `round(frac * n)` rows and a test set of the rest. Both are sorted.
pub fn split_indices(n: usize, frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::arg(format!(
            "train fraction {frac} is not in (0, 1)"
        )));
    }
    let n_train = (frac * n as f64).round() as usize;
    if n_train < 1 || n_train + 1 > n {
        return Err(Error::arg(format!(
            "a train fraction of {frac} on {n} observations leaves an empty train or test set"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Random train/test partition of a dataset, deterministic in `seed`.
pub fn split(
    data: &FunctionalDataset,
    frac: f64,
    seed: u64,
) -> Result<(FunctionalDataset, FunctionalDataset)> {
    let (train, test) = split_indices(data.n(), frac, seed)?;
    Ok((data.select(&train), data.select(&test)))
}

/// Root mean squared prediction error on `test`.
pub fn prediction_error(model: &FittedModel, test: &FunctionalDataset) -> Result<f64> {
    if test.n() == 0 {
        return Err(Error::arg("test set is empty"));
    }
    let yhat = model.predict_all(test)?;
    Ok(rmse(test.y(), &yhat))
}

fn rmse(y: &DVector<f64>, yhat: &DVector<f64>) -> f64 {
    ((y - yhat).norm_squared() / y.len() as f64).sqrt()
}

/// `1 - (1 - R^2)(n - 1)/(n - p - 1)` with `R^2 = 1 - SSE/SST`.
pub fn adjusted_r2(y: &[f64], yhat: &[f64], p: usize) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::arg("response and prediction lengths differ"));
    }
    let n = y.len();
    if n < p + 2 {
        return Err(Error::arg(format!(
            "adjusted R^2 needs at least {} observations",
            p + 2
        )));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::domain("response has zero variance"));
    }
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    let r2 = 1.0 - sse / sst;
    Ok(1.0 - (1.0 - r2) * (n - 1) as f64 / (n - p - 1) as f64)
}

/// Regularisation level of a Tikhonov estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule {
    Fixed(f64),
    /// `n^(-1/5)` with `n` the training sample size.
    Rate,
}

impl GammaRule {
    pub fn gamma(self, n: usize) -> f64 {
        match self {
            Self::Fixed(g) => g,
            Self::Rate => default_gamma(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    GridOls {
        p: usize,
    },
    Fpcr {
        q: usize,
    },
    Tikhonov {
        gamma: GammaRule,
        kernel: KernelChoice,
    },
}

impl EstimatorSpec {
    pub fn label(&self) -> String {
        match self {
            Self::GridOls { p } => format!("p={p}"),
            Self::Fpcr { q } => format!("L2_{q}"),
            Self::Tikhonov { gamma, kernel } => {
                let g = match gamma {
                    GammaRule::Fixed(g) => format!("{g}"),
                    GammaRule::Rate => "n^-0.2".to_string(),
                };
                let k = match kernel {
                    KernelChoice::Empirical => "empirical",
                    KernelChoice::Supplied(_) => "oracle",
                };
                format!("tikhonov({k},{g})")
            }
        }
    }

    fn fit(
        &self,
        train: &FunctionalDataset,
        rule: ImpactRule,
        intercept: bool,
    ) -> Result<FittedModel> {
        match self {
            Self::GridOls { p } => fit_grid_ols_with(train, *p, intercept, rule),
            Self::Fpcr { q } => fit_fpcr(train, *q),
            Self::Tikhonov { gamma, kernel } => fit_tikhonov(train, gamma.gamma(train.n()), kernel),
        }
    }

    /// Parameter count used in adjusted R². Tikhonov fits report plain R².
    fn r2_parameters(&self) -> usize {
        match self {
            Self::GridOls { p } => *p,
            Self::Fpcr { q } => *q,
            Self::Tikhonov { .. } => 0,
        }
    }
}

/// Mean and Monte-Carlo standard error of a replicated quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// `sd / sqrt(replications)`; zero for a single replication.
    pub mc_se: f64,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Self {
        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let mc_se = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
            (var / r).sqrt()
        } else {
            0.0
        };
        Self { mean, mc_se }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    PredictionError,
    AdjustedR2,
    RkhsError,
}

impl Metric {
    pub fn key(self) -> &'static str {
        match self {
            Self::PredictionError => "prediction_error",
            Self::AdjustedR2 => "adjusted_r2",
            Self::RkhsError => "rkhs_error",
        }
    }

    fn heading(self) -> &'static str {
        match self {
            Self::PredictionError => "Prediction error (test RMSE)",
            Self::AdjustedR2 => "Adjusted R^2 (training)",
            Self::RkhsError => "Squared RKHS error ||alpha_hat - alpha||_K^2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub estimator: String,
    pub n: usize,
    pub prediction_error: Option<Estimate>,
    pub adjusted_r2: Option<Estimate>,
    pub rkhs_error: Option<Estimate>,
}

impl ReportRow {
    pub fn metric(&self, metric: Metric) -> Option<Estimate> {
        match metric {
            Metric::PredictionError => self.prediction_error,
            Metric::AdjustedR2 => self.adjusted_r2,
            Metric::RkhsError => self.rkhs_error,
        }
    }
}

/// Per-(estimator, n) Monte-Carlo means with their standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub title: String,
    pub seed: u64,
    pub replications: usize,
    pub grid_size: usize,
    pub estimators: Vec<String>,
    pub n_list: Vec<usize>,
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    pub fn row(&self, estimator: &str, n: usize) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.n == n)
    }

    pub fn get(&self, estimator: &str, n: usize, metric: Metric) -> Option<Estimate> {
        self.row(estimator, n).and_then(|r| r.metric(metric))
    }

    fn metrics(&self) -> Vec<Metric> {
        [
            Metric::PredictionError,
            Metric::AdjustedR2,
            Metric::RkhsError,
        ]
        .into_iter()
        .filter(|&m| self.rows.iter().any(|r| r.metric(m).is_some()))
        .collect()
    }

    /// Wide CSV: one line per (metric, estimator), a mean and an MC-SE column per n.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,estimator");
        for n in &self.n_list {
            let _ = write!(out, ",n{n},n{n}_se");
        }
        out.push('\n');
        for metric in self.metrics() {
            for est in &self.estimators {
                let _ = write!(out, "{},{}", metric.key(), est);
                for &n in &self.n_list {
                    match self.get(est, n, metric) {
                        Some(e) => {
                            let _ = write!(out, ",{},{}", e.mean, e.mc_se);
                        }
                        None => out.push_str(",,"),
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    /// Aligned markdown, one table per metric, cells `mean (MC-SE)`.
    pub fn to_markdown(&self) -> String {
        let mut out = format!(
            "## {}\n\nseed = {}, replications = {}, grid size = {}\n",
            self.title, self.seed, self.replications, self.grid_size
        );
        for metric in self.metrics() {
            let mut lines: Vec<Vec<String>> = Vec::new();
            let mut header = vec!["estimator".to_string()];
            header.extend(self.n_list.iter().map(|n| format!("n={n}")));
            lines.push(header);
            for est in &self.estimators {
                let mut line = vec![est.clone()];
                for &n in &self.n_list {
                    line.push(match self.get(est, n, metric) {
                        Some(e) => format!("{:.5} ({:.5})", e.mean, e.mc_se),
                        None => "-".to_string(),
                    });
                }
                lines.push(line);
            }
            let ncol = lines[0].len();
            let widths: Vec<usize> = (0..ncol)
                .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
                .collect();
            let _ = write!(out, "\n### {}\n\n", metric.heading());
            for (k, line) in lines.iter().enumerate() {
                let cells: Vec<String> = line
                    .iter()
                    .enumerate()
                    .map(|(c, s)| {
                        if c == 0 {
                            format!("{:<w$}", s, w = widths[c])
                        } else {
                            format!("{:>w$}", s, w = widths[c])
                        }
                    })
                    .collect();
                let _ = writeln!(out, "| {} |", cells.join(" | "));
                if k == 0 {
                    let rule: Vec<String> = widths
                        .iter()
                        .enumerate()
                        .map(|(c, &w)| {
                            if c == 0 {
                                "-".repeat(w)
                            } else {
                                format!("{}:", "-".repeat(w - 1))
                            }
                        })
                        .collect();
                    let _ = writeln!(out, "| {} |", rule.join(" | "));
                }
            }
        }
        out
    }
}

/// Runs `body` on a pool of `threads` workers, or on the global pool when `None`.
fn with_pool<T: Send>(threads: Option<usize>, body: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(body()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::numeric(format!("could not start worker pool: {e}")))?;
            Ok(pool.install(body))
        }
    }
}

/// Seed of replication `rep` in column `column` of a table.
fn replication_seed(base: u64, column: usize, rep: usize) -> u64 {
    derive_seed(derive_seed(base, column as u64), rep as u64)
}

/// A prediction experiment: regenerate, split, fit, evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub title: String,
    /// Template; `n` and `seed` are overridden per replication.
    pub scenario: ScenarioSpec,
    pub estimators: Vec<EstimatorSpec>,
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub train_frac: f64,
    pub base_seed: u64,
    pub impact_rule: ImpactRule,
    pub intercept: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl ExperimentPlan {
    pub fn new(scenario: ScenarioSpec, estimators: Vec<EstimatorSpec>, n_list: Vec<usize>) -> Self {
        Self {
            title: format!("Scenario {}", scenario.scenario),
            base_seed: scenario.seed,
            scenario,
            estimators,
            n_list,
            replications: DEFAULT_REPLICATIONS,
            train_frac: DEFAULT_TRAIN_FRACTION,
            impact_rule: ImpactRule::LeftEndpoints,
            intercept: true,
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::arg("replications must be at least 1"));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::arg("train fraction must lie in (0, 1)"));
        }
        if self.estimators.is_empty() || self.n_list.is_empty() {
            return Err(Error::arg(
                "plan needs at least one estimator and one sample size",
            ));
        }
        Ok(())
    }
}

/// Per-replication (prediction error, adjusted R²) for every estimator.
fn prediction_replication(plan: &ExperimentPlan, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let spec = plan.scenario.clone().with_n(n).with_seed(seed);
    let generated = generate(&spec)?;
    let (train, test) = split(
        &generated.data,
        plan.train_frac,
        derive_seed(seed, u64::MAX),
    )?;
    plan.estimators
        .iter()
        .map(|est| {
            let model = est.fit(&train, plan.impact_rule, plan.intercept)?;
            let err = prediction_error(&model, &test)?;
            let fitted = model.predict_all(&train)?;
            let r2 = adjusted_r2(train.y().as_slice(), fitted.as_slice(), est.r2_parameters())?;
            Ok((err, r2))
        })
        .collect()
}

/// Runs every (estimator, n) cell of `plan` and averages over replications.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ReportTable> {
    plan.validate()?;
    let mut rows = Vec::new();
    for (col, &n) in plan.n_list.iter().enumerate() {
        let reps: Vec<Vec<(f64, f64)>> = with_pool(plan.threads, || {
            (0..plan.replications)
                .into_par_iter()
                .map(|r| prediction_replication(plan, n, replication_seed(plan.base_seed, col, r)))
                .collect::<Result<Vec<_>>>()
        })??;
        for (k, est) in plan.estimators.iter().enumerate() {
            let errs: Vec<f64> = reps.iter().map(|r| r[k].0).collect();
            let r2s: Vec<f64> = reps.iter().map(|r| r[k].1).collect();
            rows.push(ReportRow {
                estimator: est.label(),
                n,
                prediction_error: Some(Estimate::from_values(&errs)),
                adjusted_r2: Some(Estimate::from_values(&r2s)),
                rkhs_error: None,
            });
        }
    }
    Ok(ReportTable {
        title: plan.title.clone(),
        seed: plan.base_seed,
        replications: plan.replications,
        grid_size: plan.scenario.m,
        estimators: plan.estimators.iter().map(EstimatorSpec::label).collect(),
        n_list: plan.n_list.clone(),
        rows,
    })
}

/// Which kernel the RKHS error is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    /// The true fractional Brownian kernel.
    Known,
    /// fBM kernel with the Hurst exponent estimated from `Var X(1/2)`.
    Estimated,
}

/// An estimation-error experiment for the finite-dimensional scenarios:
/// grid least squares on the full sample, squared RKHS distance to the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct RkhsPlan {
    pub title: String,
    /// Template (Scenario 2a or 2b); `n`, `seed` and extra grid points are overridden.
    pub scenario: ScenarioSpec,
    pub p_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub kernel_mode: KernelMode,
    pub replications: usize,
    pub base_seed: u64,
    pub intercept: bool,
    pub threads: Option<usize>,
}

impl RkhsPlan {
    pub fn new(
        scenario: ScenarioSpec,
        p_list: Vec<usize>,
        n_list: Vec<usize>,
        kernel_mode: KernelMode,
    ) -> Self {
        let known = match kernel_mode {
            KernelMode::Known => "known",
            KernelMode::Estimated => "unknown",
        };
        Self {
            title: format!("Scenario {}, K {known}", scenario.scenario),
            base_seed: scenario.seed,
            scenario,
            p_list,
            n_list,
            kernel_mode,
            replications: DEFAULT_REPLICATIONS,
            intercept: false,
            threads: None,
        }
    }
}

fn rkhs_replication(plan: &RkhsPlan, n: usize, seed: u64) -> Result<Vec<f64>> {
    let rule = ImpactRule::RightEndpoints;
    let extra: Vec<f64> = plan
        .p_list
        .iter()
        .flat_map(|&p| rule.points(0.0, 1.0, p))
        .collect();
    let spec = plan
        .scenario
        .clone()
        .with_n(n)
        .with_seed(seed)
        .with_extra_points(extra);
    let generated = generate(&spec)?;
    let Truth::Expansion(truth) = generated.truth else {
        return Err(Error::arg(
            "RKHS error experiments need a finite kernel-expansion truth",
        ));
    };
    let kernel = match plan.kernel_mode {
        KernelMode::Known => spec.kernel()?,
        KernelMode::Estimated => CovarianceKernel::fbm(estimate_hurst(&generated.data)?)?,
    };
    plan.p_list
        .iter()
        .map(|&p| {
            let fit = fit_grid_ols_with(&generated.data, p, plan.intercept, rule)?;
            rkhs_error(&fit, &truth, &kernel)
        })
        .collect()
}

/// Mean squared RKHS estimation error of grid least squares per (p, n).
pub fn run_rkhs_experiment(plan: &RkhsPlan) -> Result<ReportTable> {
    if !matches!(plan.scenario.scenario, Scenario::S2a | Scenario::S2b) {
        return Err(Error::arg(
            "RKHS error experiments are defined for scenarios 2a and 2b",
        ));
    }
    if plan.replications == 0 || plan.p_list.is_empty() || plan.n_list.is_empty() {
        return Err(Error::arg(
            "plan needs replications, p values and sample sizes",
        ));
    }
    let mut rows = Vec::new();
    for (col, &n) in plan.n_list.iter().enumerate() {
        let reps: Vec<Vec<f64>> = with_pool(plan.threads, || {
            (0..plan.replications)
                .into_par_iter()
                .map(|r| rkhs_replication(plan, n, replication_seed(plan.base_seed, col, r)))
                .collect::<Result<Vec<_>>>()
        })??;
        for (k, &p) in plan.p_list.iter().enumerate() {
            let vals: Vec<f64> = reps.iter().map(|r| r[k]).collect();
            rows.push(ReportRow {
                estimator: format!("p={p}"),
                n,
                prediction_error: None,
                adjusted_r2: None,
                rkhs_error: Some(Estimate::from_values(&vals)),
            });
        }
    }
    Ok(ReportTable {
        title: plan.title.clone(),
        seed: plan.base_seed,
        replications: plan.replications,
        grid_size: plan.scenario.m,
        estimators: plan.p_list.iter().map(|p| format!("p={p}")).collect(),
        n_list: plan.n_list.clone(),
        rows,
    })
}
