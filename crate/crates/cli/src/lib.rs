//! Command-line front end for `rkhs-flm-core`.
//!
//! ```text
//! rkhs-flm simulate  --scenario 2a --n 300 --seed 7 --out data.csv
//! rkhs-flm fit       --in data.csv --estimator impact-ols --points 0.2,0.4,0.9
//! rkhs-flm reproduce --table rkhs-2a-known --reps 100 --format md
//! ```

pub mod config;
pub mod tables;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rkhs_flm_core::estimators::{
    default_gamma, fit_fpcr, fit_grid_ols, fit_impact_ols, fit_tikhonov,
};
use rkhs_flm_core::harness::adjusted_r2;
use rkhs_flm_core::io::{read_dataset_file, write_dataset};
use rkhs_flm_core::simulate::generate;
use rkhs_flm_core::{
    CovarianceKernel, Error, FittedModel, FunctionalDataset, KernelChoice, Scenario, ScenarioSpec,
};

use config::Config;
use tables::{reproduce, ReproduceOptions, TableId};

/// Environment variable capping worker threads for `reproduce`.
pub const THREADS_ENV: &str = "RKHS_FLM_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files (exit code 1).
    Usage(String),
    /// A numerical routine failed (exit code 2).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Numeric(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Numeric(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numeric(_) => Self::Numeric(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rkhs-flm",
    version,
    about = "RKHS functional linear regression toolkit"
)]
pub struct Cli {
    /// Configuration file of key=value lines; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario dataset and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit an estimator to a CSV dataset and write a JSON summary.
    Fit(FitArgs),
    /// Rebuild one of the benchmark tables.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario: 1, 2a, 2b or 3 [default: 2a]
    #[arg(long)]
    pub scenario: Option<String>,
    /// Number of trajectories [default: 100]
    #[arg(long)]
    pub n: Option<usize>,
    /// Base grid size [default: 101]
    #[arg(long)]
    pub m: Option<usize>,
    /// RNG seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path, "-" for stdout [default: -]
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV dataset
    #[arg(long = "in")]
    pub input: Option<String>,
    /// grid-ols, impact-ols, fpcr or tikhonov [default: grid-ols]
    #[arg(long)]
    pub estimator: Option<String>,
    /// Number of equispaced impact points for grid-ols [default: 10]
    #[arg(long)]
    pub p: Option<usize>,
    /// Number of principal components for fpcr [default: 4]
    #[arg(long)]
    pub q: Option<usize>,
    /// Comma-separated impact points for impact-ols, in the data's time units
    #[arg(long)]
    pub points: Option<String>,
    /// Fixed Tikhonov regularisation level
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Tikhonov regularisation rule when --gamma is absent: n^-0.2 [default: n^-0.2]
    #[arg(long = "gamma-rule")]
    pub gamma_rule: Option<String>,
    /// Tikhonov kernel: brownian, fbm:H or empirical [default: empirical]
    #[arg(long)]
    pub kernel: Option<String>,
    /// Fit an intercept in least-squares estimators [default: true]
    #[arg(long)]
    pub intercept: Option<bool>,
    /// Output path, "-" for stdout [default: -]
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// 1, 2a, 2b, 3, rkhs-2a-known, rkhs-2b-known, rkhs-2a-est or rkhs-2b-est
    #[arg(long)]
    pub table: Option<String>,
    /// Monte-Carlo replications [default: 100]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Base grid size [default: 101]
    #[arg(long)]
    pub m: Option<usize>,
    /// Training fraction for prediction tables [default: 0.8]
    #[arg(long = "train-frac")]
    pub train_frac: Option<f64>,
    /// csv or md [default: md]
    #[arg(long)]
    pub format: Option<String>,
    /// Output path, "-" for stdout [default: -]
    #[arg(long)]
    pub out: Option<String>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(cli)
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a, &config),
        Command::Fit(a) => cmd_fit(a, &config),
        Command::Reproduce(a) => cmd_reproduce(a, &config),
    }
}

fn write_output(out: &str, contents: &str) -> Result<(), CliError> {
    if out == "-" {
        std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}")))
    } else {
        std::fs::write(out, contents)
            .map_err(|e| CliError::Usage(format!("cannot write {out}: {e}")))
    }
}

fn cmd_simulate(a: SimulateArgs, cfg: &Config) -> Result<(), CliError> {
    let scenario: Scenario = cfg
        .pick(a.scenario, "scenario", "2a".to_string())?
        .parse()?;
    let n = cfg.pick(a.n, "n", 100)?;
    let m = cfg.pick(a.m, "m", 101)?;
    let seed = cfg.pick(a.seed, "seed", 0)?;
    let out = cfg.pick(a.out, "out", "-".to_string())?;
    let spec = ScenarioSpec::new(scenario, n, seed).with_m(m);
    let generated = generate(&spec)?;
    write_output(&out, &write_dataset(&generated.data))
}

/// Kernel from `brownian`, `fbm:H` or `empirical`.
pub fn parse_kernel(s: &str) -> Result<KernelChoice, CliError> {
    match s.trim() {
        "empirical" => Ok(KernelChoice::Empirical),
        "brownian" => Ok(KernelChoice::Supplied(CovarianceKernel::Brownian)),
        other => {
            let h = other
                .strip_prefix("fbm:")
                .and_then(|h| h.parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "unknown kernel '{other}' (brownian, fbm:H or empirical)"
                    ))
                })?;
            Ok(KernelChoice::Supplied(CovarianceKernel::fbm(h)?))
        }
    }
}

fn parse_points(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("'{p}' is not a valid impact point")))
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct FitSummary {
    pub estimator: String,
    pub n: usize,
    pub m: usize,
    pub intercept: f64,
    /// Impact points (grid-ols, impact-ols), in the data's time units.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Slope function on the grid (tikhonov, fpcr).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<Vec<f64>>,
    pub adjusted_r2: f64,
    pub residual_sd: f64,
}

fn to_original(data: &FunctionalDataset, u: f64) -> f64 {
    match data.original_range() {
        Some((lo, hi)) => lo + u * (hi - lo),
        None => u,
    }
}

fn to_unit(data: &FunctionalDataset, t: f64) -> f64 {
    match data.original_range() {
        Some((lo, hi)) => (t - lo) / (hi - lo),
        None => t,
    }
}

/// Fits the estimator described by `a` and summarises the fit on its training data.
pub fn fit_summary(
    data: &FunctionalDataset,
    a: &FitArgs,
    cfg: &Config,
) -> Result<FitSummary, CliError> {
    let estimator = cfg.pick(a.estimator.clone(), "estimator", "grid-ols".to_string())?;
    let intercept = cfg.pick(a.intercept, "intercept", true)?;
    let model = match estimator.as_str() {
        "grid-ols" => fit_grid_ols(data, cfg.pick(a.p, "p", 10)?, intercept)?,
        "impact-ols" => {
            let raw = cfg
                .pick_opt(a.points.clone(), "points")?
                .ok_or_else(|| CliError::Usage("impact-ols needs --points".into()))?;
            let pts: Vec<f64> = parse_points(&raw)?
                .into_iter()
                .map(|t| to_unit(data, t))
                .collect();
            fit_impact_ols(data, &pts, intercept)?
        }
        "fpcr" => fit_fpcr(data, cfg.pick(a.q, "q", 4)?)?,
        "tikhonov" => {
            let kernel =
                parse_kernel(&cfg.pick(a.kernel.clone(), "kernel", "empirical".to_string())?)?;
            let gamma = match cfg.pick_opt(a.gamma, "gamma")? {
                Some(g) => g,
                None => {
                    let rule =
                        cfg.pick(a.gamma_rule.clone(), "gamma-rule", "n^-0.2".to_string())?;
                    if rule != "n^-0.2" {
                        return Err(CliError::Usage(format!(
                            "unknown gamma rule '{rule}' (expected n^-0.2)"
                        )));
                    }
                    default_gamma(data.n())
                }
            };
            fit_tikhonov(data, gamma, &kernel)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown estimator '{other}' (grid-ols, impact-ols, fpcr or tikhonov)"
            )))
        }
    };

    let fitted = model.predict_all(data)?;
    let residual_ss = (data.y() - &fitted).norm_squared();
    let (params, dof_used) = match &model {
        FittedModel::GridOls { coefficients, .. } => (
            coefficients.len(),
            coefficients.len() + usize::from(intercept),
        ),
        FittedModel::Fpcr { q, .. } => (*q, q + 1),
        FittedModel::Tikhonov { .. } => (0, 0),
    };
    let adj = adjusted_r2(data.y().as_slice(), fitted.as_slice(), params)?;
    let dof = data.n().saturating_sub(dof_used).max(1);
    let residual_sd = (residual_ss / dof as f64).sqrt();
    let grid_times: Vec<f64> = data
        .grid()
        .points()
        .iter()
        .map(|&u| to_original(data, u))
        .collect();

    let mut s = FitSummary {
        estimator,
        n: data.n(),
        m: data.m(),
        intercept: 0.0,
        points: None,
        coefficients: None,
        q: None,
        gamma: None,
        grid: None,
        slope: None,
        adjusted_r2: adj,
        residual_sd,
    };
    match model {
        FittedModel::GridOls {
            intercept,
            points,
            coefficients,
            ..
        } => {
            s.intercept = intercept;
            s.points = Some(points.iter().map(|&u| to_original(data, u)).collect());
            s.coefficients = Some(coefficients);
        }
        FittedModel::Fpcr {
            intercept,
            q,
            score_coefs,
            beta_fn,
        } => {
            s.intercept = intercept;
            s.q = Some(q);
            s.coefficients = Some(score_coefs);
            s.grid = Some(grid_times);
            s.slope = Some(beta_fn.values().to_vec());
        }
        FittedModel::Tikhonov { alpha_hat, gamma } => {
            s.gamma = Some(gamma);
            s.grid = Some(grid_times);
            s.slope = Some(alpha_hat.values().to_vec());
        }
    }
    Ok(s)
}

fn cmd_fit(a: FitArgs, cfg: &Config) -> Result<(), CliError> {
    let input = cfg
        .pick_opt(a.input.clone(), "in")?
        .ok_or_else(|| CliError::Usage("fit needs --in <dataset.csv>".into()))?;
    let data = read_dataset_file(Path::new(&input))?;
    let summary = fit_summary(&data, &a, cfg)?;
    let out = cfg.pick(a.out.clone(), "out", "-".to_string())?;
    let mut json =
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Usage(e.to_string()))?;
    json.push('\n');
    write_output(&out, &json)
}

/// Worker cap from `RKHS_FLM_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV}='{v}' is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn cmd_reproduce(a: ReproduceArgs, cfg: &Config) -> Result<(), CliError> {
    let id: TableId = cfg
        .pick_opt(a.table, "table")?
        .ok_or_else(|| CliError::Usage("reproduce needs --table".into()))?
        .parse()
        .map_err(CliError::Usage)?;
    let defaults = ReproduceOptions::default();
    let opts = ReproduceOptions {
        replications: cfg.pick(a.reps, "reps", defaults.replications)?,
        seed: cfg.pick(a.seed, "seed", defaults.seed)?,
        m: cfg.pick(a.m, "m", defaults.m)?,
        train_frac: cfg.pick(a.train_frac, "train-frac", defaults.train_frac)?,
        threads: threads_from_env()?,
    };
    let format = cfg.pick(a.format, "format", "md".to_string())?;
    let out = cfg.pick(a.out, "out", "-".to_string())?;
    let table = reproduce(id, &opts)?;
    let text = match format.as_str() {
        "csv" => table.to_csv(),
        "md" => table.to_markdown(),
        other => {
            return Err(CliError::Usage(format!(
                "unknown format '{other}' (csv or md)"
            )))
        }
    };
    write_output(&out, &text)
}
