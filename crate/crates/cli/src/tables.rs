//! The benchmark tables `reproduce` knows how to rebuild.

use std::fmt;
use std::str::FromStr;

use rkhs_flm_core::harness::{
    run_experiment, run_rkhs_experiment, EstimatorSpec, ExperimentPlan, KernelMode, RkhsPlan,
};
use rkhs_flm_core::{ReportTable, Result, Scenario, ScenarioSpec};

pub const PREDICTION_P: [usize; 4] = [6, 10, 14, 18];
pub const PREDICTION_Q: [usize; 2] = [4, 6];
pub const PREDICTION_N: [usize; 4] = [100, 300, 500, 700];
pub const RKHS_P: [usize; 8] = [3, 5, 7, 9, 11, 13, 15, 17];
pub const RKHS_N: [usize; 4] = [200, 400, 600, 800];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    Prediction(Scenario),
    Rkhs(Scenario, KernelMode),
}

impl FromStr for TableId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "1" => Self::Prediction(Scenario::S1),
            "2a" => Self::Prediction(Scenario::S2a),
            "2b" => Self::Prediction(Scenario::S2b),
            "3" => Self::Prediction(Scenario::S3),
            "rkhs-2a-known" => Self::Rkhs(Scenario::S2a, KernelMode::Known),
            "rkhs-2b-known" => Self::Rkhs(Scenario::S2b, KernelMode::Known),
            "rkhs-2a-est" => Self::Rkhs(Scenario::S2a, KernelMode::Estimated),
            "rkhs-2b-est" => Self::Rkhs(Scenario::S2b, KernelMode::Estimated),
            other => {
                return Err(format!(
                    "unknown table '{other}' (expected 1, 2a, 2b, 3, rkhs-2a-known, rkhs-2b-known, rkhs-2a-est, rkhs-2b-est)"
                ))
            }
        })
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Prediction(s) => write!(f, "{s}"),
            Self::Rkhs(s, KernelMode::Known) => write!(f, "rkhs-{s}-known"),
            Self::Rkhs(s, KernelMode::Estimated) => write!(f, "rkhs-{s}-est"),
        }
    }
}

/// Parameters shared by every reproduced table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceOptions {
    pub replications: usize,
    pub seed: u64,
    pub m: usize,
    pub train_frac: f64,
    pub threads: Option<usize>,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        Self {
            replications: 100,
            seed: 0,
            m: 101,
            train_frac: 0.8,
            threads: None,
        }
    }
}

pub fn prediction_plan(scenario: Scenario, opts: &ReproduceOptions) -> ExperimentPlan {
    let mut estimators: Vec<EstimatorSpec> = PREDICTION_P
        .iter()
        .map(|&p| EstimatorSpec::GridOls { p })
        .collect();
    estimators.extend(PREDICTION_Q.iter().map(|&q| EstimatorSpec::Fpcr { q }));
    let spec = ScenarioSpec::new(scenario, 0, opts.seed).with_m(opts.m);
    ExperimentPlan {
        title: format!("Prediction errors and adjusted R^2, scenario {scenario}"),
        replications: opts.replications,
        train_frac: opts.train_frac,
        base_seed: opts.seed,
        threads: opts.threads,
        ..ExperimentPlan::new(spec, estimators, PREDICTION_N.to_vec())
    }
}

pub fn rkhs_plan(scenario: Scenario, mode: KernelMode, opts: &ReproduceOptions) -> RkhsPlan {
    let spec = ScenarioSpec::new(scenario, 0, opts.seed).with_m(opts.m);
    let known = match mode {
        KernelMode::Known => "known",
        KernelMode::Estimated => "unknown",
    };
    RkhsPlan {
        title: format!(
            "Mean squared RKHS error of grid least squares, scenario {scenario}, K {known}"
        ),
        replications: opts.replications,
        base_seed: opts.seed,
        threads: opts.threads,
        ..RkhsPlan::new(spec, RKHS_P.to_vec(), RKHS_N.to_vec(), mode)
    }
}

pub fn reproduce(id: TableId, opts: &ReproduceOptions) -> Result<ReportTable> {
    match id {
        TableId::Prediction(s) => run_experiment(&prediction_plan(s, opts)),
        TableId::Rkhs(s, mode) => run_rkhs_experiment(&rkhs_plan(s, mode, opts)),
    }
}
