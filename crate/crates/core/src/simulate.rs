//! Gaussian process sampling and the benchmark data-generating scenarios.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::FunctionalDataset;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::{gram, CovarianceKernel};
use crate::operator::DiscreteOperator;
use crate::rkhs::{loeve_predict, GridFunction, KernelExpansion};

pub const DEFAULT_GRID_SIZE: usize = 101;
pub const DEFAULT_HURST: f64 = 0.8;
pub const DEFAULT_SIGMA: f64 = 0.2;
/// Scenario 1 observes trajectories on `[0, S1_HORIZON]` and predicts `X(1)`.
pub const S1_HORIZON: f64 = 0.95;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// Mixes a base seed with a stream index (SplitMix64 finaliser), so that
/// replication `k` gets the same seed however the replications are scheduled.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// `Y = X(1)` predicted from `X` on `[0, 0.95]`.
    S1,
    /// `Y = 2X(0.2) - 5X(0.4) + X(0.9) + eps`.
    S2a,
    /// `Y = 2.1X(0.16) - 0.2X(0.47) - 1.9X(0.67) + 5X(0.85) + 4.2X(0.91) + eps`.
    S2b,
    /// `Y = int log(1 + 4s) X(s) ds + eps`.
    S3,
}

impl Scenario {
    /// Impact points and coefficients of the finite-dimensional scenarios.
    pub fn impact_terms(self) -> Option<(&'static [f64], &'static [f64])> {
        match self {
            Self::S2a => Some((&[0.2, 0.4, 0.9], &[2.0, -5.0, 1.0])),
            Self::S2b => Some((
                &[0.16, 0.47, 0.67, 0.85, 0.91],
                &[2.1, -0.2, -1.9, 5.0, 4.2],
            )),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::S1 => "1",
            Self::S2a => "2a",
            Self::S2b => "2b",
            Self::S3 => "3",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "s1" => Ok(Self::S1),
            "2a" | "s2a" => Ok(Self::S2a),
            "2b" | "s2b" => Ok(Self::S2b),
            "3" | "s3" => Ok(Self::S3),
            other => Err(Error::arg(format!(
                "unknown scenario '{other}' (expected 1, 2a, 2b or 3)"
            ))),
        }
    }
}

/// `log(1 + 4t)`, the Scenario 3 slope in the L2 model.
pub fn s3_beta(t: f64) -> f64 {
    (1.0 + 4.0 * t).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub sigma: f64,
    pub hurst: f64,
    /// Size of the uniform base grid on `[0, 1]`.
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    /// Points added to the base grid (e.g. impact points of a later fit).
    pub extra_points: Vec<f64>,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, n: usize, seed: u64) -> Self {
        Self {
            scenario,
            sigma: if scenario == Scenario::S1 {
                0.0
            } else {
                DEFAULT_SIGMA
            },
            hurst: DEFAULT_HURST,
            m: DEFAULT_GRID_SIZE,
            n,
            seed,
            extra_points: Vec::new(),
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_extra_points(mut self, pts: Vec<f64>) -> Self {
        self.extra_points = pts;
        self
    }

    pub fn kernel(&self) -> Result<CovarianceKernel> {
        CovarianceKernel::fbm(self.hurst)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) {
            return Err(Error::arg("noise standard deviation must be non-negative"));
        }
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::arg("Hurst exponent must lie in (0, 1)"));
        }
        if self.m < 2 {
            return Err(Error::arg("grid size m must be at least 2"));
        }
        Ok(())
    }

    /// The grid trajectories are simulated on.
    pub fn simulation_grid(&self) -> Result<Grid> {
        self.validate()?;
        let mut extra = self.extra_points.clone();
        match self.scenario {
            Scenario::S1 => extra.extend([S1_HORIZON, 1.0]),
            Scenario::S2a | Scenario::S2b => {
                let (pts, _) = self.scenario.impact_terms().expect("finite scenario");
                extra.extend_from_slice(pts);
            }
            Scenario::S3 => {}
        }
        Grid::uniform(self.m)?.augmented(&extra)
    }
}

/// The regression function behind a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Expansion(KernelExpansion),
    Function(GridFunction),
    /// `Y = X(at)` with `at` outside the observed range: no finite expansion.
    Projection {
        at: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub data: FunctionalDataset,
    pub truth: Truth,
}

/// `n` independent centered Gaussian trajectories with covariance
/// `Gram(kernel, grid)`, one per row, deterministic in `seed`.
pub fn sample_gp(
    kernel: &CovarianceKernel,
    grid: &Grid,
    n: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_gp_with(kernel, grid, n, &mut rng)
}

fn sample_gp_with(
    kernel: &CovarianceKernel,
    grid: &Grid,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>> {
    let m = grid.len();
    let g = gram(kernel, grid)?;
    let Some(l) = jittered_cholesky(&g)? else {
        return Ok(DMatrix::zeros(n, m));
    };
    let mut z = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            z[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(z * l.transpose())
}

/// Lower Cholesky factor of `g + ridge I`, escalating the ridge from
/// `1e-10 * trace/m` by factors of ten up to `1e-6 * trace/m`.
/// Returns `None` for an identically zero matrix.
fn jittered_cholesky(g: &DMatrix<f64>) -> Result<Option<DMatrix<f64>>> {
    let m = g.nrows();
    let scale = g.trace() / m as f64;
    if scale == 0.0 && g.amax() == 0.0 {
        return Ok(None);
    }
    let mut rel = JITTER_START;
    while rel <= JITTER_MAX * (1.0 + 1e-9) {
        let a = g + DMatrix::identity(m, m) * (rel * scale);
        if let Some(c) = Cholesky::new(a) {
            return Ok(Some(c.l()));
        }
        rel *= 10.0;
    }
    Err(Error::numeric(
        "covariance matrix is not positive semidefinite (Cholesky failed after jitter)",
    ))
}

/// Generates a dataset from `spec` with fractional Brownian trajectories.
pub fn generate(spec: &ScenarioSpec) -> Result<Generated> {
    generate_with(spec, &spec.kernel()?)
}

/// Generates a dataset from `spec` with trajectories drawn from `kernel`.
pub fn generate_with(spec: &ScenarioSpec, kernel: &CovarianceKernel) -> Result<Generated> {
    let grid = spec.simulation_grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let x = sample_gp_with(kernel, &grid, spec.n, &mut rng)?;
    let mut noise = DVector::zeros(spec.n);
    if spec.sigma > 0.0 {
        for e in noise.iter_mut() {
            *e = spec.sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }

    match spec.scenario {
        Scenario::S1 => {
            let target = grid.snap(1.0)?;
            let (obs_grid, cols) = grid.restricted(0.0, S1_HORIZON)?;
            let y = x.column(target).into_owned() + noise;
            let x_obs = x.select_columns(cols.iter());
            Ok(Generated {
                data: FunctionalDataset::new(obs_grid, x_obs, y)?,
                truth: Truth::Projection { at: 1.0 },
            })
        }
        Scenario::S2a | Scenario::S2b => {
            let truth = finite_truth(spec.scenario, kernel.clone())?;
            let mut y = noise;
            for i in 0..spec.n {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                y[i] += loeve_predict(&truth, &grid, &row)?;
            }
            Ok(Generated {
                data: FunctionalDataset::new(grid, x, y)?,
                truth: Truth::Expansion(truth),
            })
        }
        Scenario::S3 => {
            let m = grid.len() as f64;
            let beta =
                DVector::from_iterator(grid.len(), grid.points().iter().map(|&t| s3_beta(t)));
            let y = &x * &beta / m + noise;
            let truth = if grid.is_uniform() {
                let op = DiscreteOperator::discretize(kernel, &grid)?;
                s3_alpha(&op)?
            } else {
                s3_alpha_nonuniform(kernel, &grid)?
            };
            Ok(Generated {
                data: FunctionalDataset::new(grid, x, y)?,
                truth: Truth::Function(truth),
            })
        }
    }
}

fn finite_truth(scenario: Scenario, kernel: CovarianceKernel) -> Result<KernelExpansion> {
    let (pts, coefs) = scenario.impact_terms().ok_or_else(|| {
        Error::arg(format!(
            "scenario {scenario} has no finite kernel expansion"
        ))
    })?;
    KernelExpansion::new(kernel, pts.to_vec(), coefs.to_vec())
}

fn s3_alpha(op: &DiscreteOperator) -> Result<GridFunction> {
    let beta: Vec<f64> = op.grid().points().iter().map(|&t| s3_beta(t)).collect();
    GridFunction::new(op.grid().clone(), op.apply(&beta)?)
}

fn s3_alpha_nonuniform(kernel: &CovarianceKernel, grid: &Grid) -> Result<GridFunction> {
    let g = gram(kernel, grid)?;
    let beta = DVector::from_iterator(grid.len(), grid.points().iter().map(|&t| s3_beta(t)));
    let v = g * beta / grid.len() as f64;
    GridFunction::new(grid.clone(), v.iter().copied().collect())
}

/// The slope `alpha` of a scenario: the stated kernel expansion for 2a/2b,
/// `alpha = K beta` on the operator's grid for Scenario 3.
pub fn true_alpha(spec: &ScenarioSpec, operator: &DiscreteOperator) -> Result<Truth> {
    match spec.scenario {
        Scenario::S1 => Err(Error::arg(
            "scenario 1 regresses on X(1), which has no finite kernel expansion on [0, 0.95]",
        )),
        Scenario::S2a | Scenario::S2b => Ok(Truth::Expansion(finite_truth(
            spec.scenario,
            spec.kernel()?,
        )?)),
        Scenario::S3 => Ok(Truth::Function(s3_alpha(operator)?)),
    }
}

/// Hurst exponent implied by `Var X(1/2) = (1/2)^(2H)`, clamped to `[0.01, 0.99]`.
pub fn hurst_from_variance(var_half: f64) -> f64 {
    let h = -var_half.ln() / (2.0 * std::f64::consts::LN_2);
    if h.is_nan() {
        return 0.99;
    }
    h.clamp(0.01, 0.99)
}

/// Estimates the Hurst exponent of fractional Brownian trajectories from the
/// sample variance at `t = 1/2`.
pub fn estimate_hurst(data: &FunctionalDataset) -> Result<f64> {
    if data.n() < 2 {
        return Err(Error::arg(
            "Hurst estimation needs at least two trajectories",
        ));
    }
    let j = data.grid().snap(0.5)?;
    let col = data.x().column(j);
    let mean = col.mean();
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (data.n() - 1) as f64;
    Ok(hurst_from_variance(var))
}
