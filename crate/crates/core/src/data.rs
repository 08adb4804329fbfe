use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// `n` trajectories observed on a common grid, with scalar responses.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    grid: Grid,
    x: DMatrix<f64>,
    y: DVector<f64>,
    /// Original `[lo, hi]` observation range when the grid was rescaled onto `[0, 1]`.
    original_range: Option<(f64, f64)>,
}

impl FunctionalDataset {
    pub fn new(grid: Grid, x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.ncols() != grid.len() {
            return Err(Error::arg(format!(
                "trajectory matrix has {} columns but the grid has {} points",
                x.ncols(),
                grid.len()
            )));
        }
        if x.nrows() != y.len() {
            return Err(Error::arg(format!(
                "{} trajectories but {} responses",
                x.nrows(),
                y.len()
            )));
        }
        Ok(Self {
            grid,
            x,
            y,
            original_range: None,
        })
    }

    pub fn with_original_range(mut self, lo: f64, hi: f64) -> Self {
        self.original_range = Some((lo, hi));
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Trajectory matrix, one row per observation.
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn original_range(&self) -> Option<(f64, f64)> {
        self.original_range
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.grid.len()
    }

    pub fn trajectory(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    /// The observations with the given row indices, in that order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let x = self.x.select_rows(rows.iter());
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        Self {
            grid: self.grid.clone(),
            x,
            y,
            original_range: self.original_range,
        }
    }

    /// Same trajectories with a different response vector.
    pub fn with_responses(&self, y: DVector<f64>) -> Result<Self> {
        let mut out = Self::new(self.grid.clone(), self.x.clone(), y)?;
        out.original_range = self.original_range;
        Ok(out)
    }

    pub(crate) fn require_nonempty(&self) -> Result<()> {
        if self.n() == 0 {
            Err(Error::arg("dataset has no observations"))
        } else {
            Ok(())
        }
    }
}
