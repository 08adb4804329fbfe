//! Observation grids on `[0, 1]`.

use crate::error::{Error, Result};

/// Absolute tolerance used to decide that a grid is uniform.
pub const UNIFORM_TOL: f64 = 1e-12;

/// A strictly increasing set of observation times in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    uniform: bool,
}

impl Grid {
    /// Validates `points` and detects whether they are equispaced.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::arg("grid must contain at least one point"));
        }
        for (i, &t) in points.iter().enumerate() {
            if !t.is_finite() || !(0.0..=1.0).contains(&t) {
                return Err(Error::arg(format!(
                    "grid point {i} = {t} is outside [0, 1]"
                )));
            }
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::arg(format!(
                "grid is not strictly increasing at index {}",
                i + 1
            )));
        }
        let uniform = is_equispaced(&points);
        Ok(Self { points, uniform })
    }

    /// `m` equispaced points `k / (m - 1)` covering `[0, 1]`.
    pub fn uniform(m: usize) -> Result<Self> {
        match m {
            0 => Err(Error::arg("grid size must be positive")),
            1 => Self::new(vec![0.0]),
            _ => Self::new((0..m).map(|k| k as f64 / (m - 1) as f64).collect()),
        }
    }

    /// Returns a grid containing every point of `self` plus `extra`.
    ///
    /// Extra points already present (to within `1e-12`) are not duplicated.
    pub fn augmented(&self, extra: &[f64]) -> Result<Self> {
        let mut points = self.points.clone();
        for &t in extra {
            if !points.iter().any(|&s| (s - t).abs() <= UNIFORM_TOL) {
                points.push(t);
            }
        }
        points.sort_by(f64::total_cmp);
        Self::new(points)
    }

    /// Restriction to the points lying in `[lo, hi]`.
    pub fn restricted(&self, lo: f64, hi: f64) -> Result<(Self, Vec<usize>)> {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| self.points[i] >= lo - UNIFORM_TOL && self.points[i] <= hi + UNIFORM_TOL)
            .collect();
        let pts = idx.iter().map(|&i| self.points[i]).collect();
        Ok((Self::new(pts)?, idx))
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Index of the grid point nearest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let pos = self.points.partition_point(|&s| s < t);
        if pos == 0 {
            0
        } else if pos == self.points.len() || t - self.points[pos - 1] <= self.points[pos] - t {
            pos - 1
        } else {
            pos
        }
    }

    /// Index of the grid point `t` snaps to: the nearest point, provided `t`
    /// is within half of the adjacent grid spacing of it.
    pub fn snap(&self, t: f64) -> Result<usize> {
        let i = self.nearest(t);
        let s = self.points[i];
        let gap = if self.points.len() == 1 {
            0.0
        } else if t >= s {
            if i + 1 < self.points.len() {
                self.points[i + 1] - s
            } else {
                s - self.points[i - 1]
            }
        } else if i > 0 {
            s - self.points[i - 1]
        } else {
            self.points[1] - s
        };
        let tol = 0.5 * gap * (1.0 + 1e-9) + UNIFORM_TOL;
        if (t - s).abs() <= tol {
            Ok(i)
        } else {
            Err(Error::domain(format!(
                "point {t} is not within half a grid spacing of any grid point"
            )))
        }
    }
}

fn is_equispaced(points: &[f64]) -> bool {
    if points.len() < 3 {
        return true;
    }
    let h = points[1] - points[0];
    points
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= UNIFORM_TOL)
}
