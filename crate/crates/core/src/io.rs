//! Dataset CSV format.
//!
//! The header names every grid time as `t_<time>` (at most 12 significant
//! digits) followed by a final `y` column; each following row is one
//! observation. Values are written in shortest round-trip decimal form.
//! On reading, a grid that does not already span exactly `[0, 1]` is mapped
//! affinely onto it and the original range is kept with the dataset.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::data::FunctionalDataset;
use crate::error::{Error, Result};
use crate::grid::Grid;

const UNIFORM_SNAP: f64 = 1e-9;

/// Formats a grid time with at most 12 significant digits.
pub fn format_time(t: f64) -> String {
    let rounded: f64 = format!("{t:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn write_dataset(data: &FunctionalDataset) -> String {
    let times: Vec<f64> = match data.original_range() {
        Some((lo, hi)) => data
            .grid()
            .points()
            .iter()
            .map(|u| lo + u * (hi - lo))
            .collect(),
        None => data.grid().points().to_vec(),
    };
    let mut out = String::new();
    for t in &times {
        out.push_str("t_");
        out.push_str(&format_time(*t));
        out.push(',');
    }
    out.push_str("y\n");
    for i in 0..data.n() {
        for j in 0..data.m() {
            out.push_str(&format!("{},", data.x()[(i, j)]));
        }
        out.push_str(&format!("{}\n", data.y()[i]));
    }
    out
}

pub fn write_dataset_file(data: &FunctionalDataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_dataset(data))?;
    Ok(())
}

pub fn read_dataset_file(path: impl AsRef<Path>) -> Result<FunctionalDataset> {
    let text = std::fs::read_to_string(path)?;
    read_dataset(&text)
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_dataset(text: &str) -> Result<FunctionalDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.len() < 2 || header.get(header.len() - 1) != Some("y") {
        return Err(parse_err(
            1,
            "header must list grid columns t_<time> followed by a final 'y'",
        ));
    }
    let mut times = Vec::with_capacity(header.len() - 1);
    for (k, name) in header.iter().take(header.len() - 1).enumerate() {
        let t = name
            .strip_prefix("t_")
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|t| t.is_finite())
            .ok_or_else(|| {
                parse_err(
                    1,
                    format!("column {}: '{name}' is not of the form t_<time>", k + 1),
                )
            })?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(parse_err(
                    1,
                    format!("column {}: grid times are not strictly increasing", k + 1),
                ));
            }
        }
        times.push(t);
    }
    let m = times.len();

    let mut values: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != m + 1 {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", m + 1, record.len()),
            ));
        }
        for (k, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(line, format!("field {}: '{cell}' is not a number", k + 1))
            })?;
            if k < m {
                values.push(v);
            } else {
                ys.push(v);
            }
        }
    }

    let (lo, hi) = (times[0], times[m - 1]);
    let spans_unit = lo == 0.0 && hi == 1.0;
    let rescale = !spans_unit && m > 1;
    if m == 1 && !(0.0..=1.0).contains(&lo) {
        return Err(parse_err(1, "a single grid time must lie in [0, 1]"));
    }
    let mut unit: Vec<f64> = if rescale {
        times.iter().map(|t| (t - lo) / (hi - lo)).collect()
    } else {
        times.clone()
    };
    if m > 2 {
        let exact: Vec<f64> = (0..m).map(|k| k as f64 / (m - 1) as f64).collect();
        if unit
            .iter()
            .zip(&exact)
            .all(|(a, b)| (a - b).abs() <= UNIFORM_SNAP)
        {
            unit = exact;
        }
    }
    let grid = Grid::new(unit).map_err(|e| parse_err(1, e.to_string()))?;
    let n = ys.len();
    let x = DMatrix::from_row_slice(n, m, &values);
    let data = FunctionalDataset::new(grid, x, DVector::from_vec(ys))?;
    Ok(if rescale {
        data.with_original_range(lo, hi)
    } else {
        data
    })
}
