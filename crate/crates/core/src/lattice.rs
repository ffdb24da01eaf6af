//! Output-layer grid geometry.
//!
//! Neurons sit on a fixed `rows x cols` grid indexed row-major. The distance
//! between two neurons is measured on their integer grid indices, either as
//! Manhattan distance or as hexagonal step distance for an offset-row layout
//! where even rows are shifted half a cell to the right.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeCoord {
    pub row: usize,
    pub col: usize,
}

impl LatticeCoord {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    HexOffset,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Manhattan,
    HexAxial,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::HexOffset => "hex-offset",
            Layout::Rectangular => "rectangular",
        })
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hex-offset" => Ok(Layout::HexOffset),
            "rectangular" => Ok(Layout::Rectangular),
            other => Err(Error::Parameter(format!("unknown layout `{other}`"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Manhattan => "manhattan",
            Metric::HexAxial => "hex-axial",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "manhattan" => Ok(Metric::Manhattan),
            "hex-axial" => Ok(Metric::HexAxial),
            other => Err(Error::Parameter(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub layout: Layout,
    pub metric: Metric,
}

impl Default for LatticeSpec {
    /// 4x4 hex-offset grid measured with Manhattan distance.
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 4,
            layout: Layout::HexOffset,
            metric: Metric::Manhattan,
        }
    }
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize, layout: Layout, metric: Metric) -> Result<Self> {
        let spec = Self {
            rows,
            cols,
            layout,
            metric,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Rectangular layout with Manhattan distance.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, Layout::Rectangular, Metric::Manhattan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Parameter(format!(
                "lattice must have at least one row and column, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord(&self, index: usize) -> LatticeCoord {
        LatticeCoord::new(index / self.cols, index % self.cols)
    }

    pub fn index(&self, c: LatticeCoord) -> Result<usize> {
        self.check(c)?;
        Ok(c.row * self.cols + c.col)
    }

    pub fn coords(&self) -> impl Iterator<Item = LatticeCoord> + '_ {
        (0..self.len()).map(move |i| self.coord(i))
    }

    fn check(&self, c: LatticeCoord) -> Result<()> {
        if c.row >= self.rows || c.col >= self.cols {
            return Err(Error::Coordinate {
                row: c.row,
                col: c.col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    /// Distance between neurons by row-major index. Indices must be in range.
    pub(crate) fn index_distance(&self, a: usize, b: usize) -> u32 {
        grid_distance(self.coord(a), self.coord(b), self.metric)
    }

    /// Full `N x N` table of lattice distances by row-major index.
    pub fn distance_table(&self) -> Vec<Vec<u32>> {
        let n = self.len();
        (0..n)
            .map(|a| (0..n).map(|b| self.index_distance(a, b)).collect())
            .collect()
    }

    /// Indices of neurons at lattice distance exactly 1 from `index`.
    pub fn neighbors(&self, index: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&other| self.index_distance(index, other) == 1)
            .collect()
    }
}

/// Lattice distance between two neurons.
pub fn neuron_distance(a: LatticeCoord, b: LatticeCoord, spec: &LatticeSpec) -> Result<u32> {
    spec.check(a)?;
    spec.check(b)?;
    Ok(grid_distance(a, b, spec.metric))
}

fn grid_distance(a: LatticeCoord, b: LatticeCoord, metric: Metric) -> u32 {
    match metric {
        Metric::Manhattan => (a.row.abs_diff(b.row) + a.col.abs_diff(b.col)) as u32,
        Metric::HexAxial => {
            let (aq, ar) = offset_to_axial(a);
            let (bq, br) = offset_to_axial(b);
            let dq = aq - bq;
            let dr = ar - br;
            ((dq.abs() + dr.abs() + (dq + dr).abs()) / 2) as u32
        }
    }
}

// Even rows sit half a cell right of odd rows, so (r, c) on an even row
// touches (r+1, c) and (r+1, c+1).
fn offset_to_axial(c: LatticeCoord) -> (i64, i64) {
    let row = c.row as i64;
    let col = c.col as i64;
    (col - (row + (row & 1)) / 2, row)
}

/// Gaussian neighborhood kernel `exp(-d^2 / (2 sigma^2))`.
pub fn neighborhood_weight(d: u32, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    Ok(gaussian(d, sigma))
}

pub(crate) fn gaussian(d: u32, sigma: f64) -> f64 {
    let d = d as f64;
    (-(d * d) / (2.0 * sigma * sigma)).exp()
}
