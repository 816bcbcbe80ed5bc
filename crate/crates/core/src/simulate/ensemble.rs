use super::grid::TimeGrid;
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Description carried alongside an ensemble.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub spec: String,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub method: String,
}

/// Sample paths over a common time grid, stored row-major (one row per path).
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grid: TimeGrid,
    n_paths: usize,
    values: Vec<f64>,
    pub meta: EnsembleMeta,
}

impl PathEnsemble {
    pub fn from_rows(grid: TimeGrid, rows: Vec<Vec<f64>>, meta: EnsembleMeta) -> Result<Self> {
        let n = grid.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::GridMismatch(format!(
                "path {bad} has {} values for a grid of {n} points",
                rows[bad].len()
            )));
        }
        let n_paths = rows.len();
        Ok(PathEnsemble {
            grid,
            n_paths,
            values: rows.into_iter().flatten().collect(),
            meta,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.grid.len().max(1))
    }

    pub fn value(&self, path: usize, point: usize) -> f64 {
        self.values[path * self.grid.len() + point]
    }

    pub fn column(&self, point: usize) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.value(i, point)).collect()
    }

    /// Applies `f` to every path in parallel, keeping path order.
    pub fn try_map_paths<F>(&self, grid: TimeGrid, meta: EnsembleMeta, f: F) -> Result<PathEnsemble>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    {
        let rows: Vec<Vec<f64>> = (0..self.n_paths)
            .into_par_iter()
            .map(|i| f(self.path(i)))
            .collect::<Result<_>>()?;
        PathEnsemble::from_rows(grid, rows, meta)
    }

    /// Restriction to the leading grid points t ≤ upper.
    pub fn truncate_at(&self, upper: f64) -> Result<PathEnsemble> {
        let grid = self.grid.truncate_at(upper)?;
        let m = grid.len();
        let rows = self.paths().map(|p| p[..m].to_vec()).collect();
        PathEnsemble::from_rows(grid, rows, self.meta.clone())
    }

    /// Values at the points of `sub`, which must all lie on this grid.
    pub fn restrict_to(&self, sub: &TimeGrid) -> Result<PathEnsemble> {
        let idx = sub
            .points()
            .iter()
            .map(|&t| {
                self.grid
                    .index_of(t)
                    .ok_or_else(|| Error::GridMismatch(format!("{t} is not a point of the time grid")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let rows = self.paths().map(|p| idx.iter().map(|&i| p[i]).collect()).collect();
        PathEnsemble::from_rows(sub.clone(), rows, self.meta.clone())
    }

    /// Values on every `factor`-th grid point.
    pub fn coarsen(&self, factor: usize) -> Result<PathEnsemble> {
        let grid = self.grid.coarsen(factor)?;
        let rows = self
            .paths()
            .map(|p| p.iter().step_by(factor).copied().collect())
            .collect();
        PathEnsemble::from_rows(grid, rows, self.meta.clone())
    }

    pub fn max_abs_diff(&self, other: &PathEnsemble) -> Result<f64> {
        if self.grid != other.grid || self.n_paths != other.n_paths {
            return Err(Error::GridMismatch("ensembles differ in shape".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Brownian increments ΔW over the cells of a grid, one row per path.
#[derive(Debug, Clone, PartialEq)]
pub struct Increments {
    grid: TimeGrid,
    n_paths: usize,
    values: Vec<f64>,
}

impl Increments {
    pub fn from_rows(grid: TimeGrid, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = grid.n_cells();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::GridMismatch(format!(
                "increment rows must have {n} entries"
            )));
        }
        Ok(Increments {
            grid,
            n_paths: rows.len(),
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.n_cells();
        &self.values[i * n..(i + 1) * n]
    }

    /// Sums consecutive groups of `factor` cells (the same noise on a coarser grid).
    pub fn coarsen(&self, factor: usize) -> Result<Increments> {
        let grid = self.grid.coarsen(factor)?;
        let rows = (0..self.n_paths)
            .map(|i| self.row(i).chunks(factor).map(|c| c.iter().sum()).collect())
            .collect();
        Increments::from_rows(grid, rows)
    }

    /// The driving Brownian paths themselves (cumulative sums starting at 0).
    pub fn brownian_paths(&self) -> PathEnsemble {
        let rows = (0..self.n_paths).map(|i| cumulative(self.row(i))).collect();
        PathEnsemble::from_rows(
            self.grid.clone(),
            rows,
            EnsembleMeta {
                spec: "brownian".into(),
                beta: Some(0.5),
                seed: None,
                method: "cumulative-sum".into(),
            },
        )
        .expect("row lengths match by construction")
    }
}

/// [0, d₀, d₀ + d₁, …]
pub fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for d in increments {
        acc += d;
        out.push(acc);
    }
    out
}

/// Consecutive differences of a path.
pub fn differences(path: &[f64]) -> Vec<f64> {
    path.windows(2).map(|w| w[1] - w[0]).collect()
}

/// A Lamperti-domain ensemble indexed by log-time u.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarySeries {
    pub u: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}
