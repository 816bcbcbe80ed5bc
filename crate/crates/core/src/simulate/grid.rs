use crate::error::{Error, Result};

/// Strictly increasing, finite time points with t₀ ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    step: Option<f64>,
}

const UNIFORM_RTOL: f64 = 1e-9;

impl TimeGrid {
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::GridMismatch("empty time grid".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::GridMismatch("non-finite time point".into()));
        }
        if points[0] < 0.0 {
            return Err(Error::GridMismatch(format!("first time point {} is negative", points[0])));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridMismatch("time points are not strictly increasing".into()));
        }
        let step = if points.len() >= 2 {
            let h = points[1] - points[0];
            let uniform = points
                .windows(2)
                .all(|w| ((w[1] - w[0]) - h).abs() <= UNIFORM_RTOL * h);
            uniform.then_some(h)
        } else {
            None
        };
        Ok(TimeGrid { points, step })
    }

    /// `n + 1` equally spaced points on [0, horizon].
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon > 0.0) || n == 0 {
            return Err(Error::Domain(format!(
                "uniform grid needs horizon > 0 and n ≥ 1, got {horizon}, {n}"
            )));
        }
        let mut points: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        points[n] = horizon;
        Ok(TimeGrid {
            points,
            step: Some(horizon / n as f64),
        })
    }

    /// `n + 1` log-uniform points from `t_min` to `horizon`, optionally preceded by 0.
    pub fn geometric(t_min: f64, horizon: f64, n: usize, include_zero: bool) -> Result<Self> {
        if !(t_min > 0.0 && horizon > t_min) || n == 0 {
            return Err(Error::Domain(format!(
                "geometric grid needs 0 < t_min < horizon and n ≥ 1, got {t_min}, {horizon}, {n}"
            )));
        }
        let (lo, hi) = (t_min.ln(), horizon.ln());
        let du = (hi - lo) / n as f64;
        let mut points = Vec::with_capacity(n + 2);
        if include_zero {
            points.push(0.0);
        }
        points.extend((0..=n).map(|i| (hi - (n - i) as f64 * du).exp()));
        *points.last_mut().expect("non-empty") = horizon;
        TimeGrid::from_points(points)
    }

    /// Uniform on [0, horizon] with `n` cells, continued geometrically with
    /// cell ratio 1 + 1/n up to `horizon * factor`. The tail has an even
    /// number of cells.
    pub fn extended(horizon: f64, n: usize, factor: f64) -> Result<Self> {
        if !(factor >= 1.0) {
            return Err(Error::Domain(format!("extension factor must be ≥ 1, got {factor}")));
        }
        let mut points = TimeGrid::uniform(horizon, n)?.points;
        let end = horizon * factor;
        let ratio = 1.0 + 1.0 / n as f64;
        let mut t = horizon * ratio;
        while t < end {
            points.push(t);
            t *= ratio;
        }
        if factor > 1.0 {
            // Merge a sliver of a final cell into its neighbour.
            let last = *points.last().expect("non-empty");
            if end - last < 0.25 * (last - points[points.len() - 2]) && last > horizon {
                points.pop();
            }
            points.push(end);
            // Keep the tail cell count even so the grid coarsens by 2.
            if (points.len() - 1 - n) % 2 == 1 && points.len() - 1 - n >= 2 {
                points.remove(points.len() - 2);
            }
        }
        TimeGrid::from_points(points)
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

    pub fn n_cells(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn is_uniform(&self) -> bool {
        self.step.is_some()
    }

    pub fn step(&self) -> Option<f64> {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().expect("grid is never empty")
    }

    pub fn starts_at_zero(&self) -> bool {
        self.points[0] == 0.0
    }

    pub fn widths(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Index of the grid point equal to `t` up to a relative tolerance of 1e-9.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * t.abs().max(1e-300);
        let i = self.points.partition_point(|&p| p < t - tol);
        (i < self.points.len() && (self.points[i] - t).abs() <= tol).then_some(i)
    }

    /// The leading points with t ≤ upper (upper must be a grid point).
    pub fn truncate_at(&self, upper: f64) -> Result<TimeGrid> {
        let i = self.index_of(upper).ok_or_else(|| {
            Error::GridMismatch(format!("{upper} is not a point of the time grid"))
        })?;
        TimeGrid::from_points(self.points[..=i].to_vec())
    }

    /// Every `factor`-th point (the final point must be retained).
    pub fn coarsen(&self, factor: usize) -> Result<TimeGrid> {
        if factor == 0 || self.n_cells() % factor != 0 {
            return Err(Error::GridMismatch(format!(
                "cannot coarsen {} cells by {factor}",
                self.n_cells()
            )));
        }
        TimeGrid::from_points(self.points.iter().step_by(factor).copied().collect())
    }

    /// Union of the points of both grids. Points of `other` within the
    /// [`index_of`](Self::index_of) tolerance of a point of `self` are dropped.
    pub fn merge(&self, other: &TimeGrid) -> Result<TimeGrid> {
        let mut pts = self.points.clone();
        pts.extend(other.points.iter().filter(|&&t| self.index_of(t).is_none()));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        TimeGrid::from_points(pts)
    }

    /// Common log-step when the positive points are log-uniform.
    pub fn log_step(&self) -> Option<f64> {
        let pos: Vec<f64> = self.points.iter().copied().filter(|&t| t > 0.0).collect();
        if pos.len() < 2 {
            return None;
        }
        let du = (pos[1] / pos[0]).ln();
        pos.windows(2)
            .all(|w| ((w[1] / w[0]).ln() - du).abs() <= 1e-9 * du)
            .then_some(du)
    }
}
