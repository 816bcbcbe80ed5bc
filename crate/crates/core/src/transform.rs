//! The transformation Z^α, its inverse and iterates, and its Lamperti-domain
//! filter.
//!
//! Paths are interpolated through Y = X / t^β: piecewise linear in t between
//! grid points and constant on the first cell when the grid starts at 0. The
//! power weights are then integrated exactly cell by cell.

use crate::error::{Error, Result};
use crate::kernels::{AlphaParam, HurstIndex};
use crate::simulate::{apply_weights, cumulative, differences, synthesis_weights, EnsembleMeta, Increments, PathEnsemble, StationarySeries, TimeGrid};
use crate::kernels::KernelSpec;
use num_complex::Complex64;
use rayon::prelude::*;

pub const DEFAULT_EXTENSION: f64 = 32.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformParams {
    pub alpha: AlphaParam,
    pub beta: f64,
    pub horizon: f64,
    pub t_ext: f64,
    pub closure: OriginClosure,
}

impl TransformParams {
    pub fn new(alpha: AlphaParam, beta: f64) -> Result<Self> {
        TransformParams::with_horizon(alpha, beta, 1.0, DEFAULT_EXTENSION)
    }

    pub fn with_horizon(alpha: AlphaParam, beta: f64, horizon: f64, t_ext: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        if !(t_ext >= 2.0 * horizon && t_ext.is_finite()) {
            return Err(Error::Horizon(format!(
                "extended horizon {t_ext} must be at least twice the horizon {horizon}"
            )));
        }
        Ok(TransformParams {
            alpha,
            beta,
            horizon,
            t_ext,
            closure: OriginClosure::default(),
        })
    }

    pub fn closure(mut self, closure: OriginClosure) -> Self {
        self.closure = closure;
        self
    }
}

/// E(k) = (e^{kL} − 1)/k, with E(0) = L.
fn e_k(k: f64, l: f64) -> f64 {
    if k == 0.0 {
        l
    } else {
        (k * l).exp_m1() / k
    }
}

/// E(k + 1) − E(k) without cancellation for small L.
fn e_step(k: f64, l: f64) -> f64 {
    if l < 0.1 {
        let (mut sum, mut fact, mut lp) = (0.0, 1.0, l);
        let (mut pk1, mut pk) = (1.0, 1.0);
        for m in 1..30 {
            if m > 1 {
                fact *= m as f64;
                pk1 *= k + 1.0;
                pk *= k;
                sum += (pk1 - pk) * lp / fact;
            }
            lp *= l;
        }
        sum
    } else {
        e_k(k + 1.0, l) - e_k(k, l)
    }
}

/// (∫ s^p (b − s)/h ds, ∫ s^p (s − a)/h ds) over [a, b], 0 < a < b, p ≠ −1, −2 allowed.
fn cell_weights(a: f64, b: f64, p: f64) -> (f64, f64) {
    let h = b - a;
    let l = (h / a).ln_1p();
    let m0 = a.powf(p + 1.0) * e_k(p + 1.0, l);
    let wb = a.powf(p + 2.0) / h * e_step(p + 1.0, l);
    (m0 - wb, wb)
}

/// Shape assumed for Y = X/t^β on [0, t₁], where the grid carries no
/// information about the path. Elsewhere Y is piecewise linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OriginClosure {
    /// Y constant: exact for X_t = t^β.
    #[default]
    PowerExact,
    /// Y ∝ s^{1/2}: the conditional mean of a β-self-similar Volterra path
    /// given the first increment of its driving Brownian motion.
    BrownianMean,
}

impl OriginClosure {
    fn exponent(self) -> f64 {
        match self {
            OriginClosure::PowerExact => 0.0,
            OriginClosure::BrownianMean => 0.5,
        }
    }
}

/// Z^α on a fixed grid starting at 0, precomputed for repeated use.
#[derive(Debug, Clone)]
pub struct ForwardOperator {
    grid: TimeGrid,
    k: f64,
    t_beta: Vec<f64>,
    prefactor: Vec<f64>,
    first: f64,
    wa: Vec<f64>,
    wb: Vec<f64>,
}

impl ForwardOperator {
    pub fn new(grid: &TimeGrid, alpha: AlphaParam, beta: f64) -> Result<Self> {
        ForwardOperator::with_closure(grid, alpha, beta, OriginClosure::PowerExact)
    }

    pub fn with_closure(grid: &TimeGrid, alpha: AlphaParam, beta: f64, closure: OriginClosure) -> Result<Self> {
        if !grid.starts_at_zero() || grid.len() < 2 {
            return Err(Error::GridMismatch("forward transform needs a grid starting at 0".into()));
        }
        let a = alpha.value();
        let pts = grid.points();
        let p = a - 0.5;
        let t_beta = pts.iter().map(|t| t.powf(beta)).collect();
        let first = pts[1].powf(p + 1.0) / (p + 1.0 + closure.exponent());
        let prefactor = pts.iter().map(|t| t.powf(beta - a - 0.5)).collect();
        let (wa, wb) = pts[1..].windows(2).map(|w| cell_weights(w[0], w[1], p)).unzip();
        Ok(ForwardOperator {
            grid: grid.clone(),
            k: alpha.two_alpha_plus_one(),
            t_beta,
            prefactor,
            first,
            wa,
            wb,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let y: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { x[i] / self.t_beta[i] }).collect();
        let mut out = vec![0.0; n];
        let mut acc = self.first * y[1];
        out[1] = x[1] - self.k * self.prefactor[1] * acc;
        for i in 2..n {
            acc += self.wa[i - 2] * y[i - 1] + self.wb[i - 2] * y[i];
            out[i] = x[i] - self.k * self.prefactor[i] * acc;
        }
        out
    }
}

fn check_finite(e: &PathEnsemble) -> Result<()> {
    if let Some(p) = e.paths().position(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite(format!("path {p} contains non-finite values")));
    }
    Ok(())
}

pub fn z_alpha_forward(ensemble: &PathEnsemble, p: &TransformParams) -> Result<PathEnsemble> {
    let op = ForwardOperator::with_closure(ensemble.grid(), p.alpha, p.beta, p.closure)?;
    let mut meta = ensemble.meta.clone();
    meta.method = format!("{} | Z^{}", meta.method, p.alpha.value());
    let out = ensemble.try_map_paths(ensemble.grid().clone(), meta, |x| Ok(op.apply(x)))?;
    check_finite(&out)?;
    Ok(out)
}

/// Molchan's transformation: Z^α with α = H − 1/2, β = H.
pub fn molchan(ensemble: &PathEnsemble, hurst: HurstIndex) -> Result<PathEnsemble> {
    let h = hurst.value();
    let p = TransformParams::with_horizon(
        AlphaParam::new(h - 0.5)?,
        h,
        ensemble.grid().horizon(),
        2.0 * ensemble.grid().horizon(),
    )?;
    z_alpha_forward(ensemble, &p)
}

/// Output of the inverse: paths on [0, T] and the per-time truncation bound
/// (the maximum over paths).
#[derive(Debug, Clone)]
pub struct InverseResult {
    pub paths: PathEnsemble,
    pub truncation_bound: Vec<f64>,
}

/// Z^{α,−1} with the tail integral cut at the ensemble's last grid point.
pub fn z_alpha_inverse(ensemble: &PathEnsemble, p: &TransformParams) -> Result<InverseResult> {
    inverse_to(ensemble, p.alpha, p.beta, p.horizon)
}

fn inverse_to(ensemble: &PathEnsemble, alpha: AlphaParam, beta: f64, horizon: f64) -> Result<InverseResult> {
    let grid = ensemble.grid();
    let t_ext = grid.horizon();
    if !(t_ext > horizon) {
        return Err(Error::Horizon(format!(
            "inverse needs paths beyond the horizon {horizon}; the input ends at {t_ext}"
        )));
    }
    let out_grid = grid.truncate_at(horizon)?;
    let m = out_grid.len();
    let pts = grid.points();
    let a = alpha.value();
    let k = alpha.two_alpha_plus_one();
    let q = -a - 1.5;
    let t_beta: Vec<f64> = pts.iter().map(|t| t.powf(beta)).collect();
    let first_pos = usize::from(pts[0] == 0.0);
    // Cell c spans [pts[c], pts[c+1]] for c ≥ first_pos.
    let cells: Vec<(f64, f64)> = (0..pts.len() - 1)
        .map(|c| if c < first_pos { (0.0, 0.0) } else { cell_weights(pts[c], pts[c + 1], q) })
        .collect();
    let prefactor: Vec<f64> = pts[..m].iter().map(|t| t.powf(a + beta + 0.5)).collect();
    let tail = k / (a + 0.5) * t_ext.powf(-a - 0.5);
    let bounds_per_path: Vec<(Vec<f64>, Vec<f64>)> = ensemble
        .paths()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|x| {
            let y: Vec<f64> = (0..x.len())
                .map(|i| if pts[i] == 0.0 { 0.0 } else { x[i] / t_beta[i] })
                .collect();
            let c = y[m - 1..].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let mut acc = 0.0;
            for cell in (m - 1..pts.len() - 1).rev() {
                acc += cells[cell].0 * y[cell] + cells[cell].1 * y[cell + 1];
            }
            let mut z = vec![0.0; m];
            let mut bound = vec![0.0; m];
            for i in (first_pos..m).rev() {
                if i < m - 1 {
                    acc += cells[i].0 * y[i] + cells[i].1 * y[i + 1];
                }
                z[i] = x[i] - k * prefactor[i] * acc;
                bound[i] = c * prefactor[i] * tail;
            }
            (z, bound)
        })
        .collect();
    let mut truncation_bound = vec![0.0f64; m];
    let mut rows = Vec::with_capacity(bounds_per_path.len());
    for (z, b) in bounds_per_path {
        for (acc, v) in truncation_bound.iter_mut().zip(&b) {
            *acc = acc.max(*v);
        }
        rows.push(z);
    }
    let mut meta = ensemble.meta.clone();
    meta.method = format!("{} | Z^{},-1", meta.method, alpha.value());
    let paths = PathEnsemble::from_rows(out_grid, rows, meta)?;
    check_finite(&paths)?;
    Ok(InverseResult { paths, truncation_bound })
}

/// Result of an iterate: the paths and, for negative n, the accumulated
/// truncation bound of the final inverse step.
#[derive(Debug, Clone)]
pub struct IterateResult {
    pub paths: PathEnsemble,
    pub truncation_bound: Option<Vec<f64>>,
}

/// (Z^α)^n. Negative n consumes the extension geometrically: the j-th inverse
/// maps [0, H_{j−1}] to [0, H_j] with H_j = T (T_ext/T)^{(|n|−j)/|n|}, each
/// snapped to the grid point at or below it.
pub fn z_alpha_iterate(ensemble: &PathEnsemble, p: &TransformParams, n: i32) -> Result<IterateResult> {
    if n >= 0 {
        let op = ForwardOperator::with_closure(ensemble.grid(), p.alpha, p.beta, p.closure)?;
        let mut meta = ensemble.meta.clone();
        meta.method = format!("{} | Z^{}^{n}", meta.method, p.alpha.value());
        let out = ensemble.try_map_paths(ensemble.grid().clone(), meta, |x| {
            let mut cur = x.to_vec();
            for _ in 0..n {
                cur = op.apply(&cur);
            }
            Ok(cur)
        })?;
        check_finite(&out)?;
        return Ok(IterateResult { paths: out, truncation_bound: None });
    }
    let k = n.unsigned_abs();
    let t = p.horizon;
    let t_ext = ensemble.grid().horizon();
    let ratio = (t_ext / t).powf(1.0 / k as f64);
    if !(ratio >= 2.0) {
        return Err(Error::Horizon(format!(
            "{k} inverse steps from {t_ext} down to {t} leave a ratio of {ratio:.3} per step (need ≥ 2)"
        )));
    }
    let pts = ensemble.grid().points().to_vec();
    let mut cur = ensemble.clone();
    let mut bound = None;
    for j in 1..=k {
        let target = if j == k {
            t
        } else {
            t * ratio.powi((k - j) as i32)
        };
        let snapped = pts[pts.partition_point(|&s| s <= target * (1.0 + 1e-12)) - 1];
        if !(snapped < cur.grid().horizon()) {
            return Err(Error::Horizon(format!("grid too coarse to step below {}", cur.grid().horizon())));
        }
        let r = inverse_to(&cur, p.alpha, p.beta, snapped)?;
        cur = r.paths;
        bound = Some(r.truncation_bound);
    }
    Ok(IterateResult { paths: cur, truncation_bound: bound })
}

/// The Lamperti-domain form of Z^α: Y ↦ Y − (2α + 1) ∫_{−∞}^u e^{−(α+1/2)(u−v)} Y_v dv,
/// on a uniform u-grid with Y piecewise linear in u. The integral before the
/// first point is taken with Y frozen at its first value.
#[derive(Debug, Clone, Copy)]
pub struct StationaryFilter {
    k: f64,
    inv_a: f64,
    decay: f64,
    wa: f64,
    wb: f64,
}

impl StationaryFilter {
    pub fn new(alpha: AlphaParam, du: f64) -> Result<Self> {
        if !(du > 0.0) {
            return Err(Error::Domain(format!("log-time step must be positive, got {du}")));
        }
        let a = alpha.value() + 0.5;
        let x = a * du;
        let m = -(-x).exp_m1() / a;
        // (1 − e^{−x}(1 + x)) / a², written to avoid cancellation at small x
        let g = if x < 1e-3 {
            du * du * (0.5 - x / 3.0 + x * x / 8.0)
        } else {
            (-(-x).exp_m1() - x * (-x).exp()) / (a * a)
        };
        let wb = m - g / du;
        Ok(StationaryFilter {
            k: alpha.two_alpha_plus_one(),
            inv_a: 1.0 / a,
            decay: (-x).exp(),
            wa: m - wb,
            wb,
        })
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(y.len());
        let Some(&y0) = y.first() else { return out };
        let mut j = y0 * self.inv_a;
        out.push(y0 - self.k * j);
        for w in y.windows(2) {
            j = self.decay * j + self.wa * w[0] + self.wb * w[1];
            out.push(w[1] - self.k * j);
        }
        out
    }
}

pub fn z_alpha_stationary(series: &StationarySeries, alpha: AlphaParam) -> Result<StationarySeries> {
    if series.u.len() < 2 {
        return Err(Error::GridMismatch("need at least two log-time points".into()));
    }
    let du = series.u[1] - series.u[0];
    if series.u.windows(2).any(|w| ((w[1] - w[0]) - du).abs() > 1e-9 * du) {
        return Err(Error::GridMismatch("log-time grid is not uniform".into()));
    }
    let f = StationaryFilter::new(alpha, du)?;
    Ok(StationarySeries {
        u: series.u.clone(),
        rows: series.rows.par_iter().map(|r| f.apply(r)).collect(),
    })
}

/// H^α(λ) = 1 − (2α + 1)(α + 1/2 − iλ)/((α + 1/2)² + λ²).
pub fn transfer_function(alpha: AlphaParam, lambda: f64) -> Complex64 {
    let a = alpha.value() + 0.5;
    let k = alpha.two_alpha_plus_one();
    let d = a * a + lambda * lambda;
    Complex64::new(1.0 - k * a / d, k * lambda / d)
}

/// The absolutely continuous part of h^α at x > 0; the unit mass at 0 is implicit.
pub fn impulse_response(alpha: AlphaParam, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("impulse response is evaluated at x > 0, got {x}")));
    }
    Ok(-alpha.two_alpha_plus_one() * (-(alpha.value() + 0.5) * x).exp())
}

/// max over grid points of the root-mean-square over paths of
/// |Z^α(X̂) − X̂[Z^α(W)]|, where X̂[·] is kernel synthesis from the given
/// increments. Both transforms use the Brownian closure on the first cell.
pub fn commutation_check(spec: &KernelSpec, increments: &Increments, alpha: AlphaParam) -> Result<f64> {
    let grid = increments.grid();
    if !grid.is_uniform() || !grid.starts_at_zero() {
        return Err(Error::GridMismatch("commutation check needs a uniform grid from 0".into()));
    }
    let weights = synthesis_weights(spec, grid)?;
    let fwd_x = ForwardOperator::with_closure(grid, alpha, spec.beta(), OriginClosure::BrownianMean)?;
    let fwd_w = ForwardOperator::with_closure(grid, alpha, 0.5, OriginClosure::BrownianMean)?;
    let sq: Vec<Vec<f64>> = (0..increments.n_paths())
        .into_par_iter()
        .map(|i| {
            let dw = increments.row(i);
            let a = fwd_x.apply(&apply_weights(&weights, dw));
            let w_prime = fwd_w.apply(&cumulative(dw));
            let b = apply_weights(&weights, &differences(&w_prime));
            a.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).collect()
        })
        .collect();
    let n = increments.n_paths() as f64;
    let worst = (0..grid.len())
        .map(|k| (sq.iter().map(|r| r[k]).sum::<f64>() / n).sqrt())
        .fold(0.0, f64::max);
    if !worst.is_finite() {
        return Err(Error::NonFinite("commutation discrepancy".into()));
    }
    Ok(worst)
}

/// Convenience metadata for deterministic test paths.
pub fn power_path(grid: &TimeGrid, beta: f64) -> PathEnsemble {
    PathEnsemble::from_rows(
        grid.clone(),
        vec![grid.points().iter().map(|t| t.powf(beta)).collect()],
        EnsembleMeta {
            spec: format!("power(beta={beta})"),
            beta: Some(beta),
            seed: None,
            method: "deterministic".into(),
        },
    )
    .expect("one row of grid length")
}
