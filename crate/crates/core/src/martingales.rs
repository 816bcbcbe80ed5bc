//! N^α_t = ∫_0^t s^α dW_s, its bridge, the fundamental martingale of fBm,
//! the functional ξ^H_T and the process Y^H_t = M^H_t − (t/T) ξ^H_T.

use crate::error::{Error, Result};
use crate::kernels::{AlphaParam, HurstIndex};
use crate::quad::{integrate, End, QuadOptions};
use crate::simulate::{cumulative, gaussian_row, EnsembleMeta, Increments, PathEnsemble, Seed, TimeGrid};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeSpec {
    pub alpha: AlphaParam,
    pub horizon: f64,
}

impl BridgeSpec {
    pub fn new(alpha: AlphaParam, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("bridge horizon must be positive, got {horizon}")));
        }
        Ok(BridgeSpec { alpha, horizon })
    }
}

fn need_zero_start(inc: &Increments) -> Result<()> {
    if inc.grid().starts_at_zero() {
        Ok(())
    } else {
        Err(Error::GridMismatch("stochastic integrals need a grid starting at 0".into()))
    }
}

/// Σ_j w_j ΔW_j accumulated along the grid, for every path.
fn integrate_increments(inc: &Increments, weights: &[f64], meta: EnsembleMeta) -> Result<PathEnsemble> {
    let rows = (0..inc.n_paths())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            let mut row = Vec::with_capacity(weights.len() + 1);
            row.push(0.0);
            for (w, dw) in weights.iter().zip(inc.row(i)) {
                acc += w * dw;
                row.push(acc);
            }
            row
        })
        .collect();
    PathEnsemble::from_rows(inc.grid().clone(), rows, meta)
}

/// Weights for ∫ s^α dW: midpoint values, and on the cell at the origin the
/// cell average Δ^α/(α + 1) (the conditional mean given ΔW₀).
pub fn nalpha_weights(alpha: AlphaParam, grid: &TimeGrid) -> Vec<f64> {
    let a = alpha.value();
    let widths = grid.widths();
    grid.midpoints()
        .iter()
        .enumerate()
        .map(|(j, m)| {
            if j == 0 && grid.starts_at_zero() {
                origin_average(a, widths[0])
            } else {
                m.powf(a)
            }
        })
        .collect()
}

/// Standard deviations of the exact N^α increments, √((t_j^k − t_{j−1}^k)/k) with k = 2α + 1.
pub fn nalpha_increment_sd(alpha: AlphaParam, grid: &TimeGrid) -> Vec<f64> {
    let k = alpha.two_alpha_plus_one();
    grid.points()
        .windows(2)
        .map(|w| ((w[1].powf(k) - w[0].powf(k)) / k).sqrt())
        .collect()
}

/// N^α sampled exactly in law on the grid (independent Gaussian increments
/// with the exact variances). Not driven by a W path; see [`nalpha_path`]
/// for the pathwise version.
pub fn sample_nalpha_exact(alpha: AlphaParam, grid: &TimeGrid, n_paths: usize, seed: Seed) -> Result<PathEnsemble> {
    if !grid.starts_at_zero() {
        return Err(Error::GridMismatch("N^α is sampled on grids starting at 0".into()));
    }
    let sd = nalpha_increment_sd(alpha, grid);
    let rows = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| cumulative(&gaussian_row(&sd, seed, i)))
        .collect();
    PathEnsemble::from_rows(
        grid.clone(),
        rows,
        EnsembleMeta {
            spec: format!("nalpha(alpha={})", alpha.value()),
            beta: Some(alpha.value() + 0.5),
            seed: Some(seed.root()),
            method: "exact-increments".into(),
        },
    )
}

/// (1/Δ) ∫_0^Δ s^p ds
fn origin_average(p: f64, width: f64) -> f64 {
    width.powf(p) / (p + 1.0)
}

/// N^α from midpoint weights (see [`nalpha_weights`]).
pub fn nalpha_path(alpha: AlphaParam, increments: &Increments) -> Result<PathEnsemble> {
    need_zero_start(increments)?;
    let a = alpha.value();
    let weights = nalpha_weights(alpha, increments.grid());
    integrate_increments(
        increments,
        &weights,
        EnsembleMeta {
            spec: format!("nalpha(alpha={a})"),
            beta: Some(a + 0.5),
            seed: None,
            method: "midpoint".into(),
        },
    )
}

/// N^{α,T}_t = N^α_t − (t/T)^{2α+1} N^α_T on [0, T].
pub fn bridge(ensemble: &PathEnsemble, spec: &BridgeSpec) -> Result<PathEnsemble> {
    let grid = ensemble.grid().truncate_at(spec.horizon)?;
    let last = grid.len() - 1;
    let k = spec.alpha.two_alpha_plus_one();
    let t_end = grid.points()[last];
    let ratio: Vec<f64> = grid.points().iter().map(|t| (t / t_end).powf(k)).collect();
    let rows = ensemble
        .paths()
        .map(|p| {
            let end = p[last];
            let mut row: Vec<f64> = (0..=last).map(|i| p[i] - ratio[i] * end).collect();
            row[last] = 0.0;
            row
        })
        .collect();
    let mut meta = ensemble.meta.clone();
    meta.spec = format!("bridge(alpha={},T={})", spec.alpha.value(), spec.horizon);
    PathEnsemble::from_rows(grid, rows, meta)
}

/// M^H = √(2 − 2H) N^{1/2 − H}.
pub fn fundamental_martingale(hurst: HurstIndex, increments: &Increments) -> Result<PathEnsemble> {
    let h = hurst.value();
    let scale = (2.0 - 2.0 * h).sqrt();
    let n = nalpha_path(AlphaParam::new(0.5 - h)?, increments)?;
    let rows = n.paths().map(|p| p.iter().map(|v| scale * v).collect()).collect();
    PathEnsemble::from_rows(
        n.grid().clone(),
        rows,
        EnsembleMeta {
            spec: format!("mh(H={h})"),
            beta: Some(1.0 - h),
            seed: None,
            method: "midpoint".into(),
        },
    )
}

/// Cell weights for ∫ (s/T)^{2H−1} dM: midpoint values, and on the cell at
/// the origin the dM-weighted average ∫ (s/T)^{2H−1} s^{1/2−H} ds / ∫ s^{1/2−H} ds.
fn xi_weights(h: f64, horizon: f64, grid: &TimeGrid) -> Vec<f64> {
    let e = 2.0 * h - 1.0;
    let widths = grid.widths();
    grid.midpoints()
        .iter()
        .enumerate()
        .map(|(j, m)| {
            if j == 0 {
                horizon.powf(-e) * widths[0].powf(e) * (1.5 - h) / (h + 0.5)
            } else {
                (m / horizon).powf(e)
            }
        })
        .collect()
}

/// ξ^H_T = 2H ∫_0^T (s/T)^{2H−1} dM^H_s, one value per path.
pub fn xi(hurst: HurstIndex, horizon: f64, m: &PathEnsemble) -> Result<Vec<f64>> {
    let m = m.truncate_at(horizon)?;
    if !m.grid().starts_at_zero() {
        return Err(Error::GridMismatch("ξ needs a grid starting at 0".into()));
    }
    let h = hurst.value();
    let weights = xi_weights(h, horizon, m.grid());
    Ok(m.paths()
        .map(|p| 2.0 * h * p.windows(2).zip(&weights).map(|(w, c)| c * (w[1] - w[0])).sum::<f64>())
        .collect())
}

/// Var ξ^H_T = ∫_0^T (2H)² (s/T)^{2(2H−1)} (2 − 2H) s^{1−2H} ds by quadrature.
pub fn xi_variance(hurst: HurstIndex, horizon: f64) -> Result<f64> {
    let h = hurst.value();
    integrate(
        |s| 4.0 * h * h * (s / horizon).powf(2.0 * (2.0 * h - 1.0)) * (2.0 - 2.0 * h) * s.powf(1.0 - 2.0 * h),
        0.0,
        horizon,
        End::Power(2.0 * h - 1.0),
        End::Regular,
        &QuadOptions::with_tol(1e-12),
    )
}

/// Y^H_t = M^H_t − (t/T) ξ^H_T on [0, T].
pub fn yh_path(hurst: HurstIndex, horizon: f64, increments: &Increments) -> Result<PathEnsemble> {
    let m = fundamental_martingale(hurst, increments)?.truncate_at(horizon)?;
    let xs = xi(hurst, horizon, &m)?;
    let pts = m.grid().points().to_vec();
    let rows = m
        .paths()
        .zip(&xs)
        .map(|(p, x)| p.iter().zip(&pts).map(|(v, t)| v - t / horizon * x).collect())
        .collect();
    PathEnsemble::from_rows(
        m.grid().clone(),
        rows,
        EnsembleMeta {
            spec: format!("yh(H={},T={horizon})", hurst.value()),
            beta: None,
            seed: None,
            method: "midpoint".into(),
        },
    )
}

/// √(2 − 2H) ∫_0^t s^{1−2H} dN^{H−1/2,T}_s, splitting
/// dN^{α,T} = dN^α − N^α_T d(s/T)^{2H}. The dN^α part uses midpoint weights
/// (the dN-weighted cell average at the origin); the drift part is integrated
/// exactly, ∫ s^{1−2H} d(s/T)^{2H} = 2H Δ / T^{2H}.
pub fn yh_bridge_representation(hurst: HurstIndex, horizon: f64, increments: &Increments) -> Result<PathEnsemble> {
    let h = hurst.value();
    let spec = BridgeSpec::new(AlphaParam::new(h - 0.5)?, horizon)?;
    let n = nalpha_path(spec.alpha, increments)?.truncate_at(horizon)?;
    let grid = n.grid().clone();
    let last = grid.len() - 1;
    let e = 1.0 - 2.0 * h;
    let widths = grid.widths();
    let weights: Vec<f64> = grid
        .midpoints()
        .iter()
        .enumerate()
        .map(|(j, m)| {
            if j == 0 {
                widths[0].powf(1.0 - 2.0 * h) * (h + 0.5) / (1.5 - h)
            } else {
                m.powf(e)
            }
        })
        .collect();
    let drift = 2.0 * h / horizon.powf(2.0 * h);
    let scale = (2.0 - 2.0 * h).sqrt();
    let pts = grid.points().to_vec();
    let rows = n
        .paths()
        .map(|p| {
            let end = p[last];
            let mut acc = 0.0;
            let mut row = vec![0.0];
            for (j, (w, c)) in p.windows(2).zip(&weights).enumerate() {
                acc += c * (w[1] - w[0]);
                row.push(scale * (acc - drift * pts[j + 1] * end));
            }
            row
        })
        .collect();
    PathEnsemble::from_rows(
        grid,
        rows,
        EnsembleMeta {
            spec: format!("yh-bridge(H={h},T={horizon})"),
            beta: None,
            seed: None,
            method: "stieltjes".into(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{sample_bm_increments, Seed, TimeGrid};

    fn var(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }

    fn cov(x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn nalpha_zero_is_brownian() {
        let g = TimeGrid::uniform(1.0, 16).unwrap();
        let inc = sample_bm_increments(&g, 3, Seed::new(1)).unwrap();
        let n = nalpha_path(AlphaParam::new(0.0).unwrap(), &inc).unwrap();
        assert!(n.max_abs_diff(&inc.brownian_paths()).unwrap() < 1e-14);
    }

    #[test]
    fn nalpha_variance_and_martingale_property() {
        let g = TimeGrid::uniform(1.0, 32).unwrap();
        let n_paths = 100_000;
        let inc = sample_bm_increments(&g, n_paths, Seed::new(2)).unwrap();
        let n = nalpha_path(AlphaParam::new(0.5).unwrap(), &inc).unwrap();
        let v = var(&n.column(32));
        assert!((v - 0.5).abs() < 4.0 * 0.5 * (2.0 / n_paths as f64).sqrt(), "{v}");
        let past = n.column(16);
        let fut: Vec<f64> = n.column(32).iter().zip(&past).map(|(a, b)| a - b).collect();
        let c = cov(&fut, &past);
        let se = (var(&fut) * var(&past) / n_paths as f64).sqrt();
        assert!(c.abs() < 4.0 * se, "{c}");
    }

    #[test]
    fn bridge_endpoint_and_covariance() {
        let g = TimeGrid::uniform(1.0, 32).unwrap();
        let n_paths = 100_000;
        let inc = sample_bm_increments(&g, n_paths, Seed::new(3)).unwrap();
        let n = nalpha_path(AlphaParam::new(0.0).unwrap(), &inc).unwrap();
        let b = bridge(&n, &BridgeSpec::new(AlphaParam::new(0.0).unwrap(), 1.0).unwrap()).unwrap();
        assert!(b.column(32).iter().all(|&v| v == 0.0));
        let (s, t) = (0.25, 0.5);
        let c = cov(&b.column(8), &b.column(16));
        let exact = s - s * t;
        let se = (((s - s * s) * (t - t * t) + exact * exact) / n_paths as f64).sqrt();
        assert!((c - exact).abs() < 4.0 * se, "{c}");
        let ce = cov(&b.column(8), &n.column(32));
        assert!(ce.abs() < 4.0 * ((s - s * s) / n_paths as f64).sqrt());
    }

    #[test]
    fn fundamental_martingale_cases() {
        let g = TimeGrid::uniform(2.0, 1024).unwrap();
        let inc = sample_bm_increments(&g, 20_000, Seed::new(4)).unwrap();
        let w = fundamental_martingale(HurstIndex::new(0.5).unwrap(), &inc).unwrap();
        assert!(w.max_abs_diff(&inc.brownian_paths()).unwrap() < 1e-12);
        let m = fundamental_martingale(HurstIndex::new(0.75).unwrap(), &inc).unwrap();
        let v1 = var(&m.column(512));
        let v2 = var(&m.column(1024));
        let se = (2.0f64 / 20_000.0).sqrt();
        assert!((v1 - 1.0).abs() < 4.0 * se, "{v1}");
        assert!((v2 / v1 - 2f64.powf(0.5)).abs() < 4.0 * 2.0 * se, "{}", v2 / v1);
    }

    #[test]
    fn xi_cases() {
        let g = TimeGrid::uniform(1.0, 64).unwrap();
        let inc = sample_bm_increments(&g, 100_000, Seed::new(5)).unwrap();
        let half = HurstIndex::new(0.5).unwrap();
        let m = fundamental_martingale(half, &inc).unwrap();
        let x = xi(half, 1.0, &m).unwrap();
        for (a, b) in x.iter().zip(m.column(64)) {
            assert!((a - b).abs() < 1e-12);
        }
        for h in [0.3, 0.75] {
            let hi = HurstIndex::new(h).unwrap();
            let v = xi_variance(hi, 1.0).unwrap();
            assert!((v - 2.0 * h * (2.0 - 2.0 * h)).abs() < 1e-10);
            let m = fundamental_martingale(hi, &inc).unwrap();
            let e = var(&xi(hi, 1.0, &m).unwrap());
            assert!((e - v).abs() < 4.0 * v * (2.0f64 / 100_000.0).sqrt() + 0.01 * v, "H {h}: {e} vs {v}");
        }
    }

    #[test]
    fn yh_brownian_is_bridge() {
        let g = TimeGrid::uniform(1.0, 16).unwrap();
        let inc = sample_bm_increments(&g, 2, Seed::new(6)).unwrap();
        let y = yh_path(HurstIndex::new(0.5).unwrap(), 1.0, &inc).unwrap();
        let w = inc.brownian_paths();
        for p in 0..2 {
            for (i, t) in g.points().iter().enumerate() {
                assert!((y.path(p)[i] - (w.path(p)[i] - t * w.path(p)[16])).abs() < 1e-12);
            }
        }
        let y = yh_path(HurstIndex::new(0.75).unwrap(), 1.0, &inc).unwrap();
        assert!(y.path(0)[16].abs() > 1e-6);
    }

    #[test]
    fn yh_representation_matches() {
        let g = TimeGrid::uniform(1.0, 256).unwrap();
        let inc = sample_bm_increments(&g, 4, Seed::new(7)).unwrap();
        for h in [0.25, 0.5, 0.75] {
            let hi = HurstIndex::new(h).unwrap();
            let d = yh_path(hi, 1.0, &inc)
                .unwrap()
                .max_abs_diff(&yh_bridge_representation(hi, 1.0, &inc).unwrap())
                .unwrap();
            assert!(d < 1e-12, "H {h}: {d}");
        }
    }
}
