//! Grids, Brownian noise, Volterra synthesis, exact Gaussian sampling and the
//! Lamperti transform.

mod ensemble;
mod grid;
mod rng;

pub use ensemble::{cumulative, differences, EnsembleMeta, Increments, PathEnsemble, StationarySeries};
pub use grid::TimeGrid;
pub use rng::Seed;

use crate::covariance::{cov_matrix, CovarianceOracle};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::quad::{integrate_fallible, End, QuadOptions};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;

/// Independent N(0, Δ_j) increments per cell; row i comes from replicate stream i.
pub fn sample_bm_increments(grid: &TimeGrid, n_paths: usize, seed: Seed) -> Result<Increments> {
    if n_paths == 0 {
        return Err(Error::Domain("need at least one path".into()));
    }
    let sd: Vec<f64> = grid.widths().iter().map(|w| w.sqrt()).collect();
    let rows = (0..n_paths)
        .into_par_iter()
        .map(|i| gaussian_row(&sd, seed, i as u64))
        .collect();
    Increments::from_rows(grid.clone(), rows)
}

/// Independent N(0, sd_j²) draws from replicate stream `replicate`.
pub fn gaussian_row(sd: &[f64], seed: Seed, replicate: u64) -> Vec<f64> {
    let mut rng = seed.rng(replicate);
    sd.iter()
        .map(|s| s * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Lower-triangular synthesis weights: row i holds w_{ij} for the cells
/// j < i ending at or before t_i.
///
/// Off-diagonal cells use the kernel at the cell midpoint. The cell ending at
/// t_i integrates the (t − s)^d factor exactly:
/// w = g(t_i, m) Δ^d / (d + 1) with g the regular part of the kernel.
pub fn synthesis_weights(spec: &KernelSpec, grid: &TimeGrid) -> Result<Vec<Vec<f64>>> {
    if !grid.starts_at_zero() {
        return Err(Error::GridMismatch("kernel synthesis needs a grid starting at 0".into()));
    }
    let pts = grid.points();
    let mids = grid.midpoints();
    let widths = grid.widths();
    let d = spec.diagonal_exponent();
    let opts = QuadOptions::with_tol(1e-9);
    (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let t = pts[i];
            (0..i)
                .map(|j| {
                    if j + 1 < i {
                        if j == 0 {
                            // Cell average: the kernel is singular at the origin.
                            let v = integrate_fallible(
                                |s| spec.kernel_eval(t, s),
                                0.0,
                                pts[1],
                                spec.origin_end(),
                                End::Regular,
                                &opts,
                            )?;
                            Ok(v / widths[0])
                        } else {
                            spec.kernel_eval(t, mids[j])
                        }
                    } else {
                        Ok(spec.diagonal_regular_part(t, mids[j])? * widths[j].powf(d) / (d + 1.0))
                    }
                })
                .collect()
        })
        .collect()
}

/// X_{t_i} = Σ_j w_{ij} ΔW_j for every path.
pub fn synth_from_kernel(spec: &KernelSpec, increments: &Increments) -> Result<PathEnsemble> {
    let weights = synthesis_weights(spec, increments.grid())?;
    synth_with_weights(&weights, increments, spec)
}

pub fn synth_with_weights(
    weights: &[Vec<f64>],
    increments: &Increments,
    spec: &KernelSpec,
) -> Result<PathEnsemble> {
    if weights.len() != increments.grid().len() {
        return Err(Error::GridMismatch("weights do not match the increment grid".into()));
    }
    let rows = (0..increments.n_paths())
        .into_par_iter()
        .map(|p| apply_weights(weights, increments.row(p)))
        .collect();
    PathEnsemble::from_rows(
        increments.grid().clone(),
        rows,
        EnsembleMeta {
            spec: spec.describe(),
            beta: Some(spec.beta()),
            seed: None,
            method: "kernel-midpoint".into(),
        },
    )
}

/// One path from a weight table and its increments.
pub fn apply_weights(weights: &[Vec<f64>], dw: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .map(|w| w.iter().zip(dw).map(|(a, b)| a * b).sum())
        .collect()
}

/// Exact Gaussian sampling from the covariance restricted to the grid.
pub fn sample_cholesky(
    oracle: &CovarianceOracle,
    grid: &TimeGrid,
    n_paths: usize,
    seed: Seed,
    jitter: bool,
) -> Result<PathEnsemble> {
    let cm = cov_matrix(oracle, grid)?;
    if !jitter && !cm.positive_definite {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: cm.min_eigenvalue,
        });
    }
    let l = cm.cholesky(jitter)?;
    let idx = cm.positive_indices();
    let n = grid.len();
    let rows = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = seed.rng(p as u64);
            let z: Vec<f64> = (0..idx.len()).map(|_| rng.sample(StandardNormal)).collect();
            let mut row = vec![0.0; n];
            for (a, &ia) in idx.iter().enumerate() {
                row[ia] = (0..=a).map(|b| l[(a, b)] * z[b]).sum();
            }
            row
        })
        .collect();
    PathEnsemble::from_rows(
        grid.clone(),
        rows,
        EnsembleMeta {
            spec: oracle.spec().describe(),
            beta: Some(oracle.beta()),
            seed: Some(seed.root()),
            method: "cholesky".into(),
        },
    )
}

/// Y_u = e^{−βu} X_{e^u} on a log-uniform grid; a leading t = 0 is dropped.
pub fn lamperti(ensemble: &PathEnsemble, beta: f64) -> Result<StationarySeries> {
    if ensemble.grid().log_step().is_none() {
        return Err(Error::GridMismatch("Lamperti transform needs log-uniform time points".into()));
    }
    let skip = usize::from(ensemble.grid().starts_at_zero());
    let u: Vec<f64> = ensemble.grid().points()[skip..].iter().map(|t| t.ln()).collect();
    let scale: Vec<f64> = u.iter().map(|u| (-beta * u).exp()).collect();
    let rows = ensemble
        .paths()
        .map(|p| p[skip..].iter().zip(&scale).map(|(x, s)| x * s).collect())
        .collect();
    Ok(StationarySeries { u, rows })
}

/// X_t = t^β Y_{ln t}, with X₀ = 0 prepended.
pub fn inverse_lamperti(series: &StationarySeries, beta: f64, meta: EnsembleMeta) -> Result<PathEnsemble> {
    let mut points = vec![0.0];
    points.extend(series.u.iter().map(|u| u.exp()));
    let grid = TimeGrid::from_points(points)?;
    let scale: Vec<f64> = series.u.iter().map(|u| (beta * u).exp()).collect();
    let rows = series
        .rows
        .iter()
        .map(|r| {
            let mut row = Vec::with_capacity(r.len() + 1);
            row.push(0.0);
            row.extend(r.iter().zip(&scale).map(|(y, s)| y * s));
            row
        })
        .collect();
    PathEnsemble::from_rows(grid, rows, meta)
}

/// Relative size of the most negative circulant eigenvalue that is clipped to 0.
pub const CIRCULANT_CLIP: f64 = 1e-8;

/// Stationary Gaussian sequences with autocovariance `acf[k]` at lag k, by
/// circulant embedding. Each path uses its own replicate stream.
pub fn sample_stationary_circulant(acf: &[f64], n_paths: usize, seed: Seed) -> Result<Vec<Vec<f64>>> {
    let m = acf.len();
    if m < 2 {
        return Err(Error::Domain("circulant embedding needs at least two lags".into()));
    }
    let size = 2 * (m - 1);
    let mut c: Vec<Complex64> = acf.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    c.extend(acf[1..m - 1].iter().rev().map(|&r| Complex64::new(r, 0.0)));
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    fft.process(&mut c);
    let top = c.iter().map(|z| z.re).fold(0.0, f64::max);
    let low = c.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if low < -CIRCULANT_CLIP * top {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: low });
    }
    let amp: Vec<f64> = c.iter().map(|z| (z.re.max(0.0) / size as f64).sqrt()).collect();
    (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = seed.rng(p as u64);
            let mut buf: Vec<Complex64> = amp
                .iter()
                .map(|a| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(a * re, a * im)
                })
                .collect();
            fft.process(&mut buf);
            Ok(buf[..m].iter().map(|z| z.re).collect())
        })
        .collect()
}

/// The Lamperti process of a self-similar oracle on u = u₀ + k du, k < m.
pub fn sample_lamperti(
    oracle: &CovarianceOracle,
    u0: f64,
    du: f64,
    m: usize,
    n_paths: usize,
    seed: Seed,
) -> Result<StationarySeries> {
    if !(du > 0.0) || m < 2 {
        return Err(Error::Domain(format!("Lamperti grid needs du > 0 and m ≥ 2, got {du}, {m}")));
    }
    let acf = (0..m)
        .map(|k| oracle.lamperti_autocov(k as f64 * du))
        .collect::<Result<Vec<f64>>>()?;
    let rows = sample_stationary_circulant(&acf, n_paths, seed)?;
    Ok(StationarySeries {
        u: (0..m).map(|k| u0 + k as f64 * du).collect(),
        rows,
    })
}

/// Exact samples of a self-similar process on `TimeGrid::geometric(t_min, horizon, n, true)`.
pub fn sample_geometric(
    oracle: &CovarianceOracle,
    t_min: f64,
    horizon: f64,
    n: usize,
    n_paths: usize,
    seed: Seed,
) -> Result<PathEnsemble> {
    let grid = TimeGrid::geometric(t_min, horizon, n, true)?;
    let u0 = t_min.ln();
    let du = (horizon.ln() - u0) / n as f64;
    let series = sample_lamperti(oracle, u0, du, n + 1, n_paths, seed)?;
    let beta = oracle.beta();
    let mut out = inverse_lamperti(
        &series,
        beta,
        EnsembleMeta {
            spec: oracle.spec().describe(),
            beta: Some(beta),
            seed: Some(seed.root()),
            method: "lamperti-circulant".into(),
        },
    )?;
    // Snap onto the exact grid points (exp of the log grid may differ by an ulp).
    out = PathEnsemble::from_rows(grid, out.paths().map(|p| p.to_vec()).collect(), out.meta.clone())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{fbm_cov, CovarianceOracle};
    use crate::kernels::HurstIndex;

    fn sample_var(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn increments_have_cell_variance() {
        let g = TimeGrid::uniform(1.0, 100).unwrap();
        let inc = sample_bm_increments(&g, 1000, Seed::new(3)).unwrap();
        let all: Vec<f64> = (0..1000).flat_map(|i| inc.row(i).to_vec()).collect();
        let v = sample_var(&all);
        let se = 0.01 * (2.0 / all.len() as f64).sqrt();
        assert!((v - 0.01).abs() < 4.0 * se, "{v}");
        let again = sample_bm_increments(&g, 1000, Seed::new(3)).unwrap();
        assert_eq!(inc, again);
    }

    #[test]
    fn replicates_are_uncorrelated() {
        let g = TimeGrid::uniform(1.0, 1).unwrap();
        let inc = sample_bm_increments(&g, 20_000, Seed::new(5)).unwrap();
        let n = 10_000;
        let c: f64 = (0..n).map(|i| inc.row(i)[0] * inc.row(i + n)[0]).sum::<f64>() / n as f64;
        assert!(c.abs() < 4.0 / (n as f64).sqrt(), "{c}");
    }

    #[test]
    fn brownian_synthesis_is_cumulative_sum() {
        let g = TimeGrid::uniform(1.0, 32).unwrap();
        let inc = sample_bm_increments(&g, 4, Seed::new(1)).unwrap();
        let x = synth_from_kernel(&KernelSpec::fbm(0.5).unwrap(), &inc).unwrap();
        assert!(x.max_abs_diff(&inc.brownian_paths()).unwrap() < 1e-12);
    }

    #[test]
    fn synthesis_is_causal() {
        let spec = KernelSpec::fbm(0.7).unwrap();
        let g = TimeGrid::uniform(1.0, 16).unwrap();
        let w = synthesis_weights(&spec, &g).unwrap();
        for (i, row) in w.iter().enumerate() {
            assert_eq!(row.len(), i);
        }
    }

    #[test]
    fn markov_synthesis_variance() {
        let spec = KernelSpec::power_markov(0.0, 1.0, 1.0).unwrap();
        let g = TimeGrid::uniform(1.0, 16).unwrap();
        let inc = sample_bm_increments(&g, 40_000, Seed::new(11)).unwrap();
        let x = synth_from_kernel(&spec, &inc).unwrap();
        for i in [4usize, 16] {
            let t = g.points()[i];
            let v = sample_var(&x.column(i));
            let se = t * t * (2.0f64 / 40_000.0).sqrt();
            assert!((v - t * t).abs() < 4.0 * se, "t = {t}: {v}");
        }
    }

    #[test]
    fn fbm_synthesis_covariance() {
        let h = 0.7;
        let spec = KernelSpec::fbm(h).unwrap();
        let g = TimeGrid::uniform(1.0, 64).unwrap();
        let inc = sample_bm_increments(&g, 10_000, Seed::new(2)).unwrap();
        let x = synth_from_kernel(&spec, &inc).unwrap();
        let hi = HurstIndex::new(h).unwrap();
        for (i, j) in [(64usize, 64usize), (32, 64), (16, 16)] {
            let (s, t) = (g.points()[i], g.points()[j]);
            let emp = x.column(i).iter().zip(x.column(j)).map(|(a, b)| a * b).sum::<f64>() / 10_000.0;
            let r = fbm_cov(hi, s, t);
            let se = ((fbm_cov(hi, s, s) * fbm_cov(hi, t, t) + r * r) / 10_000.0).sqrt();
            assert!((emp - r).abs() < 5.0 * se + 0.01, "({s}, {t}): {emp} vs {r}");
        }
    }

    #[test]
    fn cholesky_sampling() {
        let o = CovarianceOracle::auto(KernelSpec::fbm(0.5).unwrap());
        let g = TimeGrid::from_points(vec![1.0, 2.0]).unwrap();
        let e = sample_cholesky(&o, &g, 20_000, Seed::new(9), false).unwrap();
        let c01 = e.column(0).iter().zip(e.column(1)).map(|(a, b)| a * b).sum::<f64>() / 20_000.0;
        assert!((c01 - 1.0).abs() < 4.0 * (3.0f64 / 20_000.0).sqrt());
        assert_eq!(e, sample_cholesky(&o, &g, 20_000, Seed::new(9), false).unwrap());
        let z = sample_cholesky(&o, &TimeGrid::uniform(1.0, 4).unwrap(), 3, Seed::new(1), false).unwrap();
        assert!(z.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lamperti_of_power_path_is_constant() {
        let g = TimeGrid::geometric(0.01, 1.0, 20, true).unwrap();
        let beta = 0.7;
        let row: Vec<f64> = g.points().iter().map(|t| t.powf(beta)).collect();
        let e = PathEnsemble::from_rows(g, vec![row], EnsembleMeta::default()).unwrap();
        let y = lamperti(&e, beta).unwrap();
        assert_eq!(y.u.len(), 21);
        assert!(y.rows[0].iter().all(|v| (v - 1.0).abs() < 1e-13));
        let uni = PathEnsemble::from_rows(TimeGrid::uniform(1.0, 3).unwrap(), vec![vec![0.0; 4]], EnsembleMeta::default()).unwrap();
        assert!(matches!(lamperti(&uni, 0.5), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn lamperti_sampler_is_stationary_with_right_variance() {
        let o = CovarianceOracle::auto(KernelSpec::fbm(0.3).unwrap());
        let s = sample_lamperti(&o, -8.0, 0.05, 161, 20_000, Seed::new(4)).unwrap();
        let n = 20_000.0;
        for k in [0usize, 80, 160] {
            let v = s.rows.iter().map(|r| r[k] * r[k]).sum::<f64>() / n;
            assert!((v - 1.0).abs() < 4.0 * (2.0f64 / n).sqrt(), "{v}");
        }
        let r = o.lamperti_autocov(1.0).unwrap();
        for k in [0usize, 100] {
            let c = s.rows.iter().map(|row| row[k] * row[k + 20]).sum::<f64>() / n;
            assert!((c - r).abs() < 4.0 * ((1.0 + r * r) / n).sqrt(), "{c} vs {r}");
        }
    }

    #[test]
    fn geometric_sampler_matches_fbm_covariance() {
        let h = HurstIndex::new(0.7).unwrap();
        let o = CovarianceOracle::auto(KernelSpec::fbm(0.7).unwrap());
        let e = sample_geometric(&o, 1e-3, 1.0, 60, 20_000, Seed::new(8)).unwrap();
        assert_eq!(e.grid().points()[0], 0.0);
        let pts = e.grid().points().to_vec();
        let (i, j) = (31usize, 61usize);
        let emp = e.column(i).iter().zip(e.column(j)).map(|(a, b)| a * b).sum::<f64>() / 20_000.0;
        let r = fbm_cov(h, pts[i], pts[j]);
        let se = ((fbm_cov(h, pts[i], pts[i]) + r * r) / 20_000.0).sqrt();
        assert!((emp - r).abs() < 4.0 * se, "{emp} vs {r}");
    }
}
