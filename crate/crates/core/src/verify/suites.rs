//! Named verification suites. Every check draws from its own seed derived
//! from the suite seed and a fixed tag, so a check gives the same result
//! whether it runs alone, in its suite, or in `all`.

use super::checks::*;
use super::report::{SuiteReport, VerificationReport};
use super::stats::{convergence_order, gaussian_cov_se};
use crate::covariance::{
    bridge_cov, fbm_cov, kernel_cov, selfsim_bound_check, transform_cov_oracle, CovMode, CovarianceOracle,
    DEFAULT_QUAD_TOL,
};
use crate::error::{Error, Result};
use crate::kernels::{kernel_identity_residual, AlphaParam, HurstIndex, KernelSpec};
use crate::martingales::{
    bridge, fundamental_martingale, sample_nalpha_exact, xi, xi_variance, yh_bridge_representation, yh_path,
    BridgeSpec,
};
use crate::simulate::{sample_bm_increments, sample_cholesky, synth_from_kernel, PathEnsemble, Seed, TimeGrid};
use crate::transform::{
    commutation_check, molchan, power_path, transfer_function, z_alpha_forward, z_alpha_inverse, TransformParams,
};
use std::time::Instant;

pub const SUITES: [&str; 6] = ["kernels", "covariance", "transform", "bridges", "ergodic", "all"];

type Check = fn(Seed) -> Result<Vec<VerificationReport>>;

fn checks_of(suite: &str) -> Option<Vec<Check>> {
    let kernels: Vec<Check> = vec![transfer_modulus, kernel_homogeneity, kernel_identity];
    let covariance: Vec<Check> = vec![
        covariance_oracle_agreement,
        selfsimilarity_bound,
        transform_covariance,
        sampler_calibration,
    ];
    let transform: Vec<Check> = vec![
        power_path_regression,
        molchan_equivalence,
        pathwise_commutation,
        inverse_composition,
        statistical_measure_preservation,
        selfsimilarity,
    ];
    let bridges: Vec<Check> = vec![
        bridge_properties,
        xi_variance_check,
        yh_representation,
        iterate_orthogonality_check,
        span_equality,
        completeness,
    ];
    let ergodic: Vec<Check> = vec![ergodicity, mixing];
    Some(match suite {
        "kernels" => kernels,
        "covariance" => covariance,
        "transform" => transform,
        "bridges" => bridges,
        "ergodic" => ergodic,
        "all" => [kernels, covariance, transform, bridges, ergodic].concat(),
        _ => return None,
    })
}

/// Runs a suite. With `timing` each report carries its wall time; without it
/// the JSON is a pure function of (suite, seed).
pub fn run_suite(suite: &str, seed: u64, timing: bool) -> Result<SuiteReport> {
    let checks = checks_of(suite).ok_or_else(|| {
        Error::Domain(format!("unknown suite '{suite}', expected one of {}", SUITES.join(", ")))
    })?;
    let root = Seed::new(seed);
    let mut reports = Vec::new();
    for check in checks {
        let t0 = Instant::now();
        let mut batch = check(root)?;
        if timing {
            let dt = t0.elapsed().as_secs_f64() / batch.len() as f64;
            for r in &mut batch {
                r.wall_time_s = Some(dt);
            }
        }
        reports.extend(batch);
    }
    Ok(SuiteReport {
        suite: suite.to_string(),
        seed,
        pass: reports.iter().all(|r| r.pass),
        reports,
    })
}

fn alpha(v: f64) -> AlphaParam {
    AlphaParam::new(v).expect("admissible α")
}

fn fbm(h: f64) -> KernelSpec {
    KernelSpec::fbm(h).expect("admissible H")
}

// ---- kernels ----

pub fn transfer_modulus(_: Seed) -> Result<Vec<VerificationReport>> {
    let alphas = [-0.4, 0.0, 0.5, 2.0];
    let mut worst: f64 = 0.0;
    for &a in &alphas {
        for i in 0..=400 {
            let lambda = -100.0 + 0.5 * i as f64;
            worst = worst.max((transfer_function(alpha(a), lambda).norm() - 1.0).abs());
        }
    }
    Ok(vec![VerificationReport::new("transfer_modulus")
        .param("alphas", alphas.to_vec())
        .param("lambda_points", 401)
        .param("lambda_range", vec![-100.0, 100.0])
        .stat("max_modulus_error", worst)
        .threshold("max_modulus_error", 1e-12)
        .passed(worst <= 1e-12)])
}

pub fn kernel_homogeneity(_: Seed) -> Result<Vec<VerificationReport>> {
    let specs = [
        fbm(0.25),
        fbm(0.5),
        fbm(0.75),
        KernelSpec::power_markov(1.0, 1.0, 2.0)?,
        KernelSpec::power_markov(-0.25, 0.3, 1.0)?,
    ];
    let ts = [0.2, 0.5, 1.0, 2.0, 5.0];
    let fracs = [0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.95];
    let scales = [0.5, 2.0, 10.0];
    let mut worst: f64 = 0.0;
    for spec in &specs {
        let e = spec.beta() - 0.5;
        for &t in &ts {
            for &f in &fracs {
                let s = f * t;
                let base = spec.kernel_eval(t, s)?;
                for &a in &scales {
                    let scaled = spec.kernel_eval(a * t, a * s)?;
                    worst = worst.max((scaled - a.powf(e) * base).abs() / base.abs());
                }
            }
        }
    }
    Ok(vec![VerificationReport::new("kernel_homogeneity")
        .param("specs", specs.iter().map(|s| s.describe()).collect::<Vec<_>>())
        .param("scales", scales.to_vec())
        .param("lattice_points", ts.len() * fracs.len())
        .stat("max_rel_error", worst)
        .threshold("max_rel_error", 1e-10)
        .passed(worst <= 1e-10)])
}

pub fn kernel_identity(_: Seed) -> Result<Vec<VerificationReport>> {
    let pairs = [(0.5, 1.0), (1.0, 2.0), (0.1, 5.0)];
    let mut worst: f64 = 0.0;
    for h in [0.25, 0.5, 0.75] {
        for a in [-0.25, 0.0, 1.0] {
            for &(s, t) in &pairs {
                worst = worst.max(kernel_identity_residual(&fbm(h), alpha(a), s, t)?);
            }
        }
    }
    Ok(vec![VerificationReport::new("kernel_identity")
        .param("hurst", vec![0.25, 0.5, 0.75])
        .param("alphas", vec![-0.25, 0.0, 1.0])
        .param("st_pairs", pairs.iter().map(|&(s, t)| vec![s, t]).collect::<Vec<_>>())
        .stat("max_residual", worst)
        .threshold("max_residual", 1e-6)
        .passed(worst <= 1e-6)])
}

// ---- covariance ----

pub fn covariance_oracle_agreement(_: Seed) -> Result<Vec<VerificationReport>> {
    let ss = [0.2, 0.5, 1.0, 2.5];
    let ts = [0.3, 1.0, 2.0, 4.0, 7.0];
    let mut worst: f64 = 0.0;
    for h in [0.3, 0.7] {
        let oracle = CovarianceOracle::new(fbm(h), CovMode::Quadrature, DEFAULT_QUAD_TOL)?;
        let hi = HurstIndex::new(h)?;
        for &s in &ss {
            for &t in &ts {
                let exact = fbm_cov(hi, s, t);
                worst = worst.max((kernel_cov(&oracle, s, t)? - exact).abs() / exact.abs());
            }
        }
    }
    Ok(vec![VerificationReport::new("covariance_oracle_agreement")
        .param("hurst", vec![0.3, 0.7])
        .param("lattice_points", ss.len() * ts.len())
        .stat("max_rel_error", worst)
        .threshold("max_rel_error", 1e-5)
        .passed(worst <= 1e-5)])
}

pub fn selfsimilarity_bound(_: Seed) -> Result<Vec<VerificationReport>> {
    let samples: Vec<(f64, f64)> = [0.1, 0.5, 1.0, 3.0, 10.0]
        .iter()
        .flat_map(|&s| [0.2, 1.0, 3.0, 7.0].map(|t| (s, t)))
        .collect();
    let specs = [fbm(0.3), fbm(0.7), KernelSpec::power_markov(0.5, 1.0, 1.0)?, KernelSpec::nalpha(-0.3)?];
    let mut worst = f64::NEG_INFINITY;
    for spec in &specs {
        worst = worst.max(selfsim_bound_check(&CovarianceOracle::auto(spec.clone()), &samples)?);
    }
    Ok(vec![VerificationReport::new("selfsimilarity_bound")
        .param("specs", specs.iter().map(|s| s.describe()).collect::<Vec<_>>())
        .param("samples", samples.len())
        .stat("max_violation", worst)
        .threshold("max_violation", 1e-9)
        .passed(worst <= 1e-9)])
}

pub fn transform_covariance(_: Seed) -> Result<Vec<VerificationReport>> {
    let mut worst: f64 = 0.0;
    let mut cases = Vec::new();
    for h in [0.5, 0.7] {
        for a in [0.0, 0.2, h - 0.5] {
            let oracle = CovarianceOracle::auto(fbm(h));
            for (s, t) in [(1.0, 1.0), (1.0, 2.0)] {
                let r = oracle.cov(s, t)?;
                let z = transform_cov_oracle(&oracle, alpha(a), s, t)?;
                let e = (z - r).abs() / r.abs();
                worst = worst.max(e);
                cases.push(vec![h, a, s, t, e]);
            }
        }
    }
    Ok(vec![VerificationReport::new("transform_covariance")
        .param("cases", "(H, α) ∈ {0.5, 0.7} × {0, 0.2, H − 1/2}, (s, t) ∈ {(1, 1), (1, 2)}")
        .stat("max_rel_error", worst)
        .stat("h_alpha_s_t_relerr", cases)
        .threshold("max_rel_error", 1e-4)
        .passed(worst <= 1e-4)])
}

pub fn sampler_calibration(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0x5a3);
    let oracle = CovarianceOracle::auto(fbm(0.7));
    let grid = TimeGrid::uniform(1.0, 64)?;
    let x = sample_cholesky(&oracle, &grid, 10_000, seed, true)?;
    let mut r = covariance_match(&x, &oracle)?;
    r.test = "sampler_calibration/cholesky".into();
    let ks = ks_marginals(&x, &oracle, 5)?;
    let min_p = ks.iter().map(|&(_, p)| p).fold(1.0, f64::min);
    r.pass = r.pass && min_p >= KS_LEVEL / ks.len() as f64;
    Ok(vec![r.stat("ks_min_p", min_p).threshold("ks_per_test_level", KS_LEVEL / ks.len() as f64).seed(seed.root())])
}

// ---- transform ----

pub fn power_path_regression(_: Seed) -> Result<Vec<VerificationReport>> {
    let mut worst: f64 = 0.0;
    let grid = TimeGrid::uniform(1.0, 1024)?;
    for (a, beta) in [(0.2, 0.7), (0.0, 0.5), (-0.25, 0.25), (1.0, 0.9)] {
        let x = power_path(&grid, beta);
        let z = z_alpha_forward(&x, &TransformParams::new(alpha(a), beta)?)?;
        for (t, v) in grid.points().iter().zip(z.path(0)) {
            worst = worst.max((v + t.powf(beta)).abs());
        }
    }
    Ok(vec![VerificationReport::new("power_path_regression")
        .param("n", 1024)
        .param("alpha_beta", vec![vec![0.2, 0.7], vec![0.0, 0.5], vec![-0.25, 0.25], vec![1.0, 0.9]])
        .stat("max_abs_error", worst)
        .threshold("max_abs_error", 1e-8)
        .passed(worst <= 1e-8)])
}

pub fn molchan_equivalence(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0x3c1);
    let grid = TimeGrid::uniform(1.0, 256)?;
    let inc = sample_bm_increments(&grid, 20, seed)?;
    let mut identical = true;
    for h in [0.25, 0.5, 0.75] {
        let x = synth_from_kernel(&fbm(h), &inc)?;
        let a = molchan(&x, HurstIndex::new(h)?)?;
        let b = z_alpha_forward(&x, &TransformParams::new(alpha(h - 0.5), h)?)?;
        identical &= a.paths().zip(b.paths()).all(|(p, q)| {
            p.iter().zip(q).all(|(u, v)| u.to_bits() == v.to_bits())
        });
    }
    Ok(vec![VerificationReport::new("molchan_equivalence")
        .param("hurst", vec![0.25, 0.5, 0.75])
        .param("n", 256)
        .param("n_paths", 20)
        .stat("bit_identical", identical)
        .seed(seed.root())
        .passed(identical)])
}

pub fn pathwise_commutation(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0xc0);
    let finest = 4096;
    let levels = [512usize, 1024, 2048, 4096];
    let n_paths = 64;
    let inc = sample_bm_increments(&TimeGrid::uniform(1.0, finest)?, n_paths, seed)?;
    let a = alpha(0.2);
    let mut out = Vec::new();
    for h in [0.5, 0.7] {
        let spec = fbm(h);
        let errs = levels
            .iter()
            .map(|&n| commutation_check(&spec, &inc.coarsen(finest / n)?, a))
            .collect::<Result<Vec<f64>>>()?;
        let hs: Vec<f64> = levels.iter().map(|&n| 1.0 / n as f64).collect();
        let r = VerificationReport::new(format!("pathwise_commutation/H={h}"))
            .param("hurst", h)
            .param("alpha", 0.2)
            .param("n_levels", levels.to_vec())
            .param("n_paths", n_paths)
            .stat("sup_rms_discrepancy", errs.clone())
            .seed(seed.root());
        // For H = 1/2 synthesis is the identity and both sides agree to rounding.
        out.push(if h == 0.5 {
            let worst = errs.iter().copied().fold(0.0, f64::max);
            r.stat("max_discrepancy", worst).threshold("max_discrepancy", 1e-10).passed(worst <= 1e-10)
        } else {
            let order = convergence_order(&hs, &errs);
            let decreased = errs[errs.len() - 1] < errs[0];
            r.stat("order", order)
                .stat("decreased", decreased)
                .threshold("order", 0.5)
                .passed(order >= 0.5 && decreased)
        });
    }
    Ok(out)
}

/// Assumed convergence order of the forward-inverse composition for the
/// Richardson estimate of its discretization error.
pub const COMPOSITION_ORDER: f64 = 0.5;

pub fn inverse_composition(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0x1e5);
    let (n, t_ext, h, a) = (256, 32.0, 0.7, alpha(0.2));
    let spec = fbm(h);
    let p = TransformParams::with_horizon(a, h, 1.0, t_ext)?;
    let grid = TimeGrid::extended(1.0, n, t_ext)?;
    let x = synth_from_kernel(&spec, &sample_bm_increments(&grid, 100, seed)?)?;
    let compose = |x: &PathEnsemble| -> Result<(PathEnsemble, f64)> {
        let inv = z_alpha_inverse(&z_alpha_forward(x, &p)?, &p)?;
        let tb = inv.truncation_bound.iter().copied().fold(0.0, f64::max);
        Ok((inv.paths, tb))
    };
    let (fine, trunc) = compose(&x)?;
    let (coarse, _) = compose(&x.coarsen(2)?)?;
    let xt = x.truncate_at(1.0)?;
    let err = fine.max_abs_diff(&xt)?;
    let kappa = 1.0 / (2f64.powf(COMPOSITION_ORDER) - 1.0);
    let disc = kappa * fine.coarsen(2)?.max_abs_diff(&coarse)?;
    let budget = disc + trunc;
    Ok(vec![VerificationReport::new("inverse_composition")
        .param("hurst", h)
        .param("alpha", 0.2)
        .param("n", n)
        .param("t_ext", t_ext)
        .param("n_paths", 100)
        .stat("sup_error", err)
        .stat("discretization_estimate", disc)
        .stat("truncation_bound", trunc)
        .stat("budget", budget)
        .threshold("sup_error", "≤ budget")
        .seed(seed.root())
        .passed(err <= budget)])
}

pub fn statistical_measure_preservation(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0x3e);
    [Control::None, Control::SkipTransform, Control::WrongHurst(0.5)]
        .into_iter()
        .map(|control| {
            let cfg = MeasurePreservation {
                spec: fbm(0.7),
                alpha: alpha(0.2),
                horizon: 1.0,
                n: 64,
                refine: 4,
                n_paths: 10_000,
                control,
            };
            measure_preservation_test(&cfg, seed)
        })
        .collect()
}

pub fn selfsimilarity(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0x55);
    let grid = TimeGrid::from_points((1..=32).map(|k| k as f64 / 16.0).collect())?;
    let x = sample_cholesky(&CovarianceOracle::auto(fbm(0.3)), &grid, 10_000, seed, true)?;
    let ok = selfsimilarity_test(&x, 0.3, 2.0)?.seed(seed.root());
    let mut wrong = selfsimilarity_test(&x, 0.5, 2.0)?.seed(seed.root());
    wrong.test = "selfsimilarity/control_wrong_beta".into();
    wrong.pass = !wrong.pass;
    Ok(vec![ok, wrong])
}

// ---- bridges ----

pub fn bridge_properties(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0xb1);
    let grid = TimeGrid::uniform(1.0, 32)?;
    let n_paths = 100_000;
    [0.0, 0.5]
        .into_iter()
        .map(|a| {
            let al = alpha(a);
            let n = sample_nalpha_exact(al, &grid, n_paths, seed.derive(a.to_bits()))?;
            let b = bridge(&n, &BridgeSpec::new(al, 1.0)?)?;
            let endpoint_zero = b.paths().all(|p| p[32] == 0.0);
            let cz = covariance_z_with(&b, |s, t| Ok(bridge_cov(al, 1.0, s, t)))?;
            // Cov(bridge_s, N_T) vanishes.
            let k = al.two_alpha_plus_one();
            let var_t = 1.0 / k;
            let mut max_end_z: f64 = 0.0;
            for i in 1..32 {
                let c = b.paths().zip(n.paths()).map(|(p, q)| p[i] * q[32]).sum::<f64>() / n_paths as f64;
                let vb = bridge_cov(al, 1.0, grid.points()[i], grid.points()[i]);
                max_end_z = max_end_z.max((c / gaussian_cov_se(vb, var_t, 0.0, n_paths)).abs());
            }
            Ok(VerificationReport::new(format!("bridge_properties/alpha={a}"))
                .param("alpha", a)
                .param("n", 32)
                .param("n_paths", n_paths)
                .stat("endpoint_exactly_zero", endpoint_zero)
                .stat("max_cov_se_multiple", cz.max_abs_z)
                .stat("max_endpoint_cov_se_multiple", max_end_z)
                .threshold("se_multiple", SE_MULTIPLE)
                .seed(seed.root())
                .passed(endpoint_zero && cz.max_abs_z <= SE_MULTIPLE && max_end_z <= SE_MULTIPLE))
        })
        .collect()
}

pub fn xi_variance_check(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0x71);
    let grid = TimeGrid::uniform(1.0, 256)?;
    let n_paths = 100_000;
    let inc = sample_bm_increments(&grid, n_paths, seed)?;
    [0.25, 0.75]
        .into_iter()
        .map(|h| {
            let hi = HurstIndex::new(h)?;
            let m = fundamental_martingale(hi, &inc)?;
            let v = xi(hi, 1.0, &m)?;
            let target = xi_variance(hi, 1.0)?;
            let emp = v.iter().map(|x| x * x).sum::<f64>() / n_paths as f64;
            let z = (emp - target) / gaussian_cov_se(target, target, target, n_paths);
            Ok(VerificationReport::new(format!("xi_variance/H={h}"))
                .param("hurst", h)
                .param("n", 256)
                .param("n_paths", n_paths)
                .stat("empirical_variance", emp)
                .stat("oracle_variance", target)
                .stat("se_multiple", z.abs())
                .threshold("se_multiple", SE_MULTIPLE)
                .seed(seed.root())
                .passed(z.abs() <= SE_MULTIPLE))
        })
        .collect()
}

pub fn yh_representation(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0x7e);
    let grid = TimeGrid::uniform(1.0, 1024)?;
    let inc = sample_bm_increments(&grid, 20, seed)?;
    [0.25, 0.75]
        .into_iter()
        .map(|h| {
            let hi = HurstIndex::new(h)?;
            let y = yh_path(hi, 1.0, &inc)?;
            let rep = yh_bridge_representation(hi, 1.0, &inc)?;
            let d = y.max_abs_diff(&rep)?;
            // The tolerance is the refinement difference of Y^H itself.
            let y_half = yh_path(hi, 1.0, &inc.coarsen(2)?)?;
            let tol = y.coarsen(2)?.max_abs_diff(&y_half)?;
            Ok(VerificationReport::new(format!("yh_representation/H={h}"))
                .param("hurst", h)
                .param("n", 1024)
                .param("n_paths", 20)
                .stat("sup_difference", d)
                .stat("refinement_difference", tol)
                .threshold("sup_difference", "≤ refinement_difference")
                .seed(seed.root())
                .passed(d <= tol))
        })
        .collect()
}

pub fn iterate_orthogonality_check(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0x10);
    [0.0, 0.5]
        .into_iter()
        .map(|a| Ok(iterate_orthogonality(alpha(a), 1.0, 4, 100_000, seed)?.1))
        .collect()
}

pub fn span_equality(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0x5e);
    [false, true]
        .into_iter()
        .map(|independent| {
            let cfg = SpanEquality {
                spec: fbm(0.75),
                alpha: alpha(0.25),
                horizon: 1.0,
                n_targets: 16,
                n_fine: 256,
                n_paths: 100_000,
                independent,
            };
            span_equality_residual(&cfg, seed)
        })
        .collect()
}

pub fn completeness(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0xc3);
    [fbm(0.7), KernelSpec::nalpha(0.2)?]
        .iter()
        .map(|spec| Ok(completeness_check(spec, alpha(0.2), 1.0, 4, 5000, seed)?.1))
        .collect()
}

// ---- ergodic ----

pub fn ergodicity(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0xe6);
    [Functional::SignAtT, Functional::SquareAtT]
        .into_iter()
        .map(|f| ergodic_average_test(&fbm(0.7), alpha(0.2), 1.0, 200, 100, f, seed))
        .collect()
}

pub fn mixing(seed: Seed) -> Result<Vec<VerificationReport>> {
    let seed = seed.derive(0x61);
    let mut out = Vec::new();
    let mut r = mixing_proxy(&KernelSpec::nalpha(0.2)?, alpha(0.2), 1.0, 10, 20_000, seed)?;
    r.test = "mixing_proxy/nalpha".into();
    out.push(r);
    let mut r = mixing_proxy(&fbm(0.7), alpha(0.2), 1.0, 10, 20_000, seed)?;
    r.test = "mixing_proxy/fbm".into();
    out.push(r);
    Ok(out)
}
