use crate::config::RunConfig;
use crate::{Method, Process, EXIT_FAIL};
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;
use volterra_ergodic::covariance::CovarianceOracle;
use volterra_ergodic::martingales::{bridge, fundamental_martingale, nalpha_path, yh_path, BridgeSpec};
use volterra_ergodic::pathcsv::{read_paths, write_paths};
use volterra_ergodic::simulate::{sample_bm_increments, sample_cholesky, synth_from_kernel, PathEnsemble, Seed, TimeGrid};
use volterra_ergodic::transform::{z_alpha_iterate, TransformParams};
use volterra_ergodic::verify::run_suite;
use volterra_ergodic::{AlphaParam, Error, HurstIndex, KernelSpec, Result};

/// Writes to a sibling temporary file and renames it into place; `None` is stdout.
fn write_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = io::BufWriter::new(stdout.lock());
            f(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
        Some(p) => {
            let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            {
                let mut w = io::BufWriter::new(tmp.as_file_mut());
                f(&mut w)?;
                w.flush()?;
            }
            tmp.persist(p).map_err(|e| Error::Io(e.to_string()))?;
            Ok(())
        }
    }
}

fn read_input(path: &Path) -> Result<Box<dyn Read>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdin()))
    } else {
        File::open(path)
            .map(|f| Box::new(f) as Box<dyn Read>)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

fn summary(e: &PathEnsemble, t: f64) {
    let Some(i) = e.grid().index_of(t) else { return };
    let col = e.column(i);
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = if col.len() > 1 {
        col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    eprintln!("paths={} points={} mean(X_T)={mean:.6e} var(X_T)={var:.6e}", e.n_paths(), e.n_points());
}

pub fn simulate(c: &RunConfig) -> Result<u8> {
    let (p, g) = (c.process.as_ref().expect("simulate config"), c.grid.as_ref().expect("simulate config"));
    let (n_paths, seed) = (c.n_paths.expect("simulate config"), c.seed.expect("simulate config"));
    let grid = if g.ext > 1.0 {
        TimeGrid::extended(g.horizon, g.n, g.ext)?
    } else {
        TimeGrid::uniform(g.horizon, g.n)?
    };
    let root = Seed::new(seed);
    let alpha = || AlphaParam::new(p.alpha.expect("validated"));
    let hurst = || HurstIndex::new(p.hurst.expect("validated"));
    let mut ens = match (p.process, p.method) {
        (Process::Fbm, Method::Cholesky) => {
            sample_cholesky(&CovarianceOracle::auto(KernelSpec::fbm(hurst()?.value())?), &grid, n_paths, root, true)?
        }
        (Process::Nalpha, Method::Cholesky) => {
            sample_cholesky(&CovarianceOracle::auto(KernelSpec::nalpha(alpha()?.value())?), &grid, n_paths, root, true)?
        }
        (process, _) => {
            let inc = sample_bm_increments(&grid, n_paths, root)?;
            match process {
                Process::Fbm => synth_from_kernel(&KernelSpec::fbm(hurst()?.value())?, &inc)?,
                Process::Nalpha => nalpha_path(alpha()?, &inc)?,
                Process::Bridge => bridge(&nalpha_path(alpha()?, &inc)?, &BridgeSpec::new(alpha()?, g.horizon)?)?,
                Process::Mh => fundamental_martingale(hurst()?, &inc)?,
                Process::Yh => yh_path(hurst()?, g.horizon, &inc)?,
            }
        }
    };
    ens.meta.seed = Some(seed);
    summary(&ens, g.horizon);
    write_output(c.output.as_deref(), |w| write_paths(w, &ens, None))?;
    Ok(0)
}

pub fn transform(c: &RunConfig) -> Result<u8> {
    let tc = c.transform.as_ref().expect("transform config");
    let input = read_paths(read_input(c.input.as_deref().expect("transform config"))?)?;
    let mut ens = input.ensemble;
    let beta = match (tc.beta, ens.meta.beta) {
        (Some(b), Some(m)) if (b - m).abs() > 1e-12 * m.abs().max(1.0) => {
            return Err(Error::Domain(format!(
                "--beta {b} contradicts beta={m} in the input metadata ({})",
                ens.meta.spec
            )));
        }
        (Some(b), _) | (None, Some(b)) => b,
        (None, None) => return Err(Error::Domain("input has no beta; pass --beta".into())),
    };
    let alpha = AlphaParam::new(tc.alpha)?;
    let n = if tc.inverse { -tc.iterate } else { tc.iterate };
    let params = if n < 0 {
        if let Some(cut) = tc.t_ext {
            if cut > ens.grid().horizon() * (1.0 + 1e-12) {
                return Err(Error::Horizon(format!(
                    "--t-ext {cut} lies beyond the input horizon {}",
                    ens.grid().horizon()
                )));
            }
            ens = ens.truncate_at(cut)?;
        }
        if !(ens.grid().horizon() > tc.horizon) {
            return Err(Error::Horizon(format!(
                "the inverse needs an input extended beyond T = {}; it ends at {} (simulate with --ext)",
                tc.horizon,
                ens.grid().horizon()
            )));
        }
        TransformParams::with_horizon(alpha, beta, tc.horizon, ens.grid().horizon())?
    } else {
        TransformParams::new(alpha, beta)?
    };
    let out = z_alpha_iterate(&ens, &params, n)?;
    summary(&out.paths, out.paths.grid().horizon());
    write_output(c.output.as_deref(), |w| write_paths(w, &out.paths, out.truncation_bound.as_deref()))?;
    Ok(0)
}

#[derive(serde::Serialize)]
struct VerifyOutput<'a> {
    config: &'a RunConfig,
    #[serde(flatten)]
    report: &'a volterra_ergodic::verify::SuiteReport,
}

pub fn verify(c: &RunConfig) -> Result<u8> {
    let suite = c.suite.as_deref().expect("verify config");
    let report = run_suite(suite, c.seed.expect("verify config"), c.timing)?;
    for r in &report.reports {
        eprintln!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.test);
    }
    let json = serde_json::to_string_pretty(&VerifyOutput { config: c, report: &report })
        .map_err(|e| Error::Io(e.to_string()))?;
    write_output(c.output.as_deref(), |w| Ok(writeln!(w, "{json}")?))?;
    Ok(if report.pass { 0 } else { EXIT_FAIL })
}

pub fn kernel_eval(spec: &KernelSpec, t: f64, s: f64) -> Result<u8> {
    println!("{}", spec.kernel_eval(t, s)?);
    Ok(0)
}
