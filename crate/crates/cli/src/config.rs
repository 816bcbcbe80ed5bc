use crate::{KernelKind, Method, Process};
use serde::Serialize;
use std::path::PathBuf;
use volterra_ergodic::{AlphaParam, Error, HurstIndex, KernelSpec, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ProcessConfig {
    pub process: Process,
    pub hurst: Option<f64>,
    pub alpha: Option<f64>,
    pub method: Method,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n: usize,
    pub ext: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformConfig {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub inverse: bool,
    pub iterate: i32,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub t_ext: Option<f64>,
}

/// Everything a run depends on. Validated on construction.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub timing: bool,
}

fn required(v: Option<f64>, flag: &str, process: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Domain(format!("--{flag} is required for --process {process}")))
}

impl RunConfig {
    fn empty(command: &'static str) -> Self {
        RunConfig {
            command,
            process: None,
            grid: None,
            transform: None,
            suite: None,
            n_paths: None,
            seed: None,
            input: None,
            output: None,
            timing: false,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn simulate(
        process: Process,
        hurst: Option<f64>,
        alpha: Option<f64>,
        horizon: f64,
        n: usize,
        paths: usize,
        seed: u64,
        ext: f64,
        method: Method,
        out: Option<PathBuf>,
    ) -> Result<Self> {
        let name = format!("{process:?}").to_lowercase();
        match process {
            Process::Fbm | Process::Mh | Process::Yh => {
                HurstIndex::new(required(hurst, "hurst", &name)?)?;
            }
            Process::Nalpha | Process::Bridge => {
                AlphaParam::new(required(alpha, "alpha", &name)?)?;
            }
        }
        if method == Method::Cholesky && !matches!(process, Process::Fbm | Process::Nalpha) {
            return Err(Error::Domain(format!("--method cholesky is not available for --process {name}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("--T must be positive, got {horizon}")));
        }
        if n == 0 || paths == 0 {
            return Err(Error::Domain("--n and --paths must be at least 1".into()));
        }
        if !(ext >= 1.0 && ext.is_finite()) {
            return Err(Error::Domain(format!("--ext must be at least 1, got {ext}")));
        }
        Ok(RunConfig {
            process: Some(ProcessConfig { process, hurst, alpha, method }),
            grid: Some(GridConfig { horizon, n, ext }),
            n_paths: Some(paths),
            seed: Some(seed),
            output: out,
            ..Self::empty("simulate")
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn transform(
        input: PathBuf,
        alpha: f64,
        beta: Option<f64>,
        inverse: bool,
        iterate: i32,
        horizon: f64,
        t_ext: Option<f64>,
        out: Option<PathBuf>,
    ) -> Result<Self> {
        AlphaParam::new(alpha)?;
        if let Some(b) = beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Domain(format!("--beta must be positive, got {b}")));
            }
        }
        if inverse && iterate < 0 {
            return Err(Error::Domain("--inverse takes a positive --iterate count".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("--T must be positive, got {horizon}")));
        }
        Ok(RunConfig {
            transform: Some(TransformConfig { alpha, beta, inverse, iterate, horizon, t_ext }),
            input: Some(input),
            output: out,
            ..Self::empty("transform")
        })
    }

    pub fn verify(suite: String, seed: u64, out: Option<PathBuf>, timing: bool) -> Self {
        RunConfig {
            suite: Some(suite),
            seed: Some(seed),
            output: out,
            timing,
            ..Self::empty("verify")
        }
    }
}

pub fn kernel_spec(kind: KernelKind, hurst: Option<f64>, alpha: Option<f64>, beta: Option<f64>, c: f64) -> Result<KernelSpec> {
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| Error::Domain(format!("--{flag} is required for this kernel")))
    };
    match kind {
        KernelKind::Fbm => KernelSpec::fbm(need(hurst, "hurst")?),
        KernelKind::Nalpha => KernelSpec::nalpha(need(alpha, "alpha")?),
        KernelKind::Markov => KernelSpec::power_markov(need(alpha, "alpha")?, need(beta, "beta")?, c),
    }
}
