//! Browser bindings for the demo page: the transfer function of Z^α, an fBm
//! path with its transform, and a slice of the fBm kernel.

use volterra_ergodic::simulate::{sample_bm_increments, synth_from_kernel, Seed, TimeGrid};
use volterra_ergodic::transform::{transfer_function, z_alpha_forward, TransformParams};
use volterra_ergodic::{AlphaParam, KernelSpec};
use wasm_bindgen::prelude::*;

fn js(e: volterra_ergodic::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `n` samples of H^α(λ) on [−λ_max, λ_max], flattened as (λ, Re, Im, |H|) quadruples.
#[wasm_bindgen]
pub fn transfer_curve(alpha: f64, lambda_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let a = AlphaParam::new(alpha).map_err(js)?;
    if n < 2 || !(lambda_max > 0.0) {
        return Err(JsError::new("need n ≥ 2 and lambda_max > 0"));
    }
    let mut out = Vec::with_capacity(4 * n);
    for i in 0..n {
        let l = -lambda_max + 2.0 * lambda_max * i as f64 / (n - 1) as f64;
        let h = transfer_function(a, l);
        out.extend([l, h.re, h.im, h.norm()]);
    }
    Ok(out)
}

/// One fBm path on [0, 1] with `n` cells and its image under Z^α, flattened
/// as [t_0..t_n, X_0..X_n, Z_0..Z_n].
#[wasm_bindgen]
pub fn fbm_path(hurst: f64, alpha: f64, n: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    let spec = KernelSpec::fbm(hurst).map_err(js)?;
    let a = AlphaParam::new(alpha).map_err(js)?;
    if !(1..=4096).contains(&n) {
        return Err(JsError::new("n must lie in 1..=4096"));
    }
    let grid = TimeGrid::uniform(1.0, n).map_err(js)?;
    let inc = sample_bm_increments(&grid, 1, Seed::new(u64::from(seed))).map_err(js)?;
    let x = synth_from_kernel(&spec, &inc).map_err(js)?;
    let z = z_alpha_forward(&x, &TransformParams::new(a, hurst).map_err(js)?).map_err(js)?;
    let mut out = grid.points().to_vec();
    out.extend_from_slice(x.path(0));
    out.extend_from_slice(z.path(0));
    Ok(out)
}

/// s ↦ z(t, s) for fBm at `n` interior points of (0, t), flattened as (s, z) pairs.
#[wasm_bindgen]
pub fn kernel_slice(hurst: f64, t: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let spec = KernelSpec::fbm(hurst).map_err(js)?;
    if !(t > 0.0) || n == 0 {
        return Err(JsError::new("need t > 0 and n ≥ 1"));
    }
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let s = t * (i as f64 + 0.5) / n as f64;
        out.extend([s, spec.kernel_eval(t, s).map_err(js)?]);
    }
    Ok(out)
}
