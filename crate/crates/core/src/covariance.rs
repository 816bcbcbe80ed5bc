//! Covariance functions R(s, t) = ∫_0^{s∧t} z(s, u) z(t, u) du, covariance
//! matrices on grids, and the deterministic covariance of Z^α(X).

use crate::error::{Error, Result};
use crate::kernels::{AlphaParam, HurstIndex, KernelSpec};
use crate::quad::{integrate, integrate_fallible, End, QuadOptions};
use crate::simulate::TimeGrid;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

/// ½(s^{2H} + t^{2H} − |s − t|^{2H})
pub fn fbm_cov(hurst: HurstIndex, s: f64, t: f64) -> f64 {
    let two_h = 2.0 * hurst.value();
    0.5 * (s.powf(two_h) + t.powf(two_h) - (s - t).abs().powf(two_h))
}

/// Cov(N^α_s, N^α_t) = min(s, t)^{2α+1} / (2α + 1)
pub fn nalpha_cov(alpha: AlphaParam, s: f64, t: f64) -> f64 {
    let k = alpha.two_alpha_plus_one();
    s.min(t).powf(k) / k
}

/// Covariance of the bridge N^{α,T}: min(s,t)^k/k − (st)^k/(k T^k), k = 2α + 1.
pub fn bridge_cov(alpha: AlphaParam, horizon: f64, s: f64, t: f64) -> f64 {
    let k = alpha.two_alpha_plus_one();
    nalpha_cov(alpha, s, t) - (s * t).powf(k) / (k * horizon.powf(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovMode {
    /// Closed forms (fBm and the Markov family).
    Analytic,
    /// The defining integral, by product-integration quadrature.
    Quadrature,
}

#[derive(Debug, Clone)]
pub struct CovarianceOracle {
    spec: KernelSpec,
    mode: CovMode,
    quad_tol: f64,
}

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

impl CovarianceOracle {
    pub fn new(spec: KernelSpec, mode: CovMode, quad_tol: f64) -> Result<Self> {
        if mode == CovMode::Analytic && spec.is_custom() {
            return Err(Error::Domain(
                "no closed-form covariance for a custom kernel; use quadrature mode".into(),
            ));
        }
        if !(quad_tol > 0.0) {
            return Err(Error::Domain(format!("quadrature tolerance must be positive, got {quad_tol}")));
        }
        Ok(CovarianceOracle { spec, mode, quad_tol })
    }

    /// Analytic when a closed form exists, quadrature otherwise.
    pub fn auto(spec: KernelSpec) -> Self {
        let mode = if spec.is_custom() {
            CovMode::Quadrature
        } else {
            CovMode::Analytic
        };
        CovarianceOracle {
            spec,
            mode,
            quad_tol: DEFAULT_QUAD_TOL,
        }
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn mode(&self) -> CovMode {
        self.mode
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn beta(&self) -> f64 {
        self.spec.beta()
    }

    /// R(s, t) for s, t ≥ 0.
    pub fn cov(&self, s: f64, t: f64) -> Result<f64> {
        if s < 0.0 || t < 0.0 {
            return Err(Error::Domain(format!("covariance needs s, t ≥ 0, got {s}, {t}")));
        }
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        if s == 0.0 {
            return Ok(0.0);
        }
        match self.mode {
            CovMode::Analytic => {
                if let Some(h) = self.spec.hurst() {
                    Ok(fbm_cov(h, s, t))
                } else if let Some((alpha, c)) = self.spec.markov_params() {
                    Ok(markov_cov(alpha, self.spec.beta(), c, s, t))
                } else {
                    unreachable!("analytic mode is rejected for custom kernels")
                }
            }
            CovMode::Quadrature => kernel_cov(self, s, t),
        }
    }

    /// Var(X₁) = R(1, 1).
    pub fn var_at_one(&self) -> Result<f64> {
        self.cov(1.0, 1.0)
    }

    /// Autocovariance of the Lamperti transform Y_u = e^{−βu} X_{e^u} at lag τ ≥ 0,
    /// i.e. e^{−βτ} R(1, e^τ), written to stay finite for large lags.
    pub fn lamperti_autocov(&self, tau: f64) -> Result<f64> {
        let tau = tau.abs();
        if self.mode == CovMode::Analytic {
            if let Some(h) = self.spec.hurst() {
                let h = h.value();
                // e^{2Hτ} − (e^τ − 1)^{2H} = e^{2Hτ}(1 − (1 − e^{−τ})^{2H})
                let tail = -(2.0 * h * (-(-tau).exp()).ln_1p()).exp_m1();
                return Ok(0.5 * ((-h * tau).exp() + (h * tau).exp() * tail));
            }
            if let Some((alpha, c)) = self.spec.markov_params() {
                let k = alpha.two_alpha_plus_one();
                return Ok(c * c * (-0.5 * k * tau).exp() / k);
            }
        }
        Ok((-self.beta() * tau).exp() * self.cov(1.0, tau.exp())?)
    }
}

fn markov_cov(alpha: AlphaParam, beta: f64, c: f64, s: f64, t: f64) -> f64 {
    let a = alpha.value();
    let k = alpha.two_alpha_plus_one();
    c * c * (s * t).powf(beta - a - 0.5) * s.min(t).powf(k) / k
}

fn double_end(end: End) -> End {
    match end {
        End::Power(p) => End::Power(2.0 * p),
        other => other,
    }
}

/// R(s, t) from the kernel by quadrature, irrespective of the oracle's mode.
pub fn kernel_cov(oracle: &CovarianceOracle, s: f64, t: f64) -> Result<f64> {
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    if s < 0.0 {
        return Err(Error::Domain(format!("covariance needs s, t ≥ 0, got {s}, {t}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let spec = &oracle.spec;
    let left = double_end(spec.origin_end());
    let right = if s == t {
        double_end(spec.diagonal_end())
    } else {
        spec.diagonal_end()
    };
    integrate_fallible(
        |u| Ok(spec.kernel_eval(s, u)? * spec.kernel_eval(t, u)?),
        0.0,
        s,
        left,
        right,
        &QuadOptions::with_tol(oracle.quad_tol),
    )
}

/// Covariance matrix of X on a grid.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    pub grid: TimeGrid,
    pub entries: DMatrix<f64>,
    /// Smallest eigenvalue of the block over positive times.
    pub min_eigenvalue: f64,
    pub positive_definite: bool,
}

/// Relative diagonal jitter added by [`CovMatrix::cholesky`] when requested.
pub const JITTER: f64 = 1e-12;

impl CovMatrix {
    /// Indices of the grid points with t > 0 (X₀ = 0 carries no variance).
    pub fn positive_indices(&self) -> Vec<usize> {
        positive_indices(&self.grid)
    }

    /// Lower Cholesky factor of the positive-time block.
    pub fn cholesky(&self, jitter: bool) -> Result<DMatrix<f64>> {
        let idx = self.positive_indices();
        let mut block = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.entries[(idx[i], idx[j])]);
        if jitter {
            let scale = JITTER * block.diagonal().max();
            for i in 0..idx.len() {
                block[(i, i)] += scale;
            }
        }
        block
            .cholesky()
            .map(|c| c.l())
            .ok_or(Error::NotPositiveDefinite {
                min_eigenvalue: self.min_eigenvalue,
            })
    }
}

fn positive_indices(grid: &TimeGrid) -> Vec<usize> {
    grid.points()
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > 0.0)
        .map(|(i, _)| i)
        .collect()
}

pub fn cov_matrix(oracle: &CovarianceOracle, grid: &TimeGrid) -> Result<CovMatrix> {
    let pts = grid.points();
    let n = pts.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..=i).map(|j| oracle.cov(pts[j], pts[i])).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    let entries = DMatrix::from_fn(n, n, |i, j| if j <= i { rows[i][j] } else { rows[j][i] });
    let idx = positive_indices(grid);
    let block = DMatrix::from_fn(idx.len(), idx.len(), |i, j| entries[(idx[i], idx[j])]);
    let min_eigenvalue = if block.is_empty() {
        0.0
    } else {
        SymmetricEigen::new(block.clone()).eigenvalues.min()
    };
    let positive_definite = !block.is_empty() && block.cholesky().is_some();
    Ok(CovMatrix {
        grid: grid.clone(),
        entries,
        min_eigenvalue,
        positive_definite,
    })
}

/// max over samples of |R(s, t)| − R(1, 1) s^β t^β; non-positive when the
/// self-similarity bound holds.
pub fn selfsim_bound_check(oracle: &CovarianceOracle, samples: &[(f64, f64)]) -> Result<f64> {
    let var1 = oracle.var_at_one()?;
    let beta = oracle.beta();
    let mut worst = f64::NEG_INFINITY;
    for &(s, t) in samples {
        if !(s > 0.0 && t > 0.0) {
            return Err(Error::Domain(format!("bound check needs s, t > 0, got {s}, {t}")));
        }
        let v = oracle.cov(s, t)?.abs() - var1 * s.powf(beta) * t.powf(beta);
        worst = worst.max(v);
    }
    Ok(worst)
}

/// Cov(Z^α_s(X), Z^α_t(X)) expanded by bilinearity into integrals of R:
///
/// R(s,t) − k t^γ ∫_0^t u^δ R(s,u) du − k s^γ ∫_0^s v^δ R(v,t) dv
///        + k² (st)^γ ∫_0^s ∫_0^t (uv)^δ R(u,v) du dv,
///
/// with k = 2α + 1, γ = β − α − 1/2, δ = α − β − 1/2. Measure preservation
/// means this equals R(s, t).
pub fn transform_cov_oracle(oracle: &CovarianceOracle, alpha: AlphaParam, s: f64, t: f64) -> Result<f64> {
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    if s < 0.0 {
        return Err(Error::Domain(format!("transform covariance needs s, t ≥ 0, got {s}, {t}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let beta = oracle.beta();
    let a = alpha.value();
    let k = alpha.two_alpha_plus_one();
    let gamma = beta - a - 0.5;
    let delta = a - beta - 0.5;
    // u^δ R(·, u) = O(u^{α − 1/2}) at the origin by the self-similarity bound.
    let origin = End::Power(a - 0.5);
    let opts = QuadOptions::with_tol(oracle.quad_tol / 4.0);

    // ∫_0^upper u^δ R(u, v) du, split at the kink u = v when it is interior.
    let inner = |v: f64, upper: f64| -> Result<f64> {
        let f = |u: f64| Ok(u.powf(delta) * oracle.cov(u, v)?);
        if v < upper {
            Ok(integrate_fallible(f, 0.0, v, origin, End::Graded, &opts)?
                + integrate_fallible(f, v, upper, End::Graded, End::Regular, &opts)?)
        } else {
            integrate_fallible(f, 0.0, upper, origin, End::Graded, &opts)
        }
    };

    let r_st = oracle.cov(s, t)?;
    let i_t = inner(s, t)?;
    let i_s = inner(t, s)?;
    let failure = std::sync::Mutex::new(None::<Error>);
    let double = integrate(
        |v| match inner(v, t) {
            Ok(x) => v.powf(delta) * x,
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        s,
        origin,
        End::Regular,
        &opts,
    );
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    let double = double?;
    Ok(r_st - k * t.powf(gamma) * i_t - k * s.powf(gamma) * i_s + k * k * (s * t).powf(gamma) * double)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> HurstIndex {
        HurstIndex::new(v).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn fbm_cov_examples() {
        for hv in [0.2, 0.5, 0.9] {
            assert!((fbm_cov(h(hv), 1.0, 1.0) - 1.0).abs() < 1e-15);
            assert_eq!(fbm_cov(h(hv), 0.0, 2.0), 0.0);
        }
        assert!((fbm_cov(h(0.5), 0.7, 2.0) - 0.7).abs() < 1e-15);
        assert_eq!(fbm_cov(h(0.3), 0.4, 1.1), fbm_cov(h(0.3), 1.1, 0.4));
    }

    #[test]
    fn nalpha_cov_examples() {
        let a = AlphaParam::new(0.5).unwrap();
        assert!((nalpha_cov(a, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(nalpha_cov(a, 0.0, 1.0), 0.0);
        let b = AlphaParam::new(0.0).unwrap();
        assert_eq!(nalpha_cov(b, 0.3, 0.9), 0.3);
    }

    #[test]
    fn kernel_cov_brownian_and_fbm() {
        let o = CovarianceOracle::new(KernelSpec::fbm(0.5).unwrap(), CovMode::Quadrature, 1e-10).unwrap();
        assert!((kernel_cov(&o, 0.6, 2.0).unwrap() - 0.6).abs() < 1e-10);
        let o = CovarianceOracle::new(KernelSpec::fbm(0.7).unwrap(), CovMode::Quadrature, 1e-10).unwrap();
        let q = kernel_cov(&o, 1.0, 2.0).unwrap();
        assert!(rel(q, fbm_cov(h(0.7), 1.0, 2.0)) < 1e-5, "{q}");
    }

    #[test]
    fn kernel_cov_markov_closed_form() {
        let spec = KernelSpec::power_markov(0.3, 1.2, 0.8).unwrap();
        let o = CovarianceOracle::new(spec, CovMode::Quadrature, 1e-11).unwrap();
        let (s, t): (f64, f64) = (0.7, 1.9);
        let exact = 0.64 * (s * t).powf(1.2 - 0.3 - 0.5) * s.powf(1.6) / 1.6;
        assert!(rel(kernel_cov(&o, s, t).unwrap(), exact) < 1e-9);
    }

    #[test]
    fn analytic_mode_rejected_for_custom() {
        let spec = KernelSpec::custom(0.7, "c", |_| 1.0).unwrap();
        assert!(CovarianceOracle::new(spec, CovMode::Analytic, 1e-8).is_err());
    }

    #[test]
    fn cov_matrix_examples() {
        let o = CovarianceOracle::auto(KernelSpec::fbm(0.5).unwrap());
        let g = TimeGrid::from_points(vec![1.0, 2.0]).unwrap();
        let m = cov_matrix(&o, &g).unwrap();
        assert_eq!(m.entries, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]));
        assert!(m.positive_definite);
        let o = CovarianceOracle::auto(KernelSpec::fbm(0.3).unwrap());
        let g = TimeGrid::uniform(1.0, 16).unwrap();
        let m = cov_matrix(&o, &g).unwrap();
        assert_eq!(m.entries, m.entries.transpose());
        assert!(m.cholesky(false).is_ok());
        let single = cov_matrix(&o, &TimeGrid::from_points(vec![1.0]).unwrap()).unwrap();
        assert!((single.entries[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn not_positive_definite_is_reported() {
        let o = CovarianceOracle::auto(KernelSpec::fbm(0.999).unwrap());
        let g = TimeGrid::uniform(1.0, 64).unwrap();
        let m = cov_matrix(&o, &g).unwrap();
        if !m.positive_definite {
            assert!(matches!(m.cholesky(false), Err(Error::NotPositiveDefinite { .. })));
        }
    }

    #[test]
    fn selfsim_bound_examples() {
        let o = CovarianceOracle::auto(KernelSpec::fbm(0.3).unwrap());
        assert!(selfsim_bound_check(&o, &[(0.5, 3.0)]).unwrap() <= 1e-9);
        assert_eq!(selfsim_bound_check(&o, &[(1.0, 1.0)]).unwrap(), 0.0);
        let o = CovarianceOracle::auto(KernelSpec::power_markov(0.2, 0.9, 1.5).unwrap());
        assert!(selfsim_bound_check(&o, &[(0.1, 4.0), (2.0, 3.0), (5.0, 0.2)]).unwrap() <= 1e-9);
    }

    #[test]
    fn lamperti_autocov_matches_definition() {
        for spec in [KernelSpec::fbm(0.3).unwrap(), KernelSpec::power_markov(0.2, 0.9, 1.5).unwrap()] {
            let o = CovarianceOracle::auto(spec);
            for tau in [0.0, 0.4, 3.0] {
                let direct = (-o.beta() * tau).exp() * o.cov(1.0, f64::exp(tau)).unwrap();
                assert!((o.lamperti_autocov(tau).unwrap() - direct).abs() < 1e-12);
            }
        }
        let o = CovarianceOracle::auto(KernelSpec::fbm(0.7).unwrap());
        let far = o.lamperti_autocov(600.0).unwrap();
        assert!(far.is_finite() && far > 0.0 && far < 1e-50);
    }

    #[test]
    fn transform_cov_brownian_closed_form() {
        let o = CovarianceOracle::auto(KernelSpec::fbm(0.5).unwrap());
        let v = transform_cov_oracle(&o, AlphaParam::new(0.0).unwrap(), 1.0, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-4, "{v}");
    }

    #[test]
    fn transform_cov_fbm_preserved() {
        let o = CovarianceOracle::auto(KernelSpec::fbm(0.7).unwrap());
        let v = transform_cov_oracle(&o, AlphaParam::new(0.2).unwrap(), 1.0, 2.0).unwrap();
        assert!(rel(v, fbm_cov(h(0.7), 1.0, 2.0)) < 1e-4, "{v}");
        assert_eq!(transform_cov_oracle(&o, AlphaParam::new(0.2).unwrap(), 0.0, 2.0).unwrap(), 0.0);
    }
}
