//! Self-similar Volterra kernels z(t, s).
//!
//! Every kernel here is homogeneous, z(a t, a s) = a^{β − 1/2} z(t, s), and so
//! factorises as z(t, s) = (t − s)^{β − 1/2} F(s / t). Non-degeneracy of the
//! kernel (linear independence and density of the sections z(t, ·)) is assumed
//! for the custom variant; it cannot be checked from samples.

pub mod special;

use crate::error::{Error, Result};
use crate::quad::{integrate_fallible, End, QuadOptions};
use special::{fbm_c, hyp2f1_unit};
use std::fmt;
use std::sync::Arc;

pub use special::gauss_2f1;

/// Hurst index H ∈ (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstIndex(f64);

impl HurstIndex {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(HurstIndex(value))
        } else {
            Err(Error::Domain(format!("Hurst index must lie in (0, 1), got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Transformation parameter α > −1/2.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AlphaParam(f64);

impl AlphaParam {
    pub fn new(value: f64) -> Result<Self> {
        if value > -0.5 && value.is_finite() {
            Ok(AlphaParam(value))
        } else {
            Err(Error::Domain(format!("alpha must exceed -1/2, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// 2α + 1, the recurring positive constant of the transformation.
    pub fn two_alpha_plus_one(self) -> f64 {
        2.0 * self.0 + 1.0
    }
}

/// The function F in z(t, s) = (t − s)^{β − 1/2} F(s/t), assumed finite on (0, 1).
#[derive(Clone)]
pub struct FactorFn(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl FactorFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        FactorFn(Arc::new(f))
    }
}

#[derive(Clone)]
enum Kind {
    Fbm { hurst: HurstIndex, c: f64 },
    PowerMarkov { alpha: AlphaParam, c: f64 },
    CustomFactor { factor: FactorFn, label: String },
}

/// A self-similar Volterra kernel together with its self-similarity index β.
#[derive(Clone)]
pub struct KernelSpec {
    kind: Kind,
    beta: f64,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KernelSpec({})", self.describe())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("self-similarity index must be positive, got {beta}")))
    }
}

impl KernelSpec {
    /// Fractional Brownian motion, β = H.
    pub fn fbm(hurst: f64) -> Result<Self> {
        let hurst = HurstIndex::new(hurst)?;
        Ok(KernelSpec {
            kind: Kind::Fbm {
                hurst,
                c: fbm_c(hurst.value()),
            },
            beta: hurst.value(),
        })
    }

    /// The Markov family z(t, s) = c t^{β − 1/2 − α} s^α.
    pub fn power_markov(alpha: f64, beta: f64, c: f64) -> Result<Self> {
        let alpha = AlphaParam::new(alpha)?;
        check_beta(beta)?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("Markov constant must be positive, got {c}")));
        }
        Ok(KernelSpec {
            kind: Kind::PowerMarkov { alpha, c },
            beta,
        })
    }

    /// The martingale N^α_t = ∫_0^t s^α dW_s, i.e. the Markov kernel with β = α + 1/2, c = 1.
    pub fn nalpha(alpha: f64) -> Result<Self> {
        Self::power_markov(alpha, alpha + 0.5, 1.0)
    }

    /// A kernel given through its factor function F.
    pub fn custom(
        beta: f64,
        label: impl Into<String>,
        factor: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_beta(beta)?;
        Ok(KernelSpec {
            kind: Kind::CustomFactor {
                factor: FactorFn::new(factor),
                label: label.into(),
            },
            beta,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn hurst(&self) -> Option<HurstIndex> {
        match self.kind {
            Kind::Fbm { hurst, .. } => Some(hurst),
            _ => None,
        }
    }

    /// (α, c) for the Markov family.
    pub fn markov_params(&self) -> Option<(AlphaParam, f64)> {
        match self.kind {
            Kind::PowerMarkov { alpha, c } => Some((alpha, c)),
            _ => None,
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self.kind, Kind::CustomFactor { .. })
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Fbm { hurst, .. } => format!("fbm(H={})", hurst.value()),
            Kind::PowerMarkov { alpha, c } => {
                format!("markov(alpha={},beta={},c={})", alpha.value(), self.beta, c)
            }
            Kind::CustomFactor { label, .. } => format!("custom({label},beta={})", self.beta),
        }
    }

    /// Exponent d with z(t, s) ≈ (t − s)^d · smooth as s ↑ t.
    pub fn diagonal_exponent(&self) -> f64 {
        match self.kind {
            Kind::PowerMarkov { .. } => 0.0,
            _ => self.beta - 0.5,
        }
    }

    /// Quadrature hint for the behaviour of s ↦ z(t, s) at s = t.
    pub fn diagonal_end(&self) -> End {
        let d = self.diagonal_exponent();
        if d == 0.0 {
            End::Regular
        } else {
            End::Power(d)
        }
    }

    /// Quadrature hint for the behaviour of s ↦ z(t, s) near s = 0.
    pub fn origin_end(&self) -> End {
        match self.kind {
            Kind::Fbm { hurst, .. } if hurst.value() == 0.5 => End::Regular,
            Kind::Fbm { hurst, .. } => End::Power(-(hurst.value() - 0.5).abs()),
            Kind::PowerMarkov { alpha, .. } if alpha.value() == 0.0 => End::Regular,
            Kind::PowerMarkov { alpha, .. } => End::Power(alpha.value()),
            Kind::CustomFactor { .. } => End::Graded,
        }
    }

    /// Leading exponent of s ↦ z(t, s) at the origin (used for product rules).
    pub fn origin_exponent(&self) -> f64 {
        match self.origin_end() {
            End::Power(p) => p,
            _ => 0.0,
        }
    }

    /// F(x) with z(t, s) = (t − s)^{β − 1/2} F(s/t), for x ∈ (0, 1).
    pub fn factor_eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Domain(format!("factor argument must lie in (0, 1), got {x}")));
        }
        match &self.kind {
            Kind::Fbm { hurst, c } => fbm_factor(hurst.value(), *c, x),
            Kind::PowerMarkov { alpha, c } => {
                Ok(c * x.powf(alpha.value()) * (1.0 - x).powf(0.5 - self.beta))
            }
            Kind::CustomFactor { factor, .. } => Ok((factor.0)(x)),
        }
    }

    /// z(t, s); zero for s ≥ t.
    pub fn kernel_eval(&self, t: f64, s: f64) -> Result<f64> {
        if !(t > 0.0 && s > 0.0) {
            return Err(Error::Domain(format!("kernel needs t, s > 0, got t = {t}, s = {s}")));
        }
        if s >= t {
            return Ok(0.0);
        }
        match &self.kind {
            Kind::PowerMarkov { alpha, c } => {
                Ok(c * t.powf(self.beta - 0.5 - alpha.value()) * s.powf(alpha.value()))
            }
            _ => Ok((t - s).powf(self.beta - 0.5) * self.factor_eval(s / t)?),
        }
    }

    /// z(t, s) / (t − s)^d, the factor that stays smooth as s ↑ t.
    pub fn diagonal_regular_part(&self, t: f64, s: f64) -> Result<f64> {
        match &self.kind {
            Kind::PowerMarkov { .. } => self.kernel_eval(t, s),
            _ => self.factor_eval(s / t),
        }
    }
}

fn fbm_factor(h: f64, c: f64, x: f64) -> Result<f64> {
    // 2F1(1/2 − H, H − 1/2; H + 1/2; 1 − 1/x) after Pfaff becomes
    // x^{1/2 − H} 2F1(1/2 − H, 1; H + 1/2; 1 − x), with 1 − x and x both exact.
    let a = 0.5 - h;
    if a == 0.0 {
        return Ok(c);
    }
    let f = hyp2f1_unit(a, 1.0, h + 0.5, 1.0 - x, x).map_err(|terms| Error::Hypergeometric {
        a,
        b: h - 0.5,
        c: h + 0.5,
        x: 1.0 - 1.0 / x,
        terms,
    })?;
    Ok(c * x.powf(a) * f)
}

/// Relative mismatch of the two sides of
/// t^{β−α−1/2} ∫_s^t u^{α−β−1/2} z(u, s) du = s^α ∫_s^t z(t, u) u^{−α−1} du.
pub fn kernel_identity_residual(spec: &KernelSpec, alpha: AlphaParam, s: f64, t: f64) -> Result<f64> {
    let (lhs, rhs) = kernel_identity_sides(spec, alpha, s, t)?;
    Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(RESIDUAL_FLOOR))
}

/// Denominator floor for the identity residual when both sides vanish.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Both sides of the kernel identity, each by singularity-aware quadrature.
pub fn kernel_identity_sides(spec: &KernelSpec, alpha: AlphaParam, s: f64, t: f64) -> Result<(f64, f64)> {
    if !(s > 0.0 && s < t) {
        return Err(Error::Domain(format!("kernel identity needs 0 < s < t, got s = {s}, t = {t}")));
    }
    let a = alpha.value();
    let beta = spec.beta();
    let opts = QuadOptions::with_tol(1e-11);
    let lhs_int = integrate_fallible(
        |u| Ok(u.powf(a - beta - 0.5) * spec.kernel_eval(u, s)?),
        s,
        t,
        spec.diagonal_end(),
        End::Regular,
        &opts,
    )?;
    let rhs_int = integrate_fallible(
        |u| Ok(spec.kernel_eval(t, u)? * u.powf(-a - 1.0)),
        s,
        t,
        End::Regular,
        spec.diagonal_end(),
        &opts,
    )?;
    Ok((t.powf(beta - a - 0.5) * lhs_int, s.powf(a) * rhs_int))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn domain_checks() {
        assert!(HurstIndex::new(0.0).is_err());
        assert!(HurstIndex::new(1.0).is_err());
        assert!(AlphaParam::new(-0.5).is_err());
        assert!(AlphaParam::new(-0.49).is_ok());
        assert!(KernelSpec::power_markov(0.0, 0.0, 1.0).is_err());
        assert!(KernelSpec::power_markov(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn brownian_kernel_is_one() {
        let k = KernelSpec::fbm(0.5).unwrap();
        for (t, s) in [(2.0, 1.0), (1.0, 1e-9), (5.0, 4.999)] {
            assert!((k.kernel_eval(t, s).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((k.factor_eval(0.3).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn volterra_zero_on_and_above_diagonal() {
        let k = KernelSpec::fbm(0.3).unwrap();
        assert_eq!(k.kernel_eval(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(k.kernel_eval(1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn fbm_kernel_matches_high_precision_reference() {
        for (h, t, s, expect) in [
            (0.7, 1.0, 0.5, 0.977_140_497_393_616_79),
            (0.7, 2.0, 0.001, 3.027_948_709_158_978_2),
            (0.25, 1.0, 0.5, 0.820_322_623_764_752_82),
            (0.25, 3.0, 0.01, 1.282_848_815_014_870_9),
            (0.75, 1.0, 0.999, 0.190_222_221_224_357_81),
        ] {
            let k = KernelSpec::fbm(h).unwrap();
            let got = k.kernel_eval(t, s).unwrap();
            assert!(rel(got, expect) < 1e-12, "H={h} t={t} s={s}: {got} vs {expect}");
        }
    }

    #[test]
    fn fbm_homogeneity_example() {
        let k = KernelSpec::fbm(0.7).unwrap();
        let (t, s) = (1.3, 0.4);
        let lhs = k.kernel_eval(2.0 * t, 2.0 * s).unwrap();
        let rhs = 2f64.powf(0.2) * k.kernel_eval(t, s).unwrap();
        assert!(rel(lhs, rhs) < 1e-13);
    }

    #[test]
    fn power_markov_values() {
        let k = KernelSpec::power_markov(0.0, 1.0, 1.0).unwrap();
        assert!((k.kernel_eval(4.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        let k = KernelSpec::power_markov(1.0, 1.0, 2.0).unwrap();
        assert!((k.factor_eval(0.5).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn factorisation_consistency() {
        let specs = [
            KernelSpec::fbm(0.3).unwrap(),
            KernelSpec::fbm(0.8).unwrap(),
            KernelSpec::power_markov(0.4, 1.3, 0.7).unwrap(),
            KernelSpec::custom(0.9, "poly", |x| 1.0 + x * x).unwrap(),
        ];
        for k in &specs {
            for (t, s) in [(1.0, 0.2), (3.0, 2.9), (0.5, 0.01)] {
                let direct = k.kernel_eval(t, s).unwrap();
                let via = (t - s).powf(k.beta() - 0.5) * k.factor_eval(s / t).unwrap();
                assert!(rel(via, direct) < 1e-10, "{:?}", k);
            }
        }
    }

    #[test]
    fn kernel_identity_brownian_closed_form() {
        let k = KernelSpec::fbm(0.5).unwrap();
        let (l, r) = kernel_identity_sides(&k, AlphaParam::new(1.0).unwrap(), 1.0, 2.0).unwrap();
        assert!((l - 0.5).abs() < 1e-12 && (r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kernel_identity_markov_against_power_integrals() {
        // z(u, s) = u^0 s^{1/2} for (α0, β) = (1/2, 1); with transform α = 1/2 both
        // sides reduce to s^{1/2} ln(t/s).
        let k = KernelSpec::power_markov(0.5, 1.0, 1.0).unwrap();
        let alpha = AlphaParam::new(0.5).unwrap();
        let (s, t): (f64, f64) = (0.3, 1.7);
        // LHS: t^{0} ∫_s^t u^{-1} s^{1/2} du = s^{1/2} ln(t/s)
        // RHS: s^{1/2} ∫_s^t u^{1/2} u^{-3/2} du = s^{1/2} ln(t/s)
        let exact = s.sqrt() * (t / s).ln();
        let (l, r) = kernel_identity_sides(&k, alpha, s, t).unwrap();
        assert!(rel(l, exact) < 1e-10 && rel(r, exact) < 1e-10);
        assert!(kernel_identity_residual(&k, alpha, s, t).unwrap() <= 1e-6);
    }

    #[test]
    fn kernel_identity_fbm() {
        let k = KernelSpec::fbm(0.75).unwrap();
        let r = kernel_identity_residual(&k, AlphaParam::new(0.0).unwrap(), 0.5, 2.0).unwrap();
        assert!(r <= 1e-6, "residual {r}");
    }
}
