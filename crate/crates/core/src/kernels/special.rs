//! Gamma function and the Gauss hypergeometric function on the real half-line
//! `x < 1`, which is all the fractional Brownian motion kernel needs.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Maximum number of series terms before a ₂F₁ evaluation is declared failed.
pub const HYP2F1_TERM_CAP: usize = 10_000;

/// Relative tail tolerance at which the ₂F₁ power series is truncated.
pub const HYP2F1_TAIL_TOL: f64 = 1e-14;

// Beyond this argument the power series is replaced by the 1 - z connection formula.
const SERIES_LIMIT: f64 = 0.75;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Γ(x) by the Lanczos approximation (g = 7, nine terms), with the reflection
/// formula for x < 1/2. Poles return `f64::INFINITY` (signed NaN is avoided).
pub fn gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &coef) in LANCZOS.iter().enumerate().skip(1) {
        acc += coef / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// 1/Γ(x), which is entire: exactly zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// The fBm kernel normalisation
/// c(H) = (2H Γ(3/2 − H) / (Γ(H + 1/2) Γ(2 − 2H)))^{1/2}.
pub fn fbm_c(hurst: f64) -> f64 {
    let h = hurst;
    (2.0 * h * gamma(1.5 - h) / (gamma(h + 0.5) * gamma(2.0 - 2.0 * h))).sqrt()
}

/// Power series of ₂F₁(a, b; c; z). `Err(n)` reports the number of terms used
/// when the tail tolerance was not met.
fn series(a: f64, b: f64, c: f64, z: f64, cap: usize) -> std::result::Result<f64, usize> {
    let mut sum = 1.0;
    let mut term = 1.0;
    for n in 0..cap {
        let nf = n as f64;
        let ratio = (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0));
        term *= ratio * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // Once the term ratio is below one the tail is dominated by a
        // geometric series with ratio at most |ratio * z|.
        let r = (ratio * z).abs();
        if r < 1.0 && term.abs() * r / (1.0 - r) <= HYP2F1_TAIL_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(cap)
}

/// ₂F₁(a, b; c; z) for z ∈ [0, 1), with `w = 1 − z` passed separately so that
/// callers who know `w` exactly do not lose it to cancellation.
pub(crate) fn hyp2f1_unit(
    a: f64,
    b: f64,
    c: f64,
    z: f64,
    w: f64,
) -> std::result::Result<f64, usize> {
    if z <= SERIES_LIMIT {
        return series(a, b, c, z, HYP2F1_TERM_CAP);
    }
    let m = c - a - b;
    if (m - m.round()).abs() < 1e-6 {
        // Logarithmic case of the connection formula: stay with the slowly
        // converging direct series and let the cap decide.
        return series(a, b, c, z, HYP2F1_TERM_CAP);
    }
    let gc = gamma(c);
    let first = gc * gamma(m) * rgamma(c - a) * rgamma(c - b);
    let second = gc * gamma(-m) * rgamma(a) * rgamma(b);
    let mut value = 0.0;
    if first != 0.0 {
        value += first * series(a, b, 1.0 - m, w, HYP2F1_TERM_CAP)?;
    }
    if second != 0.0 {
        value += second * w.powf(m) * series(c - a, c - b, 1.0 + m, w, HYP2F1_TERM_CAP)?;
    }
    Ok(value)
}

/// Gauss hypergeometric function ₂F₁(a, b; c; x) for real x < 1.
///
/// Negative arguments go through the Pfaff transformation
/// ₂F₁(a, b; c; x) = (1 − x)^{−a} ₂F₁(a, c − b; c; x / (x − 1)),
/// which lands in [0, 1). Terminating series (a or b a non-positive integer)
/// are summed directly as polynomials.
pub fn gauss_2f1(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    if is_nonpositive_integer(c) {
        return Err(Error::Domain(format!(
            "2F1 lower parameter c = {c} is a non-positive integer"
        )));
    }
    if !(x < 1.0) || !a.is_finite() || !b.is_finite() || !c.is_finite() {
        return Err(Error::Domain(format!(
            "2F1 requires finite parameters and x < 1, got ({a}, {b}; {c}; {x})"
        )));
    }
    let fail = |terms| Error::Hypergeometric { a, b, c, x, terms };
    if x == 0.0 {
        return Ok(1.0);
    }
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        let degree = if is_nonpositive_integer(a) { -a } else { -b };
        return series(a, b, c, x, degree as usize + 1).map_err(fail);
    }
    if x < 0.0 {
        let one_minus_x = 1.0 - x;
        let z = -x / one_minus_x;
        let w = 1.0 / one_minus_x;
        let inner = hyp2f1_unit(a, c - b, c, z, w).map_err(fail)?;
        Ok(one_minus_x.powf(-a) * inner)
    } else {
        hyp2f1_unit(a, b, c, x, 1.0 - x).map_err(fail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(gamma(1.0), 1.0) < 1e-14);
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(5.0), 24.0) < 1e-14);
        assert!(rel(gamma(-0.5), -2.0 * PI.sqrt()) < 1e-13);
        assert!(rel(gamma(1.5), 0.5 * PI.sqrt()) < 1e-14);
        assert_eq!(rgamma(-2.0), 0.0);
        assert_eq!(rgamma(0.0), 0.0);
    }

    #[test]
    fn fbm_c_brownian_is_one() {
        assert!((fbm_c(0.5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fbm_c_matches_high_precision_reference() {
        // Reference values from an arbitrary-precision evaluation.
        for (h, expect) in [
            (0.25, 0.645_998_003_740_751_97),
            (0.3, 0.730_282_934_079_922_97),
            (0.7, 1.091_809_130_883_912_6),
            (0.75, 1.069_644_635_031_990_3),
        ] {
            assert!(rel(fbm_c(h), expect) < 1e-13, "H = {h}");
        }
    }

    #[test]
    fn trivial_and_terminating_cases() {
        assert_eq!(gauss_2f1(0.3, 0.4, 1.1, 0.0).unwrap(), 1.0);
        assert_eq!(gauss_2f1(0.0, 0.3, 1.2, -5.0).unwrap(), 1.0);
        // 2F1(-1, b; c; x) = 1 - (b / c) x
        let v = gauss_2f1(-1.0, 2.0, 3.0, -2.0).unwrap();
        assert!((v - 7.0 / 3.0).abs() < 1e-13);
        // 2F1(-2, b; c; x) = 1 - 2bx/c + b(b+1)x^2/(c(c+1))
        let (b, c, x) = (0.7, 1.3, -3.5);
        let exact = 1.0 - 2.0 * b * x / c + b * (b + 1.0) * x * x / (c * (c + 1.0));
        assert!(rel(gauss_2f1(-2.0, b, c, x).unwrap(), exact) < 1e-13);
    }

    #[test]
    fn matches_high_precision_reference() {
        let cases = [
            ((0.5, 1.0, 1.2, -0.5), 0.843_034_678_218_119_95),
            ((-0.25, 0.25, 0.75, -3.0), 1.158_909_155_990_009_5),
            ((0.25, -0.25, 1.25, -50.0), 1.569_455_552_554_500_9),
            ((0.3, 0.7, 1.5, -1000.0), 0.200_141_912_034_340_70),
            ((1.5, -0.2, 0.8, -0.999), 1.252_982_679_481_227_5),
            ((0.2, 0.3, 0.9, 0.5), 1.043_250_985_738_732_3),
            ((0.2, 0.3, 0.9, 0.95), 1.143_776_128_894_811_1),
            ((-0.2, 1.0, 1.2, -1e6), 15.058_870_727_865_080),
        ];
        for ((a, b, c, x), expect) in cases {
            let got = gauss_2f1(a, b, c, x).unwrap();
            assert!(rel(got, expect) < 1e-12, "({a},{b};{c};{x}): {got} vs {expect}");
        }
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(matches!(gauss_2f1(0.1, 0.2, -1.0, -0.5), Err(Error::Domain(_))));
        assert!(matches!(gauss_2f1(0.1, 0.2, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn logarithmic_case_reports_non_convergence() {
        // c - a - b = 0 with z extremely close to one exhausts the term cap.
        let err = gauss_2f1(0.5, 0.5, 1.0, 1.0 - 1e-12).unwrap_err();
        assert!(matches!(err, Error::Hypergeometric { terms: HYP2F1_TERM_CAP, .. }));
    }
}
