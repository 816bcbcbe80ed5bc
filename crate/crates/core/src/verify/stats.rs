//! Small statistical helpers: second moments, Gaussian standard errors,
//! Kolmogorov–Smirnov tests and least-squares residuals.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

/// Uncentred second-moment matrix (1/N) Σ x xᵀ of zero-mean rows.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    sum: DMatrix<f64>,
    count: usize,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        MomentAccumulator {
            sum: DMatrix::zeros(dim, dim),
            count: 0,
        }
    }

    /// Adds a block of rows, each of length `dim`.
    pub fn add_rows(&mut self, rows: &[Vec<f64>]) {
        if rows.is_empty() {
            return;
        }
        let dim = self.sum.nrows();
        let m = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        self.sum += m.tr_mul(&m);
        self.count += rows.len();
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn moments(&self) -> DMatrix<f64> {
        &self.sum / self.count.max(1) as f64
    }
}

/// Second moments of the given rows, accumulated in blocks.
pub fn second_moments<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> (DMatrix<f64>, usize) {
    let mut acc = MomentAccumulator::new(dim);
    let mut block = Vec::with_capacity(1024);
    for r in rows {
        block.push(r.to_vec());
        if block.len() == 1024 {
            acc.add_rows(&block);
            block.clear();
        }
    }
    acc.add_rows(&block);
    (acc.moments(), acc.count())
}

/// Standard error of (1/N) Σ x_s x_t for a centred Gaussian pair.
pub fn gaussian_cov_se(r_ss: f64, r_tt: f64, r_st: f64, n: usize) -> f64 {
    ((r_ss * r_tt + r_st * r_st) / n as f64).sqrt()
}

/// Kolmogorov distribution tail P(K > λ).
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample KS test against N(0, variance), with Stephens' finite-n correction.
pub fn ks_normal(sample: &[f64], variance: f64) -> Result<KsResult> {
    if sample.is_empty() || !(variance > 0.0) {
        return Err(Error::Domain("KS test needs data and a positive variance".into()));
    }
    let dist = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::Domain(e.to_string()))?;
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = dist.cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d),
    })
}

/// Fraction of Var(y) left unexplained by the best linear combination of the
/// regressors, from second moments: 1 − cᵀ(G + εI)⁻¹c / var_y with ridge
/// ε = `ridge` · trace(G).
pub fn residual_fraction(gram: &DMatrix<f64>, cross: &DVector<f64>, var_y: f64, ridge: f64) -> Result<f64> {
    let p = gram.nrows();
    if p == 0 {
        return Ok(1.0);
    }
    let eps = ridge * gram.trace();
    let g = gram + DMatrix::identity(p, p) * eps;
    let chol = g
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: f64::NAN })?;
    let beta = chol.solve(cross);
    Ok((1.0 - cross.dot(&beta) / var_y).clamp(0.0, 1.0))
}

/// Least-squares slope of log(err) on log(h): the observed convergence order.
pub fn convergence_order(h: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn kolmogorov_tail_values() {
        // scipy.special.kolmogorov
        assert!((kolmogorov_tail(1.0) - 0.26999967167735456).abs() < 1e-12);
        assert!((kolmogorov_tail(1.36) - 0.049485876755377876).abs() < 1e-12);
        assert_eq!(kolmogorov_tail(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_normal_and_rejects_wrong_scale() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..5000).map(|_| rng.sample::<f64, _>(StandardNormal) * 2.0).collect();
        assert!(ks_normal(&x, 4.0).unwrap().p_value > 0.01);
        assert!(ks_normal(&x, 1.0).unwrap().p_value < 1e-6);
    }

    #[test]
    fn residual_fraction_cases() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let c = DVector::from_vec(vec![1.0, 0.0]);
        assert!(residual_fraction(&g, &c, 1.0, 0.0).unwrap() < 1e-15);
        let c = DVector::from_vec(vec![0.0, 0.0]);
        assert_eq!(residual_fraction(&g, &c, 1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn moments_and_order() {
        let rows = [vec![1.0, 2.0], vec![3.0, 4.0]];
        let (m, n) = second_moments(rows.iter().map(|r| r.as_slice()), 2);
        assert_eq!(n, 2);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[5.0, 7.0, 7.0, 10.0]));
        let h = [1.0, 0.5, 0.25];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powf(0.75)).collect();
        assert!((convergence_order(&h, &e) - 0.75).abs() < 1e-12);
    }
}
