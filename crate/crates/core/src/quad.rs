//! Product-integration quadrature for integrands with algebraic endpoint
//! singularities.
//!
//! The interval is split into a mesh graded geometrically toward each
//! non-regular endpoint. Cells touching an endpoint with a declared power
//! behaviour `(x - lo)^p` or `(hi - x)^p` use a Gauss–Jacobi rule, so the
//! singular power is integrated exactly against a polynomial interpolant of
//! the remaining smooth factor. Every other cell uses Gauss–Legendre. Each cell
//! is evaluated with two rule orders; the difference drives adaptive bisection.

use crate::error::{Error, Result};
use crate::kernels::special::gamma;
use nalgebra::{DMatrix, SymmetricEigen};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

const LOW_ORDER: usize = 12;
const HIGH_ORDER: usize = 20;
const GRADING_RATIO: f64 = 0.15;

/// Behaviour of the integrand at one endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum End {
    /// Smooth up to the endpoint.
    Regular,
    /// Non-smooth in an unspecified way (kinks, fractional powers added to a
    /// smooth part); the mesh is graded but no weight is factored out.
    Graded,
    /// Behaves like `distance^p` times a smooth factor, with `p > -1`.
    Power(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_cells: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            max_cells: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(rel_tol: f64) -> Self {
        QuadOptions {
            rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug)]
struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Gauss–Jacobi rule for the weight (1 − ξ)^a (1 + ξ)^b on [−1, 1], by the
/// Golub–Welsch eigenvalue method.
fn gauss_jacobi(n: usize, a: f64, b: f64) -> Rule {
    let mut jac = DMatrix::<f64>::zeros(n, n);
    let ab = a + b;
    for k in 0..n {
        let kf = k as f64;
        let denom = (2.0 * kf + ab) * (2.0 * kf + ab + 2.0);
        jac[(k, k)] = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / denom
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + ab;
            let beta = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + a) * (m + b) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            let off = beta.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(ab + 2.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

type RuleKey = (usize, u64, u64);

fn rule(n: usize, a: f64, b: f64) -> Arc<Rule> {
    static CACHE: OnceLock<RwLock<HashMap<RuleKey, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    let key = (n, a.to_bits(), b.to_bits());
    if let Some(r) = cache.read().expect("rule cache poisoned").get(&key) {
        return Arc::clone(r);
    }
    let r = Arc::new(gauss_jacobi(n, a, b));
    cache
        .write()
        .expect("rule cache poisoned")
        .entry(key)
        .or_insert(r)
        .clone()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum CellKind {
    Legendre,
    /// Weight (x − lo)^p on the cell.
    PowerLeft(f64),
    /// Weight (hi − x)^p on the cell.
    PowerRight(f64),
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    lo: f64,
    hi: f64,
    kind: CellKind,
    value: f64,
    error: f64,
}

fn apply<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, kind: CellKind, n: usize) -> f64 {
    let half = 0.5 * (hi - lo);
    match kind {
        CellKind::Legendre => {
            let r = rule(n, 0.0, 0.0);
            let mid = 0.5 * (lo + hi);
            let s: f64 = r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(&xi, &w)| w * f(mid + half * xi))
                .sum();
            s * half
        }
        CellKind::PowerLeft(p) => {
            let r = rule(n, 0.0, p);
            let s: f64 = r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(&xi, &w)| {
                    let d = (1.0 + xi) * half;
                    w * f(lo + d) / d.powf(p)
                })
                .sum();
            s * half.powf(p + 1.0)
        }
        CellKind::PowerRight(p) => {
            let r = rule(n, p, 0.0);
            let s: f64 = r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(&xi, &w)| {
                    let d = (1.0 - xi) * half;
                    w * f(hi - d) / d.powf(p)
                })
                .sum();
            s * half.powf(p + 1.0)
        }
    }
}

fn make_cell<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, kind: CellKind) -> Cell {
    let coarse = apply(f, lo, hi, kind, LOW_ORDER);
    let fine = apply(f, lo, hi, kind, HIGH_ORDER);
    Cell {
        lo,
        hi,
        kind,
        value: fine,
        error: (fine - coarse).abs(),
    }
}

fn grading_depth(endpoint: f64) -> f64 {
    // At the origin the abscissae keep full relative precision, so grade deep.
    // Elsewhere the nodes of the last cell must stay distinguishable from the
    // endpoint in floating point.
    if endpoint == 0.0 {
        1e-30
    } else {
        1e-6
    }
}

/// Breakpoints graded toward `from`, covering [from, to] (either orientation).
fn graded_points(from: f64, to: f64) -> Vec<f64> {
    let depth = grading_depth(from);
    let mut pts = vec![to];
    let mut frac = GRADING_RATIO;
    while frac > depth {
        pts.push(from + (to - from) * frac);
        frac *= GRADING_RATIO;
    }
    pts.push(from);
    pts
}

fn end_kind(end: End, left: bool) -> CellKind {
    match end {
        End::Power(p) if p != 0.0 => {
            if left {
                CellKind::PowerLeft(p)
            } else {
                CellKind::PowerRight(p)
            }
        }
        _ => CellKind::Legendre,
    }
}

/// ∫_lo^hi f(x) dx for `lo < hi`, with the stated endpoint behaviour.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    left: End,
    right: End,
    opts: &QuadOptions,
) -> Result<f64> {
    if !(lo < hi) {
        if lo == hi {
            return Ok(0.0);
        }
        return Err(Error::Domain(format!("integration bounds out of order: [{lo}, {hi}]")));
    }
    for end in [left, right] {
        if let End::Power(p) = end {
            if !(p > -1.0) {
                return Err(Error::Domain(format!(
                    "endpoint exponent {p} is not integrable"
                )));
            }
        }
    }
    let graded_left = left != End::Regular;
    let graded_right = right != End::Regular;
    let mut breaks: Vec<f64> = match (graded_left, graded_right) {
        (false, false) => vec![lo, hi],
        (true, false) => graded_points(lo, hi),
        (false, true) => graded_points(hi, lo),
        (true, true) => {
            let mid = 0.5 * (lo + hi);
            let mut p = graded_points(lo, mid);
            p.extend(graded_points(hi, mid));
            p
        }
    };
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let last = breaks.len() - 2;
    let mut cells: Vec<Cell> = breaks
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let kind = if i == 0 && graded_left {
                end_kind(left, true)
            } else if i == last && graded_right {
                end_kind(right, false)
            } else {
                CellKind::Legendre
            };
            make_cell(&f, w[0], w[1], kind)
        })
        .collect();

    loop {
        let total: f64 = cells.iter().map(|c| c.value).sum();
        let err: f64 = cells.iter().map(|c| c.error).sum();
        if !total.is_finite() {
            return Err(Error::NonFinite(format!(
                "integrand produced a non-finite value on [{lo}, {hi}]"
            )));
        }
        if err <= (opts.rel_tol * total.abs()).max(opts.abs_tol) {
            return Ok(total);
        }
        let (idx, worst) = cells
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, c)| (i, *c))
            .expect("at least one cell");
        let mid = 0.5 * (worst.lo + worst.hi);
        if cells.len() >= opts.max_cells || mid <= worst.lo || mid >= worst.hi {
            return Err(Error::Quadrature {
                lo,
                hi,
                estimate: err,
                worst_lo: worst.lo,
                worst_hi: worst.hi,
            });
        }
        let (left_kind, right_kind) = match worst.kind {
            CellKind::Legendre => (CellKind::Legendre, CellKind::Legendre),
            CellKind::PowerLeft(p) => (CellKind::PowerLeft(p), CellKind::Legendre),
            CellKind::PowerRight(p) => (CellKind::Legendre, CellKind::PowerRight(p)),
        };
        cells[idx] = make_cell(&f, worst.lo, mid, left_kind);
        cells.insert(idx + 1, make_cell(&f, mid, worst.hi, right_kind));
    }
}


/// [`integrate`] for integrands that can fail; the first failure is returned.
pub fn integrate_fallible<F: Fn(f64) -> Result<f64>>(
    f: F,
    lo: f64,
    hi: f64,
    left: End,
    right: End,
    opts: &QuadOptions,
) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let wrapped = |x: f64| match f(x) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let result = integrate(wrapped, lo, hi, left, right, opts);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => result,
    }
}
