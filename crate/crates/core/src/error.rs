use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter fell outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The hypergeometric series did not reach its tail tolerance within the term cap.
    #[error("2F1({a}, {b}; {c}; {x}) did not converge within {terms} terms")]
    Hypergeometric {
        a: f64,
        b: f64,
        c: f64,
        x: f64,
        terms: usize,
    },

    #[error("quadrature on [{lo}, {hi}] did not converge: error estimate {estimate:e} on worst cell [{worst_lo}, {worst_hi}]")]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        worst_lo: f64,
        worst_hi: f64,
    },

    #[error("covariance matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("horizon error: {0}")]
    Horizon(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for failures of a numerical method, as opposed to invalid input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Hypergeometric { .. }
                | Error::Quadrature { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::NonFinite(_)
        )
    }
}
