//! Simulation and verification toolkit for self-similar Volterra Gaussian
//! processes X_t = ∫_0^t z(t, s) dW_s and the ergodic transformation
//!
//! Z^α_t(X) = X_t − (2α + 1) t^{β − α − 1/2} ∫_0^t s^{α − β − 1/2} X_s ds,  α > −1/2.

pub mod covariance;
pub mod error;
pub mod kernels;
pub mod martingales;
pub mod pathcsv;
pub mod quad;
pub mod simulate;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use kernels::{AlphaParam, HurstIndex, KernelSpec};
