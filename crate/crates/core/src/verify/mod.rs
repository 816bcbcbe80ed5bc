//! Verification harness: statistical checks, deterministic checks and suites.

pub mod checks;
pub mod report;
pub mod stats;
pub mod suites;

pub use checks::*;
pub use report::{GramMatrix, SuiteReport, VerificationReport};
pub use suites::{run_suite, SUITES};
