//! Decomposition of generalized quantum measurements into weak measurements.
//!
//! A two-outcome measurement {M₁, M₂} is realized as a random walk of weak
//! measurements M(x, ±ε) along the operator curve M(0, x), which interpolates
//! between I/√2 at x = 0 and M₁ (x → −∞) or M₂ (x → +∞). The walk stops once
//! |x| ≥ X and the side it exits on is the outcome. Measurements with more
//! outcomes are reduced to chains of two-outcome measurements.
//!
//! Module map:
//! - [`matcore`]: complex matrices and spectral matrix functions.
//! - [`instrument`]: validation, classification, n-to-2 reduction, weakness.
//! - [`curves`]: P(x), A(x)/B(x), U(x), V(x) and the weak operators M(x, y).
//! - [`walk`]: the random-walk engine and hitting probabilities.
//! - [`ancilla`]: the doubled-space construction, kept as an audit oracle.
//! - [`harness`]: seeded Monte Carlo ensembles and statistical gates.
//! - [`verify`]: identity suites shared by the CLI and the test suite.
//! - [`io`]: JSON formats for instruments, states and reports.

pub mod ancilla;
pub mod cli;
pub mod curves;
pub mod error;
pub mod harness;
pub mod instrument;
pub mod io;
pub mod matcore;
pub mod sample;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, HermitianEig, C64};
