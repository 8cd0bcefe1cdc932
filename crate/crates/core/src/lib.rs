//! Near-optimal reversal of finite-dimensional quantum channels.
//!
//! The crate builds the reversal channel with Kraus operators
//! `rho^{1/2} A_i^dagger A(rho)^{-1/2}`, evaluates entanglement, average
//! entanglement, classical and Bures-Uhlmann fidelities, constructs the
//! pretty good measurement, and provides a gradient-based search over
//! trace-preserving completely positive maps used to test near-optimality.

pub mod bounds;
pub mod channels;
pub mod error;
pub mod fidelities;
pub mod io;
pub mod linalg;
pub mod optimizer;
pub mod pgm;
pub mod reversal;

pub use error::{Error, Result};
