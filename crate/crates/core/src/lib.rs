//! Probing policies for stochastic matching with timeouts and its relatives
//! (online matching with i.i.d. buyers, stochastic k-set packing, multi-round
//! matching), the LP relaxations behind them, brute-force ground truth and a
//! seeded Monte Carlo harness.
//!
//! The LP engine and the exact oracles are generic over [`Scalar`]; the
//! aliases below fix the common instantiations.

pub mod bounds;
pub mod chance;
pub mod error;
pub mod exact;
pub mod harness;
pub mod instance;
pub mod lp;
pub mod online;
pub mod policy;
pub mod relax;
pub mod rounding;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Arbitrary-precision rational, the exact scalar.
pub type Rational = num_rational::BigRational;

pub type Lp = lp::LinearProgram<f64>;
pub type LpOutcome = lp::LpResult<f64>;
pub type ExactLp = lp::LinearProgram<Rational>;
pub type ExactLpOutcome = lp::LpResult<Rational>;
pub type AdaptiveOptimum = exact::AdaptiveSolution<f64>;
pub type ExactAdaptiveOptimum = exact::AdaptiveSolution<Rational>;
