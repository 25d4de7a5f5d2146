//! Numerical laboratory for Gaussian Brunn-Minkowski (Ehrhard-Borell)
//! inequalities and geometric Brascamp-Lieb inequalities.
//!
//! The library computes heat-semigroup evolutes, decides the coefficient
//! condition on the weights `α`, constructs the elliptic certificates used
//! by the maximum-principle argument, evaluates Ehrhard deficits on regions
//! of `ℝ^n` (n ≤ 3), and builds counterexample instances when the
//! coefficient condition fails.

pub mod alpha;
pub mod bl;
pub mod error;
pub mod field;
pub mod gaussian;
pub mod grid;
pub mod heat;
pub mod io;
pub mod lab;
pub mod regions;

pub use error::{LabError, Result};
pub use gaussian::{phi, phi_cdf, phi_inv, ExtReal, QuadratureRule};

/// Global deterministic seed for randomized restarts and Monte Carlo
/// defaults.
pub const DEFAULT_SEED: u64 = 0xE4A4D;
