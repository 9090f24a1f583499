//! Construction and verification of low-rank performance-estimation
//! certificates for gradient descent with the balancing constant stepsize.
//!
//! * [`rates`]: the stepsize/rate pair `(alpha(N), r(N))` and 1-D simulations.
//! * [`recursion`]: derivation of the multipliers `a, b, c` and residuals from `d`.
//! * [`solver`]: damped Gauss-Newton and the continuation sweep over `N`.
//! * [`verifier`]: multiplier matrix assembly and the symbolic identity check.
//! * [`cli`]: certificate files, plot data and the command-line front end.

pub mod cli;
pub mod rates;
pub mod recursion;
pub mod solver;
pub mod verifier;

pub use rates::{solve_rate_params, RateParams};
pub use recursion::{derive_full, residual, FullCertificate};
pub use solver::{gauss_newton, sweep, SolveOptions, SolveReport, SweepSchedule};
