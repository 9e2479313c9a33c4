//! Nonnegative FIR (order-`q` moving-average) identification.
//!
//! Given nonnegative input and output signals `U, Y ∈ R_+^{(N+1)×m}`
//! (time down the rows, one experiment per column), find the impulse
//! response `h ∈ R_+^{q+1}` minimizing the I-divergence `I(Y || T(h)U)`,
//! where `T(h)` is the causal convolution with `h`.
//!
//! - [`divergence`]: the I-divergence with its extended-value conventions.
//! - [`linop`]: the convolution operator, objective, gradient and curvature.
//! - [`solver`]: the multiplicative-update iteration, stopping rules and
//!   Kuhn–Tucker certification.
//! - [`stats`]: synthetic data under multiplicative lognormal noise and the
//!   Monte Carlo harnesses for the large-sample regimes.
//! - [`io`] and [`cli`]: CSV/JSON file formats and the command layer behind
//!   the `nnfir` binary.
//!
//! ```
//! use nnfir::{apply_t, fit, FitConfig, ImpulseResponse, SignalMatrix};
//!
//! let u = SignalMatrix::from_rows(&[
//!     vec![1.0, 2.0],
//!     vec![3.0, 0.5],
//!     vec![2.0, 1.0],
//!     vec![0.5, 4.0],
//! ])?;
//! let truth = ImpulseResponse::new(vec![1.0, 0.5])?;
//! let y = apply_t(&truth, &u)?;
//!
//! let result = fit(&u, &y, 1, &FitConfig::default())?;
//! assert!(result.h_hat.max_abs_diff(&truth) < 1e-6);
//! # Ok::<(), nnfir::Error>(())
//! ```

pub mod cli;
pub mod divergence;
pub mod error;
pub mod io;
pub mod linop;
pub mod solver;
pub mod stats;

pub use divergence::{i_divergence, ExtendedNonnegReal};
pub use error::{Error, Result};
pub use linop::{apply_t, column_weights, curvature, gradient, objective, CurvatureMatrix, ImpulseResponse, SignalMatrix};
pub use solver::{
    check_condition_sc, default_initial_h, em_step, fit, kkt_report, kkt_residual, ConditionReport, FitConfig,
    FitResult, FitStatus, KktReport,
};
