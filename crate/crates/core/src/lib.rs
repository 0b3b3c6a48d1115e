//! Frequency- and time-limited H2 model order reduction for dense LTI systems.
//!
//! The crate reduces a stable state-space model (A, B, C) to a low-order
//! surrogate whose deviation is measured over a finite frequency band or time
//! window rather than the whole axis. It provides:
//!
//! - matrix-equation and matrix-function kernels (Sylvester/Lyapunov solves,
//!   matrix exponential and logarithm, the Fréchet derivative of the
//!   logarithm, and the band-limited log gain of a stable matrix),
//! - limited controllability/observability gramians, limited H2 error norms,
//!   and independent quadrature oracles for them,
//! - tangential Krylov projection with bi-orthogonalization,
//! - the reduction algorithms themselves: iterative tangential interpolation,
//!   a gramian stationary-point iteration, pseudo-optimal Krylov reduction
//!   with guaranteed pole placement, heuristic fixed-point baselines, and
//!   limited balanced truncation,
//! - an auditor that quantifies how well a reduced model satisfies the
//!   first-order limited-H2 optimality conditions.

pub mod algorithms;
pub mod audit;
pub mod error;
pub mod gramians;
pub mod lti;
pub mod matfun;
pub mod projection;

pub use error::{Error, Result};

/// Crate version, for embedding in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
