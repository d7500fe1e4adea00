//! Simulation and numerical evaluation of extremes of elliptical triangular
//! arrays and of the related max-stable and min-stable limits.
//!
//! * [`samplers`]: sphere, beta, radial and scale laws, elliptical vectors,
//!   spherical process paths.
//! * [`norming`]: norming constants for minima and maxima.
//! * [`arrays`]: covariance schedules and block-extreme simulation.
//! * [`limits`]: evaluators for the limit distributions.
//! * [`processes`]: truncated Poisson constructions of Brown–Resnick and
//!   Penrose–Kabluchko paths.
//! * [`harness`]: empirical distribution tools, experiment configs, the CLI.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrays;
pub mod error;
pub mod harness;
pub mod limits;
pub mod norming;
pub mod numerics;
pub mod processes;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};
pub use rng::StreamKey;
