//! Deterministic numerical building blocks shared by the samplers, the
//! norming solvers and the limit-law evaluators.

pub mod interp;
pub mod linalg;
pub mod quad;
pub mod roots;
pub mod special;

pub use interp::Pchip;
pub use linalg::{min_eigenvalue, psd_factor, Factor};
pub use quad::{gauss_legendre, GaussLegendre};
pub use roots::{solve_monotone, RootOptions};
