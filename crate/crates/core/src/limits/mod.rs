//! Limit laws of normalized extremes.
//!
//! Every evaluator returns a [`LimitEstimate`]. Integrals of the form
//! `∫ P{∃i: event_i(y, Z)} μ(dy)` are estimated from one bank of `Z` draws
//! per evaluator, so repeated evaluations at different points share the same
//! random numbers.

mod engine;
mod maxima;
mod minima;

pub use engine::{Budget, LimitEstimate, OuterRule};
pub use maxima::{
    hr_bivariate_closed_form, hr_limit_cdf, weibull_limit_cdf, weibull_marginal_cdf, HrEvaluator, HrSpec,
    WeibullEvaluator, WeibullSpec,
};
pub use minima::{
    g_gamma_cdf, min_limit_survival, min_limit_survival_ie, min_limit_survival_zero, pk_limit_survival,
    AnchorRule, IeEvaluator, IeSpec, MinEvaluator, MinLimitSpec, PkEvaluator, PkSpec,
};
