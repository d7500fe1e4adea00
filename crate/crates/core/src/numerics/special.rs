//! Special functions on top of `statrs`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use statrs::function::erf::{erfc, erfc_inv};
pub use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function, accurate in the upper tail.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `ln Φ̄(x)`, finite far into the upper tail.
pub fn ln_norm_sf(x: f64) -> f64 {
    if x < 30.0 {
        norm_sf(x).ln()
    } else {
        // asymptotic Mills ratio series
        let x2 = x * x;
        let s = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        -0.5 * x2 - x.ln() - LN_SQRT_2PI + s.ln()
    }
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Upper quantile: `x` with `Φ̄(x) = q`.
pub fn norm_isf(q: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return f64::NEG_INFINITY;
    }
    SQRT_2 * erfc_inv(2.0 * q)
}

/// Regularized incomplete beta `I_x(a, b)` with clamping at the ends.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        statrs::function::beta::beta_reg(a, b, x)
    }
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    statrs::function::beta::ln_beta(a, b)
}

/// Inverse of `I_x(a, b)` in `x`.
pub fn inv_beta_reg(a: f64, b: f64, p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else if p >= 1.0 {
        1.0
    } else {
        statrs::function::beta::inv_beta_reg(a, b, p)
    }
}

/// Quantile of the Gamma(shape, 1) law.
pub fn gamma_quantile(shape: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let guess = {
        // Wilson–Hilferty start
        let z = norm_quantile(p);
        let c = 1.0 / (9.0 * shape);
        (shape * (1.0 - c + z * c.sqrt()).powi(3)).max(1e-300)
    };
    let f = |x: f64| if x <= 0.0 { 0.0 } else { gamma_lr(shape, x) };
    let use_upper = p > 0.5;
    if use_upper {
        let q = 1.0 - p;
        let g = |x: f64| if x <= 0.0 { -1.0 } else { -gamma_ur(shape, x) };
        crate::numerics::solve_monotone(g, -q, guess.max(1e-3), 0.0, f64::INFINITY, Default::default())
            .unwrap_or(guess)
    } else {
        crate::numerics::solve_monotone(f, p, guess, 0.0, f64::INFINITY, Default::default()).unwrap_or(guess)
    }
}

/// Upper quantile of Gamma(shape, 1): `x` with `Q(shape, x) = q`.
pub fn gamma_isf(shape: f64, q: f64) -> f64 {
    if q >= 0.5 {
        return gamma_quantile(shape, 1.0 - q);
    }
    if q <= 0.0 {
        return f64::INFINITY;
    }
    let g = |x: f64| if x <= 0.0 { -1.0 } else { -gamma_ur(shape, x) };
    let guess = shape + (-q.ln()).max(1.0);
    crate::numerics::solve_monotone(g, -q, guess, 0.0, f64::INFINITY, Default::default()).unwrap_or(guess)
}
