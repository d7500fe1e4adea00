//! Bracketed root finding for monotone functions.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iter: 400,
        }
    }
}

/// Solves `f(x) = target` for nondecreasing `f` on `(lo, hi)`.
///
/// The bracket is grown by doubling the distance from `guess` until it
/// straddles the target, then shrunk by bisection and polished with secant
/// steps kept inside the bracket.
pub fn solve_monotone(
    f: impl Fn(f64) -> f64,
    target: f64,
    guess: f64,
    lo: f64,
    hi: f64,
    opts: RootOptions,
) -> Result<f64> {
    let g = |x: f64| f(x) - target;
    let mut step = guess.abs().max(1e-3);
    let (mut a, mut b) = (guess, guess);
    let (mut fa, mut fb) = (g(a), g(b));
    if !fa.is_finite() {
        return Err(Error::NoSolution(format!("function not finite at {guess}")));
    }
    let mut n = 0;
    while fa > 0.0 {
        let mut c = a - step;
        if c <= lo {
            c = lo + (a - lo) * 0.5;
        }
        a = c;
        fa = g(a);
        step *= 2.0;
        n += 1;
        if n > 1100 || !fa.is_finite() {
            return Err(Error::NoSolution("could not bracket the root from below".into()));
        }
    }
    step = guess.abs().max(1e-3);
    n = 0;
    while fb < 0.0 {
        let mut c = b + step;
        if c >= hi {
            c = hi - (hi - b) * 0.5;
        }
        b = c;
        fb = g(b);
        step *= 2.0;
        n += 1;
        if n > 1100 || !fb.is_finite() {
            return Err(Error::NoSolution("could not bracket the root from above".into()));
        }
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    for _ in 0..opts.max_iter {
        let width = b - a;
        if width <= opts.rel_tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        // secant proposal, fall back to bisection when it stalls at an end
        let mut m = a - fa * (b - a) / (fb - fa);
        if !(m > a + 0.05 * width && m < b - 0.05 * width) {
            m = 0.5 * (a + b);
        }
        let fm = g(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm < 0.0 {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
        if !(fa.is_finite() && fb.is_finite()) {
            return Err(Error::NoSolution("non-finite function value".into()));
        }
    }
    Ok(if fb.abs() < fa.abs() { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn finds_cube_root() {
        let x = solve_monotone(|x| x * x * x, 27.0, 1.0, f64::NEG_INFINITY, f64::INFINITY, Default::default()).unwrap();
        assert_relative_eq!(x, 3.0, max_relative = 1e-11);
    }

    #[test]
    fn respects_finite_bounds() {
        let x = solve_monotone(|x: f64| x.ln(), -20.0, 1.0, 0.0, f64::INFINITY, Default::default()).unwrap();
        assert_relative_eq!(x, (-20f64).exp(), max_relative = 1e-10);
        let y = solve_monotone(|x: f64| -(1.0 - x).ln(), 10.0, 0.5, 0.0, 1.0, Default::default()).unwrap();
        assert_relative_eq!(1.0 - y, (-10f64).exp(), max_relative = 1e-6);
    }
}
