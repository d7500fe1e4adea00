//! Limits of normalized componentwise maxima.

use super::engine::{integrate, Bank, Budget, Exponent, LimitEstimate, Measure, OuterRule, Problem};
use crate::arrays::Variogram;
use crate::error::{invalid, Error, Result};
use crate::numerics::linalg::psd_factor;
use crate::numerics::quad::integrate as gl_integrate;
use crate::numerics::special::{norm_cdf, norm_sf};
use crate::samplers::{fill_standard_normal, EllipticalSampler, RadialLaw};

fn check_len(x: &[f64], k: usize) -> Result<()> {
    if x.len() != k {
        return Err(Error::InvalidDimension(format!("point has {} coordinates, expected {k}", x.len())));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("point has a NaN coordinate".into()));
    }
    Ok(())
}

/// Hüsler–Reiss law `Q_Γ` with a Gaussian `Z` of variances `θ`.
#[derive(Debug, Clone)]
pub struct HrSpec {
    pub gamma: Variogram,
    pub theta: Vec<f64>,
}

impl HrSpec {
    /// `θ` defaults to `θ_i = max_j γ_ij`.
    pub fn new(gamma: Variogram, theta: Option<Vec<f64>>) -> Result<Self> {
        gamma.check_valid()?;
        let theta = theta.unwrap_or_else(|| gamma.default_theta());
        gamma.to_covariance(&theta)?;
        Ok(Self { gamma, theta })
    }

    /// `θ` of the centred representation `Σ Z_i = 0`, which keeps the
    /// variances (and the Monte Carlo error) small.
    pub fn centered(gamma: Variogram) -> Result<Self> {
        let k = gamma.k();
        if k == 1 {
            return Self::new(gamma, None);
        }
        let g = gamma.matrix();
        let kf = k as f64;
        let total: f64 = g.iter().sum();
        let theta: Vec<f64> = (0..k).map(|i| g.row(i).sum() / kf - total / (2.0 * kf * kf)).collect();
        Self::new(gamma, Some(theta))
    }

    pub fn k(&self) -> usize {
        self.gamma.k()
    }
}

/// Evaluator of `Q_Γ(x)` with one shared bank of Gaussian draws.
pub struct HrEvaluator {
    spec: HrSpec,
    budget: Budget,
    bank: Option<Bank>,
}

impl HrEvaluator {
    pub fn new(spec: HrSpec, budget: Budget) -> Result<Self> {
        budget.validate()?;
        let k = spec.k();
        let bank = if k == 1 {
            None
        } else {
            let cov = spec.gamma.to_covariance(&spec.theta)?;
            let factor = psd_factor(&cov)?;
            Some(Bank::draw(budget.paths, k, budget.key().substream(3), move |rng, row| {
                let mut n = vec![0.0; k];
                fill_standard_normal(rng, &mut n);
                factor.apply(&n, row);
            }))
        };
        Ok(Self { spec, budget, bank })
    }

    /// `Q_Γ(x) = exp(−∫ P{∃i: Z_i > x_i − y + θ_i/2} e^{−y} dy)`.
    pub fn cdf(&self, x: &[f64]) -> Result<LimitEstimate> {
        let k = self.spec.k();
        check_len(x, k)?;
        if x.iter().all(|v| *v == f64::INFINITY) {
            return Ok(LimitEstimate::exact(1.0));
        }
        if x.contains(&f64::NEG_INFINITY) {
            return Ok(LimitEstimate::exact(0.0));
        }
        let theta = &self.spec.theta;
        let window = self.window(x);
        let Some(bank) = &self.bank else {
            // k = 1: the inner probability is a normal tail
            let (t, s) = (theta[0], theta[0].sqrt());
            return Ok(match self.budget.rule {
                OuterRule::Exact => LimitEstimate::exact((-(-x[0]).exp()).exp()),
                OuterRule::GaussLegendre { panels, order } => {
                    let i = gl_integrate(window.0, window.1, panels, order, |y| {
                        norm_sf((x[0] - y + t / 2.0) / s) * (-y).exp()
                    });
                    LimitEstimate::from_exponent(&Exponent {
                        mean: i,
                        trunc: self.budget.eps,
                        nodes: panels * order,
                        ..Default::default()
                    })
                }
            });
        };
        let p = Problem {
            measure: Measure::ExpNeg,
            window,
            trunc: self.budget.eps,
            control_mean: Some(x.iter().map(|v| (-v).exp()).sum()),
        };
        let sums = integrate(bank, &p, &self.budget, |z, iv| {
            let mut m = f64::INFINITY;
            let mut g = 0.0;
            for i in 0..k {
                let c = x[i] + theta[i] / 2.0 - z[i];
                m = m.min(c);
                g += (-c).exp();
            }
            iv.push((m, f64::INFINITY));
            g
        });
        Ok(LimitEstimate::from_exponent(&sums.finish()))
    }

    /// `[y_lo, y_hi]` with `y_hi = −ln(ε/2)` and the Gaussian lower tail of
    /// the integrand below `ε/2` (union bound over coordinates).
    fn window(&self, x: &[f64]) -> (f64, f64) {
        let half = self.budget.eps / 2.0;
        let hi = -half.ln();
        let theta = &self.spec.theta;
        let tail = |y: f64| -> f64 {
            x.iter()
                .zip(theta)
                .filter(|(xi, _)| xi.is_finite())
                .map(|(xi, t)| {
                    let s = t.sqrt();
                    let u = (xi + t / 2.0 - y) / s;
                    ((-xi).exp() * norm_sf(u - s) - (-y).exp() * norm_sf(u)).max(0.0)
                })
                .sum()
        };
        let mut lo = hi - 1.0;
        while tail(lo) > half && lo > -1e4 {
            lo -= 1.0;
        }
        (lo, hi)
    }
}

/// `Q_Γ(x)` by quadrature over `y` and Monte Carlo over `Z`.
pub fn hr_limit_cdf(spec: &HrSpec, x: &[f64], budget: &Budget) -> Result<LimitEstimate> {
    HrEvaluator::new(spec.clone(), *budget)?.cdf(x)
}

/// Bivariate Hüsler–Reiss distribution with `λ = √γ₁₂/2`:
/// `exp(−e^{−x₁}Φ(λ + (x₂−x₁)/(2λ)) − e^{−x₂}Φ(λ + (x₁−x₂)/(2λ)))`.
pub fn hr_bivariate_closed_form(gamma12: f64, x1: f64, x2: f64) -> Result<f64> {
    if !(gamma12 > 0.0 && gamma12.is_finite()) {
        return Err(invalid(format!("gamma12 = {gamma12} must be positive")));
    }
    if x1.is_nan() || x2.is_nan() {
        return Err(Error::Domain("NaN coordinate".into()));
    }
    let lam = gamma12.sqrt() / 2.0;
    let term = |a: f64, b: f64| -> f64 {
        if a == f64::INFINITY {
            0.0
        } else if b == f64::INFINITY {
            (-a).exp()
        } else {
            (-a).exp() * norm_cdf(lam + (b - a) / (2.0 * lam))
        }
    };
    Ok((-(term(x1, x2) + term(x2, x1))).exp())
}

/// Limit `Q̃_{Γ,α}` of maxima in the Weibull domain (upper endpoint 1).
#[derive(Debug, Clone)]
pub struct WeibullSpec {
    pub gamma: Variogram,
    pub alpha: f64,
    pub theta: Vec<f64>,
}

impl WeibullSpec {
    /// Requires `α > 1/2`, where the radial law of `Z` exists.
    pub fn new(gamma: Variogram, alpha: f64, theta: Option<Vec<f64>>) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha = {alpha} must be positive")));
        }
        if alpha <= 0.5 {
            return Err(Error::UnsupportedLaw(format!(
                "alpha = {alpha}: the radial law R² ~ Beta(k/2, alpha - 1/2) needs alpha > 1/2"
            )));
        }
        gamma.check_valid()?;
        let theta = theta.unwrap_or_else(|| gamma.default_theta());
        gamma.to_covariance(&theta)?;
        Ok(Self { gamma, alpha, theta })
    }

    pub fn k(&self) -> usize {
        self.gamma.k()
    }

    /// Marginal Weibull index `α + (k−1)/2`.
    pub fn marginal_index(&self) -> f64 {
        self.alpha + (self.k() as f64 - 1.0) / 2.0
    }

    /// Radial law of `Z`: `R̃² ~ Beta(k/2, α − 1/2)`.
    pub fn radial(&self) -> RadialLaw {
        RadialLaw::sqrt_beta(self.k() as f64 / 2.0, self.alpha - 0.5)
    }
}

/// `Ψ_β(x) = exp(−|x|^β)` for `x < 0`.
pub fn weibull_marginal_cdf(beta: f64, x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        (-(-x).powf(beta)).exp()
    }
}

/// Evaluator of `Q̃_{Γ,α}(x)`.
pub struct WeibullEvaluator {
    spec: WeibullSpec,
    budget: Budget,
    bank: Bank,
}

impl WeibullEvaluator {
    pub fn new(spec: WeibullSpec, budget: Budget) -> Result<Self> {
        budget.validate()?;
        let k = spec.k();
        let cov = spec.gamma.to_covariance(&spec.theta)?;
        let factor = psd_factor(&cov)?;
        let sampler = EllipticalSampler::from_factor(k, factor, spec.radial(), None);
        let bank = Bank::draw(budget.paths, k, budget.key().substream(4), move |rng, row| {
            let mut s = vec![0.0; k];
            sampler.draw(rng, &mut s, row);
        });
        Ok(Self { spec, budget, bank })
    }

    /// `exp(−∫₀^∞ P{∃i: √(2y) Z_i > x_i + y + θ_i/2} d y^β)`, `β = α + (k−1)/2`,
    /// integrated in `u = y^β`.
    pub fn cdf(&self, x: &[f64]) -> Result<LimitEstimate> {
        let k = self.spec.k();
        check_len(x, k)?;
        if x.iter().any(|v| *v >= 0.0) {
            return Err(Error::Domain("points must be negative componentwise".into()));
        }
        let beta = self.spec.marginal_index();
        let theta = &self.spec.theta;
        // |Z_i| ≤ √θ_i because R̃ ≤ 1, so the window loses nothing
        let umax = x
            .iter()
            .zip(theta)
            .map(|(xi, t)| root_hi(t.sqrt(), xi + t / 2.0).map_or(0.0, |s| (s * s).powf(beta)))
            .fold(0.0, f64::max);
        let p = Problem {
            measure: Measure::Lebesgue,
            window: (0.0, umax.max(f64::MIN_POSITIVE)),
            trunc: 0.0,
            control_mean: None,
        };
        let sums = integrate(&self.bank, &p, &self.budget, |z, iv| {
            for i in 0..k {
                let c = x[i] + theta[i] / 2.0;
                if let Some((lo, hi)) = roots(z[i], c) {
                    iv.push(((lo * lo).powf(beta), (hi * hi).powf(beta)));
                }
            }
            0.0
        });
        Ok(LimitEstimate::from_exponent(&sums.finish()))
    }
}

/// The set `{s ≥ 0: s² − √2·z·s + c < 0}` as an interval.
fn roots(z: f64, c: f64) -> Option<(f64, f64)> {
    let d = 2.0 * z * z - 4.0 * c;
    if d <= 0.0 {
        return None;
    }
    let r = d.sqrt();
    let hi = (std::f64::consts::SQRT_2 * z + r) / 2.0;
    if hi <= 0.0 {
        return None;
    }
    Some((((std::f64::consts::SQRT_2 * z - r) / 2.0).max(0.0), hi))
}

fn root_hi(z: f64, c: f64) -> Option<f64> {
    roots(z, c).map(|(_, h)| h)
}

/// `Q̃_{Γ,α}(x)` for `x < 0`.
pub fn weibull_limit_cdf(spec: &WeibullSpec, x: &[f64], budget: &Budget) -> Result<LimitEstimate> {
    WeibullEvaluator::new(spec.clone(), *budget)?.cdf(x)
}
