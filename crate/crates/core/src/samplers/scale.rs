use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::quad;
use crate::numerics::special::{gamma_isf, gamma_lr, gamma_quantile, gamma_ur, ln_gamma};

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied positive scale law given by its CDF and quantile.
#[derive(Clone)]
pub struct CustomScale {
    pub name: String,
    pub cdf: Fn1,
    pub quantile: Fn1,
    pub lower_bound: f64,
    pub upper_endpoint: f64,
}

impl fmt::Debug for CustomScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomScale")
            .field("name", &self.name)
            .field("lower_bound", &self.lower_bound)
            .field("upper_endpoint", &self.upper_endpoint)
            .finish()
    }
}

/// Law of a positive random scale `S`.
///
/// * `ModelA`: generalized gamma law with density proportional to
///   `s^(α₁+p₁−1) exp(−L₁ s^p₁)`, whose survival function is asymptotically
///   `C₁ s^α₁ exp(−L₁ s^p₁)` with `C₁ = L₁^(α₁/p₁) / Γ((α₁+p₁)/p₁)`.
///   Requires `α₁ + p₁ > 0`.
/// * `ModelB`: `S = 1 − (1−floor)·V^(1/γ)` with `V` uniform, so that
///   `P{S > 1 − x} = (x/(1−floor))^γ` near the upper endpoint 1.
///   `γ = 0` is the degenerate law `S ≡ 1`.
/// * `Constant`: `S ≡ value`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScaleLaw {
    ModelA {
        alpha1: f64,
        l1: f64,
        p1: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c1: Option<f64>,
    },
    ModelB {
        gamma: f64,
        #[serde(default)]
        floor: f64,
    },
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    #[serde(skip)]
    Custom(Arc<CustomScale>),
}

fn one() -> f64 {
    1.0
}

impl ScaleLaw {
    pub fn model_a(alpha1: f64, l1: f64, p1: f64) -> Result<Self> {
        let s = ScaleLaw::ModelA { alpha1, l1, p1, c1: None };
        s.validate()?;
        Ok(s)
    }

    pub fn model_b(gamma: f64, floor: f64) -> Result<Self> {
        let s = ScaleLaw::ModelB { gamma, floor };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(value: f64) -> Self {
        ScaleLaw::Constant { value }
    }

    /// `C₁` implied by the Model A parameters.
    pub fn model_a_c1(alpha1: f64, l1: f64, p1: f64) -> f64 {
        (alpha1 / p1 * l1.ln() - ln_gamma((alpha1 + p1) / p1)).exp()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScaleLaw::ModelA { alpha1, l1, p1, c1 } => {
                if !(*l1 > 0.0 && *p1 > 0.0 && l1.is_finite() && p1.is_finite() && alpha1.is_finite()) {
                    return Err(invalid("model A needs L1 > 0 and p1 > 0"));
                }
                if alpha1 + p1 <= 0.0 {
                    return Err(invalid("model A needs alpha1 + p1 > 0"));
                }
                if let Some(c) = c1 {
                    let d = Self::model_a_c1(*alpha1, *l1, *p1);
                    if !(*c > 0.0) || ((c - d) / d).abs() > 1e-6 {
                        return Err(invalid(format!(
                            "model A constant c1 is fixed by (alpha1, l1, p1) to {d}, got {c}"
                        )));
                    }
                }
                Ok(())
            }
            ScaleLaw::ModelB { gamma, floor } => {
                if !(*gamma >= 0.0 && gamma.is_finite()) {
                    return Err(invalid("model B needs gamma >= 0"));
                }
                if !(*floor >= 0.0 && *floor < 1.0) {
                    return Err(invalid("model B floor must lie in [0, 1)"));
                }
                Ok(())
            }
            ScaleLaw::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(invalid("constant scale must be positive"));
                }
                Ok(())
            }
            ScaleLaw::Custom(c) => {
                if !(c.lower_bound >= 0.0 && c.upper_endpoint > c.lower_bound) {
                    return Err(invalid("custom scale needs 0 <= lower_bound < upper_endpoint"));
                }
                Ok(())
            }
        }
    }

    /// Almost-sure lower bound κ of S.
    pub fn lower_bound(&self) -> f64 {
        match self {
            ScaleLaw::ModelA { .. } => 0.0,
            ScaleLaw::ModelB { gamma, floor } => {
                if *gamma == 0.0 {
                    1.0
                } else {
                    *floor
                }
            }
            ScaleLaw::Constant { value } => *value,
            ScaleLaw::Custom(c) => c.lower_bound,
        }
    }

    pub fn upper_endpoint(&self) -> f64 {
        match self {
            ScaleLaw::ModelA { .. } => f64::INFINITY,
            ScaleLaw::ModelB { .. } => 1.0,
            ScaleLaw::Constant { value } => *value,
            ScaleLaw::Custom(c) => c.upper_endpoint,
        }
    }

    pub fn is_degenerate(&self) -> Option<f64> {
        match self {
            ScaleLaw::Constant { value } => Some(*value),
            ScaleLaw::ModelB { gamma, .. } if *gamma == 0.0 => Some(1.0),
            _ => None,
        }
    }

    fn model_a_shape(alpha1: f64, p1: f64) -> f64 {
        (alpha1 + p1) / p1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ScaleLaw::ModelA { alpha1, l1, p1, .. } => {
                let g = Gamma::new(Self::model_a_shape(*alpha1, *p1), 1.0).expect("validated shape");
                (g.sample(rng) / l1).powf(1.0 / p1)
            }
            ScaleLaw::ModelB { gamma, floor } => {
                if *gamma == 0.0 {
                    1.0
                } else {
                    let v: f64 = rng.random();
                    1.0 - (1.0 - floor) * v.powf(1.0 / gamma)
                }
            }
            ScaleLaw::Constant { value } => *value,
            ScaleLaw::Custom(c) => {
                let u: f64 = rng.random();
                (c.quantile)(u)
            }
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        match self {
            ScaleLaw::ModelA { alpha1, l1, p1, .. } => {
                if s <= 0.0 {
                    0.0
                } else {
                    gamma_lr(Self::model_a_shape(*alpha1, *p1), l1 * s.powf(*p1))
                }
            }
            ScaleLaw::ModelB { gamma, floor } => {
                if *gamma == 0.0 {
                    return if s >= 1.0 { 1.0 } else { 0.0 };
                }
                if s >= 1.0 {
                    1.0
                } else if s <= *floor {
                    0.0
                } else {
                    1.0 - ((1.0 - s) / (1.0 - floor)).powf(*gamma)
                }
            }
            ScaleLaw::Constant { value } => {
                if s >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            ScaleLaw::Custom(c) => (c.cdf)(s),
        }
    }

    pub fn sf(&self, s: f64) -> f64 {
        match self {
            ScaleLaw::ModelA { alpha1, l1, p1, .. } => {
                if s <= 0.0 {
                    1.0
                } else {
                    gamma_ur(Self::model_a_shape(*alpha1, *p1), l1 * s.powf(*p1))
                }
            }
            ScaleLaw::ModelB { gamma, floor } if *gamma > 0.0 => {
                if s >= 1.0 {
                    0.0
                } else if s <= *floor {
                    1.0
                } else {
                    ((1.0 - s) / (1.0 - floor)).powf(*gamma)
                }
            }
            _ => 1.0 - self.cdf(s),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            ScaleLaw::ModelA { alpha1, l1, p1, .. } => {
                (gamma_quantile(Self::model_a_shape(*alpha1, *p1), p) / l1).powf(1.0 / p1)
            }
            ScaleLaw::ModelB { gamma, floor } => {
                if *gamma == 0.0 {
                    1.0
                } else {
                    1.0 - (1.0 - floor) * (1.0 - p).powf(1.0 / gamma)
                }
            }
            ScaleLaw::Constant { value } => *value,
            ScaleLaw::Custom(c) => (c.quantile)(p),
        }
    }

    /// Density where it exists (Model A only, in closed form).
    pub fn ln_density(&self, s: f64) -> Option<f64> {
        match self {
            ScaleLaw::ModelA { alpha1, l1, p1, .. } => {
                let d = alpha1 + p1;
                Some(if s <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    p1.ln() + d / p1 * l1.ln() - ln_gamma(d / p1) + (d - 1.0) * s.ln() - l1 * s.powf(*p1)
                })
            }
            _ => None,
        }
    }

    /// `E f(S)` by quadrature.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        match self {
            ScaleLaw::Constant { value } => f(*value),
            ScaleLaw::ModelB { gamma, .. } if *gamma == 0.0 => f(1.0),
            ScaleLaw::ModelA { alpha1, l1, p1, .. } => {
                let shape = Self::model_a_shape(*alpha1, *p1);
                let lo = (gamma_quantile(shape, 1e-17).max(1e-300) / l1).powf(1.0 / p1);
                let hi = (gamma_isf(shape, 1e-300) / l1).powf(1.0 / p1);
                let (tlo, thi) = (lo.ln(), hi.ln());
                quad::integrate(tlo, thi, 128, 8, |t| {
                    let s = t.exp();
                    let ld = self.ln_density(s).unwrap() + t;
                    let v = f(s);
                    if v == 0.0 {
                        0.0
                    } else {
                        v * ld.exp()
                    }
                })
            }
            _ => quad::integrate(0.0, 1.0, 32, 16, |u| f(self.quantile(u))),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            ScaleLaw::ModelA { alpha1, l1, p1, .. } => {
                let d = alpha1 + p1;
                (ln_gamma((d + 2.0) / p1) - ln_gamma(d / p1) - 2.0 / p1 * l1.ln()).exp()
            }
            ScaleLaw::Constant { value } => value * value,
            _ => self.expect(|s| s * s),
        }
    }

    /// `E{1/S}`, infinite when the negative moment does not exist.
    pub fn mean_inverse(&self) -> f64 {
        match self {
            ScaleLaw::ModelA { alpha1, l1, p1, .. } => {
                let d = alpha1 + p1;
                if d <= 1.0 {
                    f64::INFINITY
                } else {
                    (ln_gamma((d - 1.0) / p1) - ln_gamma(d / p1) + l1.ln() / p1).exp()
                }
            }
            ScaleLaw::Constant { value } => 1.0 / value,
            ScaleLaw::ModelB { gamma, floor } => {
                if *gamma == 0.0 {
                    1.0
                } else if *floor == 0.0 && *gamma <= 1.0 {
                    f64::INFINITY
                } else {
                    self.expect(|s| 1.0 / s)
                }
            }
            ScaleLaw::Custom(c) => {
                if c.lower_bound > 0.0 {
                    self.expect(|s| 1.0 / s)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Index of regular variation of the CDF at 0 (infinite when S is
    /// bounded away from 0).
    pub fn rv_index_at_zero(&self) -> Option<f64> {
        match self {
            ScaleLaw::ModelA { alpha1, p1, .. } => Some(alpha1 + p1),
            ScaleLaw::ModelB { gamma, floor } => {
                if *gamma == 0.0 || *floor > 0.0 {
                    Some(f64::INFINITY)
                } else {
                    Some(1.0)
                }
            }
            ScaleLaw::Constant { .. } => Some(f64::INFINITY),
            ScaleLaw::Custom(c) => {
                if c.lower_bound > 0.0 {
                    Some(f64::INFINITY)
                } else {
                    None
                }
            }
        }
    }

    /// The law with distribution `s⁻¹ dF(s) / E{1/S}` when it stays in a
    /// closed-form family.
    pub fn tilt_inverse(&self) -> Option<ScaleLaw> {
        match self {
            ScaleLaw::ModelA { alpha1, l1, p1, .. } if alpha1 + p1 > 1.0 => Some(ScaleLaw::ModelA {
                alpha1: alpha1 - 1.0,
                l1: *l1,
                p1: *p1,
                c1: None,
            }),
            ScaleLaw::Constant { value } => Some(ScaleLaw::Constant { value: *value }),
            ScaleLaw::ModelB { gamma, .. } if *gamma == 0.0 => Some(self.clone()),
            _ => None,
        }
    }
}
