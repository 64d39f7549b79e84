//! The first-passage subordinator `T` of a spectrally negative process:
//! triplet `(k, d, nu)` with Laplace exponent `phi`, so that
//!
//! ```text
//! phi(lambda)/lambda = d + int_0^inf e^{-lambda x} nubar(x) dx,
//! nubar(x) = k + nu((x, inf)).
//! ```
//!
//! The last passage times of the conditioned process have the same law, so
//! this triplet also drives their simulation. Registry specs (stable,
//! Brownian motion with drift, pure drift) carry closed-form tails; for
//! anything else `nubar` is recovered by numerical inverse Laplace
//! transform and flagged approximate.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::levy::ProcessSpec;
use crate::numeric;

/// Levy measure of the subordinator, as a closed-form tail where possible.
#[derive(Debug, Clone)]
pub enum SubordinatorJumps {
    /// No jumps (deterministic subordinator).
    Zero,
    /// `nu((x, inf)) = x^{-index} / Gamma(1 - index)`, the `index`-stable
    /// subordinator tail; `index = 1/alpha` for `psi(l) = l^alpha`.
    StableTail { index: f64 },
    /// First passage of Brownian motion with drift:
    /// density `(2 pi s2 x^3)^{-1/2} e^{-theta x}` with `theta = a^2/(2 s2)`.
    InverseGaussianTail { s2: f64, theta: f64 },
    /// Non-registry spec: `nubar` via Gaver-Stehfest inversion of
    /// `phi(lambda)/lambda - d` (approximate).
    Numeric { spec: ProcessSpec },
}

impl SubordinatorJumps {
    /// `nu((x, inf))` for the closed-form families.
    fn tail0(&self, x: f64) -> Option<f64> {
        match *self {
            SubordinatorJumps::Zero => Some(0.0),
            SubordinatorJumps::StableTail { index } => {
                Some(x.powf(-index) / gamma(1.0 - index))
            }
            SubordinatorJumps::InverseGaussianTail { s2, theta } => {
                let base = 2.0 / (2.0 * std::f64::consts::PI * s2).sqrt();
                let v = if theta == 0.0 {
                    x.powf(-0.5)
                } else {
                    x.powf(-0.5) * (-theta * x).exp()
                        - (std::f64::consts::PI * theta).sqrt() * erfc((theta * x).sqrt())
                };
                Some(base * v)
            }
            SubordinatorJumps::Numeric { .. } => None,
        }
    }

    /// Density of `nu` for the closed-form families.
    pub fn density(&self, x: f64) -> Option<f64> {
        match *self {
            SubordinatorJumps::Zero => Some(0.0),
            SubordinatorJumps::StableTail { index } => {
                Some(index * x.powf(-1.0 - index) / gamma(1.0 - index))
            }
            SubordinatorJumps::InverseGaussianTail { s2, theta } => Some(
                x.powf(-1.5) * (-theta * x).exp() / (2.0 * std::f64::consts::PI * s2).sqrt(),
            ),
            SubordinatorJumps::Numeric { .. } => None,
        }
    }
}

/// The subordinator triplet together with its tail evaluator.
#[derive(Debug, Clone)]
pub struct SubordinatorSpec {
    pub k: f64,
    pub d: f64,
    pub nu: SubordinatorJumps,
}

impl SubordinatorSpec {
    /// `nubar(x) = k + nu((x, inf))`; nonincreasing with `nubar(inf) = k`.
    pub fn nu_tail(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::Domain(format!("nubar requires x > 0, got {x}")));
        }
        match &self.nu {
            SubordinatorJumps::Numeric { spec } => {
                let d = self.d;
                let weights = numeric::stehfest_weights(crate::scale::DEFAULT_GS_TERMS);
                let transform = |l: f64| match spec.phi(l) {
                    Ok(p) => p / l - d,
                    Err(_) => f64::NAN,
                };
                let v = numeric::gaver_stehfest(&transform, x, &weights);
                if !v.is_finite() {
                    return Err(Error::PrecisionLoss { x, estimate: f64::NAN });
                }
                // The inversion already carries the killing plateau k.
                Ok(v.max(0.0))
            }
            closed => Ok(self.k + closed.tail0(x).expect("closed form")),
        }
    }

    /// Whether `nubar` comes from numerical inversion rather than the
    /// closed-form registry.
    pub fn is_approximate(&self) -> bool {
        matches!(self.nu, SubordinatorJumps::Numeric { .. })
    }

    /// Rate of the exponential lifetime (`zeta = inf` when 0).
    pub fn lifetime_rate(&self) -> f64 {
        self.k
    }
}

/// Build the first-passage subordinator `(k, d, nu)` of `spec`.
pub fn subordinator_of(spec: &ProcessSpec) -> Result<SubordinatorSpec> {
    let kd = spec.killing_and_drift()?;
    if spec.jumps.is_none() {
        if spec.sigma > 0.0 {
            let s2 = spec.sigma * spec.sigma;
            let theta = spec.a * spec.a / (2.0 * s2);
            return Ok(SubordinatorSpec {
                k: kd.k,
                d: 0.0,
                nu: SubordinatorJumps::InverseGaussianTail { s2, theta },
            });
        }
        // Pure drift a > 0: T_x = x/a deterministically.
        return Ok(SubordinatorSpec {
            k: 0.0,
            d: 1.0 / spec.a,
            nu: SubordinatorJumps::Zero,
        });
    }
    if let Some(alpha) = spec.canonical_stable_alpha() {
        return Ok(SubordinatorSpec {
            k: 0.0,
            d: 0.0,
            nu: SubordinatorJumps::StableTail { index: 1.0 / alpha },
        });
    }
    Ok(SubordinatorSpec {
        k: kd.k,
        d: kd.d,
        nu: SubordinatorJumps::Numeric { spec: spec.clone() },
    })
}
