//! Service-time laws: gamma (Erlang and exponential as special cases) and
//! deterministic.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::DistError;

/// Law of the service time `S`.
///
/// Construct through [`ServiceDistribution::gamma`] /
/// [`ServiceDistribution::deterministic`] (or deserialize), which enforce
/// strictly positive finite parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "RawService")]
pub enum ServiceDistribution {
    Gamma {
        #[serde(rename = "k")]
        shape: f64,
        #[serde(rename = "theta")]
        scale: f64,
    },
    Deterministic {
        #[serde(rename = "d")]
        value: f64,
    },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawService {
    Gamma { k: f64, theta: f64 },
    Deterministic { d: f64 },
}

impl TryFrom<RawService> for ServiceDistribution {
    type Error = DistError;

    fn try_from(raw: RawService) -> Result<Self, Self::Error> {
        match raw {
            RawService::Gamma { k, theta } => Self::gamma(k, theta),
            RawService::Deterministic { d } => Self::deterministic(d),
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, DistError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(DistError::NonPositive { name, value })
    }
}

impl ServiceDistribution {
    pub fn gamma(shape: f64, scale: f64) -> Result<Self, DistError> {
        Ok(Self::Gamma {
            shape: positive("k", shape)?,
            scale: positive("theta", scale)?,
        })
    }

    pub fn exponential(mean: f64) -> Result<Self, DistError> {
        Self::gamma(1.0, mean)
    }

    pub fn deterministic(value: f64) -> Result<Self, DistError> {
        Ok(Self::Deterministic {
            value: positive("d", value)?,
        })
    }

    /// Gamma law with shape `k` and the given mean (`theta = mean / k`).
    pub fn gamma_with_mean(shape: f64, mean: f64) -> Result<Self, DistError> {
        let shape = positive("k", shape)?;
        Self::gamma(shape, positive("mean", mean)? / shape)
    }

    /// True for a gamma law with integer shape.
    pub fn is_erlang(&self) -> bool {
        matches!(self, Self::Gamma { shape, .. } if shape.fract() == 0.0)
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, Self::Gamma { shape, .. } if *shape == 1.0)
    }

    /// `(k, theta)` for the gamma case.
    pub fn gamma_params(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Gamma { shape, scale } => Some((shape, scale)),
            Self::Deterministic { .. } => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => shape * scale,
            Self::Deterministic { value } => value,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => shape * scale * scale,
            Self::Deterministic { .. } => 0.0,
        }
    }

    pub fn second_moment(&self) -> f64 {
        let m = self.mean();
        self.variance() + m * m
    }

    /// Density `s^(k-1) e^(-s/theta) / (theta^k Gamma(k))`, evaluated in log space.
    pub fn pdf(&self, s: f64) -> Result<f64, DistError> {
        let (k, theta) = self.gamma_params().ok_or(DistError::NoDensity)?;
        if s.is_nan() || s < 0.0 {
            return Err(DistError::NegativeArgument(s));
        }
        if s == 0.0 {
            return Ok(if k < 1.0 {
                f64::INFINITY
            } else if k == 1.0 {
                1.0 / theta
            } else {
                0.0
            });
        }
        let log_density = (k - 1.0) * s.ln() - s / theta - k * theta.ln() - ln_gamma(k);
        Ok(log_density.exp())
    }

    /// One exact draw from the law.
    ///
    /// Integer shapes up to [`ERLANG_SUM_MAX_SHAPE`] sum `k` unit exponentials;
    /// every other gamma shape goes through Marsaglia–Tsang rejection, with
    /// the `U^(1/k)` boost for `k < 1`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Deterministic { value } => value,
            Self::Gamma { shape, scale } => scale * standard_gamma(shape, rng),
        }
    }
}

/// Above this shape the O(k) sum-of-exponentials path is slower than rejection.
pub const ERLANG_SUM_MAX_SHAPE: f64 = 8.0;

fn standard_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape.fract() == 0.0 && shape <= ERLANG_SUM_MAX_SHAPE {
        let mut total = 0.0;
        for _ in 0..shape as u32 {
            let e: f64 = rng.sample(Exp1);
            total += e;
        }
        return total;
    }
    if shape < 1.0 {
        let boosted = marsaglia_tsang(shape + 1.0, rng);
        let u: f64 = rng.random();
        return boosted * u.powf(1.0 / shape);
    }
    marsaglia_tsang(shape, rng)
}

fn marsaglia_tsang<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape >= 1.0);
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Law of a `Gamma(k, theta)` variable conditioned on finishing before an
/// independent exponential deadline of rate `rate`: `Gamma(k, theta / (1 + rate*theta))`.
pub fn conditional_success_dist(
    shape: f64,
    scale: f64,
    rate: f64,
) -> Result<ServiceDistribution, DistError> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(DistError::NonPositive {
            name: "lambda",
            value: rate,
        });
    }
    ServiceDistribution::gamma(shape, scale / (1.0 + rate * scale))
}
