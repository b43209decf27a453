//! Task lifespan distributions, all parameterized by their mean.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Pareto};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LifespanError {
    #[error("lifespan mean must be positive and finite, got {0}")]
    Mean(f64),
    #[error("unknown lifespan family '{0}' (expected exp, det, pareto-f or pareto-inf)")]
    Family(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LifespanFamily {
    #[default]
    Exponential,
    Deterministic,
    /// Pareto with shape 2.001: finite variance.
    ParetoFiniteVar,
    /// Pareto with shape 1.98: finite mean, infinite variance.
    ParetoInfiniteVar,
}

impl LifespanFamily {
    pub const ALL: [LifespanFamily; 4] = [
        LifespanFamily::Exponential,
        LifespanFamily::Deterministic,
        LifespanFamily::ParetoFiniteVar,
        LifespanFamily::ParetoInfiniteVar,
    ];

    pub fn shape(self) -> Option<f64> {
        match self {
            LifespanFamily::ParetoFiniteVar => Some(2.001),
            LifespanFamily::ParetoInfiniteVar => Some(1.98),
            _ => None,
        }
    }

    /// Short name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            LifespanFamily::Exponential => "exp",
            LifespanFamily::Deterministic => "det",
            LifespanFamily::ParetoFiniteVar => "pareto-f",
            LifespanFamily::ParetoInfiniteVar => "pareto-inf",
        }
    }

    /// A draw with mean 1; scale by the target mean.
    pub fn unit_variate<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            LifespanFamily::Exponential => Exp1.sample(rng),
            LifespanFamily::Deterministic => 1.0,
            LifespanFamily::ParetoFiniteVar | LifespanFamily::ParetoInfiniteVar => {
                let shape = self.shape().expect("pareto family");
                Pareto::new(pareto_scale(1.0, shape), shape)
                    .expect("positive scale and shape")
                    .sample(rng)
            }
        }
    }
}

impl fmt::Display for LifespanFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for LifespanFamily {
    type Err = LifespanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "exp" | "exponential" => LifespanFamily::Exponential,
            "det" | "deterministic" => LifespanFamily::Deterministic,
            "pareto-f" | "pareto-finite-var" => LifespanFamily::ParetoFiniteVar,
            "pareto-inf" | "pareto-infinite-var" => LifespanFamily::ParetoInfiniteVar,
            other => return Err(LifespanError::Family(other.to_string())),
        })
    }
}

/// Pareto scale x_m giving mean `mean` at shape `shape` > 1.
pub fn pareto_scale(mean: f64, shape: f64) -> f64 {
    mean * (shape - 1.0) / shape
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifespanModel {
    pub family: LifespanFamily,
    pub mean: f64,
}

impl LifespanModel {
    pub fn new(family: LifespanFamily, mean: f64) -> Result<Self, LifespanError> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(LifespanError::Mean(mean));
        }
        Ok(Self { family, mean })
    }
}

pub fn sample_lifespan<R: Rng + ?Sized>(model: &LifespanModel, rng: &mut R) -> f64 {
    model.mean * model.family.unit_variate(rng)
}
