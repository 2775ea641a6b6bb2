//! Aggregate exit-choice distributions: the travel-time baseline model and
//! observed exit volumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Published calibration constant of the aggregate baseline model.
pub const ALPHA_B: f64 = 0.601;

const SUM_TOLERANCE: f64 = 1e-9;

/// Probability of leaving through each of the four exits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct ExitProbabilities([f64; 4]);

impl ExitProbabilities {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!("exit probabilities {p:?} leave [0, 1]")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!(
                "exit probabilities {p:?} sum to {total}"
            )));
        }
        Ok(Self(p))
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(w: [f64; 4]) -> Result<Self> {
        if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!("weights {w:?} must be finite and nonnegative")));
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("weights sum to zero"));
        }
        Self::new(w.map(|v| v / total))
    }

    pub fn uniform() -> Self {
        Self([0.25; 4])
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn get(&self, exit: usize) -> f64 {
        self.0[exit]
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }
}

impl TryFrom<[f64; 4]> for ExitProbabilities {
    type Error = Error;

    fn try_from(p: [f64; 4]) -> Result<Self> {
        Self::new(p)
    }
}

impl From<ExitProbabilities> for [f64; 4] {
    fn from(p: ExitProbabilities) -> Self {
        p.0
    }
}

/// How travel time is turned into an unnormalized exit weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineTransform {
    /// `alpha * T`, the published form taken at face value.
    Literal,
    /// `alpha / T`: shorter alternative routes attract more drivers.
    #[default]
    Inverse,
    /// `exp(-alpha * T / mean(T))`.
    NegExp,
}

/// Exit distribution predicted by the aggregate travel-time model, normalized
/// across the four exits.
pub fn baseline_distribution(
    travel_times: &[f64; 4],
    alpha_b: f64,
    transform: BaselineTransform,
) -> Result<ExitProbabilities> {
    if travel_times.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::invalid(format!(
            "travel times {travel_times:?} must be positive"
        )));
    }
    if !(alpha_b > 0.0) || !alpha_b.is_finite() {
        return Err(Error::invalid(format!("alpha_b must be positive, got {alpha_b}")));
    }
    let mean = travel_times.iter().sum::<f64>() / 4.0;
    let weights = travel_times.map(|t| match transform {
        BaselineTransform::Literal => alpha_b * t,
        BaselineTransform::Inverse => alpha_b / t,
        BaselineTransform::NegExp => (-alpha_b * t / mean).exp(),
    });
    ExitProbabilities::from_weights(weights)
}

/// Share of the observed traffic volume leaving through each exit.
pub fn real_probabilities(volumes: &[u64; 4]) -> Result<ExitProbabilities> {
    let total: u64 = volumes.iter().sum();
    if total == 0 {
        return Err(Error::invalid("exit volumes are all zero"));
    }
    ExitProbabilities::new(volumes.map(|v| v as f64 / total as f64))
}
