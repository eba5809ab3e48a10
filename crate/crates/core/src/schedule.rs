//! Step-size schedules `ε_n` and their Robbins-Monro classification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("c0 must be positive and finite, got {0}")]
    Scale(f64),
    #[error("power exponent gamma must lie in (0.5, 1], got {0}")]
    Exponent(f64),
}

/// `ε_n = c0` (constant) or `ε_n = c0 / (n + n0)^gamma` (power), for `n >= 1`.
///
/// Construction validates parameters, so every evaluated value is positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleDoc", into = "ScheduleDoc")]
pub enum StepSchedule {
    Constant { c0: f64 },
    Power { c0: f64, gamma: f64, n0: u64 },
}

/// Serialized form of a schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum ScheduleDoc {
    Constant {
        c0: f64,
    },
    Power {
        c0: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        n0: u64,
    },
}

fn default_gamma() -> f64 {
    1.0
}

impl TryFrom<ScheduleDoc> for StepSchedule {
    type Error = ScheduleError;
    fn try_from(doc: ScheduleDoc) -> Result<Self, Self::Error> {
        match doc {
            ScheduleDoc::Constant { c0 } => StepSchedule::constant(c0),
            ScheduleDoc::Power { c0, gamma, n0 } => StepSchedule::power(c0, gamma, n0),
        }
    }
}

impl From<StepSchedule> for ScheduleDoc {
    fn from(s: StepSchedule) -> Self {
        match s {
            StepSchedule::Constant { c0 } => ScheduleDoc::Constant { c0 },
            StepSchedule::Power { c0, gamma, n0 } => ScheduleDoc::Power { c0, gamma, n0 },
        }
    }
}

/// Analytic classification of a schedule against the Robbins-Monro conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub sum_diverges: bool,
    pub sum_sq_converges: bool,
    pub monotone: bool,
    pub robbins_monro_ok: bool,
}

impl StepSchedule {
    pub fn constant(c0: f64) -> Result<Self, ScheduleError> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(ScheduleError::Scale(c0));
        }
        Ok(StepSchedule::Constant { c0 })
    }

    pub fn power(c0: f64, gamma: f64, n0: u64) -> Result<Self, ScheduleError> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(ScheduleError::Scale(c0));
        }
        if !(gamma > 0.5 && gamma <= 1.0) {
            return Err(ScheduleError::Exponent(gamma));
        }
        Ok(StepSchedule::Power { c0, gamma, n0 })
    }

    /// `c0 / n`.
    pub fn harmonic(c0: f64) -> Result<Self, ScheduleError> {
        Self::power(c0, 1.0, 0)
    }

    pub fn scale(&self) -> f64 {
        match *self {
            StepSchedule::Constant { c0 } | StepSchedule::Power { c0, .. } => c0,
        }
    }

    /// `ε_n` for `n >= 1`.
    pub fn value(&self, n: u64) -> f64 {
        debug_assert!(n >= 1, "schedules are indexed from 1");
        self.raw_value(n)
    }

    /// `ε_0`, defined only when the offset keeps the denominator positive.
    pub fn value_at_zero(&self) -> Option<f64> {
        match *self {
            StepSchedule::Constant { c0 } => Some(c0),
            StepSchedule::Power { n0, .. } if n0 > 0 => Some(self.raw_value(0)),
            StepSchedule::Power { .. } => None,
        }
    }

    fn raw_value(&self, n: u64) -> f64 {
        match *self {
            StepSchedule::Constant { c0 } => c0,
            StepSchedule::Power { c0, gamma, n0 } => {
                let k = (n + n0) as f64;
                if gamma == 1.0 {
                    c0 / k
                } else {
                    c0 / k.powf(gamma)
                }
            }
        }
    }

    /// `Σ_{i=1}^{n} ε_i`, summed in index order.
    pub fn partial_sum(&self, n: u64) -> f64 {
        (1..=n).map(|i| self.value(i)).sum()
    }

    pub fn validate(&self) -> ScheduleReport {
        let (sum_diverges, sum_sq_converges, monotone) = match *self {
            // Σc0 and Σc0² both diverge.
            StepSchedule::Constant { .. } => (true, false, true),
            // p-series: Σ k^{-γ} diverges for γ <= 1, Σ k^{-2γ} converges for γ > 1/2.
            StepSchedule::Power { gamma, .. } => (gamma <= 1.0, 2.0 * gamma > 1.0, true),
        };
        ScheduleReport {
            sum_diverges,
            sum_sq_converges,
            monotone,
            robbins_monro_ok: sum_diverges && sum_sq_converges && monotone,
        }
    }
}

/// Free-function form of [`StepSchedule::value`].
pub fn schedule_value(s: &StepSchedule, n: u64) -> f64 {
    s.value(n)
}

/// Free-function form of [`StepSchedule::validate`].
pub fn schedule_validate(s: &StepSchedule) -> ScheduleReport {
    s.validate()
}
