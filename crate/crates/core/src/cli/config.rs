use serde::{Deserialize, Serialize};

use super::CliError;
use crate::diagnostics::LemmaCheck;
use crate::objectives::Objective;
use crate::optimizers::Algorithm;
use crate::oracles::{GradientOracle, OracleKind};
use crate::param::ParamVector;

/// A catalog objective together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Quad {
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "one_usize")]
        dim: usize,
    },
    Sin2,
    Cos2,
    Quartic,
    Plateau,
    FiniteSumQuad {
        #[serde(default = "default_centers")]
        centers: Vec<Vec<f64>>,
    },
    FiniteSumQuadHypercube {
        dim: usize,
    },
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_centers() -> Vec<Vec<f64>> {
    vec![vec![-1.0], vec![1.0]]
}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<Objective, CliError> {
        let obj = match self {
            ObjectiveSpec::Quad { c, dim } => Objective::quad(*c, *dim),
            ObjectiveSpec::Sin2 => Ok(Objective::sin2()),
            ObjectiveSpec::Cos2 => Ok(Objective::cos2()),
            ObjectiveSpec::Quartic => Ok(Objective::quartic()),
            ObjectiveSpec::Plateau => Ok(Objective::plateau()),
            ObjectiveSpec::FiniteSumQuad { centers } => {
                Objective::finite_sum_quad(centers.iter().cloned().map(ParamVector::new).collect())
            }
            ObjectiveSpec::FiniteSumQuadHypercube { dim } => Objective::finite_sum_quad_hypercube(*dim),
        };
        obj.map_err(|e| CliError::config("objective", e))
    }
}

/// Which checks an experiment runs. None are on by default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    /// Run the lemma suite (the algorithm's default checks unless `lemma_checks` is given).
    #[serde(default)]
    pub lemmas: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma_checks: Option<Vec<LemmaCheck>>,
    #[serde(default)]
    pub rate_fit: bool,
    #[serde(default)]
    pub assumptions: bool,
}

impl Checks {
    /// The lemma checks to run, if any.
    pub fn lemma_selection(&self, alg: &Algorithm) -> Option<Vec<LemmaCheck>> {
        match &self.lemma_checks {
            Some(list) => Some(list.clone()),
            None if self.lemmas => Some(LemmaCheck::defaults_for(alg)),
            None => None,
        }
    }
}

/// A fully resolved experiment. Serializes to the same schema
/// [`parse_config`] reads, with every default written out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub horizon: u64,
    pub runs: u64,
    pub seed: u64,
    pub stride: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub theta1: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    pub objective: ObjectiveSpec,
    pub oracle: OracleKind,
    pub algorithm: Algorithm,
    pub checks: Checks,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    horizon: u64,
    runs: Option<u64>,
    seed: Option<u64>,
    stride: Option<u64>,
    output: Option<String>,
    theta1: Option<Vec<f64>>,
    v0: Option<Vec<f64>>,
    objective: toml::Value,
    oracle: Option<toml::Value>,
    algorithm: toml::Value,
    #[serde(default)]
    checks: Checks,
}

pub const DEFAULT_RUNS: u64 = 100;
/// Default thinning keeps about this many rows per run.
pub const TARGET_ROWS: u64 = 10_000;

/// A bare string stands for a table holding only the tag, so
/// `algorithm = "sgd"` reads as `[algorithm] kind = "sgd"`.
fn tagged<T: for<'de> Deserialize<'de>>(key: &'static str, tag: &str, value: toml::Value) -> Result<T, CliError> {
    let value = match value {
        toml::Value::String(s) => {
            let mut t = toml::Table::new();
            t.insert(tag.to_string(), toml::Value::String(s));
            toml::Value::Table(t)
        }
        other => other,
    };
    value.try_into().map_err(|e: toml::de::Error| CliError::config(key, e.message()))
}

/// Parses and validates a TOML experiment document, applying defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let doc: ConfigDoc = toml::from_str(text).map_err(|e| CliError::Parse(e.message().to_string()))?;
    let objective: ObjectiveSpec = tagged("objective", "id", doc.objective)?;
    let oracle: OracleKind = match doc.oracle {
        Some(v) => tagged("oracle", "kind", v)?,
        None => OracleKind::Exact,
    };
    let algorithm: Algorithm = tagged("algorithm", "kind", doc.algorithm)?;
    let obj = objective.build()?;
    let config = ExperimentConfig {
        horizon: doc.horizon,
        runs: doc.runs.unwrap_or(DEFAULT_RUNS),
        seed: doc.seed.unwrap_or(0),
        stride: doc.stride.unwrap_or((doc.horizon / TARGET_ROWS).max(1)),
        output: doc.output,
        theta1: doc.theta1.unwrap_or_else(|| vec![1.0; obj.dim()]),
        v0: doc.v0,
        objective,
        oracle,
        algorithm,
        checks: doc.checks,
    };
    config.validate_with(&obj)?;
    Ok(config)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_with(&self.objective.build()?)
    }

    fn validate_with(&self, obj: &Objective) -> Result<(), CliError> {
        if self.horizon == 0 {
            return Err(CliError::config("horizon", "must be at least 1"));
        }
        if self.runs < 2 {
            return Err(CliError::config("runs", format!("an ensemble needs at least 2 runs, got {}", self.runs)));
        }
        if self.stride == 0 {
            return Err(CliError::config("stride", "must be at least 1"));
        }
        self.algorithm.validate().map_err(|e| CliError::config("algorithm", e))?;
        GradientOracle::new(self.oracle, obj).map_err(|e| CliError::config("oracle", e))?;
        if self.theta1.len() != obj.dim() || self.theta1.iter().any(|x| !x.is_finite()) {
            return Err(CliError::config(
                "theta1",
                format!("needs {} finite coordinates, got {:?}", obj.dim(), self.theta1),
            ));
        }
        if let Some(v0) = &self.v0 {
            if !matches!(self.algorithm, Algorithm::Msgd { .. } | Algorithm::Shb { .. }) {
                return Err(CliError::config("v0", format!("{} has no momentum buffer", self.algorithm.name())));
            }
            if v0.len() != obj.dim() || v0.iter().any(|x| !x.is_finite()) {
                return Err(CliError::config("v0", format!("needs {} finite coordinates", obj.dim())));
            }
        }
        if let Some(list) = &self.checks.lemma_checks {
            if let Some(bad) = list.iter().find(|c| !c.applies_to(&self.algorithm)) {
                return Err(CliError::config(
                    "checks.lemma_checks",
                    format!("{} does not apply to {}", bad.name(), self.algorithm.name()),
                ));
            }
        }
        Ok(())
    }

    /// The document [`parse_config`] reads back into this config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn theta1(&self) -> ParamVector {
        ParamVector::new(self.theta1.clone())
    }

    pub fn v0(&self) -> Option<ParamVector> {
        self.v0.clone().map(ParamVector::new)
    }
}
