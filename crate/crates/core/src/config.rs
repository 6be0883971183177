//! Experiment configuration documents.
//!
//! A document is JSON with the keys `arms`, `functional`, `schedule`,
//! `budgets`, `trials`, `seed` and optionally `constants`. Unknown keys are
//! rejected and every error names the offending key path.
//!
//! ```json
//! {
//!   "arms": [{"dist": "bernoulli", "p": 0.9}, {"dist": "uniform", "a": 0, "b": 1}],
//!   "functional": {"name": "avar", "lambda": 0.3},
//!   "schedule": {"policy": "sh"},
//!   "budgets": [200, 400],
//!   "trials": 1000,
//!   "seed": 7,
//!   "constants": {"D": 1.0, "D_prime": 0.0}
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::BoundConstants;
use crate::distributions::{DistributionError, DistributionSpec};
use crate::elimination::{BanditInstance, EliminationError};
use crate::estimators::FunctionalSpec;
use crate::harness::{ExperimentConfig, SchedulePolicy};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
}

fn schema(path: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError::Schema {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub arms: Vec<DistributionSpec>,
    pub functional: FunctionalSpec,
    pub schedule: SchedulePolicy,
    pub budgets: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<BoundConstants>,
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema(if path == "." { "<root>".to_string() } else { path }, e.into_inner())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Validates every key and builds the experiment.
    pub fn into_experiment(self) -> Result<ExperimentConfig, ConfigError> {
        if self.arms.len() < 2 {
            return Err(schema("arms", format!("need at least 2 arms, got {}", self.arms.len())));
        }
        for (i, arm) in self.arms.iter().enumerate() {
            arm.validate().map_err(|e| match e {
                DistributionError::InvalidParameter { field, reason } => schema(format!("arms[{i}].{field}"), reason),
                other => schema(format!("arms[{i}]"), other),
            })?;
        }
        self.functional.validate().map_err(|e| match e {
            crate::estimators::EstimatorError::InvalidParameter { field, reason } => {
                schema(format!("functional.{field}"), reason)
            }
            other => schema("functional", other),
        })?;
        self.schedule
            .resolve(self.arms.len())
            .map_err(|e| schema("schedule", e))?;
        if self.budgets.is_empty() {
            return Err(schema("budgets", "must list at least one budget"));
        }
        if self.trials == 0 {
            return Err(schema("trials", "must be at least 1"));
        }
        let constants = self.constants.unwrap_or_default();
        constants.validate().map_err(|e| schema("constants", e))?;
        let instance = BanditInstance::new(self.arms, self.functional).map_err(|e| match e {
            EliminationError::Distribution { arm, source } => schema(format!("arms[{arm}]"), source),
            other => schema("functional", other),
        })?;
        ExperimentConfig::new(instance, self.schedule, self.budgets, self.trials, self.seed, constants)
            .map_err(|e| schema("<root>", e))
    }
}
