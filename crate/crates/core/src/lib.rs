//! Functional best-arm identification.
//!
//! Finds the arm that maximises a known functional of unknown reward
//! distributions (mean, mean-variance, value-at-risk, average value-at-risk
//! or Shannon entropy) under a fixed pull budget, using Batch Elimination.
//!
//! - [`distributions`]: arm reward laws, sampling and ground truth.
//! - [`estimators`]: functional estimates from samples.
//! - [`elimination`]: schedules and the elimination run itself.
//! - [`bounds`]: closed-form error, regret and sample-complexity bounds.
//! - [`harness`]: seeded Monte Carlo measurement of error and regret.
//! - [`config`] and [`report`]: experiment documents and their outputs.

pub mod bounds;
pub mod config;
pub mod distributions;
pub mod elimination;
pub mod estimators;
pub mod harness;
pub mod report;
pub mod rng;

pub use bounds::{BoundConstants, BoundError, QFunction};
pub use config::{ConfigDocument, ConfigError};
pub use distributions::{DistributionError, DistributionSpec};
pub use elimination::{run_batch_elimination, BanditInstance, EliminationError, RunResult, Schedule};
pub use estimators::{EntropyMode, EstimatorError, FunctionalSpec, SampleBuffer};
pub use harness::{sweep_budgets, ExperimentConfig, ExperimentReport, RunOptions, SchedulePolicy};
pub use rng::Rng;
