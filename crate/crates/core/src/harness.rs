//! Monte Carlo measurement of recommendation error and regret.
//!
//! Trial `i` at budget `T` is seeded from `mix(master_seed, T, i)`, so rows do
//! not depend on the number of worker threads or the order of the budgets.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{
    avar_error_bound, entropy_error_bound, generic_error_bound, mv_error_bound, var_bias_variance,
    var_error_bound, BoundConstants, BoundError, QFunction,
};
use crate::elimination::{run_batch_elimination, BanditInstance, EliminationError, Schedule};
use crate::estimators::{default_knn_k, EntropyMode, FunctionalSpec};
use crate::rng::{mix_seed, Rng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    InvalidConfig(String),
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: EliminationError,
    },
    #[error("could not start worker pool: {0}")]
    WorkerPool(String),
}

/// How elimination counts are chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", deny_unknown_fields)]
pub enum SchedulePolicy {
    #[serde(rename = "sr")]
    SuccessiveRejects,
    #[serde(rename = "sh")]
    SequentialHalving,
    #[serde(rename = "custom")]
    Custom { x: Vec<usize> },
}

impl SchedulePolicy {
    pub fn resolve(&self, arms: usize) -> Result<Schedule, EliminationError> {
        match self {
            SchedulePolicy::SuccessiveRejects => Schedule::successive_rejects(arms),
            SchedulePolicy::SequentialHalving => Schedule::sequential_halving(arms),
            SchedulePolicy::Custom { x } => Schedule::new(arms, x.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub instance: BanditInstance,
    pub schedule: SchedulePolicy,
    pub budgets: Vec<u64>,
    pub trials: usize,
    pub master_seed: u64,
    pub constants: BoundConstants,
}

impl ExperimentConfig {
    pub fn new(
        instance: BanditInstance,
        schedule: SchedulePolicy,
        budgets: Vec<u64>,
        trials: usize,
        master_seed: u64,
        constants: BoundConstants,
    ) -> Result<Self, HarnessError> {
        let cfg = Self {
            instance,
            schedule,
            budgets,
            trials,
            master_seed,
            constants,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.budgets.is_empty() {
            return Err(HarnessError::InvalidConfig("budgets must not be empty".into()));
        }
        self.resolved_schedule()?;
        self.constants
            .validate()
            .map_err(|e| HarnessError::InvalidConfig(e.to_string()))
    }

    pub fn resolved_schedule(&self) -> Result<Schedule, HarnessError> {
        self.schedule
            .resolve(self.instance.arms().len())
            .map_err(|e| HarnessError::InvalidConfig(e.to_string()))
    }
}

/// Execution knobs that must not change results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; `None` lets rayon decide.
    pub workers: Option<usize>,
    /// Measure wall time. Off by default so that reports are byte-stable.
    pub record_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    InsufficientBudget,
    Estimator,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    pub kind: FailureKind,
    pub trial: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(rename = "T")]
    pub budget: u64,
    pub trials: usize,
    pub empirical_error: Option<f64>,
    pub error_stderr: Option<f64>,
    pub mean_regret: Option<f64>,
    pub regret_stderr: Option<f64>,
    /// Error bound clamped to `[0, 1]`.
    pub bound_error: Option<f64>,
    /// Regret bound clamped to `[0, gamma_max]`.
    pub bound_regret: Option<f64>,
    pub bound_error_raw: Option<f64>,
    /// Why no bound was attached, when none was.
    pub bound_note: Option<String>,
    pub wall_time_ms: u64,
    pub failure: Option<RowFailure>,
}

impl ReportRow {
    fn empty(budget: u64, trials: usize) -> Self {
        Self {
            budget,
            trials,
            empirical_error: None,
            error_stderr: None,
            mean_regret: None,
            regret_stderr: None,
            bound_error: None,
            bound_regret: None,
            bound_error_raw: None,
            bound_note: None,
            wall_time_ms: 0,
            failure: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub metadata: ReportMetadata,
}

impl ExperimentReport {
    pub fn first_failure(&self) -> Option<&RowFailure> {
        self.rows.iter().find_map(|r| r.failure.as_ref())
    }
}

/// Seed of trial `trial` at budget `budget`.
pub fn trial_seed(master_seed: u64, budget: u64, trial: usize) -> u64 {
    mix_seed(&[master_seed, budget, trial as u64])
}

/// Raw error bound matching the instance's functional.
pub fn theoretical_error_bound(
    instance: &BanditInstance,
    schedule: &Schedule,
    budget: u64,
    constants: &BoundConstants,
) -> Result<f64, BoundError> {
    let d = instance.gap_min();
    if d.is_nan() || d <= 0.0 {
        return Err(BoundError::DomainError("the best arm is not unique".into()));
    }
    let (h, k, t) = (schedule.h(), schedule.arms(), budget as f64);
    let arms = instance.arms();
    let lo = arms.iter().map(|a| a.support_lo()).fold(f64::INFINITY, f64::min);
    let hi = arms.iter().map(|a| a.support_hi()).fold(f64::NEG_INFINITY, f64::max);
    let mean_q = || {
        if hi - lo <= 1.0 {
            QFunction::mean()
        } else {
            QFunction::hoeffding(hi - lo)
        }
    };
    let pulls = budget / h;
    match instance.functional() {
        FunctionalSpec::Mean => generic_error_bound(h, k, t, d, &mean_q()),
        // lambda = 0 is the negated mean, which has the same tails
        FunctionalSpec::MeanVariance { lambda } if *lambda == 0.0 => generic_error_bound(h, k, t, d, &mean_q()),
        FunctionalSpec::MeanVariance { lambda } => mv_error_bound(h, k, t, d, *lambda, lo, hi),
        FunctionalSpec::ValueAtRisk { lambda } => {
            if pulls == 0 {
                return Err(BoundError::DomainError("floor(T/H) = 0".into()));
            }
            let (mut v_max, mut w_max) = (0.0f64, 0.0f64);
            for (i, arm) in arms.iter().enumerate() {
                if i == instance.best_arm() {
                    continue;
                }
                let q = arm
                    .quantile(*lambda)
                    .map_err(|e| BoundError::DomainError(format!("arm {i}: {e}")))?;
                let (pdf, slope) = arm
                    .density_info(q)
                    .map_err(|e| BoundError::DomainError(format!("arm {i}: {e}")))?;
                let (v, w) = var_bias_variance(*lambda, pulls, pdf, slope, constants)?;
                v_max = v_max.max(v);
                w_max = w_max.max(w);
            }
            var_error_bound(h, k, t, d, v_max, w_max)
        }
        FunctionalSpec::AverageValueAtRisk { lambda } => {
            let m = lo.abs().max(hi.abs());
            avar_error_bound(h, k, t, d, *lambda, m, constants)
        }
        FunctionalSpec::ShannonEntropy { mode, k: neighbours } => {
            if pulls == 0 {
                return Err(BoundError::DomainError("floor(T/H) = 0".into()));
            }
            let neighbours = match mode {
                EntropyMode::Plugin => 1,
                EntropyMode::Knn => neighbours.unwrap_or_else(|| default_knn_k(pulls as usize)),
            };
            entropy_error_bound(h, k, t, d, pulls, constants, neighbours, 1)
        }
    }
}

struct TrialOutcome {
    wrong: bool,
    regret: f64,
}

fn run_one(config: &ExperimentConfig, schedule: &Schedule, budget: u64, trial: usize) -> Result<TrialOutcome, HarnessError> {
    let rng = Rng::new(trial_seed(config.master_seed, budget, trial));
    let inst = &config.instance;
    let run = run_batch_elimination(inst, schedule, budget, inst.functional(), &rng)
        .map_err(|source| HarnessError::Trial { trial, source })?;
    Ok(TrialOutcome {
        wrong: run.recommended != inst.best_arm(),
        regret: inst.gaps()[run.recommended],
    })
}

fn collect_outcomes(
    config: &ExperimentConfig,
    schedule: &Schedule,
    budget: u64,
    workers: Option<usize>,
) -> Result<Vec<Result<TrialOutcome, HarnessError>>, HarnessError> {
    let trial = |i| run_one(config, schedule, budget, i);
    if workers == Some(1) {
        return Ok((0..config.trials).map(trial).collect());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::WorkerPool(e.to_string()))?;
    Ok(pool.install(|| (0..config.trials).into_par_iter().map(trial).collect()))
}

/// Runs every trial at one budget and aggregates them in trial order.
pub fn run_trials(config: &ExperimentConfig, budget: u64, opts: RunOptions) -> Result<ReportRow, HarnessError> {
    let schedule = config.resolved_schedule()?;
    let started = Instant::now();
    let outcomes = collect_outcomes(config, &schedule, budget, opts.workers)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let n = outcomes.len() as f64;
    let wrong = outcomes.iter().filter(|o| o.wrong).count() as f64;
    let error = wrong / n;
    let mean_regret = outcomes.iter().fold(0.0, |acc, o| acc + o.regret) / n;
    let regret_stderr = if outcomes.len() > 1 {
        let ss = outcomes
            .iter()
            .fold(0.0, |acc, o| acc + (o.regret - mean_regret).powi(2));
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };

    let mut row = ReportRow::empty(budget, config.trials);
    row.empirical_error = Some(error);
    row.error_stderr = Some((error * (1.0 - error) / n).sqrt());
    row.mean_regret = Some(mean_regret);
    row.regret_stderr = Some(regret_stderr);
    match theoretical_error_bound(&config.instance, &schedule, budget, &config.constants) {
        Ok(raw) => {
            let gamma_max = config.instance.gap_max();
            row.bound_error_raw = Some(raw);
            row.bound_error = Some(raw.clamp(0.0, 1.0));
            row.bound_regret = Some((gamma_max * raw).clamp(0.0, gamma_max));
        }
        Err(e) => row.bound_note = Some(e.to_string()),
    }
    if opts.record_timing {
        row.wall_time_ms = started.elapsed().as_millis() as u64;
    }
    Ok(row)
}

fn failure_of(err: &HarnessError) -> RowFailure {
    let (kind, trial) = match err {
        HarnessError::Trial {
            trial,
            source: EliminationError::InsufficientBudget { .. },
        } => (FailureKind::InsufficientBudget, Some(*trial)),
        HarnessError::Trial {
            trial,
            source: EliminationError::Estimator { .. },
        } => (FailureKind::Estimator, Some(*trial)),
        HarnessError::Trial { trial, .. } => (FailureKind::Other, Some(*trial)),
        _ => (FailureKind::Other, None),
    };
    RowFailure {
        kind,
        trial,
        message: err.to_string(),
    }
}

/// One row per budget, in the order given. A failing budget yields a row
/// carrying the failure; later budgets still run.
pub fn sweep_budgets(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let rows = config
        .budgets
        .iter()
        .map(|&t| {
            run_trials(config, t, opts).unwrap_or_else(|e| {
                let mut row = ReportRow::empty(t, config.trials);
                row.failure = Some(failure_of(&e));
                row
            })
        })
        .collect();
    Ok(ExperimentReport {
        rows,
        metadata: ReportMetadata {
            config: config.clone(),
            seed: config.master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}
