//! Batch Elimination over a fixed pull budget.
//!
//! A [`Schedule`] fixes how many arms are discarded in each of `L` rounds. In
//! every round each surviving arm is pulled `floor(T / H)` more times, its
//! functional is re-estimated on all of its samples so far, and the `x_l`
//! arms with the lowest estimates are dropped.

use serde::Serialize;
use thiserror::Error;

use crate::distributions::{true_functional, DistributionError, DistributionSpec};
use crate::estimators::{estimate, EstimatorError, FunctionalSpec, SampleBuffer};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EliminationError {
    #[error("{0}")]
    DomainError(String),
    #[error("budget T = {budget} gives floor(T/H) = 0 pulls per round (H = {h})")]
    InsufficientBudget { budget: u64, h: u64 },
    #[error("round {round}, arm {arm}: {source}")]
    Estimator {
        round: usize,
        arm: usize,
        #[source]
        source: EstimatorError,
    },
    #[error("arm {arm}: {source}")]
    Distribution {
        arm: usize,
        #[source]
        source: DistributionError,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

/// Elimination plan: `x[l]` arms are discarded after round `l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schedule {
    arms: usize,
    x: Vec<usize>,
    h: u64,
}

impl Schedule {
    /// Builds a custom schedule. `x` must sum to `arms - 1` and never empty the survivor set.
    pub fn new(arms: usize, x: Vec<usize>) -> Result<Self, EliminationError> {
        if arms < 2 {
            return Err(EliminationError::DomainError(format!("need K >= 2 arms, got {arms}")));
        }
        if x.is_empty() {
            return Err(EliminationError::DomainError("schedule needs at least one round".into()));
        }
        let total: usize = x.iter().sum();
        if total != arms - 1 {
            return Err(EliminationError::DomainError(format!(
                "eliminations sum to {total}, expected K - 1 = {}",
                arms - 1
            )));
        }
        let mut remaining = arms;
        for (l, &xl) in x.iter().enumerate() {
            if xl >= remaining {
                return Err(EliminationError::DomainError(format!(
                    "round {} eliminates {xl} of {remaining} arms",
                    l + 1
                )));
            }
            remaining -= xl;
        }
        let h = compute_h(arms, &x);
        Ok(Self { arms, x, h })
    }

    /// One arm dropped per round, `K - 1` rounds.
    pub fn successive_rejects(arms: usize) -> Result<Self, EliminationError> {
        if arms < 2 {
            return Err(EliminationError::DomainError(format!("need K >= 2 arms, got {arms}")));
        }
        Self::new(arms, vec![1; arms - 1])
    }

    /// Half of the survivors (rounded down) dropped per round, `ceil(log2 K)` rounds.
    pub fn sequential_halving(arms: usize) -> Result<Self, EliminationError> {
        if arms < 2 {
            return Err(EliminationError::DomainError(format!("need K >= 2 arms, got {arms}")));
        }
        let rounds = (usize::BITS - (arms - 1).leading_zeros()) as usize;
        let mut x = Vec::with_capacity(rounds);
        let mut remaining = arms;
        for _ in 0..rounds {
            let xl = remaining / 2;
            x.push(xl);
            remaining -= xl;
        }
        Self::new(arms, x).map_err(|e| EliminationError::Internal(format!("halving schedule for K = {arms}: {e}")))
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn rounds(&self) -> usize {
        self.x.len()
    }

    pub fn eliminations(&self) -> &[usize] {
        &self.x
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    /// `|S_l|` for each round.
    pub fn survivor_counts(&self) -> Vec<usize> {
        let mut remaining = self.arms;
        self.x
            .iter()
            .map(|&xl| {
                let s = remaining;
                remaining -= xl;
                s
            })
            .collect()
    }

    pub fn pulls_per_round(&self, budget: u64) -> u64 {
        budget / self.h
    }

    /// Pulls actually spent for a budget: `sum_l |S_l| * floor(T/H)`.
    pub fn total_pulls(&self, budget: u64) -> u64 {
        let per = self.pulls_per_round(budget);
        self.survivor_counts().iter().map(|&s| s as u64 * per).sum()
    }
}

fn compute_h(arms: usize, x: &[usize]) -> u64 {
    let rounds = x.len() as u64;
    let discount: u64 = x
        .iter()
        .enumerate()
        .map(|(i, &xl)| xl as u64 * (rounds - (i as u64 + 1)))
        .sum();
    rounds * arms as u64 - discount
}

/// `H = L K - sum_l x_l (L - l)`.
pub fn compute_h_for(schedule: &Schedule) -> u64 {
    compute_h(schedule.arms, &schedule.x)
}

pub fn schedule_successive_rejects(arms: usize) -> Result<Schedule, EliminationError> {
    Schedule::successive_rejects(arms)
}

pub fn schedule_sequential_halving(arms: usize) -> Result<Schedule, EliminationError> {
    Schedule::sequential_halving(arms)
}

/// Splits `survivors` into kept and eliminated arms; the `x` lowest estimates go,
/// lower arm index first on ties. Both outputs are in ascending arm order.
pub fn eliminate_weakest(
    estimates: &[f64],
    survivors: &[usize],
    x: usize,
) -> Result<(Vec<usize>, Vec<usize>), EliminationError> {
    if x >= survivors.len() {
        return Err(EliminationError::DomainError(format!(
            "cannot eliminate {x} of {} surviving arms",
            survivors.len()
        )));
    }
    let mut order: Vec<usize> = survivors.to_vec();
    order.sort_by(|&a, &b| estimates[a].total_cmp(&estimates[b]).then(a.cmp(&b)));
    let mut eliminated: Vec<usize> = order[..x].to_vec();
    eliminated.sort_unstable();
    let kept = survivors
        .iter()
        .copied()
        .filter(|a| eliminated.binary_search(a).is_err())
        .collect();
    Ok((kept, eliminated))
}

/// Source of rewards for each arm.
pub trait ArmSampler {
    fn num_arms(&self) -> usize;
    fn pull(&self, arm: usize, rng: &mut Rng, n: usize, out: &mut Vec<f64>);
}

impl ArmSampler for [DistributionSpec] {
    fn num_arms(&self) -> usize {
        self.len()
    }

    fn pull(&self, arm: usize, rng: &mut Rng, n: usize, out: &mut Vec<f64>) {
        self[arm].sample_into(rng, n, out)
    }
}

impl ArmSampler for Vec<DistributionSpec> {
    fn num_arms(&self) -> usize {
        self.len()
    }

    fn pull(&self, arm: usize, rng: &mut Rng, n: usize, out: &mut Vec<f64>) {
        self[arm].sample_into(rng, n, out)
    }
}

/// Arms, functional and the derived ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BanditInstance {
    arms: Vec<DistributionSpec>,
    functional: FunctionalSpec,
    values: Vec<f64>,
    best: usize,
    gaps: Vec<f64>,
    gap_min: f64,
    gap_max: f64,
}

impl BanditInstance {
    pub fn new(arms: Vec<DistributionSpec>, functional: FunctionalSpec) -> Result<Self, EliminationError> {
        if arms.len() < 2 {
            return Err(EliminationError::DomainError(format!("need K >= 2 arms, got {}", arms.len())));
        }
        functional
            .validate()
            .map_err(|e| EliminationError::DomainError(e.to_string()))?;
        let mut values = Vec::with_capacity(arms.len());
        for (arm, spec) in arms.iter().enumerate() {
            spec.validate()
                .and_then(|_| true_functional(spec, &functional))
                .map(|v| values.push(v))
                .map_err(|source| EliminationError::Distribution { arm, source })?;
        }
        let best = values
            .iter()
            .enumerate()
            .fold(0, |b, (i, v)| if *v > values[b] { i } else { b });
        let gaps: Vec<f64> = values.iter().map(|v| values[best] - v).collect();
        let others = gaps.iter().enumerate().filter(|(i, _)| *i != best).map(|(_, g)| *g);
        let gap_min = others.clone().fold(f64::INFINITY, f64::min);
        let gap_max = others.fold(0.0, f64::max);
        Ok(Self {
            arms,
            functional,
            values,
            best,
            gaps,
            gap_min,
            gap_max,
        })
    }

    pub fn arms(&self) -> &[DistributionSpec] {
        &self.arms
    }

    pub fn functional(&self) -> &FunctionalSpec {
        &self.functional
    }

    /// True functional value per arm.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn best_arm(&self) -> usize {
        self.best
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// Smallest gap to a suboptimal arm; zero when the best arm is not unique.
    pub fn gap_min(&self) -> f64 {
        self.gap_min
    }

    pub fn gap_max(&self) -> f64 {
        self.gap_max
    }

    pub fn has_unique_best(&self) -> bool {
        self.gap_min > 0.0
    }
}

impl ArmSampler for BanditInstance {
    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn pull(&self, arm: usize, rng: &mut Rng, n: usize, out: &mut Vec<f64>) {
        self.arms[arm].sample_into(rng, n, out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub survivors: Vec<usize>,
    /// `(arm, estimate)` for each survivor.
    pub estimates: Vec<(usize, f64)>,
    pub eliminated: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub recommended: usize,
    pub pulls_used: u64,
    pub rounds: Vec<RoundRecord>,
    pub per_arm_pulls: Vec<u64>,
}

/// Runs Batch Elimination. Arm `i` draws from the sub-stream `rng.substream(i)`,
/// so its reward sequence does not depend on other arms' fates.
pub fn run_batch_elimination<S: ArmSampler + ?Sized>(
    sampler: &S,
    schedule: &Schedule,
    budget: u64,
    functional: &FunctionalSpec,
    rng: &Rng,
) -> Result<RunResult, EliminationError> {
    let k = sampler.num_arms();
    if k != schedule.arms() {
        return Err(EliminationError::DomainError(format!(
            "schedule is for {} arms, sampler has {k}",
            schedule.arms()
        )));
    }
    let per_round = schedule.pulls_per_round(budget);
    if per_round == 0 {
        return Err(EliminationError::InsufficientBudget {
            budget,
            h: schedule.h(),
        });
    }
    let mut streams: Vec<Rng> = (0..k).map(|i| rng.substream(i as u64)).collect();
    let mut buffers = vec![SampleBuffer::new(); k];
    let mut estimates = vec![f64::NAN; k];
    let mut per_arm_pulls = vec![0u64; k];
    let mut survivors: Vec<usize> = (0..k).collect();
    let mut rounds = Vec::with_capacity(schedule.rounds());
    let mut fresh = Vec::with_capacity(per_round as usize);

    for (round, &xl) in schedule.eliminations().iter().enumerate() {
        for &arm in &survivors {
            fresh.clear();
            sampler.pull(arm, &mut streams[arm], per_round as usize, &mut fresh);
            buffers[arm].extend_from_slice(&fresh);
            per_arm_pulls[arm] += per_round;
            estimates[arm] = estimate(functional, &buffers[arm]).map_err(|source| EliminationError::Estimator {
                round: round + 1,
                arm,
                source,
            })?;
        }
        let (kept, eliminated) = eliminate_weakest(&estimates, &survivors, xl)?;
        rounds.push(RoundRecord {
            estimates: survivors.iter().map(|&a| (a, estimates[a])).collect(),
            survivors,
            eliminated,
        });
        survivors = kept;
    }

    if survivors.len() != 1 {
        return Err(EliminationError::Internal(format!(
            "{} arms survive the final round",
            survivors.len()
        )));
    }
    let pulls_used = per_arm_pulls.iter().sum();
    Ok(RunResult {
        recommended: survivors[0],
        pulls_used,
        rounds,
        per_arm_pulls,
    })
}
