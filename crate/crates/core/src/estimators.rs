//! Functional estimators computed from an arm's accumulated rewards.
//!
//! Every estimator sorts its input before reducing it, which makes the output
//! bit-identical under any permutation of the samples.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;
use thiserror::Error;

/// Distances below this are replaced before taking logs in the k-NN estimator.
pub const KNN_MIN_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("estimator needs at least one sample")]
    EmptySample,
    #[error("estimator needs at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("all samples are identical; k-NN entropy is undefined")]
    DegenerateSample,
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    #[default]
    Plugin,
    Knn,
}

/// The functional whose maximiser is sought.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    Mean,
    /// `-mean + lambda * variance`.
    MeanVariance { lambda: f64 },
    /// Negated lower `lambda`-quantile.
    #[serde(rename = "var", alias = "value_at_risk")]
    ValueAtRisk { lambda: f64 },
    /// Average of value-at-risk over levels in `(0, lambda]`.
    #[serde(rename = "avar", alias = "average_value_at_risk")]
    AverageValueAtRisk { lambda: f64 },
    /// Shannon entropy in bits. `k` is only read in k-NN mode.
    #[serde(rename = "entropy", alias = "shannon_entropy")]
    ShannonEntropy {
        #[serde(default)]
        mode: EntropyMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
    },
}

impl FunctionalSpec {
    pub fn label(&self) -> &'static str {
        match self {
            FunctionalSpec::Mean => "mean",
            FunctionalSpec::MeanVariance { .. } => "mean_variance",
            FunctionalSpec::ValueAtRisk { .. } => "var",
            FunctionalSpec::AverageValueAtRisk { .. } => "avar",
            FunctionalSpec::ShannonEntropy { .. } => "entropy",
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        match self {
            FunctionalSpec::Mean => Ok(()),
            FunctionalSpec::MeanVariance { lambda } => {
                if lambda.is_finite() && *lambda >= 0.0 {
                    Ok(())
                } else {
                    Err(bad_lambda(*lambda, "must be a nonnegative real"))
                }
            }
            FunctionalSpec::ValueAtRisk { lambda } | FunctionalSpec::AverageValueAtRisk { lambda } => {
                if *lambda > 0.0 && *lambda < 1.0 {
                    Ok(())
                } else {
                    Err(bad_lambda(*lambda, "must lie in (0, 1)"))
                }
            }
            FunctionalSpec::ShannonEntropy { k: Some(0), .. } => Err(EstimatorError::InvalidParameter {
                field: "k",
                reason: "must be positive".into(),
            }),
            FunctionalSpec::ShannonEntropy { .. } => Ok(()),
        }
    }

    /// Fewest samples the estimator accepts.
    pub fn min_samples(&self) -> usize {
        match self {
            FunctionalSpec::MeanVariance { .. } => 2,
            FunctionalSpec::ShannonEntropy {
                mode: EntropyMode::Knn,
                k,
            } => k.unwrap_or(1) + 1,
            _ => 1,
        }
    }
}

fn bad_lambda(lambda: f64, reason: &str) -> EstimatorError {
    EstimatorError::InvalidParameter {
        field: "lambda",
        reason: format!("{lambda} {reason}"),
    }
}

/// Append-only store of one arm's rewards across elimination rounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleBuffer {
    values: Vec<f64>,
}

impl SampleBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn push(&mut self, x: f64) {
        self.values.push(x);
    }

    pub fn extend_from_slice(&mut self, xs: &[f64]) {
        self.values.extend_from_slice(xs);
    }

    /// Ascending copy of the samples.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

impl From<Vec<f64>> for SampleBuffer {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

impl From<&[f64]> for SampleBuffer {
    fn from(values: &[f64]) -> Self {
        Self {
            values: values.to_vec(),
        }
    }
}

/// Snaps `x` to the nearest integer when it is within rounding noise of it,
/// so that e.g. `0.3 * 10` is treated as exactly 3.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// `ceil(lambda * n)` clamped to `[1, n]`.
pub(crate) fn ceil_rank(lambda: f64, n: usize) -> usize {
    (snap(lambda * n as f64).ceil() as usize).clamp(1, n)
}

/// `floor(lambda * n)`.
pub(crate) fn floor_rank(lambda: f64, n: usize) -> usize {
    snap(lambda * n as f64).floor().max(0.0) as usize
}

fn check_level(lambda: f64) -> Result<(), EstimatorError> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(bad_lambda(lambda, "must lie in (0, 1]"))
    }
}

fn sorted_mean(sorted: &[f64]) -> f64 {
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

pub fn estimate_mean(samples: &SampleBuffer) -> Result<f64, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::EmptySample);
    }
    Ok(sorted_mean(&samples.sorted()))
}

/// `-mean + lambda * s^2` with the unbiased (`1/(N-1)`) sample variance.
pub fn estimate_mean_variance(samples: &SampleBuffer, lambda: f64) -> Result<f64, EstimatorError> {
    match samples.len() {
        0 => return Err(EstimatorError::EmptySample),
        1 => return Err(EstimatorError::InsufficientSamples { needed: 2, got: 1 }),
        _ => {}
    }
    let xs = samples.sorted();
    let m = sorted_mean(&xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Ok(-m + lambda * ss / (xs.len() - 1) as f64)
}

/// Negated `ceil(lambda N)`-th order statistic.
pub fn estimate_var(samples: &SampleBuffer, lambda: f64) -> Result<f64, EstimatorError> {
    check_level(lambda)?;
    if samples.is_empty() {
        return Err(EstimatorError::EmptySample);
    }
    let xs = samples.sorted();
    Ok(-xs[ceil_rank(lambda, xs.len()) - 1])
}

/// Riemann sum of order statistics approximating the average value-at-risk.
pub fn estimate_avar(samples: &SampleBuffer, lambda: f64) -> Result<f64, EstimatorError> {
    check_level(lambda)?;
    if samples.is_empty() {
        return Err(EstimatorError::EmptySample);
    }
    let xs = samples.sorted();
    let n = xs.len();
    let nf = n as f64;
    let whole = floor_rank(lambda, n).min(n);
    let body: f64 = xs[..whole].iter().map(|x| x / nf).sum();
    let remainder = lambda - whole as f64 / nf;
    let tail = if remainder > 0.0 {
        remainder * xs[ceil_rank(lambda, n) - 1]
    } else {
        0.0
    };
    Ok(-(body + tail) / lambda)
}

/// Plug-in Shannon entropy (bits) of the empirical atom frequencies.
pub fn estimate_entropy_plugin(samples: &SampleBuffer) -> Result<f64, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::EmptySample);
    }
    let xs = samples.sorted();
    let n = xs.len() as f64;
    let mut h = 0.0;
    let mut start = 0;
    for i in 1..=xs.len() {
        if i == xs.len() || xs[i] != xs[start] {
            let p = (i - start) as f64 / n;
            h -= p * p.log2();
            start = i;
        }
    }
    Ok(h.max(0.0))
}

/// Neighbour count used when none is configured: `floor(sqrt(n))`, kept in `[1, n-1]`.
pub fn default_knn_k(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).clamp(1, n.saturating_sub(1).max(1))
}

/// One-dimensional Kozachenko-Leonenko entropy estimate in bits.
pub fn estimate_entropy_knn(samples: &SampleBuffer, k: usize) -> Result<f64, EstimatorError> {
    if k == 0 {
        return Err(EstimatorError::InvalidParameter {
            field: "k",
            reason: "must be positive".into(),
        });
    }
    let n = samples.len();
    if n < k + 1 {
        return Err(EstimatorError::InsufficientSamples { needed: k + 1, got: n });
    }
    let xs = samples.sorted();
    if xs[0] == xs[n - 1] {
        return Err(EstimatorError::DegenerateSample);
    }
    let mut log_sum = 0.0;
    for i in 0..n {
        log_sum += kth_neighbour_distance(&xs, i, k).max(KNN_MIN_DISTANCE).ln();
    }
    let nats = digamma(n as f64) - digamma(k as f64) + LN_2 + log_sum / n as f64;
    Ok(nats / LN_2)
}

/// Distance from `xs[i]` to its `k`-th nearest neighbour in the sorted slice.
fn kth_neighbour_distance(xs: &[f64], i: usize, k: usize) -> f64 {
    let x = xs[i];
    let (mut left, mut right) = (i, i + 1);
    let mut dist = 0.0;
    for _ in 0..k {
        let dl = if left > 0 { x - xs[left - 1] } else { f64::INFINITY };
        let dr = if right < xs.len() { xs[right] - x } else { f64::INFINITY };
        if dl <= dr {
            dist = dl;
            left -= 1;
        } else {
            dist = dr;
            right += 1;
        }
    }
    dist
}

/// Dispatches to the estimator for `f`.
pub fn estimate(f: &FunctionalSpec, samples: &SampleBuffer) -> Result<f64, EstimatorError> {
    match f {
        FunctionalSpec::Mean => estimate_mean(samples),
        FunctionalSpec::MeanVariance { lambda } => estimate_mean_variance(samples, *lambda),
        FunctionalSpec::ValueAtRisk { lambda } => estimate_var(samples, *lambda),
        FunctionalSpec::AverageValueAtRisk { lambda } => estimate_avar(samples, *lambda),
        FunctionalSpec::ShannonEntropy {
            mode: EntropyMode::Plugin,
            ..
        } => estimate_entropy_plugin(samples),
        FunctionalSpec::ShannonEntropy {
            mode: EntropyMode::Knn,
            k,
        } => estimate_entropy_knn(samples, k.unwrap_or_else(|| default_knn_k(samples.len()))),
    }
}
