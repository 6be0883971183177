//! Arm reward laws: sampling, distribution functions and ground-truth
//! functional values.
//!
//! All variants have bounded support. Ground truth is exact where a closed
//! form exists; otherwise quantiles come from bisection on the CDF and the
//! average value-at-risk from adaptive Simpson quadrature of the quantile
//! function.

use std::f64::consts::{LN_2, PI, SQRT_2};

use rand_distr::{Beta as BetaSampler, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta_reg, beta::ln_beta, erf::erfc, erf::erfc_inv, gamma::digamma};
use thiserror::Error;

use crate::estimators::{EntropyMode, FunctionalSpec};
use crate::rng::Rng;

const QUANTILE_TOL: f64 = 1e-12;
const QUANTILE_MAX_ITER: usize = 200;
const AVAR_QUAD_TOL: f64 = 1e-9;
const QUAD_MAX_DEPTH: u32 = 50;
const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("{functional} has no ground truth for a {distribution} arm")]
    UnsupportedFunctional {
        functional: &'static str,
        distribution: &'static str,
    },
    #[error("density is undefined for the discrete {0} distribution")]
    UnsupportedDistribution(&'static str),
    #[error("lambda = {0} is outside (0, 1)")]
    DomainError(f64),
    #[error("quantile bisection at lambda = {0} did not converge")]
    QuantileNotConverged(f64),
}

/// Reward law of a single arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Bernoulli {
        p: f64,
    },
    Categorical {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    TruncatedGaussian {
        mu: f64,
        sigma: f64,
        a: f64,
        b: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> DistributionError {
    DistributionError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

fn check_finite(field: &'static str, v: f64) -> Result<(), DistributionError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} is not finite")))
    }
}

fn check_interval(a: f64, b: f64) -> Result<(), DistributionError> {
    check_finite("a", a)?;
    check_finite("b", b)?;
    if a < b {
        Ok(())
    } else {
        Err(invalid("b", format!("need a < b, got a = {a}, b = {b}")))
    }
}

/// Standard normal CDF.
fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal survival function, accurate in the upper tail.
fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standardised truncation points, normalising mass and a tail flag.
struct TruncNormal {
    lo: f64,
    hi: f64,
    mass: f64,
}

impl TruncNormal {
    fn new(mu: f64, sigma: f64, a: f64, b: f64) -> Self {
        let lo = (a - mu) / sigma;
        let hi = (b - mu) / sigma;
        let mass = if lo >= 0.0 {
            std_normal_sf(lo) - std_normal_sf(hi)
        } else {
            std_normal_cdf(hi) - std_normal_cdf(lo)
        };
        Self { lo, hi, mass }
    }

    /// Inverse of the truncated standardised CDF.
    fn inverse(&self, u: f64) -> f64 {
        if self.lo >= 0.0 {
            // reflect so that erfc_inv works on small upper-tail masses
            let s_lo = std_normal_sf(self.lo);
            let s = s_lo - u * self.mass;
            SQRT_2 * erfc_inv(2.0 * s)
        } else {
            let c = std_normal_cdf(self.lo) + u * self.mass;
            -SQRT_2 * erfc_inv(2.0 * c)
        }
    }

    fn cdf(&self, z: f64) -> f64 {
        if z <= self.lo {
            0.0
        } else if z >= self.hi {
            1.0
        } else if self.lo >= 0.0 {
            (std_normal_sf(self.lo) - std_normal_sf(z)) / self.mass
        } else {
            (std_normal_cdf(z) - std_normal_cdf(self.lo)) / self.mass
        }
    }
}

impl DistributionSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DistributionSpec::Bernoulli { .. } => "bernoulli",
            DistributionSpec::Categorical { .. } => "categorical",
            DistributionSpec::Uniform { .. } => "uniform",
            DistributionSpec::TruncatedGaussian { .. } => "truncated_gaussian",
            DistributionSpec::Beta { .. } => "beta",
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            DistributionSpec::Bernoulli { .. } | DistributionSpec::Categorical { .. }
        )
    }

    pub fn validate(&self) -> Result<(), DistributionError> {
        match self {
            DistributionSpec::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(invalid("p", format!("{p} is not a probability")));
                }
            }
            DistributionSpec::Categorical { values, probs } => {
                if values.is_empty() {
                    return Err(invalid("values", "must not be empty"));
                }
                if values.len() != probs.len() {
                    return Err(invalid(
                        "probs",
                        format!("{} probabilities for {} values", probs.len(), values.len()),
                    ));
                }
                for &v in values {
                    check_finite("values", v)?;
                }
                for &p in probs {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(invalid("probs", format!("{p} is not a probability")));
                    }
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_SUM_TOL {
                    return Err(invalid("probs", format!("sum to {total}, not 1")));
                }
            }
            DistributionSpec::Uniform { a, b } => check_interval(*a, *b)?,
            DistributionSpec::TruncatedGaussian { mu, sigma, a, b } => {
                check_finite("mu", *mu)?;
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(invalid("sigma", format!("{sigma} must be positive")));
                }
                check_interval(*a, *b)?;
                if TruncNormal::new(*mu, *sigma, *a, *b).mass <= 0.0 {
                    return Err(invalid("a", "truncation window carries no mass"));
                }
            }
            DistributionSpec::Beta { alpha, beta } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(invalid("alpha", format!("{alpha} must be positive")));
                }
                if !(beta.is_finite() && *beta > 0.0) {
                    return Err(invalid("beta", format!("{beta} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// Closed interval `[lo, hi]` containing every sample.
    pub fn support(&self) -> (f64, f64) {
        match self {
            DistributionSpec::Bernoulli { .. } | DistributionSpec::Beta { .. } => (0.0, 1.0),
            DistributionSpec::Categorical { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                }),
            DistributionSpec::Uniform { a, b }
            | DistributionSpec::TruncatedGaussian { a, b, .. } => (*a, *b),
        }
    }

    pub fn support_lo(&self) -> f64 {
        self.support().0
    }

    pub fn support_hi(&self) -> f64 {
        self.support().1
    }

    /// Distinct atoms in ascending order with their merged probabilities.
    fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        let mut pairs: Vec<(f64, f64)> = match self {
            DistributionSpec::Bernoulli { p } => vec![(0.0, 1.0 - p), (1.0, *p)],
            DistributionSpec::Categorical { values, probs } => {
                values.iter().copied().zip(probs.iter().copied()).collect()
            }
            _ => return None,
        };
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (v, p) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        Some(merged)
    }

    /// Draws one reward.
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            DistributionSpec::Bernoulli { p } => {
                if rng.uniform() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionSpec::Categorical { values, probs } => {
                let u = rng.uniform();
                let mut cum = 0.0;
                let mut last_positive = 0;
                for (i, &p) in probs.iter().enumerate() {
                    if p > 0.0 {
                        last_positive = i;
                    }
                    cum += p;
                    if u < cum {
                        return values[i];
                    }
                }
                values[last_positive]
            }
            DistributionSpec::Uniform { a, b } => (a + (b - a) * rng.uniform()).min(*b),
            DistributionSpec::TruncatedGaussian { mu, sigma, a, b } => {
                let tn = TruncNormal::new(*mu, *sigma, *a, *b);
                let z = tn.inverse(rng.uniform());
                (mu + sigma * z).clamp(*a, *b)
            }
            DistributionSpec::Beta { alpha, beta } => {
                // parameters are validated before any sampling happens
                let law = BetaSampler::new(*alpha, *beta).expect("validated beta parameters");
                law.sample(rng).clamp(0.0, 1.0)
            }
        }
    }

    /// Appends `n` i.i.d. rewards to `out`.
    pub fn sample_into(&self, rng: &mut Rng, n: usize, out: &mut Vec<f64>) {
        out.reserve(n);
        if let DistributionSpec::Beta { alpha, beta } = self {
            let law = BetaSampler::new(*alpha, *beta).expect("validated beta parameters");
            out.extend((0..n).map(|_| law.sample(rng).clamp(0.0, 1.0)));
        } else {
            out.extend((0..n).map(|_| self.sample(rng)));
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            DistributionSpec::Bernoulli { .. } | DistributionSpec::Categorical { .. } => self
                .atoms()
                .unwrap_or_default()
                .iter()
                .filter(|(v, _)| *v <= x)
                .map(|(_, p)| p)
                .sum::<f64>()
                .min(1.0),
            DistributionSpec::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            DistributionSpec::TruncatedGaussian { mu, sigma, a, b } => {
                TruncNormal::new(*mu, *sigma, *a, *b).cdf((x - mu) / sigma)
            }
            DistributionSpec::Beta { alpha, beta } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(*alpha, *beta, x)
                }
            }
        }
    }

    /// Right-continuous quantile `inf { x : F(x) > lambda }`.
    pub fn quantile(&self, lambda: f64) -> Result<f64, DistributionError> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(DistributionError::DomainError(lambda));
        }
        self.quantile_unchecked(lambda)
    }

    /// Quantile on the closed interval `[0, 1)`; `q(0)` is the lower end of the support.
    fn quantile_unchecked(&self, lambda: f64) -> Result<f64, DistributionError> {
        match self {
            DistributionSpec::Bernoulli { .. } | DistributionSpec::Categorical { .. } => {
                let atoms = self.atoms().unwrap_or_default();
                let mut cum = 0.0;
                for &(v, p) in &atoms {
                    cum += p;
                    if cum > lambda {
                        return Ok(v);
                    }
                }
                // cumulative rounding left the total just under 1
                Ok(atoms
                    .iter()
                    .rev()
                    .find(|(_, p)| *p > 0.0)
                    .map(|(v, _)| *v)
                    .unwrap_or(atoms[atoms.len() - 1].0))
            }
            DistributionSpec::Uniform { a, b } => Ok(a + lambda * (b - a)),
            _ => {
                let (lo, hi) = self.support();
                if lambda <= 0.0 {
                    return Ok(lo);
                }
                self.bisect_quantile(lambda, lo, hi)
            }
        }
    }

    fn bisect_quantile(&self, lambda: f64, mut lo: f64, mut hi: f64) -> Result<f64, DistributionError> {
        for _ in 0..QUANTILE_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            let f = self.cdf(mid);
            if (f - lambda).abs() <= QUANTILE_TOL || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if f > lambda {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(DistributionError::QuantileNotConverged(lambda))
    }

    /// Density and its derivative at `x` for continuous variants.
    pub fn density_info(&self, x: f64) -> Result<(f64, f64), DistributionError> {
        match self {
            DistributionSpec::Bernoulli { .. } | DistributionSpec::Categorical { .. } => {
                Err(DistributionError::UnsupportedDistribution(self.name()))
            }
            DistributionSpec::Uniform { a, b } => {
                if x < *a || x > *b {
                    Ok((0.0, 0.0))
                } else {
                    Ok((1.0 / (b - a), 0.0))
                }
            }
            DistributionSpec::TruncatedGaussian { mu, sigma, a, b } => {
                if x < *a || x > *b {
                    return Ok((0.0, 0.0));
                }
                let tn = TruncNormal::new(*mu, *sigma, *a, *b);
                let z = (x - mu) / sigma;
                let pdf = std_normal_pdf(z) / (sigma * tn.mass);
                Ok((pdf, -pdf * z / sigma))
            }
            DistributionSpec::Beta { alpha, beta } => {
                if !(0.0..=1.0).contains(&x) {
                    return Ok((0.0, 0.0));
                }
                let norm = (-ln_beta(*alpha, *beta)).exp();
                let (a1, b1) = (alpha - 1.0, beta - 1.0);
                let pdf = norm * x.powf(a1) * (1.0 - x).powf(b1);
                let left = if a1 == 0.0 {
                    0.0
                } else {
                    a1 * x.powf(a1 - 1.0) * (1.0 - x).powf(b1)
                };
                let right = if b1 == 0.0 {
                    0.0
                } else {
                    b1 * x.powf(a1) * (1.0 - x).powf(b1 - 1.0)
                };
                Ok((pdf, norm * (left - right)))
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DistributionSpec::Bernoulli { p } => *p,
            DistributionSpec::Categorical { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v * p).sum()
            }
            DistributionSpec::Uniform { a, b } => 0.5 * (a + b),
            DistributionSpec::TruncatedGaussian { mu, sigma, a, b } => {
                let tn = TruncNormal::new(*mu, *sigma, *a, *b);
                mu + sigma * (std_normal_pdf(tn.lo) - std_normal_pdf(tn.hi)) / tn.mass
            }
            DistributionSpec::Beta { alpha, beta } => alpha / (alpha + beta),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            DistributionSpec::Bernoulli { p } => p * (1.0 - p),
            DistributionSpec::Categorical { values, probs } => {
                let m = self.mean();
                values
                    .iter()
                    .zip(probs)
                    .map(|(v, p)| p * (v - m) * (v - m))
                    .sum()
            }
            DistributionSpec::Uniform { a, b } => (b - a) * (b - a) / 12.0,
            DistributionSpec::TruncatedGaussian { mu, sigma, a, b } => {
                let tn = TruncNormal::new(*mu, *sigma, *a, *b);
                let (pl, ph) = (std_normal_pdf(tn.lo), std_normal_pdf(tn.hi));
                let shift = (pl - ph) / tn.mass;
                let tilt = (tn.lo * pl - tn.hi * ph) / tn.mass;
                sigma * sigma * (1.0 + tilt - shift * shift)
            }
            DistributionSpec::Beta { alpha, beta } => {
                let s = alpha + beta;
                alpha * beta / (s * s * (s + 1.0))
            }
        }
    }

    /// `(1/lambda) * integral_0^lambda q(phi) dphi`, the lower-tail mean.
    fn lower_tail_mean(&self, lambda: f64) -> Result<f64, DistributionError> {
        if let Some(atoms) = self.atoms() {
            let mut acc = 0.0;
            let mut left = 0.0;
            for (v, p) in atoms {
                let right = (left + p).min(lambda);
                if right > left {
                    acc += v * (right - left);
                }
                left += p;
                if left >= lambda {
                    break;
                }
            }
            return Ok(acc / lambda);
        }
        if let DistributionSpec::Uniform { a, b } = self {
            return Ok(a + 0.5 * lambda * (b - a));
        }
        let integral = adaptive_simpson(|phi| self.quantile_unchecked(phi), 0.0, lambda, AVAR_QUAD_TOL)?;
        Ok(integral / lambda)
    }

    /// Entropy in bits: Shannon entropy for discrete laws, differential entropy otherwise.
    pub fn entropy_bits(&self) -> f64 {
        match self {
            DistributionSpec::Bernoulli { .. } | DistributionSpec::Categorical { .. } => self
                .atoms()
                .unwrap_or_default()
                .iter()
                .filter(|(_, p)| *p > 0.0)
                .map(|(_, p)| -p * p.log2())
                .sum(),
            DistributionSpec::Uniform { a, b } => (b - a).log2(),
            DistributionSpec::TruncatedGaussian { mu, sigma, a, b } => {
                let tn = TruncNormal::new(*mu, *sigma, *a, *b);
                let (pl, ph) = (std_normal_pdf(tn.lo), std_normal_pdf(tn.hi));
                let nats = ((2.0 * PI * std::f64::consts::E).sqrt() * sigma * tn.mass).ln()
                    + (tn.lo * pl - tn.hi * ph) / (2.0 * tn.mass);
                nats / LN_2
            }
            DistributionSpec::Beta { alpha, beta } => {
                let nats = ln_beta(*alpha, *beta)
                    - (alpha - 1.0) * digamma(*alpha)
                    - (beta - 1.0) * digamma(*beta)
                    + (alpha + beta - 2.0) * digamma(alpha + beta);
                nats / LN_2
            }
        }
    }
}

/// Adaptive Simpson quadrature of a fallible integrand on `[a, b]`.
fn adaptive_simpson<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64, DistributionError>
where
    F: FnMut(f64) -> Result<f64, DistributionError>,
{
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&mut f, a, b, fa, fm, fb, whole, tol, QUAD_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, DistributionError>
where
    F: FnMut(f64) -> Result<f64, DistributionError>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// `n` i.i.d. rewards from `spec`, deterministic in `(spec, rng state, n)`.
pub fn sample_n(spec: &DistributionSpec, rng: &mut Rng, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    spec.sample_into(rng, n, &mut out);
    out
}

/// Exact (or numerically converged) value of `f` under `spec`.
pub fn true_functional(spec: &DistributionSpec, f: &FunctionalSpec) -> Result<f64, DistributionError> {
    match f {
        FunctionalSpec::Mean => Ok(spec.mean()),
        FunctionalSpec::MeanVariance { lambda } => Ok(-spec.mean() + lambda * spec.variance()),
        FunctionalSpec::ValueAtRisk { lambda } => Ok(-spec.quantile(*lambda)?),
        FunctionalSpec::AverageValueAtRisk { lambda } => {
            if !(*lambda > 0.0 && *lambda <= 1.0) {
                return Err(DistributionError::DomainError(*lambda));
            }
            Ok(-spec.lower_tail_mean(*lambda)?)
        }
        FunctionalSpec::ShannonEntropy { mode, .. } => match (mode, spec.is_discrete()) {
            (EntropyMode::Plugin, true) | (EntropyMode::Knn, false) => Ok(spec.entropy_bits()),
            (EntropyMode::Plugin, false) => Err(DistributionError::UnsupportedFunctional {
                functional: "plug-in entropy",
                distribution: spec.name(),
            }),
            (EntropyMode::Knn, true) => Err(DistributionError::UnsupportedFunctional {
                functional: "k-NN entropy",
                distribution: spec.name(),
            }),
        },
    }
}

pub fn quantile(spec: &DistributionSpec, lambda: f64) -> Result<f64, DistributionError> {
    spec.quantile(lambda)
}

pub fn density_info(spec: &DistributionSpec, x: f64) -> Result<(f64, f64), DistributionError> {
    spec.density_info(x)
}
