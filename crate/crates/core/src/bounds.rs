//! Upper bounds on the recommendation error and regret of Batch Elimination.
//!
//! Budgets are taken as reals so that sample-complexity results can be fed
//! straight back into the error bounds. All bounds return raw values, which
//! may exceed one; callers clamp for display.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::floor_rank;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("{0}")]
    DomainError(String),
    #[error("bias {bias} is not below half the gap {half_gap}; the bound is vacuous")]
    BiasDominates { half_gap: f64, bias: f64 },
    #[error("floor(T/H) = {pulls} pulls per round is below the required {required}")]
    SampleConditionUnmet { pulls: u64, required: f64 },
    #[error("bound constant `{0}` must be supplied")]
    MissingConstant(&'static str),
}

fn domain(msg: impl Into<String>) -> BoundError {
    BoundError::DomainError(msg.into())
}

/// Problem-dependent constants that the bounds cannot infer from data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConstants {
    /// Order-statistic bias remainder (`C1 / N^2`).
    #[serde(rename = "C1", default)]
    pub order_c1: f64,
    /// Order-statistic variance remainder (`C2 / N^2`).
    #[serde(rename = "C2", default)]
    pub order_c2: f64,
    #[serde(rename = "c1", default)]
    pub entropy_c1: f64,
    #[serde(rename = "c2", default)]
    pub entropy_c2: f64,
    #[serde(rename = "c4", default)]
    pub entropy_c4: f64,
    #[serde(rename = "c5", default)]
    pub entropy_c5: f64,
    /// Neighbourhood scale `M` of the k-NN entropy bias/variance rates.
    #[serde(rename = "M_knn", default, skip_serializing_if = "Option::is_none")]
    pub knn_scale: Option<f64>,
    /// Upper bound `D` on every arm's density.
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub density_max: Option<f64>,
    /// Upper bound `D'` on every arm's density derivative.
    #[serde(rename = "D_prime", default, skip_serializing_if = "Option::is_none")]
    pub density_slope_max: Option<f64>,
}

impl BoundConstants {
    pub fn validate(&self) -> Result<(), BoundError> {
        let named = [
            ("C1", self.order_c1),
            ("C2", self.order_c2),
            ("c1", self.entropy_c1),
            ("c2", self.entropy_c2),
            ("c4", self.entropy_c4),
            ("c5", self.entropy_c5),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(format!("constant {name} = {v} must be a nonnegative real")));
            }
        }
        for (name, v) in [
            ("M_knn", self.knn_scale),
            ("D", self.density_max),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(domain(format!("constant {name} = {v} must be positive")));
                }
            }
        }
        if let Some(v) = self.density_slope_max {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(format!("constant D_prime = {v} must be nonnegative")));
            }
        }
        Ok(())
    }
}

/// Tail function `Q(n, x)` of a Q-efficient estimator.
#[derive(Clone)]
pub struct QFunction {
    evaluator: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    strictly_monotone_in_n: bool,
}

impl fmt::Debug for QFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QFunction")
            .field("strictly_monotone_in_n", &self.strictly_monotone_in_n)
            .finish_non_exhaustive()
    }
}

impl QFunction {
    pub fn new<F>(evaluator: F, strictly_monotone_in_n: bool) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            evaluator: Arc::new(evaluator),
            strictly_monotone_in_n,
        }
    }

    /// `exp(-n x^2)`, valid for the sample mean of rewards in a unit-width interval.
    pub fn mean() -> Self {
        Self::new(q_mean, true)
    }

    /// Hoeffding tail `exp(-2 n x^2 / width^2)` for rewards in an interval of the given width.
    pub fn hoeffding(width: f64) -> Self {
        Self::new(move |n, x| (-2.0 * n * x * x / (width * width)).exp(), true)
    }

    pub fn eval(&self, n: f64, x: f64) -> f64 {
        (self.evaluator)(n, x)
    }

    pub fn is_strictly_monotone_in_n(&self) -> bool {
        self.strictly_monotone_in_n
    }
}

pub fn q_mean(n: f64, x: f64) -> f64 {
    (-n * x * x).exp()
}

fn check_gap(d: f64) -> Result<(), BoundError> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("gap d = {d} must be positive")))
    }
}

fn check_budget(h: u64, k: usize, t: f64) -> Result<(), BoundError> {
    if h == 0 || k < 2 {
        return Err(domain(format!("need H >= 1 and K >= 2, got H = {h}, K = {k}")));
    }
    if (h as f64) < (k as f64) {
        return Err(domain(format!("H = {h} is below K = {k}")));
    }
    if t.is_nan() || t <= h as f64 {
        return Err(domain(format!("budget T = {t} must exceed H = {h}")));
    }
    Ok(())
}

/// `H - K + 1`, the number of pairwise comparisons the best arm must survive.
fn comparisons(h: u64, k: usize) -> f64 {
    (h as f64) - (k as f64) + 1.0
}

/// `2 (H - K + 1) Q((T - H)/H, d/2)`.
pub fn generic_error_bound(h: u64, k: usize, t: f64, d: f64, q: &QFunction) -> Result<f64, BoundError> {
    check_budget(h, k, t)?;
    check_gap(d)?;
    let n = (t - h as f64) / h as f64;
    Ok(2.0 * comparisons(h, k) * q.eval(n, d / 2.0))
}

/// Smallest budget for which the mean-case error bound is at most `delta`.
pub fn sample_complexity_mean(delta: f64, h: u64, k: usize, d: f64) -> Result<f64, BoundError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    check_gap(d)?;
    if h == 0 || k < 2 || h < k as u64 {
        return Err(domain(format!("need H >= K >= 2, got H = {h}, K = {k}")));
    }
    let y = delta / (2.0 * comparisons(h, k));
    let n = (4.0 / (d * d)) * (1.0 / y).ln().max(0.0);
    Ok(h as f64 * n + h as f64)
}

/// Expected-regret bound and the regret bound that holds with probability `1 - delta`.
pub fn regret_and_pac_bounds(
    h: u64,
    k: usize,
    t: f64,
    d: f64,
    gamma_max: f64,
    delta: f64,
    q: &QFunction,
) -> Result<(f64, f64), BoundError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    if !(gamma_max.is_finite() && gamma_max >= 0.0) {
        return Err(domain(format!("gamma_max = {gamma_max} must be nonnegative")));
    }
    let regret = gamma_max * generic_error_bound(h, k, t, d, q)?;
    Ok((regret, regret / delta))
}

/// `(K + log2 K) exp(-(T - 2K) d^2 / (8K))` for sequential halving on means.
pub fn halving_mean_bound(k: usize, t: f64, d: f64) -> Result<f64, BoundError> {
    if k < 2 {
        return Err(domain(format!("need K >= 2, got {k}")));
    }
    let kf = k as f64;
    if t.is_nan() || t <= 2.0 * kf {
        return Err(domain(format!("budget T = {t} must exceed 2K = {}", 2 * k)));
    }
    check_gap(d)?;
    Ok((kf + kf.log2()) * (-(t - 2.0 * kf) * d * d / (8.0 * kf)).exp())
}

/// Mean-variance error bound with `N = (T - H)/H` samples per comparison.
pub fn mv_error_bound(h: u64, k: usize, t: f64, d: f64, lambda: f64, a: f64, b: f64) -> Result<f64, BoundError> {
    check_budget(h, k, t)?;
    check_gap(d)?;
    if t.is_nan() || t <= 2.0 * h as f64 {
        return Err(domain(format!("budget T = {t} must exceed 2H = {}", 2 * h)));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(domain(format!("lambda = {lambda} must be positive")));
    }
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(domain(format!("need A < B, got A = {a}, B = {b}")));
    }
    let n = (t - h as f64) / h as f64;
    let w = b - a;
    let mean_term = (-n * d * d / (8.0 * w * w)).exp();
    let shrunk = (n - 1.0) / n * d / lambda;
    let var_term = (-n * shrunk * shrunk / (8.0 * w.powi(4))).exp();
    Ok(2.0 * comparisons(h, k) * (mean_term + var_term))
}

/// Bias and variance bounds `(|V|, W)` of the order-statistic quantile estimator.
pub fn var_bias_variance(
    lambda: f64,
    n: u64,
    pdf_at_q: f64,
    pdf_deriv_at_q: f64,
    consts: &BoundConstants,
) -> Result<(f64, f64), BoundError> {
    if !(pdf_at_q.is_finite() && pdf_at_q > 0.0) {
        return Err(domain(format!("density at the quantile = {pdf_at_q} must be positive")));
    }
    if n == 0 {
        return Err(domain("need N >= 1 samples"));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(domain(format!("lambda = {lambda} must lie in (0, 1)")));
    }
    let nf = n as f64;
    let spread = lambda * (1.0 - lambda);
    let v = (spread * pdf_deriv_at_q / (2.0 * (nf + 2.0) * pdf_at_q.powi(3))).abs() + consts.order_c1 / (nf * nf);
    let w = spread / ((nf + 2.0) * pdf_at_q * pdf_at_q) + consts.order_c2 / (nf * nf);
    Ok((v, w))
}

/// Chebyshev-type bound `4 (H - K + 1) W / (d/2 - |V|)^2`.
fn chebyshev_bound(h: u64, k: usize, d_gap: f64, v_abs: f64, w: f64) -> Result<f64, BoundError> {
    check_gap(d_gap)?;
    if !(w.is_finite() && w >= 0.0) {
        return Err(domain(format!("W = {w} must be nonnegative")));
    }
    let half_gap = d_gap / 2.0;
    if half_gap <= v_abs {
        return Err(BoundError::BiasDominates { half_gap, bias: v_abs });
    }
    Ok(4.0 * comparisons(h, k) * w / (half_gap - v_abs).powi(2))
}

/// Value-at-risk error bound from worst-case `|V|` and `W` at `N = floor(T/H)`.
pub fn var_error_bound(h: u64, k: usize, t: f64, d_gap: f64, v_abs: f64, w: f64) -> Result<f64, BoundError> {
    check_budget(h, k, t)?;
    chebyshev_bound(h, k, d_gap, v_abs, w)
}

/// Smallest multiple of `1/N` strictly above `lambda`.
pub fn lambda_prime(n: u64, lambda: f64) -> f64 {
    (floor_rank(lambda, n as usize) as f64 + 1.0) / n as f64
}

/// Average value-at-risk error bound with deviation `eps = d_gap / 2`.
pub fn avar_error_bound(
    h: u64,
    k: usize,
    t: f64,
    d_gap: f64,
    lambda: f64,
    m_reward: f64,
    consts: &BoundConstants,
) -> Result<f64, BoundError> {
    check_budget(h, k, t)?;
    check_gap(d_gap)?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(domain(format!("lambda = {lambda} must lie in (0, 1)")));
    }
    if !(m_reward.is_finite() && m_reward > 0.0) {
        return Err(domain(format!("reward bound M = {m_reward} must be positive")));
    }
    let density_max = consts.density_max.ok_or(BoundError::MissingConstant("D"))?;
    let slope_max = consts.density_slope_max.ok_or(BoundError::MissingConstant("D_prime"))?;
    let pulls = (t / h as f64).floor() as u64;
    let eps = d_gap / 2.0;
    let lp = lambda_prime(pulls, lambda);
    let required = ((slope_max / (6.0 * density_max.powi(3)) + 2.0 * consts.order_c1 * lp) / (eps * lambda)).max(2.0);
    if (pulls as f64) < required {
        return Err(BoundError::SampleConditionUnmet { pulls, required });
    }
    let exponent = (t - h as f64) * eps * eps * lambda * lambda / (32.0 * h as f64 * lp * m_reward * m_reward);
    Ok(4.0 * comparisons(h, k) * (-exponent).exp())
}

/// Entropy error bound with k-NN bias `V` and variance `W` rates at `n` samples.
#[allow(clippy::too_many_arguments)]
pub fn entropy_error_bound(
    h: u64,
    k: usize,
    t: f64,
    d_gap: f64,
    n: u64,
    consts: &BoundConstants,
    neighbours: usize,
    dim: usize,
) -> Result<f64, BoundError> {
    check_budget(h, k, t)?;
    if n == 0 || neighbours == 0 || dim == 0 {
        return Err(domain("need N, k and dimension all >= 1"));
    }
    let scale = || consts.knn_scale.ok_or(BoundError::MissingConstant("M_knn"));
    let kf = neighbours as f64;
    let v = if consts.entropy_c1 > 0.0 {
        consts.entropy_c1 * (kf / scale()?).powf(1.0 / dim as f64)
    } else {
        0.0
    } + consts.entropy_c2 / kf;
    let w = consts.entropy_c4 / n as f64
        + if consts.entropy_c5 > 0.0 {
            consts.entropy_c5 / scale()?
        } else {
            0.0
        };
    chebyshev_bound(h, k, d_gap, v, w)
}

pub fn clamp_probability(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn uniform_consts() -> BoundConstants {
        BoundConstants {
            density_max: Some(1.0),
            density_slope_max: Some(0.0),
            ..Default::default()
        }
    }

    #[test]
    fn q_mean_examples() {
        assert_eq!(q_mean(37.0, 0.0), 1.0);
        assert_eq!(q_mean(0.0, 0.4), 1.0);
        assert_relative_eq!(q_mean(100.0, 0.1), (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn generic_bound_examples() {
        let q = QFunction::mean();
        assert!(generic_error_bound(14, 8, 14.0, 0.2, &q).is_err());
        let near = generic_error_bound(14, 8, 14.0 + 1e-9, 0.2, &q).unwrap();
        assert_relative_eq!(near, 14.0, max_relative = 1e-9);
        let b = generic_error_bound(14, 8, 1400.0, 0.2, &q).unwrap();
        assert_relative_eq!(b, 14.0 * (-0.99f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(b, 5.203, max_relative = 1e-3);
        let b = generic_error_bound(14, 8, 14014.0, 0.2, &q).unwrap();
        assert_relative_eq!(b, 14.0 * (-10.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn sample_complexity_example() {
        let t = sample_complexity_mean(0.1, 14, 8, 0.2).unwrap();
        assert_relative_eq!(t, 14.0 * 100.0 * 140.0f64.ln() + 14.0, max_relative = 1e-12);
        assert!((t - 6932.2).abs() < 0.1);
        assert!(sample_complexity_mean(1.0, 14, 8, 0.2).is_err());
        assert!(sample_complexity_mean(0.0, 14, 8, 0.2).is_err());
    }

    #[test]
    fn sample_complexity_round_trip_small_k() {
        // K = 2, H = 2: bracket 2H - 2K + 2 = 2
        let t = sample_complexity_mean(0.5, 2, 2, 0.3).unwrap();
        let back = generic_error_bound(2, 2, t, 0.3, &QFunction::mean()).unwrap();
        assert!((back - 0.5).abs() < 1e-9);
    }

    #[test]
    fn regret_examples() {
        let q = QFunction::mean();
        let (r, p) = regret_and_pac_bounds(14, 8, 14014.0, 0.2, 0.0, 0.1, &q).unwrap();
        assert_eq!((r, p), (0.0, 0.0));
        let (r, p) = regret_and_pac_bounds(14, 8, 14014.0, 0.2, 0.4, 0.1, &q).unwrap();
        assert_relative_eq!(r, 2.542e-4, max_relative = 1e-3);
        assert_relative_eq!(p, 2.542e-3, max_relative = 1e-3);
        assert_relative_eq!(p, r / 0.1, max_relative = 1e-15);
    }

    #[test]
    fn mean_case_examples() {
        let b = halving_mean_bound(8, 8016.0, 0.2).unwrap();
        assert_relative_eq!(b, 11.0 * (-5.0f64).exp(), max_relative = 1e-12);
        assert!(halving_mean_bound(8, 16.0, 0.2).is_err());
    }

    #[test]
    fn mv_examples() {
        let b = mv_error_bound(9, 4, 909.0, 0.2, 1.0, 0.0, 1.0).unwrap();
        let expected = 12.0 * ((-0.5f64).exp() + (-0.49005f64).exp());
        assert_relative_eq!(b, expected, max_relative = 1e-12);
        assert!((b - 14.63).abs() < 0.01);
        // small lambda: variance term vanishes
        let tiny = mv_error_bound(9, 4, 909.0, 0.2, 1e-6, 0.0, 1.0).unwrap();
        assert_relative_eq!(tiny, 12.0 * (-0.5f64).exp(), max_relative = 1e-12);
        assert!(mv_error_bound(9, 4, 18.0, 0.2, 1.0, 0.0, 1.0).is_err());
        assert!(mv_error_bound(9, 4, 909.0, 0.2, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn var_bias_variance_examples() {
        let (v, w) = var_bias_variance(0.5, 98, 1.0, 0.0, &BoundConstants::default()).unwrap();
        assert_eq!(v, 0.0);
        assert_relative_eq!(w, 0.0025, max_relative = 1e-12);
        let c = BoundConstants {
            order_c1: 2.0,
            order_c2: 3.0,
            ..Default::default()
        };
        let (v, w) = var_bias_variance(1e-300, 10, 1.0, 5.0, &c).unwrap();
        assert_relative_eq!(v, 0.02, max_relative = 1e-12);
        assert_relative_eq!(w, 0.03, max_relative = 1e-12);
        let (_, w1) = var_bias_variance(0.3, 998, 2.0, 0.0, &BoundConstants::default()).unwrap();
        let (_, w2) = var_bias_variance(0.3, 1998, 2.0, 0.0, &BoundConstants::default()).unwrap();
        assert_relative_eq!(w1 / w2, 2.0, max_relative = 1e-12);
        assert!(var_bias_variance(0.5, 10, 0.0, 0.0, &BoundConstants::default()).is_err());
    }

    #[test]
    fn var_error_examples() {
        let b = var_error_bound(9, 4, 900.0, 0.2, 0.0, 0.0025).unwrap();
        assert_relative_eq!(b, 6.0, max_relative = 1e-12);
        assert!(matches!(
            var_error_bound(9, 4, 900.0, 0.2, 0.1, 0.0025),
            Err(BoundError::BiasDominates { .. })
        ));
        assert_eq!(var_error_bound(9, 4, 900.0, 0.2, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lambda_prime_examples() {
        assert_relative_eq!(lambda_prime(10, 0.25), 0.3, max_relative = 1e-15);
        assert_relative_eq!(lambda_prime(10, 0.3), 0.4, max_relative = 1e-15);
        assert_eq!(lambda_prime(4, 0.5), 0.75);
        for n in 1..50u64 {
            for i in 1..100 {
                let l = i as f64 / 100.0;
                let lp = lambda_prime(n, l);
                assert!(lp > l && lp - 1.0 / n as f64 <= l + 1e-12, "n = {n}, l = {l}");
            }
        }
    }

    #[test]
    fn avar_examples() {
        let b = avar_error_bound(2, 2, 202.0, 0.2, 0.5, 1.0, &uniform_consts()).unwrap();
        let lp: f64 = 51.0 / 101.0;
        let expected = 4.0 * (-(200.0 * 0.01 * 0.25) / (64.0 * lp)).exp();
        assert_relative_eq!(b, expected, max_relative = 1e-12);
        assert!((b - 3.939).abs() < 1e-3);
        // D' = 0, C1 = 0: only N >= 2 is required
        assert!(matches!(
            avar_error_bound(2, 2, 3.0, 0.2, 0.5, 1.0, &uniform_consts()),
            Err(BoundError::SampleConditionUnmet { pulls: 1, .. })
        ));
        assert!(avar_error_bound(2, 2, 4.0, 0.2, 0.5, 1.0, &uniform_consts()).is_ok());
        assert!(matches!(
            avar_error_bound(2, 2, 202.0, 0.2, 0.5, 1.0, &BoundConstants::default()),
            Err(BoundError::MissingConstant("D"))
        ));
    }

    #[test]
    fn avar_bound_jumps_with_lambda_prime() {
        // for lambda < 1/2 the step in lambda' can outweigh the extra budget:
        // N = 6 -> 7 moves lambda' from 2/6 to 3/7
        let at = |n: u64| avar_error_bound(9, 4, 9.0 * n as f64, 0.4, 0.3, 1.0, &uniform_consts()).unwrap();
        assert!(at(7) > at(6));
        // where lambda * N is integral the bound does fall
        let tens: Vec<f64> = (1..30).map(|m| at(10 * m)).collect();
        assert!(tens.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn entropy_examples() {
        let c = BoundConstants {
            entropy_c4: 1.0,
            ..Default::default()
        };
        // H - K + 1 = 6
        let b = entropy_error_bound(9, 4, 900.0, 0.2, 100, &c, 1, 1).unwrap();
        assert_relative_eq!(b, 24.0, max_relative = 1e-12);
        let b2 = entropy_error_bound(9, 4, 900.0, 0.2, 200, &c, 1, 1).unwrap();
        assert_relative_eq!(b / b2, 2.0, max_relative = 1e-12);
        let biased = BoundConstants {
            entropy_c2: 0.5,
            ..c.clone()
        };
        assert!(matches!(
            entropy_error_bound(9, 4, 900.0, 0.2, 100, &biased, 1, 1),
            Err(BoundError::BiasDominates { .. })
        ));
        let needs_m = BoundConstants {
            entropy_c5: 1.0,
            ..c
        };
        assert!(matches!(
            entropy_error_bound(9, 4, 900.0, 0.2, 100, &needs_m, 1, 1),
            Err(BoundError::MissingConstant("M_knn"))
        ));
    }

    #[test]
    fn q_mean_is_monotone_on_grid() {
        let grid: Vec<f64> = (0..100).map(|i| i as f64 * 0.5).collect();
        let xs: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        for i in 0..100 {
            for j in 0..100 {
                let v = q_mean(grid[i], xs[j]);
                if i + 1 < 100 {
                    assert!(q_mean(grid[i + 1], xs[j]) <= v);
                }
                if j + 1 < 100 {
                    assert!(q_mean(grid[i], xs[j + 1]) <= v);
                }
            }
        }
    }

    #[test]
    fn constants_validation() {
        assert!(BoundConstants::default().validate().is_ok());
        let bad = BoundConstants {
            order_c1: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = BoundConstants {
            density_max: Some(0.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let c: BoundConstants = serde_json::from_str(r#"{"C1":1,"D":2,"D_prime":0}"#).unwrap();
        assert_eq!(c.order_c1, 1.0);
        assert_eq!(c.density_max, Some(2.0));
        assert!(serde_json::from_str::<BoundConstants>(r#"{"E":1}"#).is_err());
    }

    proptest! {
        #[test]
        fn sample_complexity_round_trip(delta in 0.001f64..0.999, k in 2usize..40, extra in 0u64..200, d in 0.01f64..2.0) {
            let h = k as u64 + extra;
            let t = sample_complexity_mean(delta, h, k, d).unwrap();
            let back = generic_error_bound(h, k, t, d, &QFunction::mean()).unwrap();
            prop_assert!((back - delta).abs() <= 1e-9);
        }

        #[test]
        fn bounds_grow_as_gap_shrinks(d in 0.05f64..0.5, shrink in 0.5f64..1.0) {
            let q = QFunction::mean();
            let d2 = d * shrink;
            prop_assert!(generic_error_bound(14, 8, 2000.0, d2, &q).unwrap() >= generic_error_bound(14, 8, 2000.0, d, &q).unwrap());
            prop_assert!(halving_mean_bound(8, 2000.0, d2).unwrap() >= halving_mean_bound(8, 2000.0, d).unwrap());
            prop_assert!(mv_error_bound(14, 8, 2000.0, d2, 1.0, 0.0, 1.0).unwrap() >= mv_error_bound(14, 8, 2000.0, d, 1.0, 0.0, 1.0).unwrap());
            prop_assert!(var_error_bound(14, 8, 2000.0, d2, 0.0, 0.01).unwrap() >= var_error_bound(14, 8, 2000.0, d, 0.0, 0.01).unwrap());
            let c = uniform_consts();
            prop_assert!(avar_error_bound(14, 8, 2000.0, d2, 0.5, 1.0, &c).unwrap() >= avar_error_bound(14, 8, 2000.0, d, 0.5, 1.0, &c).unwrap());
        }
    }
}
