//! CUSUM profile, boundary weights and the weighted argmax estimator.
//!
//! For observations `X_1..X_n` centered at the sample mean `θ̂`, the CUSUM
//! profile is
//!
//! ```text
//! S_n(k) = |Σ_{i≤k} (X_i − θ̂)| / √n,   k = 1..n−1
//! ```
//!
//! and the weighted statistic is `T_n(γ) = max_k w_γ(k/n)·S_n(k)` with
//! `w_γ(s) = (s(1−s))^(−γ)`. The argmax of the same expression is the
//! change-point estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An observed sample `X_1..X_n` with at least two finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "series needs at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "observation {} is not finite ({})",
                i + 1,
                values[i]
            )));
        }
        Ok(Self { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Weight exponent `γ ∈ [0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct WeightExponent(f64);

impl WeightExponent {
    pub const ZERO: WeightExponent = WeightExponent(0.0);
    pub const HALF: WeightExponent = WeightExponent(0.5);

    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&gamma) {
            return Err(Error::Domain(format!(
                "weight exponent {gamma} is outside [0, 0.5]"
            )));
        }
        Ok(Self(gamma))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for WeightExponent {
    type Error = Error;

    fn try_from(gamma: f64) -> Result<Self> {
        Self::new(gamma)
    }
}

impl From<WeightExponent> for f64 {
    fn from(g: WeightExponent) -> f64 {
        g.0
    }
}

/// The CUSUM profile `S_n(1..n−1)` of a series together with its centering.
#[derive(Debug, Clone, PartialEq)]
pub struct CusumProfile {
    s: Vec<f64>,
    theta_hat: f64,
    n: usize,
}

impl CusumProfile {
    /// `S_n(k)` for `k` in `1..n`.
    pub fn at(&self, k: usize) -> f64 {
        self.s[k - 1]
    }

    /// Profile values indexed from zero: element `k − 1` holds `S_n(k)`.
    pub fn values(&self) -> &[f64] {
        &self.s
    }

    pub fn theta_hat(&self) -> f64 {
        self.theta_hat
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Argmax location, rescaled location and statistic value for one exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChangePointEstimate {
    pub m_hat: usize,
    pub tau_hat: f64,
    pub statistic: f64,
    pub gamma: WeightExponent,
}

pub fn cusum_profile(x: &TimeSeries) -> CusumProfile {
    let values = x.values();
    let n = values.len();
    let theta_hat = x.mean();
    let scale = 1.0 / (n as f64).sqrt();
    let mut partial = 0.0;
    let s = values[..n - 1]
        .iter()
        .map(|v| {
            partial += v - theta_hat;
            partial.abs() * scale
        })
        .collect();
    CusumProfile { s, theta_hat, n }
}

/// Uncentered helper: `(1/√n)|Σ_{i≤n}(X_i − θ̂)|`, which is zero up to rounding.
pub fn full_centered_sum(x: &TimeSeries) -> f64 {
    let theta_hat = x.mean();
    let n = x.len() as f64;
    x.values().iter().map(|v| v - theta_hat).sum::<f64>().abs() / n.sqrt()
}

/// `w_γ(s) = (s(1−s))^(−γ)`, evaluated in log space.
pub fn weight(s: f64, gamma: WeightExponent) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!(
            "weight argument {s} is outside (0, 1)"
        )));
    }
    Ok(weight_unchecked(s, gamma.value()))
}

#[inline]
fn weight_unchecked(s: f64, gamma: f64) -> f64 {
    (-gamma * (s.ln() + (1.0 - s).ln())).exp()
}

/// Weights `w_γ(k/n)` for `k = 1..n−1`, bitwise equal to [`weight`].
pub fn weight_vector(n: usize, gamma: WeightExponent) -> Vec<f64> {
    let nf = n as f64;
    (1..n)
        .map(|k| weight_unchecked(k as f64 / nf, gamma.value()))
        .collect()
}

/// Smallest argmax and maximum of `weights[k]·s[k]`.
pub(crate) fn weighted_argmax(s: &[f64], weights: &[f64]) -> (usize, f64) {
    debug_assert_eq!(s.len(), weights.len());
    let mut best_k = 1;
    let mut best = f64::NEG_INFINITY;
    for (i, (sv, wv)) in s.iter().zip(weights).enumerate() {
        let v = sv * wv;
        if v > best {
            best = v;
            best_k = i + 1;
        }
    }
    (best_k, best)
}

pub fn weighted_statistic(p: &CusumProfile, gamma: WeightExponent) -> f64 {
    argmax_estimator(p, gamma).statistic
}

pub fn argmax_estimator(p: &CusumProfile, gamma: WeightExponent) -> ChangePointEstimate {
    let weights = weight_vector(p.n, gamma);
    let (m_hat, statistic) = weighted_argmax(&p.s, &weights);
    ChangePointEstimate {
        m_hat,
        tau_hat: m_hat as f64 / p.n as f64,
        statistic,
        gamma,
    }
}

/// Bias-corrected sample standard deviation (divisor `n − 1`).
pub fn sample_std(x: &TimeSeries) -> Result<f64> {
    let values = x.values();
    let mean = x.mean();
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (values.len() - 1) as f64).sqrt();
    if sd == 0.0 || values.iter().all(|&v| v == values[0]) {
        return Err(Error::DegenerateVariance);
    }
    Ok(sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::from_slice(v).unwrap()
    }

    fn g(v: f64) -> WeightExponent {
        WeightExponent::new(v).unwrap()
    }

    // Prefix sums written out by hand for (1,1,1,5,5): mean 2.6,
    // partial sums -1.6, -3.2, -4.8, -2.4, divided by sqrt(5).
    const STEP_PROFILE: [f64; 4] = [
        0.715_541_752_799_933,
        1.431_083_505_599_866,
        2.146_625_258_399_799,
        1.073_312_629_199_899,
    ];

    #[test]
    fn rejects_short_or_non_finite_series() {
        assert!(matches!(
            TimeSeries::new(vec![1.0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            TimeSeries::new(vec![]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            TimeSeries::new(vec![1.0, f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            TimeSeries::new(vec![f64::INFINITY, 1.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn constant_series_has_zero_profile() {
        let p = cusum_profile(&ts(&[3.5; 17]));
        assert!(p.values().iter().all(|&v| v == 0.0));
        assert_eq!(p.values().len(), 16);
    }

    #[test]
    fn two_point_profile() {
        let p = cusum_profile(&ts(&[0.0, 2.0]));
        assert_eq!(p.theta_hat(), 1.0);
        assert_abs_diff_eq!(p.at(1), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn step_profile_matches_hand_computation() {
        let p = cusum_profile(&ts(&[1.0, 1.0, 1.0, 5.0, 5.0]));
        assert_abs_diff_eq!(p.theta_hat(), 2.6, epsilon = 1e-15);
        for (got, want) in p.values().iter().zip(STEP_PROFILE) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(0.3, g(0.0)).unwrap(), 1.0);
        assert_abs_diff_eq!(weight(0.5, g(0.5)).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(weight(0.2, g(0.5)).unwrap(), 2.5, epsilon = 1e-12);
        assert!(weight(0.0, g(0.2)).is_err());
        assert!(weight(1.0, g(0.2)).is_err());
        assert!(weight(f64::NAN, g(0.2)).is_err());
    }

    #[test]
    fn exponent_range_is_validated() {
        assert!(WeightExponent::new(-0.01).is_err());
        assert!(WeightExponent::new(0.5000001).is_err());
        assert!(WeightExponent::new(f64::NAN).is_err());
        assert_eq!(WeightExponent::new(0.5).unwrap(), WeightExponent::HALF);
    }

    #[test]
    fn step_statistics() {
        let p = cusum_profile(&ts(&[1.0, 1.0, 1.0, 5.0, 5.0]));
        assert_abs_diff_eq!(weighted_statistic(&p, g(0.0)), 2.14663, epsilon = 1e-5);

        // brute force: weights evaluated one by one, times the hand profile
        let brute = (1..5)
            .map(|k| weight(k as f64 / 5.0, g(0.5)).unwrap() * STEP_PROFILE[k - 1])
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(brute, 4.38178, epsilon = 1e-5);
        let est = argmax_estimator(&p, g(0.5));
        assert_abs_diff_eq!(est.statistic, brute, epsilon = 1e-12);
        assert_eq!(est.m_hat, 3);

        let est0 = argmax_estimator(&p, g(0.0));
        assert_eq!(est0.m_hat, 3);
        assert_eq!(est0.tau_hat, 0.6);
        assert_eq!(est0.tau_hat, est0.m_hat as f64 / 5.0);
    }

    #[test]
    fn constant_series_statistic_and_tie_break() {
        let p = cusum_profile(&ts(&[2.0; 10]));
        for gamma in [0.0, 0.3, 0.5] {
            let est = argmax_estimator(&p, g(gamma));
            assert_eq!(est.statistic, 0.0);
            assert_eq!(est.m_hat, 1);
        }
    }

    #[test]
    fn ties_resolve_to_smallest_index() {
        // profile (1, 0, 1) up to scaling: symmetric peaks at k=1 and k=3
        let p = cusum_profile(&ts(&[1.0, -1.0, 1.0, -1.0]));
        let est = argmax_estimator(&p, g(0.0));
        assert_eq!(est.m_hat, 1);
    }

    #[test]
    fn sample_std_examples() {
        assert_abs_diff_eq!(
            sample_std(&ts(&[0.0, 2.0])).unwrap(),
            std::f64::consts::SQRT_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            sample_std(&ts(&[1.0, 1.0, 1.0, 5.0, 5.0])).unwrap(),
            (19.2f64 / 4.0).sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            sample_std(&ts(&[1.0, 1.0, 1.0, 5.0, 5.0])).unwrap(),
            2.19089,
            epsilon = 1e-5
        );
        assert!(matches!(
            sample_std(&ts(&[4.0; 6])),
            Err(Error::DegenerateVariance)
        ));
    }

    #[test]
    fn weight_vector_matches_pointwise_weight() {
        let n = 37;
        let gamma = g(0.37);
        let w = weight_vector(n, gamma);
        for k in 1..n {
            assert_eq!(w[k - 1], weight(k as f64 / n as f64, gamma).unwrap());
        }
    }
}
