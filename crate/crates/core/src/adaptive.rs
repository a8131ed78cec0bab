//! Plug-in weighting: estimate the change location with `γ = 1/2`, map it
//! through a g-curve to `γ̂ = g(τ̂)`, then estimate and test with `γ̂`.

use serde::Serialize;

use crate::critical::{kolmogorov_quantile, CriticalValueTable};
use crate::error::{Error, Result};
use crate::stats::{
    argmax_estimator, cusum_profile, sample_std, weight, ChangePointEstimate, CusumProfile,
    TimeSeries, WeightExponent,
};
use crate::weighting::GCurve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PluginResult {
    /// Rescaled argmax of the `γ = 1/2` statistic.
    pub tau_prelim: f64,
    pub gamma_hat: WeightExponent,
    /// Argmax estimate at `γ̂`.
    pub estimate: ChangePointEstimate,
    /// `T_n(γ̂)`, divided by the sample standard deviation when studentized.
    pub t_adaptive: f64,
    pub studentized: bool,
}

pub fn plugin_tau(x: &TimeSeries) -> f64 {
    argmax_estimator(&cusum_profile(x), WeightExponent::HALF).tau_hat
}

pub fn plugin_gamma(x: &TimeSeries, g: &GCurve) -> Result<WeightExponent> {
    g.exponent(plugin_tau(x))
}

/// Plug-in estimate from an already computed profile; returns `(τ̂, γ̂, estimate)`.
pub fn plugin_from_profile(
    p: &CusumProfile,
    g: &GCurve,
) -> Result<(f64, WeightExponent, ChangePointEstimate)> {
    let tau_prelim = argmax_estimator(p, WeightExponent::HALF).tau_hat;
    let gamma_hat = g.exponent(tau_prelim)?;
    Ok((tau_prelim, gamma_hat, argmax_estimator(p, gamma_hat)))
}

pub fn adaptive_estimate(x: &TimeSeries, g: &GCurve, studentize: bool) -> Result<PluginResult> {
    let p = cusum_profile(x);
    let (tau_prelim, gamma_hat, estimate) = plugin_from_profile(&p, g)?;
    let t_adaptive = if studentize {
        estimate.statistic / sample_std(x)?
    } else {
        estimate.statistic
    };
    Ok(PluginResult {
        tau_prelim,
        gamma_hat,
        estimate,
        t_adaptive,
        studentized: studentize,
    })
}

/// Where a test's critical value comes from.
#[derive(Debug, Clone, Copy)]
pub enum QuantileSource<'a> {
    /// Asymptotic Kolmogorov quantile; only valid for `g(0) = g(1) = 0`.
    Kolmogorov,
    /// Simulated finite-n quantile, nearest tabulated `γ`.
    Table(&'a CriticalValueTable),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CriticalValueProvenance {
    Kolmogorov {
        level: f64,
    },
    Table {
        gamma: f64,
        n: usize,
        level: f64,
        #[serde(rename = "M")]
        replications: usize,
        seed: u64,
    },
}

impl CriticalValueProvenance {
    pub fn name(&self) -> &'static str {
        match self {
            CriticalValueProvenance::Kolmogorov { .. } => "kolmogorov",
            CriticalValueProvenance::Table { .. } => "table",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestDecision {
    /// Studentized `T_n(γ̂)`.
    pub statistic: f64,
    pub critical_value: f64,
    /// Significance level (e.g. 0.05); the critical value is the `1 − alpha` quantile.
    pub alpha: f64,
    pub reject: bool,
    pub gamma_hat: WeightExponent,
    pub source: CriticalValueProvenance,
}

/// Adaptive weighted CUSUM test at significance level `alpha`.
///
/// A constant series has a zero profile; its statistic is reported as 0 and
/// the test does not reject.
pub fn adaptive_test(
    x: &TimeSeries,
    g: &GCurve,
    alpha: f64,
    source: QuantileSource<'_>,
) -> Result<TestDecision> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "significance level {alpha} is outside (0, 1)"
        )));
    }
    let level = 1.0 - alpha;
    if matches!(source, QuantileSource::Kolmogorov) && !g.h0_compatible() {
        return Err(Error::Config(format!(
            "the Kolmogorov quantile requires g(0)=g(1)=0, but curve {} has g(0)={}, g(1)={}",
            g.name(),
            g.eval(0.0)?,
            g.eval(1.0)?
        )));
    }
    let p = cusum_profile(x);
    let (_, gamma_hat, estimate) = plugin_from_profile(&p, g)?;
    let statistic = match sample_std(x) {
        Ok(sd) => estimate.statistic / sd,
        Err(Error::DegenerateVariance) => 0.0,
        Err(e) => return Err(e),
    };
    let (critical_value, provenance) = match source {
        QuantileSource::Kolmogorov => (
            kolmogorov_quantile(level)?.value,
            CriticalValueProvenance::Kolmogorov { level },
        ),
        QuantileSource::Table(table) => {
            let e = table
                .lookup(gamma_hat.value(), x.len(), level)
                .map_err(|_| Error::MissingQuantile {
                    gamma: gamma_hat.value(),
                    n: x.len(),
                    alpha: level,
                })?;
            (
                e.value,
                CriticalValueProvenance::Table {
                    gamma: e.gamma,
                    n: e.n,
                    level: e.alpha,
                    replications: e.replications,
                    seed: e.seed,
                },
            )
        }
    };
    Ok(TestDecision {
        statistic,
        critical_value,
        alpha,
        reject: statistic > critical_value,
        gamma_hat,
        source: provenance,
    })
}

/// `max_k |w_γ(k/n) − 1|`.
pub fn max_weight_deviation(n: usize, gamma: WeightExponent) -> f64 {
    (1..n)
        .map(|k| (weight(k as f64 / n as f64, gamma).expect("k/n in (0,1)") - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `max_k |w_a(k/n) / w_b(k/n) − 1|`.
pub fn max_weight_ratio_deviation(n: usize, a: WeightExponent, b: WeightExponent) -> f64 {
    (1..n)
        .map(|k| {
            let s = k as f64 / n as f64;
            let ratio = weight(s, a).expect("k/n in (0,1)") / weight(s, b).expect("k/n in (0,1)");
            (ratio - 1.0).abs()
        })
        .fold(0.0, f64::max)
}
