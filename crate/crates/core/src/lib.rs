//! Weighted CUSUM change-point estimation and testing with a data-driven
//! weight exponent.
//!
//! The pipeline for a series `X_1..X_n`:
//!
//! 1. [`stats::cusum_profile`] computes `S_n(k)` for `k = 1..n−1`;
//! 2. [`adaptive::plugin_tau`] takes the argmax of `w_{1/2}(k/n)·S_n(k)`;
//! 3. a [`weighting::GCurve`] turns that location into `γ̂ = g(τ̂)`;
//! 4. [`adaptive::adaptive_estimate`] and [`adaptive::adaptive_test`] use
//!    `γ̂` for the final estimate and test, with critical values from
//!    [`critical`].
//!
//! [`experiment`] runs seeded Monte Carlo studies of the estimators and
//! [`reporting`] writes their CSV and SVG artifacts.

pub mod adaptive;
pub mod cli;
pub mod critical;
pub mod error;
pub mod experiment;
pub mod kde;
pub mod reporting;
pub mod rng;
pub mod simulation;
pub mod stats;
pub mod weighting;

pub use adaptive::{
    adaptive_estimate, adaptive_test, plugin_gamma, plugin_tau, CriticalValueProvenance,
    PluginResult, QuantileSource, TestDecision,
};
pub use critical::{
    kolmogorov_cdf, kolmogorov_quantile, mc_quantile, table_lookup, CriticalValueTable,
    KolmogorovQuantile, TableEntry,
};
pub use error::{Error, Result};
pub use experiment::{ExperimentManifest, ExperimentResult};
pub use rng::Workers;
pub use simulation::{generate_sample, AmocSpec, Noise};
pub use stats::{
    argmax_estimator, cusum_profile, sample_std, weight, weighted_statistic, ChangePointEstimate,
    CusumProfile, TimeSeries, WeightExponent,
};
pub use weighting::{CurveKind, GCurve};
