//! At-most-one-change sample generation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Stream};
use crate::stats::TimeSeries;

/// Centered noise family. Each draw has mean zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    /// N(0, 1)
    Gaussian,
    /// Exp(1) − 1
    Exponential1,
    /// Poi(1) − 1
    Poisson1,
    /// U[0, 1] − 1/2
    Uniform01,
}

impl Noise {
    pub const ALL: [Noise; 4] = [
        Noise::Gaussian,
        Noise::Exponential1,
        Noise::Poisson1,
        Noise::Uniform01,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Noise::Gaussian => "gaussian",
            Noise::Exponential1 => "exponential1",
            Noise::Poisson1 => "poisson1",
            Noise::Uniform01 => "uniform01",
        }
    }

    pub fn variance(self) -> f64 {
        match self {
            Noise::Gaussian | Noise::Exponential1 | Noise::Poisson1 => 1.0,
            Noise::Uniform01 => 1.0 / 12.0,
        }
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Noise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Noise::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown noise family {s:?}")))
    }
}

/// One centered draw from `family`.
pub fn noise_draw(family: Noise, rng: &mut Stream) -> f64 {
    match family {
        Noise::Gaussian => rng.sample(StandardNormal),
        Noise::Exponential1 => rng.sample::<f64, _>(Exp1) - 1.0,
        Noise::Poisson1 => poisson1_inversion(rng.random::<f64>()) as f64 - 1.0,
        Noise::Uniform01 => rng.random::<f64>() - 0.5,
    }
}

/// Poisson(1) by sequential search of the CDF.
fn poisson1_inversion(u: f64) -> u32 {
    let mut p = (-1.0f64).exp();
    let mut cdf = p;
    let mut k = 0;
    // P(X > 30) is below 1e-32, far under the resolution of u
    while u > cdf && k < 30 {
        k += 1;
        p /= k as f64;
        cdf += p;
    }
    k
}

/// Parameters of the mean-shift model `X_i = μ + 1{i > m}·δ + ε_i`, `m = ⌊τn⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmocSpec {
    pub n: usize,
    pub mu: f64,
    pub delta: f64,
    pub tau: f64,
    pub noise: Noise,
}

impl AmocSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!(
                "n = {} must be at least 2",
                self.n
            )));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "tau = {} must lie in (0, 1]",
                self.tau
            )));
        }
        if !self.mu.is_finite() || !self.delta.is_finite() {
            return Err(Error::InvalidInput("mu and delta must be finite".into()));
        }
        Ok(())
    }

    /// Last pre-change index `m = ⌊τn⌋` (equal to `n` under no change).
    pub fn change_index(&self) -> usize {
        // the small offset keeps products like 0.29·100 from flooring to 28
        ((self.tau * self.n as f64 + 1e-9).floor() as usize).min(self.n)
    }

    pub fn is_h0(&self) -> bool {
        self.tau >= 1.0 || self.delta == 0.0
    }
}

/// Draws replication `rep` of the model from the `(seed, rep)` stream.
pub fn generate_sample(spec: &AmocSpec, seed: u64, rep: u64) -> Result<TimeSeries> {
    spec.validate()?;
    let mut rng = substream(seed, rep);
    let m = spec.change_index();
    let values = (1..=spec.n)
        .map(|i| {
            let shift = if i > m { spec.delta } else { 0.0 };
            spec.mu + shift + noise_draw(spec.noise, &mut rng)
        })
        .collect();
    TimeSeries::new(values)
}
