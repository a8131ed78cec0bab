//! Critical values for the weighted CUSUM test.
//!
//! For `γ = 0` the studentized statistic converges to the supremum of a
//! Brownian bridge, whose law is the Kolmogorov distribution. For `γ > 0`
//! critical values are simulated at the actual sample size under Gaussian
//! noise and stored in a [`CriticalValueTable`].

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{map_reps, substream, Workers};
use crate::stats::{weight_vector, weighted_argmax, WeightExponent};

pub const TABLE_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_REPLICATIONS: usize = 100_000;
pub const MIN_REPLICATIONS: usize = 1_000;
pub const MIN_SAMPLE_SIZE: usize = 10;

const SERIES_EPS: f64 = 1e-16;
const ALPHA_MATCH_TOL: f64 = 1e-9;

/// `K(x) = P(sup|B| ≤ x)` for a standard Brownian bridge `B`.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    kolmogorov_cdf_terms(x).0
}

/// Kolmogorov CDF together with the number of series terms summed.
///
/// Uses `1 − 2 Σ_{j≥1} (−1)^{j−1} exp(−2j²x²)` for `x ≥ 0.5`. Below that the
/// alternating series cancels badly, so the equivalent theta-function form
/// `√(2π)/x Σ_{j≥1} exp(−(2j−1)²π²/(8x²))` is used instead.
pub fn kolmogorov_cdf_terms(x: f64) -> (f64, usize) {
    if x <= 0.04 || x.is_nan() {
        return (0.0, 0);
    }
    let mut sum = 0.0;
    let mut terms = 0;
    if x >= 0.5 {
        let mut sign = 1.0;
        for j in 1.. {
            let j = j as f64;
            let term = (-2.0 * j * j * x * x).exp();
            sum += sign * term;
            sign = -sign;
            terms += 1;
            if term < SERIES_EPS {
                break;
            }
        }
        ((1.0 - 2.0 * sum).clamp(0.0, 1.0), terms)
    } else {
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        for j in 1.. {
            let odd = (2 * j - 1) as f64;
            let term = (-odd * odd * c).exp();
            sum += term;
            terms += 1;
            if term < SERIES_EPS * sum.max(f64::MIN_POSITIVE) || term == 0.0 {
                break;
            }
        }
        (
            ((2.0 * std::f64::consts::PI).sqrt() / x * sum).clamp(0.0, 1.0),
            terms,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KolmogorovQuantile {
    pub alpha: f64,
    pub value: f64,
}

/// Inverts [`kolmogorov_cdf`] by bisection on `[0.04, 10]`.
pub fn kolmogorov_quantile(alpha: f64) -> Result<KolmogorovQuantile> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "quantile level {alpha} is outside (0, 1)"
        )));
    }
    let (mut lo, mut hi) = (0.04, 10.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(KolmogorovQuantile {
        alpha,
        value: 0.5 * (lo + hi),
    })
}

/// One simulated critical value with its Monte Carlo provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub gamma: f64,
    pub n: usize,
    /// Quantile level, e.g. 0.95.
    pub alpha: f64,
    pub value: f64,
    pub stderr: f64,
    #[serde(rename = "M")]
    pub replications: usize,
    pub seed: u64,
}

impl TableEntry {
    fn same_key(&self, other: &TableEntry) -> bool {
        self.gamma == other.gamma && self.n == other.n && self.alpha == other.alpha
    }
}

/// Studentized `T_n(γ)/σ̂` for a standard normal sample of size `n` drawn
/// from replication stream `(seed, rep)`, evaluated for every weight vector.
fn null_statistics(n: usize, seed: u64, rep: u64, weights: &[Vec<f64>]) -> Vec<f64> {
    let mut rng = substream(seed, rep);
    let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    let scale = 1.0 / (n as f64).sqrt();
    let mut partial = 0.0;
    let profile: Vec<f64> = x[..n - 1]
        .iter()
        .map(|v| {
            partial += v - mean;
            partial.abs() * scale
        })
        .collect();
    weights
        .iter()
        .map(|w| weighted_argmax(&profile, w).1 / sd)
        .collect()
}

fn order_statistic_index(m: usize, level: f64) -> usize {
    // ⌈M·level⌉ as a 1-based rank; the offset absorbs products like 0.95·1e5
    // landing a hair above an integer
    ((m as f64 * level - 1e-9).ceil() as usize).clamp(1, m)
}

fn quantile_with_stderr(sorted: &[f64], level: f64) -> (f64, f64) {
    let m = sorted.len();
    let j = order_statistic_index(m, level);
    // distribution-free: the order statistics one binomial SD either side of j
    let d = ((m as f64) * level * (1.0 - level)).sqrt().ceil() as usize;
    let lo = j.saturating_sub(d).max(1);
    let hi = (j + d).min(m);
    let stderr = (sorted[hi - 1] - sorted[lo - 1]) / 2.0;
    (sorted[j - 1], stderr)
}

/// Simulated critical values for every `(γ, level)` pair at sample size `n`.
///
/// All exponents share the same `M` samples, so the returned critical values
/// are nondecreasing in `γ` and in the level.
pub fn mc_quantiles(
    gammas: &[WeightExponent],
    n: usize,
    levels: &[f64],
    replications: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<TableEntry>> {
    if n < MIN_SAMPLE_SIZE {
        return Err(Error::Config(format!(
            "Monte Carlo critical values need n >= {MIN_SAMPLE_SIZE}, got {n}"
        )));
    }
    if replications < MIN_REPLICATIONS {
        return Err(Error::Config(format!(
            "Monte Carlo critical values need M >= {MIN_REPLICATIONS}, got {replications}"
        )));
    }
    if let Some(bad) = levels.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::Domain(format!(
            "quantile level {bad} is outside (0, 1)"
        )));
    }
    let weights: Vec<Vec<f64>> = gammas.iter().map(|&g| weight_vector(n, g)).collect();
    let per_rep = map_reps(replications, workers, |rep| {
        null_statistics(n, seed, rep, &weights)
    })?;

    let mut entries = Vec::with_capacity(gammas.len() * levels.len());
    for (gi, gamma) in gammas.iter().enumerate() {
        let mut column: Vec<f64> = per_rep.iter().map(|row| row[gi]).collect();
        column.sort_by(f64::total_cmp);
        for &level in levels {
            let (value, stderr) = quantile_with_stderr(&column, level);
            entries.push(TableEntry {
                gamma: gamma.value(),
                n,
                alpha: level,
                value,
                stderr,
                replications,
                seed,
            });
        }
    }
    Ok(entries)
}

/// The `⌈M·alpha⌉`-th order statistic of `M` simulated null statistics.
pub fn mc_quantile(
    gamma: WeightExponent,
    n: usize,
    alpha: f64,
    replications: usize,
    seed: u64,
    workers: Workers,
) -> Result<TableEntry> {
    let mut v = mc_quantiles(&[gamma], n, &[alpha], replications, seed, workers)?;
    Ok(v.remove(0))
}

/// `{0, 0.05, …, 0.5}`.
pub fn default_gamma_grid() -> Vec<WeightExponent> {
    (0..=10)
        .map(|i| WeightExponent::new(i as f64 / 20.0).expect("grid lies in [0, 0.5]"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    /// Same key, seed and M already present; nothing changed.
    Identical,
    /// Same key with a different seed or M; replaced only when forced.
    Conflict,
    Replaced,
}

/// Persisted critical values keyed by `(γ, n, level)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueTable {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(rename = "M")]
    pub replications: usize,
    pub noise: String,
    pub studentized: bool,
    pub entries: Vec<TableEntry>,
}

impl CriticalValueTable {
    pub fn new(seed: u64, replications: usize) -> Self {
        Self {
            schema_version: TABLE_SCHEMA_VERSION,
            seed,
            replications,
            noise: "gaussian".into(),
            studentized: true,
            entries: Vec::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            message: e.to_string(),
        })?;
        if table.schema_version != TABLE_SCHEMA_VERSION {
            return Err(Error::Parse {
                context: path.display().to_string(),
                message: format!("unsupported schema version {}", table.schema_version),
            });
        }
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, entry: TableEntry, force: bool) -> InsertOutcome {
        if let Some(existing) = self.entries.iter_mut().find(|e| e.same_key(&entry)) {
            if existing.seed == entry.seed && existing.replications == entry.replications {
                return InsertOutcome::Identical;
            }
            if !force {
                return InsertOutcome::Conflict;
            }
            *existing = entry;
            return InsertOutcome::Replaced;
        }
        self.entries.push(entry);
        self.entries.sort_by(|a, b| {
            a.gamma
                .total_cmp(&b.gamma)
                .then(a.n.cmp(&b.n))
                .then(a.alpha.total_cmp(&b.alpha))
        });
        InsertOutcome::Inserted
    }

    pub fn get(&self, gamma: f64, n: usize, alpha: f64) -> Option<&TableEntry> {
        self.entries
            .iter()
            .find(|e| e.gamma == gamma && e.n == n && e.alpha == alpha)
    }

    /// Nearest tabulated `γ` (ties go to the larger, more conservative one)
    /// among entries with exactly this `n` and level.
    pub fn lookup(&self, gamma: f64, n: usize, alpha: f64) -> Result<&TableEntry> {
        let mut best: Option<&TableEntry> = None;
        for e in self
            .entries
            .iter()
            .filter(|e| e.n == n && (e.alpha - alpha).abs() <= ALPHA_MATCH_TOL)
        {
            best = match best {
                None => Some(e),
                Some(b) => {
                    let (db, de) = ((b.gamma - gamma).abs(), (e.gamma - gamma).abs());
                    let tie = (db - de).abs() <= 1e-12;
                    if (!tie && de < db) || (tie && e.gamma > b.gamma) {
                        Some(e)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best.ok_or(Error::MissingQuantile { gamma, n, alpha })
    }
}

/// Convenience wrapper over [`CriticalValueTable::lookup`].
pub fn table_lookup(t: &CriticalValueTable, gamma: f64, n: usize, alpha: f64) -> Result<f64> {
    if t.is_empty() {
        return Err(Error::MissingQuantile { gamma, n, alpha });
    }
    t.lookup(gamma, n, alpha).map(|e| e.value)
}
