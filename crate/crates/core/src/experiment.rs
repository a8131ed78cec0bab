//! Declarative Monte Carlo studies of the rescaled change-point estimator.
//!
//! A manifest names a grid of model settings (noise × n × δ × τ) and a list
//! of g-curves. Every replication draws one sample per grid cell and applies
//! all estimators to that same sample, so estimator comparisons are paired.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptive::plugin_from_profile;
use crate::error::{Error, Result};
use crate::kde::{reflected_kde, DEFAULT_GRID};
use crate::rng::{map_reps, Workers};
use crate::simulation::{generate_sample, AmocSpec, Noise};
use crate::stats::cusum_profile;
use crate::weighting::GCurve;

pub const MIN_MANIFEST_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Mse,
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurveSpec {
    Builtin(String),
    Knots { knots: Vec<(f64, f64)> },
}

impl CurveSpec {
    pub fn build(&self) -> Result<GCurve> {
        match self {
            CurveSpec::Builtin(name) => name.parse(),
            CurveSpec::Knots { knots } => GCurve::custom(knots.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub label: String,
    pub curve: CurveSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub id: String,
    pub n: Vec<usize>,
    pub delta: Vec<f64>,
    pub tau: Vec<f64>,
    pub noise: Vec<Noise>,
    #[serde(default)]
    pub mu: f64,
    pub estimators: Vec<EstimatorSpec>,
    #[serde(rename = "M")]
    pub replications: usize,
    pub seed: u64,
    pub outputs: Vec<OutputKind>,
    #[serde(default = "default_grid")]
    pub density_grid: usize,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

fn bad(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Manifest {
        pointer: pointer.into(),
        message: message.into(),
    }
}

impl ExperimentManifest {
    /// Parses and validates; errors carry a JSON pointer to the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let man: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = json_pointer(e.path());
            bad(pointer, e.into_inner().to_string())
        })?;
        man.validate()?;
        Ok(man)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty()
            || !self
                .id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(bad("/id", "id must be a non-empty slug of [A-Za-z0-9_-]"));
        }
        for (field, len) in [
            ("/n", self.n.len()),
            ("/delta", self.delta.len()),
            ("/tau", self.tau.len()),
            ("/noise", self.noise.len()),
            ("/estimators", self.estimators.len()),
            ("/outputs", self.outputs.len()),
        ] {
            if len == 0 {
                return Err(bad(field, "must not be empty"));
            }
        }
        for (i, &n) in self.n.iter().enumerate() {
            if n < 2 {
                return Err(bad(
                    format!("/n/{i}"),
                    format!("n = {n} must be at least 2"),
                ));
            }
        }
        for (i, d) in self.delta.iter().enumerate() {
            if !d.is_finite() {
                return Err(bad(format!("/delta/{i}"), "delta must be finite"));
            }
        }
        for (i, &t) in self.tau.iter().enumerate() {
            if !(t > 0.0 && t <= 1.0) {
                return Err(bad(
                    format!("/tau/{i}"),
                    format!("tau = {t} must lie in (0, 1]"),
                ));
            }
        }
        if !self.mu.is_finite() {
            return Err(bad("/mu", "mu must be finite"));
        }
        let mut labels = HashSet::new();
        for (i, e) in self.estimators.iter().enumerate() {
            if e.label.is_empty() || !labels.insert(e.label.as_str()) {
                return Err(bad(
                    format!("/estimators/{i}/label"),
                    "labels must be non-empty and unique",
                ));
            }
            e.curve
                .build()
                .map_err(|err| bad(format!("/estimators/{i}/curve"), err.to_string()))?;
        }
        if self.replications < MIN_MANIFEST_REPLICATIONS {
            return Err(bad(
                "/M",
                format!(
                    "M = {} is below the minimum of {MIN_MANIFEST_REPLICATIONS}",
                    self.replications
                ),
            ));
        }
        if self.density_grid < 2 {
            return Err(bad("/density_grid", "density grid needs at least 2 points"));
        }
        Ok(())
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }

    /// Grid cells in lexicographic key order (noise, n, δ, τ).
    pub fn cells(&self) -> Vec<AmocSpec> {
        let mut cells = Vec::new();
        for &noise in &self.noise {
            for &n in &self.n {
                for &delta in &self.delta {
                    for &tau in &self.tau {
                        cells.push(AmocSpec {
                            n,
                            mu: self.mu,
                            delta,
                            tau,
                            noise,
                        });
                    }
                }
            }
        }
        cells.sort_by(|a, b| {
            a.noise
                .name()
                .cmp(b.noise.name())
                .then(a.n.cmp(&b.n))
                .then(a.delta.total_cmp(&b.delta))
                .then(a.tau.total_cmp(&b.tau))
        });
        cells.dedup();
        cells
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Aggregates for one (cell, estimator) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub noise: Noise,
    pub n: usize,
    pub delta: f64,
    pub tau: f64,
    pub estimator: String,
    #[serde(rename = "M")]
    pub replications: usize,
    /// No change in the generated data (τ = 1 or δ = 0): the MSE is against
    /// the nominal τ, not a true change location.
    pub h0: bool,
    pub mean_tau_hat: f64,
    pub mse: Option<f64>,
    pub density: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub id: String,
    pub cells: Vec<CellResult>,
}

/// `τ̂` for every replication of `spec`, one vector per curve.
pub fn simulate_cell(
    spec: &AmocSpec,
    curves: &[GCurve],
    replications: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let per_rep = map_reps(replications, workers, |rep| -> Result<Vec<f64>> {
        let x = generate_sample(spec, seed, rep)?;
        let p = cusum_profile(&x);
        curves
            .iter()
            .map(|g| plugin_from_profile(&p, g).map(|(_, _, est)| est.tau_hat))
            .collect()
    })?;
    let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..curves.len())
        .map(|j| per_rep.iter().map(|row| row[j]).collect())
        .collect())
}

/// Mean of `(τ̂ − τ)²`, summed in replication order.
pub fn mse(tau_hats: &[f64], tau: f64) -> f64 {
    tau_hats.iter().map(|t| (t - tau) * (t - tau)).sum::<f64>() / tau_hats.len() as f64
}

pub fn run_experiment(man: &ExperimentManifest, workers: Workers) -> Result<ExperimentResult> {
    man.validate()?;
    let curves = man
        .estimators
        .iter()
        .map(|e| e.curve.build())
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..curves.len()).collect();
    order.sort_by(|&a, &b| man.estimators[a].label.cmp(&man.estimators[b].label));

    let mut cells = Vec::new();
    for spec in man.cells() {
        let samples = simulate_cell(&spec, &curves, man.replications, man.seed, workers)?;
        for &j in &order {
            let tau_hats = &samples[j];
            let density = if man.wants(OutputKind::Density) {
                Some(reflected_kde(tau_hats, man.density_grid)?)
            } else {
                None
            };
            cells.push(CellResult {
                noise: spec.noise,
                n: spec.n,
                delta: spec.delta,
                tau: spec.tau,
                estimator: man.estimators[j].label.clone(),
                replications: man.replications,
                h0: spec.is_h0(),
                mean_tau_hat: tau_hats.iter().sum::<f64>() / tau_hats.len() as f64,
                mse: man.wants(OutputKind::Mse).then(|| mse(tau_hats, spec.tau)),
                density,
            });
        }
    }
    Ok(ExperimentResult {
        id: man.id.clone(),
        cells,
    })
}

pub fn run_mse_experiment(man: &ExperimentManifest, workers: Workers) -> Result<ExperimentResult> {
    let mut man = man.clone();
    if !man.wants(OutputKind::Mse) {
        man.outputs.push(OutputKind::Mse);
    }
    run_experiment(&man, workers)
}

pub fn run_density_experiment(
    man: &ExperimentManifest,
    workers: Workers,
) -> Result<ExperimentResult> {
    let mut man = man.clone();
    if !man.wants(OutputKind::Density) {
        man.outputs.push(OutputKind::Density);
    }
    run_experiment(&man, workers)
}

impl ExperimentResult {
    pub fn find(
        &self,
        noise: Noise,
        n: usize,
        delta: f64,
        tau: f64,
        estimator: &str,
    ) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            c.noise == noise
                && c.n == n
                && c.delta == delta
                && c.tau == tau
                && c.estimator == estimator
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kde::trapezoid;

    fn manifest(m: usize) -> ExperimentManifest {
        ExperimentManifest {
            id: "unit".into(),
            n: vec![40],
            delta: vec![0.0, 1.0],
            tau: vec![0.5, 0.25],
            noise: vec![Noise::Gaussian],
            mu: 0.0,
            estimators: vec![
                EstimatorSpec {
                    label: "vi".into(),
                    curve: CurveSpec::Builtin("vi".into()),
                },
                EstimatorSpec {
                    label: "i".into(),
                    curve: CurveSpec::Builtin("i".into()),
                },
            ],
            replications: m,
            seed: 5,
            outputs: vec![OutputKind::Mse, OutputKind::Density],
            density_grid: 128,
        }
    }

    #[test]
    fn results_are_ordered_flagged_and_bounded() {
        let r = run_experiment(&manifest(200), Workers::AUTO).unwrap();
        assert_eq!(r.cells.len(), 8);
        let keys: Vec<(f64, f64, &str)> = r
            .cells
            .iter()
            .map(|c| (c.delta, c.tau, c.estimator.as_str()))
            .collect();
        assert_eq!(keys[0], (0.0, 0.25, "i"));
        assert_eq!(keys[1], (0.0, 0.25, "vi"));
        assert_eq!(keys[7], (1.0, 0.5, "vi"));
        for c in &r.cells {
            assert_eq!(c.h0, c.delta == 0.0);
            let mse = c.mse.unwrap();
            assert!((0.0..=1.0).contains(&mse));
            let d = c.density.as_ref().unwrap();
            assert_eq!(d.len(), 128);
            let mass = trapezoid(d);
            assert!((0.99..=1.01).contains(&mass), "{mass}");
        }
    }

    #[test]
    fn runs_are_bit_identical_across_worker_counts() {
        let man = manifest(150);
        let a = run_experiment(&man, Workers::SERIAL).unwrap();
        let b = run_experiment(&man, Workers(Some(4))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mse_only_and_density_only() {
        let mut man = manifest(100);
        man.outputs = vec![OutputKind::Density];
        let r = run_experiment(&man, Workers::AUTO).unwrap();
        assert!(r
            .cells
            .iter()
            .all(|c| c.mse.is_none() && c.density.is_some()));
        let r = run_mse_experiment(&man, Workers::AUTO).unwrap();
        assert!(r.cells.iter().all(|c| c.mse.is_some()));
        man.outputs = vec![OutputKind::Mse];
        let r = run_density_experiment(&man, Workers::AUTO).unwrap();
        assert!(r.cells.iter().all(|c| c.density.is_some()));
    }

    #[test]
    fn manifest_errors_point_at_fields() {
        let ok = serde_json::to_string(&manifest(100)).unwrap();
        assert!(ExperimentManifest::from_json(&ok).is_ok());

        let low_m = ok.replace("\"M\":100", "\"M\":10");
        match ExperimentManifest::from_json(&low_m).unwrap_err() {
            Error::Manifest { pointer, .. } => assert_eq!(pointer, "/M"),
            e => panic!("{e}"),
        }
        let bad_noise = ok.replace("\"gaussian\"", "\"cauchy\"");
        match ExperimentManifest::from_json(&bad_noise).unwrap_err() {
            Error::Manifest { pointer, .. } => assert_eq!(pointer, "/noise/0"),
            e => panic!("{e}"),
        }
        let bad_tau = ok.replace("\"tau\":[0.5,0.25]", "\"tau\":[0.5,1.25]");
        match ExperimentManifest::from_json(&bad_tau).unwrap_err() {
            Error::Manifest { pointer, .. } => assert_eq!(pointer, "/tau/1"),
            e => panic!("{e}"),
        }
        let bad_curve = ok.replace("\"curve\":\"i\"", "\"curve\":\"vii\"");
        match ExperimentManifest::from_json(&bad_curve).unwrap_err() {
            Error::Manifest { pointer, .. } => assert_eq!(pointer, "/estimators/1/curve"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn custom_knot_curves_in_manifests() {
        let text = r#"{"id":"k","n":[30],"delta":[1.0],"tau":[0.5],"noise":["uniform01"],
            "estimators":[{"label":"tri","curve":{"knots":[[0,0],[0.5,0.5],[1,0]]}}],
            "M":100,"seed":1,"outputs":["mse"]}"#;
        let man = ExperimentManifest::from_json(text).unwrap();
        let r = run_experiment(&man, Workers::AUTO).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.cells[0].estimator, "tri");
    }
}
