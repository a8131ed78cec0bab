//! The `adacusum` command line.
//!
//! Exit codes:
//!
//! | code | meaning                                                  |
//! |------|----------------------------------------------------------|
//! | 0    | success; for `test`, the null hypothesis is not rejected |
//! | 2    | malformed input, manifest or arguments                   |
//! | 3    | constant series where a standard deviation is needed     |
//! | 4    | configuration error (e.g. Kolmogorov source with g(0)≠0) |
//! | 5    | conflicting critical-value table entry                   |
//! | 6    | no tabulated critical value for the request              |
//! | 7    | I/O failure                                              |
//! | 10   | `test` rejected the null hypothesis                      |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::adaptive::{adaptive_estimate, adaptive_test, QuantileSource};
use crate::critical::{
    default_gamma_grid, mc_quantiles, CriticalValueTable, InsertOutcome, TableEntry,
    DEFAULT_REPLICATIONS, MIN_REPLICATIONS, MIN_SAMPLE_SIZE,
};
use crate::error::{Error, Result};
use crate::experiment::{run_experiment, ExperimentManifest, OutputKind};
use crate::reporting::{
    density_csv, density_plots, emit_plot, mse_csv, mse_plots, table_csv, write_artifact,
};
use crate::rng::Workers;
use crate::stats::{argmax_estimator, cusum_profile, sample_std, TimeSeries, WeightExponent};
use crate::weighting::GCurve;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;
pub const EXIT_CONFLICT: i32 = 5;
pub const EXIT_MISSING_QUANTILE: i32 = 6;
pub const EXIT_IO: i32 = 7;
pub const EXIT_REJECT: i32 = 10;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "adacusum",
    version,
    about = "Weighted CUSUM change-point estimation and testing with data-driven weights"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the change location of a series.
    Estimate(EstimateArgs),
    /// Test a series for a change in mean (exit 10 on rejection).
    Test(TestArgs),
    /// Simulate critical values into a table file.
    Quantile(QuantileArgs),
    /// Run a simulation manifest and write CSV/SVG artifacts.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
#[group(id = "curve", multiple = false)]
pub struct CurveArgs {
    /// Builtin g-curve: i, ii, iii, iv, v, vi or tent.
    #[arg(long = "g", value_name = "CURVE")]
    pub g: Option<String>,

    /// Custom piecewise-linear g-curve from a CSV with header `x,g`.
    #[arg(long = "g-csv", value_name = "PATH")]
    pub g_csv: Option<PathBuf>,
}

impl CurveArgs {
    fn curve(&self) -> Result<Option<GCurve>> {
        match (&self.g, &self.g_csv) {
            (Some(name), _) => Ok(Some(name.parse()?)),
            (None, Some(path)) => Ok(Some(GCurve::from_csv_path(path)?)),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Series CSV: one value per line, or `index,value` rows; header optional.
    pub input: PathBuf,

    #[command(flatten)]
    pub curve: CurveArgs,

    /// Fixed weight exponent in [0, 0.5] instead of a g-curve.
    #[arg(long, conflicts_with = "curve")]
    pub gamma: Option<f64>,

    /// Divide the reported statistic by the sample standard deviation.
    #[arg(long)]
    pub studentize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Kolmogorov,
    Table,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Series CSV: one value per line, or `index,value` rows; header optional.
    pub input: PathBuf,

    #[command(flatten)]
    pub curve: CurveArgs,

    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Where the critical value comes from.
    #[arg(long = "quantile-source", value_enum, default_value_t = SourceArg::Kolmogorov)]
    pub quantile_source: SourceArg,

    /// Critical-value table (required with `--quantile-source table`).
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuantileArgs {
    /// Weight exponent(s): a value, a comma list, or `grid` for 0, 0.05, …, 0.5.
    #[arg(long, default_value = "grid")]
    pub gamma: String,

    /// Sample size(s), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,

    /// Quantile level(s), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.95")]
    pub alpha: Vec<f64>,

    /// Monte Carlo replications.
    #[arg(long = "M", default_value_t = DEFAULT_REPLICATIONS)]
    pub replications: usize,

    #[arg(long, env = "ADACUSUM_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Table file, created or extended in place.
    #[arg(long)]
    pub out: PathBuf,

    /// Replace entries that exist with a different seed or M.
    #[arg(long)]
    pub force: bool,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,

    /// Directory for the CSV and SVG artifacts.
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,

    /// Override the manifest's replication count.
    #[arg(long = "M")]
    pub replications: Option<usize>,

    /// Override the manifest's seed.
    #[arg(long, env = "ADACUSUM_SEED")]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Reads a series from CSV text: a bare column or `index,value` pairs, with
/// an optional header line.
pub fn parse_series(text: &str, context: &str) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            context: context.into(),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = match rec.len() {
            1 => &rec[0],
            2 => &rec[1],
            k => {
                return Err(Error::Parse {
                    context: context.into(),
                    message: format!("line {line}: expected 1 or 2 columns, found {k}"),
                })
            }
        };
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if values.is_empty() && line == 1 => {} // header
            _ => {
                return Err(Error::Parse {
                    context: context.into(),
                    message: format!("line {line}: {field:?} is not a finite number"),
                })
            }
        }
    }
    TimeSeries::new(values)
}

fn read_series(path: &Path) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_series(&text, &path.display().to_string())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_)
        | Error::Domain(_)
        | Error::Parse { .. }
        | Error::Manifest { .. } => EXIT_INPUT,
        Error::DegenerateVariance => EXIT_DEGENERATE,
        Error::Config(_) => EXIT_CONFIG,
        Error::MissingQuantile { .. } => EXIT_MISSING_QUANTILE,
        Error::Io { .. } => EXIT_IO,
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable output");
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

#[derive(Debug, Serialize)]
struct EstimateOutput {
    n: usize,
    theta_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_prelim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    curve: Option<&'static str>,
    gamma_used: f64,
    m_hat: usize,
    tau_hat: f64,
    statistic: f64,
    studentized: bool,
}

fn cmd_estimate(args: &EstimateArgs, out: &mut dyn Write) -> Result<i32> {
    let x = read_series(&args.input)?;
    let p = cusum_profile(&x);
    let output = match (args.gamma, args.curve.curve()?) {
        (Some(gamma), _) => {
            let est = argmax_estimator(&p, WeightExponent::new(gamma)?);
            let statistic = if args.studentize {
                est.statistic / sample_std(&x)?
            } else {
                est.statistic
            };
            EstimateOutput {
                n: x.len(),
                theta_hat: p.theta_hat(),
                tau_prelim: None,
                curve: None,
                gamma_used: gamma,
                m_hat: est.m_hat,
                tau_hat: est.tau_hat,
                statistic,
                studentized: args.studentize,
            }
        }
        (None, Some(g)) => {
            let r = adaptive_estimate(&x, &g, args.studentize)?;
            EstimateOutput {
                n: x.len(),
                theta_hat: p.theta_hat(),
                tau_prelim: Some(r.tau_prelim),
                curve: Some(g.name()),
                gamma_used: r.gamma_hat.value(),
                m_hat: r.estimate.m_hat,
                tau_hat: r.estimate.tau_hat,
                statistic: r.t_adaptive,
                studentized: args.studentize,
            }
        }
        (None, None) => {
            return Err(Error::InvalidInput(
                "one of --g, --g-csv or --gamma is required".into(),
            ))
        }
    };
    print_json(out, &output)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct TestOutput {
    statistic: f64,
    critical_value: f64,
    alpha: f64,
    reject: bool,
    source: &'static str,
    gamma_hat: f64,
    provenance: crate::adaptive::CriticalValueProvenance,
}

fn cmd_test(args: &TestArgs, out: &mut dyn Write) -> Result<i32> {
    let g = args
        .curve
        .curve()?
        .ok_or_else(|| Error::InvalidInput("one of --g or --g-csv is required".into()))?;
    let x = read_series(&args.input)?;
    let table = match (args.quantile_source, &args.table) {
        (SourceArg::Table, Some(path)) => Some(CriticalValueTable::load(path)?),
        (SourceArg::Table, None) => {
            return Err(Error::InvalidInput(
                "--quantile-source table requires --table".into(),
            ))
        }
        (SourceArg::Kolmogorov, _) => None,
    };
    let source = match &table {
        Some(t) => QuantileSource::Table(t),
        None => QuantileSource::Kolmogorov,
    };
    let d = adaptive_test(&x, &g, args.alpha, source)?;
    print_json(
        out,
        &TestOutput {
            statistic: d.statistic,
            critical_value: d.critical_value,
            alpha: d.alpha,
            reject: d.reject,
            source: d.source.name(),
            gamma_hat: d.gamma_hat.value(),
            provenance: d.source,
        },
    )?;
    Ok(if d.reject { EXIT_REJECT } else { EXIT_OK })
}

fn parse_gammas(spec: &str) -> Result<Vec<WeightExponent>> {
    if spec.trim() == "grid" {
        return Ok(default_gamma_grid());
    }
    spec.split(',')
        .map(|s| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("--gamma: {s:?} is not a number")))?;
            WeightExponent::new(v)
        })
        .collect()
}

fn cmd_quantile(args: &QuantileArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let gammas = parse_gammas(&args.gamma)?;
    if args.replications < MIN_REPLICATIONS {
        return Err(Error::InvalidInput(format!(
            "--M {} is below the minimum of {MIN_REPLICATIONS}",
            args.replications
        )));
    }
    if let Some(&n) = args.n.iter().find(|&&n| n < MIN_SAMPLE_SIZE) {
        return Err(Error::InvalidInput(format!(
            "--n {n} is below the minimum of {MIN_SAMPLE_SIZE}"
        )));
    }
    if let Some(a) = args.alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidInput(format!(
            "--alpha {a} is outside (0, 1)"
        )));
    }
    let mut table = if args.out.exists() {
        CriticalValueTable::load(&args.out)?
    } else {
        CriticalValueTable::new(args.seed, args.replications)
    };

    // refuse before simulating anything
    if !args.force {
        for e in &table.entries {
            let requested = gammas.iter().any(|g| g.value() == e.gamma)
                && args.n.contains(&e.n)
                && args.alpha.contains(&e.alpha);
            if requested && (e.seed != args.seed || e.replications != args.replications) {
                writeln!(
                    err,
                    "error: table already holds gamma={}, n={}, alpha={} with seed={}, M={}; use --force to replace",
                    e.gamma, e.n, e.alpha, e.seed, e.replications
                )
                .map_err(|e| Error::io("<stderr>", e))?;
                return Ok(EXIT_CONFLICT);
            }
        }
    }

    let workers = Workers(args.workers);
    let mut built = CriticalValueTable::new(args.seed, args.replications);
    for &n in &args.n {
        let missing: Vec<WeightExponent> = gammas
            .iter()
            .copied()
            .filter(|g| {
                args.alpha.iter().any(|&a| {
                    table
                        .get(g.value(), n, a)
                        .is_none_or(|e| e.seed != args.seed || e.replications != args.replications)
                })
            })
            .collect();
        let fresh: Vec<TableEntry> = if missing.is_empty() {
            Vec::new()
        } else {
            mc_quantiles(
                &missing,
                n,
                &args.alpha,
                args.replications,
                args.seed,
                workers,
            )?
        };
        for e in fresh {
            if table.insert(e, args.force) == InsertOutcome::Conflict {
                return Ok(EXIT_CONFLICT);
            }
        }
        for g in &gammas {
            for &a in &args.alpha {
                if let Some(e) = table.get(g.value(), n, a) {
                    built.insert(*e, true);
                }
            }
        }
    }
    table.save(&args.out)?;
    write!(out, "{}", table_csv(&built)).map_err(|e| Error::io("<stdout>", e))?;
    Ok(EXIT_OK)
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let mut man = ExperimentManifest::from_path(&args.manifest)?;
    if let Some(m) = args.replications {
        man.replications = m;
    }
    if let Some(seed) = args.seed {
        man.seed = seed;
    }
    man.validate()?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let result = run_experiment(&man, Workers(args.workers))?;

    let mut written = Vec::new();
    if man.wants(OutputKind::Mse) {
        let path = args.out_dir.join(format!("{}_mse.csv", man.id));
        write_artifact(&path, &mse_csv(&result))?;
        written.push(path);
        for (slug, spec) in mse_plots(&result) {
            let path = args.out_dir.join(format!("{}_mse_{slug}.svg", man.id));
            emit_plot(&spec, &path)?;
            written.push(path);
        }
    }
    if man.wants(OutputKind::Density) {
        let path = args.out_dir.join(format!("{}_density.csv", man.id));
        write_artifact(&path, &density_csv(&result))?;
        written.push(path);
        for (slug, spec) in density_plots(&result) {
            let path = args.out_dir.join(format!("{}_density_{slug}.svg", man.id));
            emit_plot(&spec, &path)?;
            written.push(path);
        }
    }

    let io = |e| Error::io("<stdout>", e);
    writeln!(
        out,
        "{:<13} {:>6} {:>6} {:>6} {:<10} {:>12} {:>10}",
        "noise", "n", "delta", "tau", "estimator", "mse", "mean_tau"
    )
    .map_err(io)?;
    for c in &result.cells {
        let mse = c.mse.map_or("-".to_string(), |m| format!("{m:.6}"));
        let flag = if c.h0 { " (h0)" } else { "" };
        writeln!(
            out,
            "{:<13} {:>6} {:>6} {:>6} {:<10} {:>12} {:>10.4}{flag}",
            c.noise.name(),
            c.n,
            c.delta,
            c.tau,
            c.estimator,
            mse,
            c.mean_tau_hat
        )
        .map_err(io)?;
    }
    for p in written {
        writeln!(out, "wrote {}", p.display()).map_err(io)?;
    }
    Ok(EXIT_OK)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, out),
        Command::Test(a) => cmd_test(a, out),
        Command::Quantile(a) => cmd_quantile(a, out, err),
        Command::Simulate(a) => cmd_simulate(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_formats() {
        let a = parse_series("1\n1\n1\n5\n5\n", "t").unwrap();
        let b = parse_series("value\n1\n1\n1\n5\n5\n", "t").unwrap();
        let c = parse_series("index,value\n1,1\n2,1\n3,1\n4,5\n5,5\n", "t").unwrap();
        let d = parse_series("0,1\n1,1\n2,1\n3,5\n4,5", "t").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a, d);
    }

    #[test]
    fn malformed_series_reports_line() {
        let e = parse_series("1\n2\nx\n4\n", "t").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert_eq!(exit_code(&e), EXIT_INPUT);
        let e = parse_series("1,2,3\n", "t").unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
        assert!(parse_series("1\nNaN\n", "t").is_err());
        assert!(parse_series("header\n1\n", "t").is_err());
    }

    #[test]
    fn gamma_lists() {
        assert_eq!(parse_gammas("grid").unwrap().len(), 11);
        let v = parse_gammas("0, 0.25,0.5").unwrap();
        assert_eq!(
            v.iter().map(|g| g.value()).collect::<Vec<_>>(),
            vec![0.0, 0.25, 0.5]
        );
        assert!(parse_gammas("0.7").is_err());
        assert!(parse_gammas("a").is_err());
    }

    #[test]
    fn help_documents_flags() {
        for (sub, flags) in [
            (
                "estimate",
                &["--g", "--g-csv", "--gamma", "--studentize"][..],
            ),
            (
                "test",
                &["--g", "--alpha", "--quantile-source", "--table"][..],
            ),
            (
                "quantile",
                &[
                    "--gamma", "--n", "--alpha", "--M", "--seed", "--out", "--force",
                ][..],
            ),
            ("simulate", &["--manifest", "--out-dir", "--M"][..]),
        ] {
            let mut out = Vec::new();
            let mut err = Vec::new();
            let code = run(["adacusum", sub, "--help"], &mut out, &mut err);
            assert_eq!(code, 0);
            let text = String::from_utf8(out).unwrap();
            for f in flags {
                assert!(text.contains(f), "{sub} --help lacks {f}");
            }
        }
    }
}
