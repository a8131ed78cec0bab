//! CSV and SVG artifacts.
//!
//! Everything emitted here is a pure function of its input: identical
//! results give byte-identical files. Floats use the shortest decimal form
//! that parses back to the same value.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::critical::CriticalValueTable;
use crate::error::{Error, Result};
use crate::experiment::ExperimentResult;
use crate::simulation::Noise;

pub const MSE_HEADER: [&str; 8] = ["noise", "n", "delta", "tau", "estimator", "M", "mse", "h0"];
pub const DENSITY_HEADER: [&str; 7] = ["noise", "n", "delta", "tau", "estimator", "x", "f"];
pub const TABLE_HEADER: [&str; 7] = ["gamma", "n", "alpha", "value", "stderr", "M", "seed"];

fn num(v: f64) -> String {
    format!("{v}")
}

fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn mse_csv(result: &ExperimentResult) -> String {
    csv_string(
        &MSE_HEADER,
        result.cells.iter().filter_map(|c| {
            c.mse.map(|mse| {
                vec![
                    c.noise.name().to_string(),
                    c.n.to_string(),
                    num(c.delta),
                    num(c.tau),
                    c.estimator.clone(),
                    c.replications.to_string(),
                    num(mse),
                    c.h0.to_string(),
                ]
            })
        }),
    )
}

pub fn density_csv(result: &ExperimentResult) -> String {
    csv_string(
        &DENSITY_HEADER,
        result.cells.iter().flat_map(|c| {
            c.density.iter().flatten().map(move |&(x, f)| {
                vec![
                    c.noise.name().to_string(),
                    c.n.to_string(),
                    num(c.delta),
                    num(c.tau),
                    c.estimator.clone(),
                    num(x),
                    num(f),
                ]
            })
        }),
    )
}

pub fn table_csv(table: &CriticalValueTable) -> String {
    csv_string(
        &TABLE_HEADER,
        table.entries.iter().map(|e| {
            vec![
                num(e.gamma),
                e.n.to_string(),
                num(e.alpha),
                num(e.value),
                num(e.stderr),
                e.replications.to_string(),
                e.seed.to_string(),
            ]
        }),
    )
}

/// A row of an MSE CSV as read back from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub noise: Noise,
    pub n: usize,
    pub delta: f64,
    pub tau: f64,
    pub estimator: String,
    #[serde(rename = "M")]
    pub replications: usize,
    pub mse: f64,
    pub h0: bool,
}

pub fn parse_mse_csv(text: &str) -> Result<Vec<MseRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<MseRow>, _>>()
        .map_err(|e| Error::Parse {
            context: "mse csv".into(),
            message: e.to_string(),
        })
}

pub fn write_artifact(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    MseVsDelta,
    MseVsEstimator,
    DensityOverlay,
    CriticalLines,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Tick labels replacing numeric x ticks at 0, 1, 2, …
    pub x_categories: Option<Vec<String>>,
}

impl PlotSpec {
    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::InvalidInput("plot has no series".into()));
        }
        for s in &self.series {
            if s.x.len() != s.y.len() {
                return Err(Error::InvalidInput(format!(
                    "series {:?} has {} x values but {} y values",
                    s.label,
                    s.x.len(),
                    s.y.len()
                )));
            }
            if s.x.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "series {:?} is empty",
                    s.label
                )));
            }
            if s.x.iter().chain(&s.y).any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "series {:?} has non-finite values",
                    s.label
                )));
            }
        }
        Ok(())
    }

    /// Rejection boundaries `c·(s(1−s))^γ` that the unweighted profile must
    /// cross, one line per `(γ, c)` pair.
    pub fn critical_lines(pairs: &[(f64, f64)]) -> Self {
        let grid: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
        let series = pairs
            .iter()
            .map(|&(gamma, c)| Series {
                label: format!("γ={gamma}, c={c}"),
                x: grid.clone(),
                y: grid
                    .iter()
                    .map(|s| c * (s * (1.0 - s)).powf(gamma))
                    .collect(),
            })
            .collect();
        Self {
            kind: PlotKind::CriticalLines,
            title: "critical boundaries".into(),
            x_label: "s".into(),
            y_label: "c(γ)/w_γ(s)".into(),
            series,
            x_categories: None,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];
const DASHES: [&str; 4] = ["", "6,3", "2,3", "8,3,2,3"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    spec.validate()?;
    const W: f64 = 720.0;
    const H: f64 = 440.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 200.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 60.0;
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;

    let xs = spec.series.iter().flat_map(|s| s.x.iter().copied());
    let ys = spec.series.iter().flat_map(|s| s.y.iter().copied());
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let (y0, y1) = ys.fold((0.0f64, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let mut y1 = y1 * 1.05;
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        xml_escape(&spec.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    // ticks
    let x_ticks: Vec<(f64, String)> = match &spec.x_categories {
        Some(cats) => cats
            .iter()
            .enumerate()
            .map(|(i, c)| (i as f64, c.clone()))
            .collect(),
        None => (0..=5)
            .map(|i| {
                let v = x0 + (x1 - x0) * i as f64 / 5.0;
                (v, tick_label(v))
            })
            .collect(),
    };
    for (v, label) in x_ticks {
        let px = sx(v);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            xml_escape(&label)
        );
    }
    for i in 0..=5 {
        let v = y0 + (y1 - y0) * i as f64 / 5.0;
        let py = sy(v);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 15.0,
        xml_escape(&spec.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        xml_escape(&spec.y_label)
    );

    for (i, s) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = DASHES[(i / PALETTE.len()) % DASHES.len()];
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{dash}""#)
        };
        let points: Vec<String> =
            s.x.iter()
                .zip(&s.y)
                .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{}"/>"#,
            points.join(" ")
        );
        if s.x.len() <= 20 {
            for (&x, &y) in s.x.iter().zip(&s.y) {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                    sx(x),
                    sy(y)
                );
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash_attr}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            xml_escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_plot(spec: &PlotSpec, path: impl AsRef<Path>) -> Result<()> {
    write_artifact(path, &render_svg(spec)?)
}

/// One plot per (noise, n, τ) panel of an MSE result: MSE against δ when the
/// grid has several δ values, otherwise MSE per estimator.
pub fn mse_plots(result: &ExperimentResult) -> Vec<(String, PlotSpec)> {
    let mut panels: Vec<(Noise, usize, u64)> = Vec::new();
    for c in result.cells.iter().filter(|c| c.mse.is_some()) {
        let key = (c.noise, c.n, c.tau.to_bits());
        if !panels.contains(&key) {
            panels.push(key);
        }
    }
    panels
        .into_iter()
        .map(|(noise, n, tau_bits)| {
            let tau = f64::from_bits(tau_bits);
            let cells: Vec<_> = result
                .cells
                .iter()
                .filter(|c| c.noise == noise && c.n == n && c.tau == tau && c.mse.is_some())
                .collect();
            let mut labels: Vec<&str> = Vec::new();
            let mut deltas: Vec<f64> = Vec::new();
            for c in &cells {
                if !labels.contains(&c.estimator.as_str()) {
                    labels.push(&c.estimator);
                }
                if !deltas.contains(&c.delta) {
                    deltas.push(c.delta);
                }
            }
            let slug = format!("{}_n{}_tau{}", noise.name(), n, tau);
            let title = format!("{} noise, n={}, τ={}", noise.name(), n, tau);
            let spec = if deltas.len() > 1 {
                PlotSpec {
                    kind: PlotKind::MseVsDelta,
                    title,
                    x_label: "δ".into(),
                    y_label: "MSE".into(),
                    series: labels
                        .iter()
                        .map(|l| {
                            let pts: Vec<_> = cells.iter().filter(|c| c.estimator == *l).collect();
                            Series {
                                label: (*l).to_string(),
                                x: pts.iter().map(|c| c.delta).collect(),
                                y: pts.iter().map(|c| c.mse.unwrap_or(0.0)).collect(),
                            }
                        })
                        .collect(),
                    x_categories: None,
                }
            } else {
                PlotSpec {
                    kind: PlotKind::MseVsEstimator,
                    title: format!("{title}, δ={}", deltas[0]),
                    x_label: "estimator".into(),
                    y_label: "MSE".into(),
                    series: vec![Series {
                        label: "MSE".into(),
                        x: (0..labels.len()).map(|i| i as f64).collect(),
                        y: labels
                            .iter()
                            .map(|l| {
                                cells
                                    .iter()
                                    .find(|c| c.estimator == *l)
                                    .and_then(|c| c.mse)
                                    .unwrap_or(0.0)
                            })
                            .collect(),
                    }],
                    x_categories: Some(labels.iter().map(|l| l.to_string()).collect()),
                }
            };
            (slug, spec)
        })
        .collect()
}

/// One density overlay per grid cell, a line per estimator.
pub fn density_plots(result: &ExperimentResult) -> Vec<(String, PlotSpec)> {
    let mut out: Vec<(String, PlotSpec)> = Vec::new();
    for c in result.cells.iter().filter(|c| c.density.is_some()) {
        let slug = format!("{}_n{}_delta{}_tau{}", c.noise.name(), c.n, c.delta, c.tau);
        let density = c.density.as_ref().expect("filtered");
        let series = Series {
            label: c.estimator.clone(),
            x: density.iter().map(|p| p.0).collect(),
            y: density.iter().map(|p| p.1).collect(),
        };
        match out.iter_mut().find(|(s, _)| *s == slug) {
            Some((_, spec)) => spec.series.push(series),
            None => out.push((
                slug,
                PlotSpec {
                    kind: PlotKind::DensityOverlay,
                    title: format!(
                        "density of τ̂: {} noise, n={}, δ={}, τ={}",
                        c.noise.name(),
                        c.n,
                        c.delta,
                        c.tau
                    ),
                    x_label: "τ̂".into(),
                    y_label: "density".into(),
                    series: vec![series],
                    x_categories: None,
                },
            )),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::TableEntry;
    use crate::experiment::CellResult;

    fn cell(delta: f64, est: &str, mse: f64) -> CellResult {
        CellResult {
            noise: Noise::Gaussian,
            n: 50,
            delta,
            tau: 0.15,
            estimator: est.into(),
            replications: 1000,
            h0: false,
            mean_tau_hat: 0.2,
            mse: Some(mse),
            density: Some(vec![(0.0, 0.5), (0.5, 1.5), (1.0, 0.5)]),
        }
    }

    #[test]
    fn empty_result_is_header_only() {
        let r = ExperimentResult {
            id: "e".into(),
            cells: vec![],
        };
        assert_eq!(mse_csv(&r), "noise,n,delta,tau,estimator,M,mse,h0\n");
        assert_eq!(density_csv(&r), "noise,n,delta,tau,estimator,x,f\n");
    }

    #[test]
    fn rows_follow_cell_order_and_roundtrip() {
        let r = ExperimentResult {
            id: "e".into(),
            cells: vec![cell(0.3, "i", 0.1 + 0.2), cell(0.4, "i", 1.0 / 3.0)],
        };
        let text = mse_csv(&r);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("gaussian,50,0.3,0.15,i,1000,"));
        assert!(text.ends_with('\n'));
        let back = parse_mse_csv(&text).unwrap();
        assert_eq!(back[0].mse, 0.1 + 0.2);
        assert_eq!(back[1].mse, 1.0 / 3.0);
        assert_eq!(back[1].delta, 0.4);
        assert_eq!(mse_csv(&r), text);
        assert_eq!(density_csv(&r).lines().count(), 7);
    }

    #[test]
    fn labels_are_quoted_when_needed() {
        let r = ExperimentResult {
            id: "e".into(),
            cells: vec![cell(0.3, "a,b", 0.5)],
        };
        assert!(mse_csv(&r).contains("\"a,b\""));
    }

    #[test]
    fn table_csv_columns() {
        let mut t = CriticalValueTable::new(3, 1000);
        t.insert(
            TableEntry {
                gamma: 0.5,
                n: 100,
                alpha: 0.95,
                value: 3.25,
                stderr: 0.01,
                replications: 1000,
                seed: 3,
            },
            false,
        );
        assert_eq!(
            table_csv(&t),
            "gamma,n,alpha,value,stderr,M,seed\n0.5,100,0.95,3.25,0.01,1000,3\n"
        );
    }

    #[test]
    fn critical_lines_geometry() {
        let spec = PlotSpec::critical_lines(&[(0.0, 1.358), (0.5, 3.241)]);
        assert!(spec.series[0].y.iter().all(|&y| y == 1.358));
        let peak = spec.series[1]
            .y
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((peak - 3.241 / 2.0).abs() < 1e-12);
        let mid = spec.series[1].x.iter().position(|&s| s == 0.5).unwrap();
        assert_eq!(spec.series[1].y[mid], peak);
        let svg = render_svg(&spec).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("γ=0.5, c=3.241"));
        assert_eq!(render_svg(&spec).unwrap(), svg);
    }

    #[test]
    fn invalid_plots() {
        let mut spec = PlotSpec::critical_lines(&[]);
        assert!(render_svg(&spec).is_err());
        spec.series.push(Series {
            label: "x".into(),
            x: vec![0.0, 1.0],
            y: vec![1.0],
        });
        assert!(render_svg(&spec).is_err());
        spec.series[0].y.push(f64::NAN);
        assert!(render_svg(&spec).is_err());
    }

    #[test]
    fn plots_from_results() {
        let r = ExperimentResult {
            id: "e".into(),
            cells: vec![
                cell(0.3, "i", 0.1),
                cell(0.3, "vi", 0.2),
                cell(0.4, "i", 0.05),
                cell(0.4, "vi", 0.1),
            ],
        };
        let mse = mse_plots(&r);
        assert_eq!(mse.len(), 1);
        assert_eq!(mse[0].1.kind, PlotKind::MseVsDelta);
        assert_eq!(mse[0].1.series.len(), 2);
        let dens = density_plots(&r);
        assert_eq!(dens.len(), 2);
        assert_eq!(dens[0].1.series.len(), 2);
        for (_, p) in mse.iter().chain(&dens) {
            render_svg(p).unwrap();
        }
    }
}
