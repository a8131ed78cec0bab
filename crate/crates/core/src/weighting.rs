//! g-curves: maps from a preliminary change location `τ̂ ∈ [0,1]` to a weight
//! exponent in `[0, 1/2]`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::WeightExponent;

const ENDPOINT_TOL: f64 = 1e-12;
const CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    /// `g(x) = 0`, the plain CUSUM.
    I,
    /// `g(x) = |x − 0.5|`
    Ii,
    /// `g(x) = 0.5 − 2x(1−x)`
    Iii,
    /// `g(x) = 0.5 − √(x(1−x))`
    Iv,
    /// `g(x) = 0.5 − 2⁷(x(1−x))⁴`
    V,
    /// `g(x) = 1/2`, the fully weighted CUSUM.
    Vi,
    /// `g(x) = min(2x, 2(1−x), 0.5)`; vanishes at both ends.
    Tent,
    /// Piecewise-linear interpolation of user knots.
    Custom,
}

impl CurveKind {
    pub const BUILTINS: [CurveKind; 7] = [
        CurveKind::I,
        CurveKind::Ii,
        CurveKind::Iii,
        CurveKind::Iv,
        CurveKind::V,
        CurveKind::Vi,
        CurveKind::Tent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::I => "i",
            CurveKind::Ii => "ii",
            CurveKind::Iii => "iii",
            CurveKind::Iv => "iv",
            CurveKind::V => "v",
            CurveKind::Vi => "vi",
            CurveKind::Tent => "tent",
            CurveKind::Custom => "custom",
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CurveKind::BUILTINS
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown g-curve {s:?}; expected one of i, ii, iii, iv, v, vi, tent"
                ))
            })
    }
}

/// A validated g-curve.
#[derive(Debug, Clone, PartialEq)]
pub struct GCurve {
    kind: CurveKind,
    knots: Option<Vec<(f64, f64)>>,
    h0_compatible: bool,
}

impl GCurve {
    pub fn builtin(kind: CurveKind) -> Result<Self> {
        if kind == CurveKind::Custom {
            return Err(Error::InvalidInput(
                "custom curves must be built from knots".into(),
            ));
        }
        let mut curve = Self {
            kind,
            knots: None,
            h0_compatible: false,
        };
        curve.h0_compatible = curve.compute_h0_compatible();
        Ok(curve)
    }

    /// Piecewise-linear curve through `knots`. The first knot must sit at
    /// `x = 0`, the last at `x = 1`, abscissae strictly increasing. Ordinates
    /// within 1e-9 outside `[0, 0.5]` are clamped; anything further is rejected.
    pub fn custom(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidInput(
                "a custom g-curve needs at least two knots".into(),
            ));
        }
        if knots.iter().any(|(x, g)| !x.is_finite() || !g.is_finite()) {
            return Err(Error::InvalidInput("g-curve knots must be finite".into()));
        }
        if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
            return Err(Error::InvalidInput(
                "custom g-curve knots must start at x=0 and end at x=1".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput(
                "custom g-curve abscissae must be strictly increasing".into(),
            ));
        }
        let knots = knots
            .into_iter()
            .map(|(x, g)| {
                if (-CLAMP_TOL..=0.5 + CLAMP_TOL).contains(&g) {
                    Ok((x, g.clamp(0.0, 0.5)))
                } else {
                    Err(Error::InvalidInput(format!(
                        "g({x}) = {g} is outside [0, 0.5]"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut curve = Self {
            kind: CurveKind::Custom,
            knots: Some(knots),
            h0_compatible: false,
        };
        curve.h0_compatible = curve.compute_h0_compatible();
        Ok(curve)
    }

    /// Reads a custom curve from a CSV file with an `x,g` header.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, &path.display().to_string())
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R, context: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| parse_err(context, e))?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "g" {
            return Err(Error::Parse {
                context: context.into(),
                message: "expected header `x,g`".into(),
            });
        }
        let mut knots = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| parse_err(context, e))?;
            let line = i + 2;
            let field = |j: usize| -> Result<f64> {
                rec.get(j)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse {
                        context: context.into(),
                        message: format!("line {line}: expected two numbers"),
                    })
            };
            knots.push((field(0)?, field(1)?));
        }
        Self::custom(knots)
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn knots(&self) -> Option<&[(f64, f64)]> {
        self.knots.as_deref()
    }

    /// True iff `g(0) = g(1) = 0`; computed, never asserted by the caller.
    pub fn h0_compatible(&self) -> bool {
        self.h0_compatible
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    fn compute_h0_compatible(&self) -> bool {
        let at = |x| self.eval_unchecked(x).abs() <= ENDPOINT_TOL;
        at(0.0) && at(1.0)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!(
                "g-curve argument {x} is outside [0, 1]"
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluates the curve as a [`WeightExponent`].
    pub fn exponent(&self, x: f64) -> Result<WeightExponent> {
        WeightExponent::new(self.eval(x)?)
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        let q = x * (1.0 - x);
        match self.kind {
            CurveKind::I => 0.0,
            CurveKind::Ii => (x - 0.5).abs(),
            CurveKind::Iii => 0.5 - 2.0 * q,
            CurveKind::Iv => 0.5 - q.sqrt(),
            CurveKind::V => 0.5 - 128.0 * q.powi(4),
            CurveKind::Vi => 0.5,
            CurveKind::Tent => (2.0 * x).min(2.0 * (1.0 - x)).min(0.5),
            CurveKind::Custom => interpolate(self.knots.as_deref().unwrap_or_default(), x),
        }
    }

    /// Largest absolute slope between adjacent points of a uniform grid with
    /// `grid_size` points on `[0, 1]`.
    pub fn lipschitz_estimate(&self, grid_size: usize) -> Result<f64> {
        if grid_size < 2 {
            return Err(Error::InvalidInput("grid_size must be at least 2".into()));
        }
        let step = 1.0 / (grid_size - 1) as f64;
        let mut prev = self.eval_unchecked(0.0);
        let mut best: f64 = 0.0;
        for i in 1..grid_size {
            let x = if i == grid_size - 1 {
                1.0
            } else {
                i as f64 * step
            };
            let cur = self.eval_unchecked(x);
            best = best.max((cur - prev).abs() / step);
            prev = cur;
        }
        Ok(best)
    }

    /// Exact Lipschitz constant for custom curves (largest knot-to-knot slope).
    pub fn knot_lipschitz(&self) -> Option<f64> {
        self.knots.as_ref().map(|k| {
            k.windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max)
        })
    }
}

fn interpolate(knots: &[(f64, f64)], x: f64) -> f64 {
    let idx = knots.partition_point(|&(kx, _)| kx <= x);
    if idx == 0 {
        return knots[0].1;
    }
    if idx >= knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (x0, g0) = knots[idx - 1];
    let (x1, g1) = knots[idx];
    g0 + (g1 - g0) * (x - x0) / (x1 - x0)
}

fn parse_err(context: &str, e: csv::Error) -> Error {
    Error::Parse {
        context: context.into(),
        message: e.to_string(),
    }
}

impl FromStr for GCurve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GCurve::builtin(s.parse()?)
    }
}
