//! Gaussian kernel density estimation on `[0, 1]` with boundary reflection.

use crate::error::{Error, Result};

pub const DEFAULT_GRID: usize = 512;

/// Silverman's rule of thumb, `0.9·min(sd, IQR/1.34)·m^(−1/5)`.
///
/// Falls back to whichever spread measure is positive, and returns 0 for a
/// sample with no spread at all.
pub fn silverman_bandwidth(sample: &[f64]) -> f64 {
    let m = sample.len();
    if m < 2 {
        return 0.0;
    }
    let mean = sample.iter().sum::<f64>() / m as f64;
    let sd = (sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt();
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => 0.0,
    };
    0.9 * spread * (m as f64).powf(-0.2)
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Density of `sample ⊂ [0, 1]` on `grid` equally spaced points, Gaussian
/// kernel, Silverman bandwidth, mirrored at 0 and 1.
///
/// The bandwidth is floored at two grid spacings so that degenerate samples
/// still yield a bump the grid can resolve.
pub fn reflected_kde(sample: &[f64], grid: usize) -> Result<Vec<(f64, f64)>> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("density of an empty sample".into()));
    }
    if grid < 2 {
        return Err(Error::InvalidInput(
            "density grid needs at least 2 points".into(),
        ));
    }
    if let Some(x) = sample.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!(
            "density sample value {x} is outside [0, 1]"
        )));
    }
    let step = 1.0 / (grid - 1) as f64;
    let h = silverman_bandwidth(sample).max(2.0 * step);

    // τ̂ takes few distinct values; collapse to (value, multiplicity)
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for x in sorted {
        match atoms.last_mut() {
            Some((v, c)) if *v == x => *c += 1.0,
            _ => atoms.push((x, 1.0)),
        }
    }

    let norm = 1.0 / (sample.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let kernel = |u: f64| (-0.5 * u * u).exp();
    Ok((0..grid)
        .map(|i| {
            let x = if i == grid - 1 { 1.0 } else { i as f64 * step };
            let f: f64 = atoms
                .iter()
                .map(|&(xi, c)| {
                    c * (kernel((x - xi) / h) + kernel((x + xi) / h) + kernel((x - (2.0 - xi)) / h))
                })
                .sum();
            (x, f * norm)
        })
        .collect())
}

/// Trapezoid integral of a gridded function.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// Trapezoid integral restricted to grid intervals inside `[a, b]`.
pub fn trapezoid_between(points: &[(f64, f64)], a: f64, b: f64) -> f64 {
    points
        .windows(2)
        .filter(|w| w[0].0 >= a - 1e-12 && w[1].0 <= b + 1e-12)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// Grid location of the density maximum (first one on ties).
pub fn mode(points: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, &(x, f)| {
            if f > best.1 {
                (x, f)
            } else {
                best
            }
        })
        .0
}
