//! Plot data for the certificate vectors and the lower-bound envelope table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::rates::{huber_rate, lower_bound_envelope, quadratic_rate};
use crate::recursion::FullCertificate;

/// Rows `(i / (len - 1), v_i / max(v))`.
pub fn normalized_series(v: &[f64]) -> Vec<(f64, f64)> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last = v.len().saturating_sub(1).max(1) as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| (i as f64 / last, x / max))
        .collect()
}

pub fn render_series(rows: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for (t, v) in rows {
        writeln!(out, "{t:?} {v:?}").unwrap();
    }
    out
}

/// Writes `a_NNNNN.dat`, `b_...`, `c_...`, `d_...` into `dir`.
pub fn write_plot_data(cert: &FullCertificate, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let n = cert.n();
    let mut paths = Vec::new();
    for (name, v) in [("a", &cert.a), ("b", &cert.b), ("c", &cert.c), ("d", &cert.d)] {
        let path = dir.join(format!("{name}_N{n:05}.dat"));
        std::fs::write(&path, render_series(&normalized_series(v)))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Uniform grid `lo, lo + step, ...` up to `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    /// Parses `lo:hi:step`.
    pub fn parse(spec: &str) -> Result<Self, String> {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, step] = parts[..] else {
            return Err(format!("grid `{spec}` is not of the form lo:hi:step"));
        };
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
        let grid = Self {
            lo: parse(lo)?,
            hi: parse(hi)?,
            step: parse(step)?,
        };
        if !(grid.step > 0.0) || !(grid.hi >= grid.lo) || !grid.lo.is_finite() || !grid.hi.is_finite() {
            return Err(format!("grid `{spec}` needs lo <= hi and step > 0"));
        }
        Ok(grid)
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeRow {
    pub alpha: f64,
    pub quadratic: f64,
    pub huber: f64,
    pub envelope: f64,
}

pub fn envelope_rows(n: usize, alphas: &[f64]) -> Vec<EnvelopeRow> {
    let env = lower_bound_envelope(n, alphas);
    alphas
        .iter()
        .zip(env)
        .map(|(&alpha, envelope)| EnvelopeRow {
            alpha,
            quadratic: quadratic_rate(n, alpha),
            huber: huber_rate(n, alpha),
            envelope,
        })
        .collect()
}

/// Index of the smallest envelope value (first one on ties).
pub fn argmin(rows: &[EnvelopeRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .min_by(|x, y| x.1.envelope.total_cmp(&y.1.envelope))
        .map(|(i, _)| i)
}
