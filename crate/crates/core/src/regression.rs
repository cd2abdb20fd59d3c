//! Closed-form least squares on a year column.
//!
//! Years sit near 2000 while their spread is a few units, so the raw
//! normal equations are badly conditioned. Everything here centers the
//! year at its sample mean, solves, and maps the intercept back to the
//! calendar frame.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Residual sum of squares.
    pub rss: f64,
    pub n: usize,
    /// Mean year used for centering.
    pub time_offset: f64,
}

pub(crate) struct Centered {
    pub mean_t: f64,
    pub stt: f64,
}

pub(crate) fn center_years(ts: &[f64]) -> Result<Centered> {
    let n = ts.len() as f64;
    let mean_t = ts.iter().sum::<f64>() / n;
    let stt: f64 = ts.iter().map(|t| (t - mean_t).powi(2)).sum();
    // Relative to the year magnitude, anything this small is a repeated date.
    if !(stt > 1e-18 * mean_t.abs().max(1.0).powi(2)) {
        return Err(Error::SingularDesign);
    }
    Ok(Centered { mean_t, stt })
}

/// Regresses `ys` on `(1, ts)`; returns coefficients and residuals.
pub(crate) fn solve_column(ts: &[f64], ys: &[f64], c: &Centered) -> (f64, f64, Vec<f64>) {
    let n = ts.len() as f64;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sty: f64 = ts
        .iter()
        .zip(ys)
        .map(|(t, y)| (t - c.mean_t) * (y - mean_y))
        .sum();
    let slope = sty / c.stt;
    let intercept = mean_y - slope * c.mean_t;
    let resid = ts
        .iter()
        .zip(ys)
        .map(|(t, y)| (y - mean_y) - slope * (t - c.mean_t))
        .collect();
    (intercept, slope, resid)
}

/// Ordinary least-squares line through `(t, y)` points.
pub fn fit_line(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientRecords {
            needed: 2,
            found: points.len(),
        });
    }
    let (ts, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let c = center_years(&ts).map_err(|_| Error::InsufficientRecords {
        needed: 2,
        found: 1,
    })?;
    let (intercept, slope, resid) = solve_column(&ts, &ys, &c);
    Ok(LineFit {
        intercept,
        slope,
        rss: resid.iter().map(|r| r * r).sum(),
        n: points.len(),
        time_offset: c.mean_t,
    })
}
