//! Joint log-linear model of how announcements score on both metrics.
//!
//! Each row of `Y` is `(ln N_P, ln p_P)` for one announcement and each row
//! of `X` is `(1, year)`. The model `Y = X B + noise` with Gaussian noise
//! of covariance `Sigma` is fitted by the closed-form estimators
//! `B = (X'X)^-1 X'Y` and `Sigma = (Y - XB)'(Y - XB) / (n - 2)`.
//! A positive off-diagonal in `Sigma` means that, at a fixed date, more
//! qubits go together with higher error rates.

use std::f64::consts::PI;

use serde::Serialize;

use crate::bootstrap::{self, draw_indices};
use crate::dataset::{design_matrices, Dataset, DesignMatrices};
use crate::error::{Error, Result};
use crate::regression::{center_years, solve_column};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultivariateFit {
    /// Row 0: intercepts, row 1: yearly slopes. Column 0: ln qubits,
    /// column 1: ln error rate. Calendar-year frame.
    pub b: [[f64; 2]; 2],
    pub sigma: [[f64; 2]; 2],
    pub n: usize,
    pub time_offset: f64,
}

impl MultivariateFit {
    /// Conditional mean `B' (1, year)` in log space.
    pub fn predict(&self, year: f64) -> [f64; 2] {
        [
            self.b[0][0] + self.b[1][0] * year,
            self.b[0][1] + self.b[1][1] * year,
        ]
    }

    pub fn covariance(&self) -> f64 {
        self.sigma[0][1]
    }
}

pub fn fit_multivariate(x: &[[f64; 2]], y: &[[f64; 2]]) -> Result<MultivariateFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidConfig(format!(
            "X has {} rows but Y has {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().any(|row| row[0] != 1.0) {
        return Err(Error::InvalidConfig(
            "first column of X must be the intercept 1".into(),
        ));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::SingularDesign);
    }
    let ts: Vec<f64> = x.iter().map(|r| r[1]).collect();
    let c = center_years(&ts)?;

    let mut b = [[0.0; 2]; 2];
    let mut resid: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for col in 0..2 {
        let ys: Vec<f64> = y.iter().map(|r| r[col]).collect();
        let (intercept, slope, r) = solve_column(&ts, &ys, &c);
        b[0][col] = intercept;
        b[1][col] = slope;
        resid[col] = r;
    }
    let dof = (n - 2) as f64;
    let cross = |i: usize, j: usize| {
        resid[i]
            .iter()
            .zip(&resid[j])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / dof
    };
    let off = cross(0, 1);
    Ok(MultivariateFit {
        b,
        sigma: [[cross(0, 0), off], [off, cross(1, 1)]],
        n,
        time_offset: c.mean_t,
    })
}

pub fn fit_design(dm: &DesignMatrices) -> Result<MultivariateFit> {
    fit_multivariate(&dm.x, &dm.y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceEstimate {
    /// Off-diagonal of Sigma on the full sample.
    pub point: f64,
    pub bootstrap_median: f64,
    pub quantiles: (f64, f64),
    pub ci_low: f64,
    pub ci_high: f64,
    /// Fraction of resamples with a strictly positive covariance.
    pub prob_positive: f64,
    pub resamples: usize,
    pub redraws: usize,
    pub seed: u64,
}

/// Naive bootstrap of the metric covariance: resample announcements with
/// replacement, refit, and read off quantiles of the off-diagonal.
pub fn bootstrap_covariance(
    dataset: &Dataset,
    resamples: usize,
    seed: u64,
    quantiles: (f64, f64),
) -> Result<CovarianceEstimate> {
    if resamples < 100 {
        return Err(Error::InvalidConfig(format!(
            "need at least 100 resamples, got {resamples}"
        )));
    }
    let (lo, hi) = quantiles;
    if !(0.0 < lo && lo <= hi && hi < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "bad quantile pair ({lo}, {hi})"
        )));
    }
    let dm = design_matrices(dataset)?;
    let point = fit_design(&dm)?.covariance();
    let n = dm.n();

    let run = bootstrap::run(resamples, seed, |rng| {
        let idx = draw_indices(rng, n);
        let x: Vec<[f64; 2]> = idx.iter().map(|&i| dm.x[i]).collect();
        let y: Vec<[f64; 2]> = idx.iter().map(|&i| dm.y[i]).collect();
        fit_multivariate(&x, &y).ok().map(|f| f.covariance())
    })?;

    let mut covs = run.values;
    covs.sort_by(f64::total_cmp);
    let positive = covs.iter().filter(|&&c| c > 0.0).count();
    Ok(CovarianceEstimate {
        point,
        bootstrap_median: bootstrap::quantile_sorted(&covs, 0.5),
        quantiles,
        ci_low: bootstrap::quantile_sorted(&covs, lo),
        ci_high: bootstrap::quantile_sorted(&covs, hi),
        prob_positive: positive as f64 / covs.len() as f64,
        resamples,
        redraws: run.redraws,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ellipse {
    pub center: [f64; 2],
    /// Major then minor semi-axis.
    pub semi_axes: [f64; 2],
    /// Angle of the major axis from the first coordinate axis, radians.
    pub angle: f64,
    pub level: f64,
}

impl Ellipse {
    /// `k` points on the boundary, starting on the major axis.
    pub fn boundary(&self, k: usize) -> Vec<[f64; 2]> {
        let (s, c) = self.angle.sin_cos();
        (0..k)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / k as f64;
                let (u, v) = (self.semi_axes[0] * th.cos(), self.semi_axes[1] * th.sin());
                [
                    self.center[0] + c * u - s * v,
                    self.center[1] + s * u + c * v,
                ]
            })
            .collect()
    }
}

/// Inverse CDF of the chi-square distribution with two degrees of freedom.
pub fn chi2_2dof_quantile(level: f64) -> f64 {
    -2.0 * (-level).ln_1p()
}

/// Region of the conditional Gaussian at `year` holding probability `level`.
pub fn conditional_ellipse(fit: &MultivariateFit, year: f64, level: f64) -> Result<Ellipse> {
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "ellipse level {level} outside (0, 1)"
        )));
    }
    let [[a, b], [_, c]] = fit.sigma;
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c).powi(2) + b * b).sqrt();
    let (l1, l2) = (mid + rad, mid - rad);
    let scale = a.abs().max(c.abs()).max(f64::MIN_POSITIVE);
    if !(l2 >= -1e-12 * scale) {
        return Err(Error::DegenerateCovariance);
    }
    let r2 = chi2_2dof_quantile(level);
    Ok(Ellipse {
        center: fit.predict(year),
        semi_axes: [(l1.max(0.0) * r2).sqrt(), (l2.max(0.0) * r2).sqrt()],
        angle: 0.5 * (2.0 * b).atan2(a - c),
        level,
    })
}
