//! Record-based extrapolation of the two metrics and milestone crossing
//! dates for the combined GLQ index.
//!
//! For each metric only announcements that strictly beat the best value
//! seen so far are kept (max for qubit counts, min for error rates). Each
//! record series gets its own log-linear fit, the two median trajectories
//! are pushed through the GLQ map, and the first date the result exceeds
//! a threshold is the crossing time. Bootstrapping the announcements gives
//! a distribution over crossing times.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bootstrap::{self, draw_indices};
use crate::dataset::{Dataset, FilterSpec};
use crate::error::{Error, Result};
use crate::glq::{glq_from_logs, ln_glq, QecParams, DEFAULT_THRESHOLDS};
use crate::regression::fit_line;

/// Coarse scan step for crossing searches, one week in years.
pub const SCAN_STEP: f64 = 7.0 / 365.0;
/// Default bisection tolerance, about an hour in years.
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Max,
    Min,
}

impl Orientation {
    fn improves(self, candidate: f64, best: f64) -> bool {
        match self {
            Orientation::Max => candidate > best,
            Orientation::Min => candidate < best,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordSeries {
    pub points: Vec<(f64, f64)>,
    pub orientation: Orientation,
}

impl RecordSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Best-so-far subsequence. Points are scanned by year with a stable sort,
/// so same-date points keep their input order; ties in value never enter.
pub fn extract_records(points: &[(f64, f64)], orientation: Orientation) -> RecordSeries {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (t, v) in sorted {
        if out
            .last()
            .is_none_or(|&(_, best)| orientation.improves(v, best))
        {
            out.push((t, v));
        }
    }
    RecordSeries {
        points: out,
        orientation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnivariateFit {
    /// Log units.
    pub intercept: f64,
    /// Log units per year.
    pub slope: f64,
    /// Residual variance with an `n - 1` divisor.
    pub sigma2: f64,
    pub n_records: usize,
}

impl UnivariateFit {
    pub fn predict(&self, year: f64) -> f64 {
        self.intercept + self.slope * year
    }
}

/// Log-linear fit to arbitrary `(year, log value)` points.
pub fn fit_points(points: &[(f64, f64)]) -> Result<UnivariateFit> {
    let line = fit_line(points)?;
    Ok(UnivariateFit {
        intercept: line.intercept,
        slope: line.slope,
        sigma2: line.rss / (line.n - 1) as f64,
        n_records: line.n,
    })
}

pub fn fit_loglinear(series: &RecordSeries) -> Result<UnivariateFit> {
    fit_points(&series.points)
}

/// Earliest `t` in `window` with `GLQ(t) > threshold`, or `None`.
///
/// The GLQ trajectory is 0 wherever the error trend sits at or above
/// threshold, so it is only piecewise smooth. A weekly scan brackets the
/// first crossing and bisection refines it to `tol`.
pub fn crossing_time(
    fit_qubits: &UnivariateFit,
    fit_error: &UnivariateFit,
    qec: &QecParams,
    threshold: f64,
    window: (f64, f64),
    tol: f64,
) -> Option<f64> {
    let (t0, t1) = window;
    let ln_threshold = threshold.ln();
    let above = |t: f64| {
        ln_glq(fit_qubits.predict(t), fit_error.predict(t), qec).is_some_and(|z| z > ln_threshold)
    };
    if above(t0) {
        return Some(t0);
    }
    let steps = ((t1 - t0) / SCAN_STEP).ceil() as usize;
    let mut lo = t0;
    for i in 1..=steps {
        let t = (t0 + i as f64 * SCAN_STEP).min(t1);
        if above(t) {
            let mut hi = t;
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if above(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        lo = t;
    }
    None
}

/// GLQ along the median trajectory of two fits.
pub fn trajectory(
    fit_qubits: &UnivariateFit,
    fit_error: &UnivariateFit,
    qec: &QecParams,
    grid: &[f64],
) -> Vec<(f64, f64)> {
    grid.iter()
        .map(|&t| {
            (
                t,
                glq_from_logs(fit_qubits.predict(t), fit_error.predict(t), qec),
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Best-so-far records only.
    #[default]
    Record,
    /// Every announcement.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastConfig {
    pub thresholds: Vec<f64>,
    pub resamples: usize,
    pub seed: u64,
    pub quantiles: Vec<f64>,
    pub horizon_end: f64,
    pub aggregation: Aggregation,
    /// Inclusive date window applied before resampling.
    pub window: Option<(f64, f64)>,
    pub qec: QecParams,
    pub tolerance: f64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            resamples: 1000,
            seed: 0,
            quantiles: vec![0.05, 0.5, 0.95],
            horizon_end: 2100.0,
            aggregation: Aggregation::Record,
            window: None,
            qec: QecParams::default(),
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl ForecastConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.thresholds.is_empty() || self.thresholds.iter().any(|&g| !(g > 0.0)) {
            return bad(format!(
                "thresholds must be positive: {:?}",
                self.thresholds
            ));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "thresholds must be ascending: {:?}",
                self.thresholds
            ));
        }
        if self.quantiles.is_empty() || self.quantiles.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
            return bad(format!(
                "quantiles must lie in (0, 1): {:?}",
                self.quantiles
            ));
        }
        if self.quantiles.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("quantiles must be ascending: {:?}", self.quantiles));
        }
        if self.resamples == 0 {
            return bad("resamples must be positive".into());
        }
        if !(self.tolerance > 0.0) {
            return bad(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            ));
        }
        if let Some((a, b)) = self.window {
            if a > b {
                return bad(format!("window start {a} after end {b}"));
            }
        }
        self.qec.validate()
    }

    pub(crate) fn windowed(&self, dataset: &Dataset) -> Result<Dataset> {
        Ok(match self.window {
            Some((a, b)) => dataset.filter(&FilterSpec::default().window(a, b)?),
            None => dataset.clone(),
        })
    }
}

/// One bootstrap replicate: the two fitted trends and their crossings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapDraw {
    pub index: usize,
    pub fit_qubits: UnivariateFit,
    pub fit_error: UnivariateFit,
    /// Per threshold, in config order; `None` when not reached by the horizon.
    pub crossings: Vec<Option<f64>>,
}

impl BootstrapDraw {
    pub fn glq_at(&self, year: f64, qec: &QecParams) -> f64 {
        glq_from_logs(
            self.fit_qubits.predict(year),
            self.fit_error.predict(year),
            qec,
        )
    }
}

pub(crate) struct DrawSet {
    pub draws: Vec<BootstrapDraw>,
    pub redraws: usize,
    pub search_window: (f64, f64),
}

type Points = Vec<(f64, f64)>;

fn metric_points(dataset: &Dataset, idx: &[usize], aggregation: Aggregation) -> (Points, Points) {
    let records = dataset.records();
    let qubits: Points = idx
        .iter()
        .map(|&i| (records[i].fractional_year, records[i].ln_qubits()))
        .collect();
    let errors: Points = idx
        .iter()
        .filter_map(|&i| {
            records[i]
                .gate_error_rate
                .map(|p| (records[i].fractional_year, p.ln()))
        })
        .collect();
    match aggregation {
        Aggregation::Raw => (qubits, errors),
        Aggregation::Record => (
            extract_records(&qubits, Orientation::Max).points,
            extract_records(&errors, Orientation::Min).points,
        ),
    }
}

/// Fits both trends on the full (already windowed) data, no resampling.
pub fn fit_trends(
    dataset: &Dataset,
    aggregation: Aggregation,
) -> Result<(UnivariateFit, UnivariateFit)> {
    let idx: Vec<usize> = (0..dataset.len()).collect();
    let (q, e) = metric_points(dataset, &idx, aggregation);
    Ok((fit_points(&q)?, fit_points(&e)?))
}

pub(crate) fn bootstrap_draws(dataset: &Dataset, config: &ForecastConfig) -> Result<DrawSet> {
    config.validate()?;
    let data = config.windowed(dataset)?;
    if data.is_empty() {
        return Err(Error::InsufficientData {
            needed: 1,
            found: 0,
        });
    }
    // Fail early with a clear error when even the full sample cannot be fitted.
    fit_trends(&data, config.aggregation)?;

    let start = data.records()[0].fractional_year;
    if !(config.horizon_end > start) {
        return Err(Error::InvalidConfig(format!(
            "horizon {} precedes data start {start}",
            config.horizon_end
        )));
    }
    let search_window = (start, config.horizon_end);
    let n = data.len();
    let run = bootstrap::run(config.resamples, config.seed, |rng| {
        let idx = draw_indices(rng, n);
        let (q, e) = metric_points(&data, &idx, config.aggregation);
        let fit_qubits = fit_points(&q).ok()?;
        let fit_error = fit_points(&e).ok()?;
        let crossings = config
            .thresholds
            .iter()
            .map(|&g| {
                crossing_time(
                    &fit_qubits,
                    &fit_error,
                    &config.qec,
                    g,
                    search_window,
                    config.tolerance,
                )
            })
            .collect();
        Some((fit_qubits, fit_error, crossings))
    })?;
    let draws = run
        .values
        .into_iter()
        .enumerate()
        .map(
            |(index, (fit_qubits, fit_error, crossings))| BootstrapDraw {
                index,
                fit_qubits,
                fit_error,
                crossings,
            },
        )
        .collect();
    Ok(DrawSet {
        draws,
        redraws: run.redraws,
        search_window,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingQuantile {
    pub level: f64,
    /// `None` when the quantile falls among horizon-censored draws.
    pub year: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Representative {
    pub level: f64,
    pub resample: usize,
    pub crossing: Option<f64>,
    pub fit_qubits: UnivariateFit,
    pub fit_error: UnivariateFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdForecast {
    pub threshold: f64,
    pub quantiles: Vec<CrossingQuantile>,
    pub representatives: Vec<Representative>,
    /// Draws not crossing by the horizon.
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastDiagnostics {
    pub n_records: usize,
    pub n_with_error_rate: usize,
    pub resamples: usize,
    pub redraws: usize,
    pub median_qubit_records: f64,
    pub median_error_records: f64,
    pub search_window: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MilestoneForecast {
    pub aggregation: Aggregation,
    pub thresholds: Vec<ThresholdForecast>,
    pub diagnostics: ForecastDiagnostics,
    #[serde(skip)]
    pub draws: Vec<BootstrapDraw>,
}

impl MilestoneForecast {
    pub fn threshold(&self, g: f64) -> Option<&ThresholdForecast> {
        self.thresholds.iter().find(|t| t.threshold == g)
    }

    /// GLQ values of every draw at `year`, sorted ascending.
    pub fn glq_distribution_at(&self, year: f64, qec: &QecParams) -> Vec<f64> {
        let mut v: Vec<f64> = self.draws.iter().map(|d| d.glq_at(year, qec)).collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

fn as_year(t: f64) -> Option<f64> {
    t.is_finite().then_some(t)
}

/// Draw whose crossing is nearest the target quantile; ties go to the
/// lower resample index.
fn nearest_draw(crossings: &[f64], target: f64) -> usize {
    let distance = |t: f64| match (t.is_finite(), target.is_finite()) {
        (true, true) => (t - target).abs(),
        (false, false) => 0.0,
        _ => f64::INFINITY,
    };
    let mut best = 0;
    for (i, &t) in crossings.iter().enumerate() {
        if distance(t) < distance(crossings[best]) {
            best = i;
        }
    }
    best
}

pub fn bootstrap_forecast(dataset: &Dataset, config: &ForecastConfig) -> Result<MilestoneForecast> {
    let set = bootstrap_draws(dataset, config)?;
    let data = config.windowed(dataset)?;

    let mut thresholds = Vec::with_capacity(config.thresholds.len());
    for (k, &g) in config.thresholds.iter().enumerate() {
        let crossings: Vec<f64> = set
            .draws
            .iter()
            .map(|d| d.crossings[k].unwrap_or(f64::INFINITY))
            .collect();
        let mut sorted = crossings.clone();
        sorted.sort_by(f64::total_cmp);
        let quantiles: Vec<CrossingQuantile> = config
            .quantiles
            .iter()
            .map(|&level| CrossingQuantile {
                level,
                year: as_year(bootstrap::quantile_sorted(&sorted, level)),
            })
            .collect();
        let representatives = quantiles
            .iter()
            .map(|q| {
                let i = nearest_draw(&crossings, q.year.unwrap_or(f64::INFINITY));
                let d = &set.draws[i];
                Representative {
                    level: q.level,
                    resample: d.index,
                    crossing: d.crossings[k],
                    fit_qubits: d.fit_qubits,
                    fit_error: d.fit_error,
                }
            })
            .collect();
        thresholds.push(ThresholdForecast {
            threshold: g,
            quantiles,
            representatives,
            censored: crossings.iter().filter(|t| t.is_infinite()).count(),
        });
    }

    let q_counts: Vec<usize> = set.draws.iter().map(|d| d.fit_qubits.n_records).collect();
    let e_counts: Vec<usize> = set.draws.iter().map(|d| d.fit_error.n_records).collect();
    let diagnostics = ForecastDiagnostics {
        n_records: data.len(),
        n_with_error_rate: data
            .records()
            .iter()
            .filter(|r| r.gate_error_rate.is_some())
            .count(),
        resamples: config.resamples,
        redraws: set.redraws,
        median_qubit_records: bootstrap::median_usize(&q_counts),
        median_error_records: bootstrap::median_usize(&e_counts),
        search_window: set.search_window,
    };
    Ok(MilestoneForecast {
        aggregation: config.aggregation,
        thresholds,
        diagnostics,
        draws: set.draws,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPoint {
    pub year: f64,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
}

/// Gaussian residual-noise band around one pair of fitted trends.
///
/// `level` is the lower quantile (0.05 gives a 5-95% band). Each metric's
/// log prediction is shifted by `z * sigma`, in the favorable direction
/// for the upper curve and the unfavorable one for the lower curve.
pub fn gaussian_noise_band(
    fit_qubits: &UnivariateFit,
    fit_error: &UnivariateFit,
    qec: &QecParams,
    level: f64,
    grid: &[f64],
) -> Result<Vec<BandPoint>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "band level {level} outside (0, 1)"
        )));
    }
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(level)
        .abs();
    let dq = z * fit_qubits.sigma2.sqrt();
    let de = z * fit_error.sigma2.sqrt();
    Ok(grid
        .iter()
        .map(|&t| {
            let (lq, le) = (fit_qubits.predict(t), fit_error.predict(t));
            BandPoint {
                year: t,
                lower: glq_from_logs(lq - dq, le + de, qec),
                median: glq_from_logs(lq, le, qec),
                upper: glq_from_logs(lq + dq, le - de, qec),
            }
        })
        .collect())
}

/// Direct log-linear fit of GLQ against year over records below threshold.
pub fn simple_glq_fit(dataset: &Dataset, qec: &QecParams) -> Result<UnivariateFit> {
    let points: Vec<(f64, f64)> = dataset
        .records()
        .iter()
        .filter_map(|r| {
            let p = r.gate_error_rate?;
            (p < qec.p_th)
                .then(|| ln_glq(r.ln_qubits(), p.ln(), qec))
                .flatten()
                .map(|z| (r.fractional_year, z))
        })
        .collect();
    fit_points(&points)
}
