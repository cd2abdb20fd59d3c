//! Rolling-origin validation of the trend model.
//!
//! Each training window ends at a given year; the bootstrap of fitted
//! trends is evaluated at the end of each later target year and its
//! quantiles are compared with the best GLQ actually achieved by then.

use serde::Serialize;

use crate::bootstrap::quantile_sorted;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::glq::QecParams;
use crate::trend::{bootstrap_draws, ForecastConfig};

/// Fractional-year instant at which a target year is scored.
pub fn target_instant(year: i32) -> f64 {
    year as f64 + 1.0
}

/// Best GLQ among records dated before the end of `through_year`, counting
/// above-threshold records as 0.
pub fn actual_record_glq(dataset: &Dataset, through_year: i32, qec: &QecParams) -> f64 {
    let end = target_instant(through_year);
    dataset
        .records()
        .iter()
        .filter(|r| r.fractional_year < end)
        .filter_map(|r| {
            let p = r.gate_error_rate?;
            let ln = crate::glq::ln_glq(r.ln_qubits(), p.ln(), qec)?;
            Some(ln.exp())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellEstimate {
    pub q_low: f64,
    pub q_med: f64,
    pub q_high: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Estimated(CellEstimate),
    NotApplicable { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCell {
    pub train_window: (f64, f64),
    pub train_end: i32,
    pub target_year: i32,
    pub n_train: usize,
    pub actual: f64,
    pub outcome: CellOutcome,
}

impl ValidationCell {
    pub fn estimate(&self) -> Option<&CellEstimate> {
        match &self.outcome {
            CellOutcome::Estimated(e) => Some(e),
            CellOutcome::NotApplicable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationTable {
    pub train_ends: Vec<i32>,
    pub targets: Vec<i32>,
    /// Row-major: one row per training end, one column per target.
    pub cells: Vec<ValidationCell>,
    pub covered: usize,
    pub scored: usize,
    pub coverage_rate: Option<f64>,
    pub quantile_levels: (f64, f64, f64),
}

impl ValidationTable {
    pub fn cell(&self, train_end: i32, target: i32) -> Option<&ValidationCell> {
        self.cells
            .iter()
            .find(|c| c.train_end == train_end && c.target_year == target)
    }

    /// Plain-text grid: rows are training windows, columns target years.
    pub fn to_grid_csv(&self) -> String {
        let mut out = String::from("window,n");
        for t in &self.targets {
            out.push_str(&format!(",{t}"));
        }
        out.push('\n');
        out.push_str("actual,");
        for t in &self.targets {
            let actual = self
                .cells
                .iter()
                .find(|c| c.target_year == *t)
                .map_or(f64::NAN, |c| c.actual);
            out.push_str(&format!(",{actual:.3e}"));
        }
        out.push('\n');
        for &end in &self.train_ends {
            let first = self.cells.iter().find(|c| c.train_end == end);
            let (start, n) = first.map_or((f64::NAN, 0), |c| (c.train_window.0, c.n_train));
            out.push_str(&format!("{:.0}-{end},{n}", start.floor()));
            for &t in &self.targets {
                let text = match self.cell(end, t).map(|c| &c.outcome) {
                    Some(CellOutcome::Estimated(e)) => format!(
                        "{:.3e}; {:.3e}; {:.3e} [{}]",
                        e.q_low,
                        e.q_med,
                        e.q_high,
                        if e.covered { "covered" } else { "missed" }
                    ),
                    _ => "N/A".to_string(),
                };
                out.push_str(&format!(",\"{text}\""));
            }
            out.push('\n');
        }
        out
    }
}

pub fn rolling_validate(
    dataset: &Dataset,
    train_ends: &[i32],
    targets: &[i32],
    config: &ForecastConfig,
) -> Result<ValidationTable> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::InsufficientData {
            needed: 1,
            found: 0,
        });
    }
    let (lo, mid, hi) = (
        config.quantiles[0],
        0.5,
        *config.quantiles.last().expect("validated non-empty"),
    );
    if !(lo <= mid && mid <= hi) {
        return Err(Error::InvalidConfig(
            "validation quantiles must bracket the median".into(),
        ));
    }
    let start = config
        .window
        .map_or(dataset.records()[0].fractional_year, |w| w.0);

    let mut cells = Vec::with_capacity(train_ends.len() * targets.len());
    for &end in train_ends {
        let window = (start, end as f64 + 364.0 / 365.0);
        let row_config = ForecastConfig {
            window: Some(window),
            ..config.clone()
        };
        let n_train = row_config.windowed(dataset)?.len();
        let draws = bootstrap_draws(dataset, &row_config);
        for &target in targets {
            let actual = actual_record_glq(dataset, target, &config.qec);
            let outcome = if target <= end {
                CellOutcome::NotApplicable {
                    reason: "target inside training window".into(),
                }
            } else {
                match &draws {
                    Err(e) => CellOutcome::NotApplicable {
                        reason: e.to_string(),
                    },
                    Ok(set) => {
                        let at = target_instant(target);
                        let mut v: Vec<f64> = set
                            .draws
                            .iter()
                            .map(|d| d.glq_at(at, &config.qec))
                            .collect();
                        v.sort_by(f64::total_cmp);
                        let (q_low, q_med, q_high) = (
                            quantile_sorted(&v, lo),
                            quantile_sorted(&v, mid),
                            quantile_sorted(&v, hi),
                        );
                        CellOutcome::Estimated(CellEstimate {
                            q_low,
                            q_med,
                            q_high,
                            covered: q_low <= actual && actual <= q_high,
                        })
                    }
                }
            };
            cells.push(ValidationCell {
                train_window: window,
                train_end: end,
                target_year: target,
                n_train,
                actual,
                outcome,
            });
        }
    }
    let scored = cells.iter().filter(|c| c.estimate().is_some()).count();
    let covered = cells
        .iter()
        .filter(|c| c.estimate().is_some_and(|e| e.covered))
        .count();
    Ok(ValidationTable {
        train_ends: train_ends.to_vec(),
        targets: targets.to_vec(),
        cells,
        covered,
        scored,
        coverage_rate: (scored > 0).then(|| covered as f64 / scored as f64),
        quantile_levels: (lo, mid, hi),
    })
}
