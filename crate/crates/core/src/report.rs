//! Schema-versioned JSON report assembled from the analysis results.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::backtest::{CellOutcome, ValidationTable};
use crate::dataset::{FilterSpec, ViewCounts};
use crate::frontier::{CovarianceEstimate, Ellipse, MultivariateFit};
use crate::glq::QecParams;
use crate::trend::{ForecastConfig, MilestoneForecast, UnivariateFit};

pub const SCHEMA: &str = "qc-horizon.report.v1";
pub const REPORT_FILE: &str = "report.v1.json";

/// Reference counts the bundled data is compared against.
pub mod reference {
    use crate::dataset::ViewCounts;

    pub const VIEW_COUNTS: ViewCounts = ViewCounts {
        total: 52,
        both_metrics: 40,
        glq_defined: 12,
    };
    pub const SUPERCONDUCTING_2007_2020: usize = 39;
    pub const MEDIAN_QUBIT_RECORDS: f64 = 11.0;
    pub const MEDIAN_ERROR_RECORDS: f64 = 6.0;
    /// Cell the reference validation table marks as missed.
    pub const SHADED_MISS: (i32, i32) = (2015, 2016);
}

/// Everything needed to rerun an analysis besides the input bytes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    /// `"bundled"` or the path given on the command line.
    pub dataset: String,
    pub filter: FilterSpec,
    pub qec: QecParams,
    pub forecast: ForecastConfig,
    pub seed: u64,
    pub strict: bool,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub digest: String,
    pub counts: ViewCounts,
    pub filtered: ViewCounts,
    pub rejected_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierSection {
    pub fit: MultivariateFit,
    pub covariance: Option<CovarianceEstimate>,
    pub ellipses: Vec<Ellipse>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frontier: Option<FrontierSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forecast: Option<MilestoneForecast>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simple_fit: Option<UnivariateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_band_width_2030: Option<BandComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationTable>,
    /// Human-readable rounding of headline numbers.
    pub display: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandComparison {
    pub year: f64,
    pub gaussian_width: f64,
    pub bootstrap_width: f64,
}

impl ReportDocument {
    pub fn new(config: RunConfig, dataset: DatasetSummary) -> Self {
        ReportDocument {
            schema: SCHEMA,
            tool_version: env!("CARGO_PKG_VERSION"),
            config,
            dataset,
            frontier: None,
            forecast: None,
            simple_fit: None,
            noise_band_width_2030: None,
            validation: None,
            display: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Fills `display` and `warnings` from whatever sections are present.
    pub fn finalize(&mut self) {
        self.display.clear();
        self.warnings.clear();
        self.count_warnings();

        if let Some(fr) = &self.frontier {
            self.display.insert(
                "frontier.slope_ln_qubits".into(),
                format!("{:.3}", fr.fit.b[1][0]),
            );
            self.display.insert(
                "frontier.slope_ln_error".into(),
                format!("{:.3}", fr.fit.b[1][1]),
            );
            self.display.insert(
                "frontier.sigma".into(),
                format!(
                    "[[{:.2}, {:.2}], [{:.2}, {:.2}]]",
                    fr.fit.sigma[0][0], fr.fit.sigma[0][1], fr.fit.sigma[1][0], fr.fit.sigma[1][1]
                ),
            );
            if let Some(cov) = &fr.covariance {
                self.display.insert(
                    "frontier.prob_positive_covariance".into(),
                    format!("{:.1}%", 100.0 * cov.prob_positive),
                );
                self.display.insert(
                    "frontier.covariance_ci".into(),
                    format!("({:.2}, {:.2})", cov.ci_low, cov.ci_high),
                );
                if cov.redraws > 0 {
                    self.warnings.push(format!(
                        "covariance bootstrap redrew {} degenerate resamples",
                        cov.redraws
                    ));
                }
            }
        }

        if let Some(fc) = &self.forecast {
            for tf in &fc.thresholds {
                let parts: Vec<String> = tf
                    .quantiles
                    .iter()
                    .map(|q| {
                        format!(
                            "{:.0}%: {}",
                            q.level * 100.0,
                            q.year.map_or("not reached".to_string(), describe_year)
                        )
                    })
                    .collect();
                self.display
                    .insert(format!("forecast.glq_{}", tf.threshold), parts.join("; "));
                if tf.censored > 0 {
                    self.warnings.push(format!(
                        "{} of {} trajectories never reach {} GLQ by {}",
                        tf.censored,
                        fc.diagnostics.resamples,
                        tf.threshold,
                        fc.diagnostics.search_window.1
                    ));
                }
            }
            let d = &fc.diagnostics;
            self.display.insert(
                "forecast.median_record_counts".into(),
                format!(
                    "qubits {}, error rate {}",
                    d.median_qubit_records, d.median_error_records
                ),
            );
            if d.redraws > 0 {
                self.warnings.push(format!(
                    "forecast bootstrap redrew {} degenerate resamples",
                    d.redraws
                ));
            }
            if d.median_qubit_records != reference::MEDIAN_QUBIT_RECORDS
                || d.median_error_records != reference::MEDIAN_ERROR_RECORDS
            {
                self.warnings.push(format!(
                    "median record counts (qubits {}, error rate {}) differ from the reference ({}, {})",
                    d.median_qubit_records,
                    d.median_error_records,
                    reference::MEDIAN_QUBIT_RECORDS,
                    reference::MEDIAN_ERROR_RECORDS
                ));
            }
        }

        if let Some(b) = &self.noise_band_width_2030 {
            self.display.insert(
                "forecast.band_vs_bootstrap_2030".into(),
                format!("{:.3e} vs {:.3e}", b.gaussian_width, b.bootstrap_width),
            );
            if !(b.gaussian_width < b.bootstrap_width) {
                self.warnings
                    .push("gaussian noise band is not narrower than the bootstrap spread".into());
            }
        }

        if let Some(fit) = &self.simple_fit {
            self.display.insert(
                "simple_fit.slope".into(),
                format!("{:.3} per year", fit.slope),
            );
        }

        if let Some(v) = &self.validation {
            if let Some(rate) = v.coverage_rate {
                self.display.insert(
                    "validation.coverage".into(),
                    format!("{}/{} ({:.0}%)", v.covered, v.scored, rate * 100.0),
                );
            }
            for c in &v.cells {
                if c.target_year <= c.train_end {
                    continue;
                }
                match &c.outcome {
                    CellOutcome::NotApplicable { reason } => self.warnings.push(format!(
                        "validation cell {}->{} not applicable: {reason}",
                        c.train_end, c.target_year
                    )),
                    CellOutcome::Estimated(e) if (c.train_end, c.target_year) == reference::SHADED_MISS && e.covered => {
                        self.warnings.push(format!(
                            "validation cell {}->{} is covered under the interval rule but the reference table marks it missed",
                            c.train_end, c.target_year
                        ))
                    }
                    _ => {}
                }
            }
        }
    }

    fn count_warnings(&mut self) {
        let c = self.dataset.counts;
        let r = reference::VIEW_COUNTS;
        if self.config.dataset == "bundled" && c != r {
            self.warnings.push(format!(
                "view counts (total {}, both metrics {}, GLQ defined {}) differ from the reference ({}, {}, {})",
                c.total, c.both_metrics, c.glq_defined, r.total, r.both_metrics, r.glq_defined
            ));
        }
        if self.dataset.rejected_rows > 0 {
            self.warnings.push(format!(
                "{} input rows rejected; see rejects.csv",
                self.dataset.rejected_rows
            ));
        }
        if let Some(fc) = &self.forecast {
            let n = fc.diagnostics.n_records;
            if self.config.dataset == "bundled"
                && n != reference::SUPERCONDUCTING_2007_2020
                && self
                    .config
                    .forecast
                    .window
                    .is_some_and(|(a, b)| a.floor() == 2007.0 && b.floor() == 2020.0)
            {
                self.warnings.push(format!(
                    "forecast uses {n} records where the reference superconducting 2007-2020 view has {}",
                    reference::SUPERCONDUCTING_2007_2020
                ));
            }
        }
    }
}

/// `2030.2` becomes `"early 2030 (2030.20)"`.
pub fn describe_year(t: f64) -> String {
    let year = t.floor();
    let frac = t - year;
    let part = if frac < 1.0 / 3.0 {
        "early"
    } else if frac < 2.0 / 3.0 {
        "mid"
    } else {
        "late"
    };
    format!("{part} {year:.0} ({t:.2})")
}
