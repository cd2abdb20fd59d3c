//! Command-line driver: parses flags, runs the requested pipeline and
//! writes artifacts under the output directory.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::backtest::{rolling_validate, ValidationTable};
use crate::bootstrap::quantile;
use crate::dataset::{
    design_matrices_min, parse_dataset, rejections_csv, to_canonical_csv, Dataset, FilterSpec,
    Ingested, ParseMode, Schema, Technology,
};
use crate::error::{Error, Result};
use crate::frontier::{bootstrap_covariance, conditional_ellipse, fit_design};
use crate::glq::{continuous_code_distance, ln_glq, qec_overhead, QecParams};
use crate::report::{
    BandComparison, DatasetSummary, FrontierSection, ReportDocument, RunConfig, REPORT_FILE,
};
use crate::svg::{render_figure, FigureInputs, FigureKind};
use crate::trend::{
    bootstrap_forecast, fit_trends, gaussian_noise_band, simple_glq_fit, trajectory, Aggregation,
    BandPoint, ForecastConfig, MilestoneForecast, UnivariateFit,
};
use crate::BUNDLED_CSV;

/// Used when neither `--seed` nor `QC_HORIZON_SEED` is given.
pub const DEFAULT_SEED: u64 = 2020;
const BAND_YEAR: f64 = 2030.0;

#[derive(Debug, Parser)]
#[command(
    name = "qc-horizon",
    version,
    about = "Forecast fault-tolerant quantum computing milestones from device history"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate and normalize the dataset; write normalized.csv and rejects.csv.
    Ingest(Common),
    /// Per-system overhead factor, code distance and GLQ.
    Metrics(Common),
    /// Joint log-linear frontier fit with covariance bootstrap.
    Frontier {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        frontier: FrontierArgs,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
    },
    /// Bootstrap milestone crossing dates.
    Forecast {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        forecast: ForecastArgs,
    },
    /// Rolling-origin validation table.
    Validate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        forecast: ForecastArgs,
        #[command(flatten)]
        validation: ValidationArgs,
    },
    /// Render figures as SVG.
    Plot {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        forecast: ForecastArgs,
        #[command(flatten)]
        frontier: FrontierArgs,
        /// Figure to render; repeat for several. Defaults to all.
        #[arg(long = "figure", value_parser = parse_figure)]
        figures: Vec<FigureKind>,
    },
    /// Run every analysis and write the full report with all figures.
    Report {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        forecast: ForecastArgs,
        #[command(flatten)]
        frontier: FrontierArgs,
        #[command(flatten)]
        validation: ValidationArgs,
    },
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Input CSV; the bundled table when omitted.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Comma-separated technology tags.
    #[arg(long = "tech", value_delimiter = ',', value_parser = parse_technology)]
    tech: Vec<Technology>,
    /// First year to include.
    #[arg(long = "from")]
    from: Option<i32>,
    /// Last year to include (whole year).
    #[arg(long = "to")]
    to: Option<i32>,
    #[arg(long = "min-qubits")]
    min_qubits: Option<u64>,
    #[arg(long = "p-th", default_value_t = 1e-2)]
    p_th: f64,
    #[arg(long = "p-l", default_value_t = 1e-18)]
    p_l: f64,
    #[arg(long, env = "QC_HORIZON_SEED")]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Abort on the first invalid row instead of skipping it.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Clone, Args)]
struct ForecastArgs {
    /// Milestone in GLQ; repeatable.
    #[arg(long = "threshold")]
    thresholds: Vec<f64>,
    #[command(flatten)]
    bootstrap: BootstrapArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.5,0.95")]
    quantiles: Vec<f64>,
    #[arg(long, value_enum, default_value_t = AggregationArg::Record)]
    aggregation: AggregationArg,
    /// Last year searched for crossings.
    #[arg(long, default_value_t = 2100.0)]
    horizon: f64,
}

#[derive(Debug, Clone, Args)]
struct BootstrapArgs {
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
}

#[derive(Debug, Clone, Args)]
struct FrontierArgs {
    /// Minimum complete records for the frontier fit.
    #[arg(long = "min-n", default_value_t = 3)]
    min_n: usize,
    #[arg(long = "ellipse-year", default_value_t = 2023.0)]
    ellipse_year: f64,
}

#[derive(Debug, Clone, Args)]
struct ValidationArgs {
    #[arg(
        long = "train-ends",
        value_delimiter = ',',
        default_value = "2018,2017,2016,2015"
    )]
    train_ends: Vec<i32>,
    #[arg(
        long = "targets",
        value_delimiter = ',',
        default_value = "2019,2018,2017,2016"
    )]
    targets: Vec<i32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggregationArg {
    Record,
    Raw,
}

fn parse_technology(s: &str) -> std::result::Result<Technology, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_figure(s: &str) -> std::result::Result<FigureKind, String> {
    s.parse()
}

/// Runs the CLI on `argv` (program name first) and returns the exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) => 2,
                _ => 1,
            }
        }
    }
}

struct Session {
    config: RunConfig,
    ingested: Ingested,
    filtered: Dataset,
    out: PathBuf,
    written: Vec<PathBuf>,
}

impl Session {
    fn open(name: &str, common: &Common, forecast: Option<&ForecastArgs>) -> Result<Session> {
        let qec = QecParams::new(common.p_th, common.p_l)?;
        let seed = common.seed.unwrap_or(DEFAULT_SEED);
        let mode = if common.strict {
            ParseMode::Strict
        } else {
            ParseMode::Lenient
        };
        let (label, text) = match &common.dataset {
            Some(p) => (p.display().to_string(), fs::read_to_string(p)?),
            None => ("bundled".to_string(), BUNDLED_CSV.to_string()),
        };
        let ingested = parse_dataset(&text, &Schema::default(), mode)?;

        let window = match (common.from, common.to) {
            (None, None) => None,
            (from, to) => {
                let lo = from.map_or(1990.0, f64::from);
                let hi = to.map_or(2101.0, |y| f64::from(y) + 364.0 / 365.0);
                Some((lo, hi))
            }
        };
        let mut filter = FilterSpec::default();
        if !common.tech.is_empty() {
            filter = filter.technologies(common.tech.iter().copied());
        }
        if let Some((lo, hi)) = window {
            filter = filter.window(lo, hi)?;
        }
        if let Some(n) = common.min_qubits {
            filter = filter.min_qubits(n);
        }
        let filtered = ingested.dataset.filter(&filter);

        let mut fc = ForecastConfig {
            seed,
            qec: qec.clone(),
            ..ForecastConfig::default()
        };
        if let Some(f) = forecast {
            if !f.thresholds.is_empty() {
                fc.thresholds = f.thresholds.clone();
            }
            fc.resamples = f.bootstrap.resamples;
            fc.quantiles = f.quantiles.clone();
            fc.horizon_end = f.horizon;
            fc.aggregation = match f.aggregation {
                AggregationArg::Record => Aggregation::Record,
                AggregationArg::Raw => Aggregation::Raw,
            };
            fc.window = window;
            fc.validate()?;
        }

        let config = RunConfig {
            command: name.to_string(),
            dataset: label,
            filter,
            qec,
            forecast: fc,
            seed,
            strict: common.strict,
            extra: BTreeMap::new(),
        };
        fs::create_dir_all(&common.out)?;
        Ok(Session {
            config,
            ingested,
            filtered,
            out: common.out.clone(),
            written: Vec::new(),
        })
    }

    fn report(&self) -> ReportDocument {
        let ds = &self.ingested.dataset;
        ReportDocument::new(
            self.config.clone(),
            DatasetSummary {
                digest: ds.provenance().digest.clone(),
                counts: ds.view_counts(&self.config.qec),
                filtered: self.filtered.view_counts(&self.config.qec),
                rejected_rows: self.ingested.rejections.len(),
            },
        )
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    fn write_report(&mut self, mut doc: ReportDocument) -> Result<()> {
        doc.finalize();
        let json = doc.to_json()?;
        self.write(REPORT_FILE, &json)
    }

    fn frontier(&self, args: &FrontierArgs, with_bootstrap: bool) -> Result<FrontierSection> {
        let complete = self
            .filtered
            .filter(&FilterSpec::default().require_error_rate());
        let dm = design_matrices_min(&complete, args.min_n)?;
        let fit = fit_design(&dm)?;
        let covariance = if with_bootstrap {
            Some(bootstrap_covariance(
                &complete,
                self.config.forecast.resamples,
                self.config.seed,
                (0.05, 0.95),
            )?)
        } else {
            None
        };
        let ellipses = [0.1, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|&level| conditional_ellipse(&fit, args.ellipse_year, level))
            .collect::<Result<Vec<_>>>()?;
        Ok(FrontierSection {
            fit,
            covariance,
            ellipses,
        })
    }

    fn forecast(&self) -> Result<MilestoneForecast> {
        bootstrap_forecast(&self.filtered, &self.config.forecast)
    }

    fn band(&self, fc: &MilestoneForecast) -> Result<(Vec<BandPoint>, BandComparison)> {
        let cfg = &self.config.forecast;
        let (fq, fe) = fit_trends(&cfg.windowed(&self.filtered)?, cfg.aggregation)?;
        let start = fc.diagnostics.search_window.0.floor();
        let end = (start + 60.0).min(cfg.horizon_end);
        let years: Vec<f64> = (0..=((end - start) * 4.0) as usize)
            .map(|i| start + 0.25 * i as f64)
            .collect();
        let level = cfg.quantiles[0];
        let band = gaussian_noise_band(&fq, &fe, &cfg.qec, level, &years)?;
        let at = gaussian_noise_band(&fq, &fe, &cfg.qec, level, &[BAND_YEAR])?[0];
        let spread = fc.glq_distribution_at(BAND_YEAR, &cfg.qec);
        let hi = *cfg.quantiles.last().expect("validated");
        let comparison = BandComparison {
            year: BAND_YEAR,
            gaussian_width: at.upper - at.lower,
            bootstrap_width: quantile(&spread, hi) - quantile(&spread, level),
        };
        Ok((band, comparison))
    }

    fn simple_fit(&self) -> Result<UnivariateFit> {
        simple_glq_fit(&self.filtered, &self.config.qec)
    }

    fn validation(&self, args: &ValidationArgs) -> Result<ValidationTable> {
        rolling_validate(
            &self.filtered,
            &args.train_ends,
            &args.targets,
            &self.config.forecast,
        )
    }

    fn trajectories_csv(&self, fc: &MilestoneForecast) -> Result<String> {
        let qec = &self.config.qec;
        let start = fc.diagnostics.search_window.0.floor();
        let end = fc.diagnostics.search_window.1;
        let years: Vec<f64> = (0..=((end - start) * 4.0) as usize)
            .map(|i| start + 0.25 * i as f64)
            .collect();
        let mut header = vec!["year".to_string()];
        let mut columns = Vec::new();
        for tf in &fc.thresholds {
            for r in &tf.representatives {
                header.push(format!("glq_t{}_q{}", tf.threshold, r.level));
                columns.push(trajectory(&r.fit_qubits, &r.fit_error, qec, &years));
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header)?;
        for (i, t) in years.iter().enumerate() {
            let mut row = vec![format!("{t:.2}")];
            row.extend(columns.iter().map(|c| format!("{:e}", c[i].1)));
            w.write_record(&row)?;
        }
        csv_string(w)
    }

    fn metrics_csv(&self) -> Result<String> {
        let qec = &self.config.qec;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "id",
            "fractional_year",
            "technology",
            "physical_qubits",
            "gate_error_rate",
            "qec_overhead",
            "code_distance",
            "glq",
            "glq_defined",
        ])?;
        for r in self.filtered.records() {
            let (f, d, g, defined) = match r.gate_error_rate {
                Some(p) => {
                    let f = qec_overhead(p, qec)
                        .map(|f| format!("{f:e}"))
                        .unwrap_or_default();
                    let d = continuous_code_distance(p, qec)
                        .map(|d| format!("{d}"))
                        .unwrap_or_default();
                    let z = ln_glq(r.ln_qubits(), p.ln(), qec);
                    (
                        f,
                        d,
                        format!("{:e}", z.map_or(0.0, f64::exp)),
                        z.is_some().to_string(),
                    )
                }
                None => (String::new(), String::new(), String::new(), "false".into()),
            };
            w.write_record([
                r.id.clone(),
                format!("{:.4}", r.fractional_year),
                r.technology.to_string(),
                r.physical_qubits.to_string(),
                r.gate_error_rate.map(|p| p.to_string()).unwrap_or_default(),
                f,
                d,
                g,
                defined,
            ])?;
        }
        csv_string(w)
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

fn figure_needs(kind: FigureKind) -> (bool, bool, bool, bool) {
    // (frontier, forecast, band, simple fit)
    match kind {
        FigureKind::FrontierEllipses => (true, false, false, false),
        FigureKind::GlqTrajectories | FigureKind::MetricTrajectories => (false, true, false, false),
        FigureKind::NoiseBand => (false, true, true, false),
        FigureKind::SimpleFit => (false, false, false, true),
        _ => (false, false, false, false),
    }
}

fn execute(command: Command) -> Result<Vec<PathBuf>> {
    let session = match command {
        Command::Ingest(common) => {
            let mut s = Session::open("ingest", &common, None)?;
            let normalized = to_canonical_csv(&s.ingested.dataset)?;
            let rejects = rejections_csv(&s.ingested.rejections)?;
            s.write("normalized.csv", &normalized)?;
            s.write("rejects.csv", &rejects)?;
            let doc = s.report();
            s.write_report(doc)?;
            s
        }
        Command::Metrics(common) => {
            let mut s = Session::open("metrics", &common, None)?;
            let table = s.metrics_csv()?;
            s.write("metrics.csv", &table)?;
            let doc = s.report();
            s.write_report(doc)?;
            s
        }
        Command::Frontier {
            common,
            frontier,
            bootstrap,
        } => {
            let mut s = Session::open("frontier", &common, None)?;
            s.config.forecast.resamples = bootstrap.resamples;
            let section = s.frontier(&frontier, true)?;
            let mut doc = s.report();
            let inputs = FigureInputs {
                qec: s.config.qec.clone(),
                dataset: Some(&s.filtered),
                frontier: Some(&section.fit),
                ellipse_year: frontier.ellipse_year,
                ..FigureInputs::default()
            };
            let svg = render_figure(FigureKind::FrontierEllipses, &inputs)?;
            s.write("frontier-ellipses.svg", &svg)?;
            doc.frontier = Some(section);
            s.write_report(doc)?;
            s
        }
        Command::Forecast { common, forecast } => {
            let mut s = Session::open("forecast", &common, Some(&forecast))?;
            let fc = s.forecast()?;
            let (band, comparison) = s.band(&fc)?;
            let windowed = s.config.forecast.windowed(&s.filtered)?;
            let inputs = FigureInputs {
                qec: s.config.qec.clone(),
                thresholds: s.config.forecast.thresholds.clone(),
                dataset: Some(&windowed),
                forecast: Some(&fc),
                band: Some(&band),
                ..FigureInputs::default()
            };
            let figures: Vec<(FigureKind, String)> = [
                FigureKind::GlqTrajectories,
                FigureKind::MetricTrajectories,
                FigureKind::NoiseBand,
            ]
            .into_iter()
            .map(|k| render_figure(k, &inputs).map(|svg| (k, svg)))
            .collect::<Result<_>>()?;
            let traj = s.trajectories_csv(&fc)?;
            for (k, svg) in figures {
                s.write(&format!("{}.svg", k.as_str()), &svg)?;
            }
            s.write("trajectories.csv", &traj)?;
            let mut doc = s.report();
            doc.forecast = Some(fc);
            doc.noise_band_width_2030 = Some(comparison);
            s.write_report(doc)?;
            s
        }
        Command::Validate {
            common,
            forecast,
            validation,
        } => {
            let mut s = Session::open("validate", &common, Some(&forecast))?;
            let table = s.validation(&validation)?;
            s.write("validation.csv", &table.to_grid_csv())?;
            let mut doc = s.report();
            doc.validation = Some(table);
            s.write_report(doc)?;
            s
        }
        Command::Plot {
            common,
            forecast,
            frontier,
            figures,
        } => {
            let mut s = Session::open("plot", &common, Some(&forecast))?;
            let kinds = if figures.is_empty() {
                FigureKind::ALL.to_vec()
            } else {
                figures
            };
            let any = |i: usize| {
                kinds.iter().any(|&k| {
                    let n = figure_needs(k);
                    [n.0, n.1, n.2, n.3][i]
                })
            };
            let fr = if any(0) {
                Some(s.frontier(&frontier, false)?)
            } else {
                None
            };
            let fc = if any(1) { Some(s.forecast()?) } else { None };
            let band = match (&fc, any(2)) {
                (Some(fc), true) => Some(s.band(fc)?.0),
                _ => None,
            };
            let simple = if any(3) { Some(s.simple_fit()?) } else { None };
            let windowed = s.config.forecast.windowed(&s.filtered)?;
            let inputs = FigureInputs {
                qec: s.config.qec.clone(),
                thresholds: s.config.forecast.thresholds.clone(),
                dataset: Some(&windowed),
                frontier: fr.as_ref().map(|f| &f.fit),
                ellipse_year: frontier.ellipse_year,
                forecast: fc.as_ref(),
                band: band.as_deref(),
                simple_fit: simple.as_ref(),
                ..FigureInputs::default()
            };
            let rendered: Vec<(FigureKind, String)> = kinds
                .iter()
                .map(|&k| render_figure(k, &inputs).map(|svg| (k, svg)))
                .collect::<Result<_>>()?;
            for (k, svg) in rendered {
                s.write(&format!("{}.svg", k.as_str()), &svg)?;
            }
            s
        }
        Command::Report {
            common,
            forecast,
            frontier,
            validation,
        } => {
            let mut s = Session::open("report", &common, Some(&forecast))?;
            let fr = s.frontier(&frontier, true)?;
            let fc = s.forecast()?;
            let (band, comparison) = s.band(&fc)?;
            let simple = s.simple_fit()?;
            let table = s.validation(&validation)?;
            let windowed = s.config.forecast.windowed(&s.filtered)?;
            let rendered: Vec<(FigureKind, String)> = {
                let inputs = FigureInputs {
                    qec: s.config.qec.clone(),
                    thresholds: s.config.forecast.thresholds.clone(),
                    dataset: Some(&windowed),
                    frontier: Some(&fr.fit),
                    ellipse_year: frontier.ellipse_year,
                    forecast: Some(&fc),
                    band: Some(&band),
                    simple_fit: Some(&simple),
                    ..FigureInputs::default()
                };
                FigureKind::ALL
                    .iter()
                    .map(|&k| render_figure(k, &inputs).map(|svg| (k, svg)))
                    .collect::<Result<_>>()?
            };
            for (k, svg) in rendered {
                s.write(&format!("{}.svg", k.as_str()), &svg)?;
            }
            let traj = s.trajectories_csv(&fc)?;
            s.write("trajectories.csv", &traj)?;
            s.write("validation.csv", &table.to_grid_csv())?;
            let mut doc = s.report();
            doc.frontier = Some(fr);
            doc.forecast = Some(fc);
            doc.noise_band_width_2030 = Some(comparison);
            doc.simple_fit = Some(simple);
            doc.validation = Some(table);
            s.write_report(doc)?;
            s
        }
    };
    Ok(session.written)
}
