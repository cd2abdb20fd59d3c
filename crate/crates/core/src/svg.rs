//! Dependency-free SVG figures.
//!
//! All coordinates are written with two decimals and layers are emitted in
//! a fixed order, so identical inputs always give identical bytes.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::frontier::{conditional_ellipse, MultivariateFit};
use crate::glq::{glq_threshold_curve, ln_glq, QecParams};
use crate::trend::{
    extract_records, trajectory, BandPoint, MilestoneForecast, Orientation, UnivariateFit,
};

const WIDTH: f64 = 760.0;
const PANEL_HEIGHT: f64 = 460.0;
const MARGIN_LEFT: f64 = 84.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 58.0;

/// Curve colors for the low, middle and high quantile.
const QUANTILE_COLORS: [&str; 3] = ["#d62728", "#ff7f0e", "#1f77b4"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FigureKind {
    GlqContour,
    HistoryQubits,
    HistoryError,
    HistoryGlq,
    Tradeoff,
    FrontierEllipses,
    GlqTrajectories,
    MetricTrajectories,
    NoiseBand,
    SimpleFit,
}

impl FigureKind {
    pub const ALL: [FigureKind; 10] = [
        FigureKind::GlqContour,
        FigureKind::HistoryQubits,
        FigureKind::HistoryError,
        FigureKind::HistoryGlq,
        FigureKind::Tradeoff,
        FigureKind::FrontierEllipses,
        FigureKind::GlqTrajectories,
        FigureKind::MetricTrajectories,
        FigureKind::NoiseBand,
        FigureKind::SimpleFit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureKind::GlqContour => "glq-contour",
            FigureKind::HistoryQubits => "history-qubits",
            FigureKind::HistoryError => "history-error",
            FigureKind::HistoryGlq => "history-glq",
            FigureKind::Tradeoff => "tradeoff",
            FigureKind::FrontierEllipses => "frontier-ellipses",
            FigureKind::GlqTrajectories => "glq-trajectories",
            FigureKind::MetricTrajectories => "metric-trajectories",
            FigureKind::NoiseBand => "noise-band",
            FigureKind::SimpleFit => "simple-fit",
        }
    }
}

impl std::fmt::Display for FigureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        FigureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = FigureKind::ALL.iter().map(|k| k.as_str()).collect();
                format!(
                    "unknown figure `{s}` (expected one of: {})",
                    names.join(", ")
                )
            })
    }
}

/// Analysis results a figure may draw on. Each kind needs a subset.
#[derive(Debug, Clone)]
pub struct FigureInputs<'a> {
    pub qec: QecParams,
    pub thresholds: Vec<f64>,
    pub dataset: Option<&'a Dataset>,
    pub frontier: Option<&'a MultivariateFit>,
    pub ellipse_year: f64,
    pub ellipse_levels: Vec<f64>,
    pub forecast: Option<&'a MilestoneForecast>,
    /// Which threshold's representatives to draw on trajectory figures.
    pub trajectory_threshold: usize,
    pub band: Option<&'a [BandPoint]>,
    pub simple_fit: Option<&'a UnivariateFit>,
    pub title: Option<String>,
}

impl Default for FigureInputs<'_> {
    fn default() -> Self {
        FigureInputs {
            qec: QecParams::default(),
            thresholds: crate::glq::DEFAULT_THRESHOLDS.to_vec(),
            dataset: None,
            frontier: None,
            ellipse_year: 2023.0,
            ellipse_levels: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            forecast: None,
            trajectory_threshold: 0,
            band: None,
            simple_fit: None,
            title: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    log: bool,
    min: f64,
    max: f64,
}

impl Axis {
    fn log(min: f64, max: f64) -> Axis {
        Axis {
            log: true,
            min: min.log10(),
            max: max.log10(),
        }
    }

    fn linear(min: f64, max: f64) -> Axis {
        Axis {
            log: false,
            min,
            max,
        }
    }

    /// Log axis snapped outward to whole decades around the data.
    fn log_fit(values: impl IntoIterator<Item = f64>, fallback: (f64, f64)) -> Axis {
        let (lo, hi) = positive_extent(values).unwrap_or(fallback);
        let (mut a, mut b) = (lo.log10().floor(), hi.log10().ceil());
        if a == b {
            a -= 1.0;
            b += 1.0;
        }
        Axis {
            log: true,
            min: a,
            max: b,
        }
    }

    fn value(&self, v: f64) -> Option<f64> {
        if self.log {
            (v > 0.0 && v.is_finite()).then(|| v.log10())
        } else {
            v.is_finite().then_some(v)
        }
    }

    /// Fraction along the axis, unclamped.
    fn frac(&self, v: f64) -> Option<f64> {
        self.value(v)
            .map(|x| (x - self.min) / (self.max - self.min))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        let span = self.max - self.min;
        if self.log {
            let step = (span / 8.0).ceil().max(1.0);
            let mut out = Vec::new();
            let mut e = (self.min / step).ceil() * step;
            while e <= self.max + 1e-9 {
                out.push((10f64.powf(e), format_decade(e)));
                e += step;
            }
            out
        } else {
            let raw = span / 6.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * mag);
            let mut out = Vec::new();
            let mut v = (self.min / step).ceil() * step;
            while v <= self.max + 1e-9 * span {
                let label = if step >= 1.0 {
                    format!("{v:.0}")
                } else {
                    format!("{v:.2}")
                };
                out.push((v, label));
                v += step;
            }
            out
        }
    }
}

fn format_decade(e: f64) -> String {
    let k = e.round() as i32;
    match k {
        0 => "1".into(),
        1 => "10".into(),
        _ => format!("1e{k}"),
    }
}

fn positive_extent(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .into_iter()
        .filter(|v| *v > 0.0 && v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((a, b)) => Some((a.min(v), b.max(v))),
        })
}

enum Layer {
    Line {
        points: Vec<(f64, f64)>,
        color: &'static str,
        dashed: bool,
        label: Option<String>,
    },
    Points {
        points: Vec<(f64, f64)>,
        color: &'static str,
        hollow: bool,
        label: Option<String>,
    },
    Label {
        at: (f64, f64),
        text: String,
        color: &'static str,
    },
}

struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    x: Axis,
    y: Axis,
    layers: Vec<Layer>,
}

impl Panel {
    fn new(title: impl Into<String>, x_label: &str, y_label: &str, x: Axis, y: Axis) -> Panel {
        Panel {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x,
            y,
            layers: Vec::new(),
        }
    }

    fn line(
        &mut self,
        points: Vec<(f64, f64)>,
        color: &'static str,
        dashed: bool,
        label: Option<String>,
    ) {
        self.layers.push(Layer::Line {
            points,
            color,
            dashed,
            label,
        });
    }

    fn points(
        &mut self,
        points: Vec<(f64, f64)>,
        color: &'static str,
        hollow: bool,
        label: Option<String>,
    ) {
        self.layers.push(Layer::Points {
            points,
            color,
            hollow,
            label,
        });
    }

    fn render(&self, out: &mut String, index: usize, top: f64) {
        let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (y0, y1) = (top + MARGIN_TOP, top + PANEL_HEIGHT - MARGIN_BOTTOM);
        let px = |v: f64| self.x.frac(v).map(|f| x0 + f * (x1 - x0));
        let py = |v: f64| self.y.frac(v).map(|f| y1 - f * (y1 - y0));
        let clip = format!("clip{index}");

        let _ = writeln!(
            out,
            r#"<clipPath id="{clip}"><rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}"/></clipPath>"#,
            x1 - x0,
            y1 - y0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="15">{}</text>"#,
            (x0 + x1) / 2.0,
            top + 26.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##,
            x1 - x0,
            y1 - y0
        );
        for (v, label) in self.x.ticks() {
            if let Some(x) = px(v) {
                let _ = writeln!(
                    out,
                    r##"<line x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{label}</text>"##,
                    y1 + 5.0,
                    y1 + 18.0
                );
            }
        }
        for (v, label) in self.y.ticks() {
            if let Some(y) = py(v) {
                let _ = writeln!(
                    out,
                    r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#333"/><line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{label}</text>"##,
                    x0 - 5.0,
                    x0 - 8.0,
                    y + 4.0
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"#,
            (x0 + x1) / 2.0,
            y1 + 40.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle" font-size="13">{}</text>"#,
            x0 - 58.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );

        let mut legend = Vec::new();
        let _ = writeln!(out, r#"<g clip-path="url(#{clip})">"#);
        for layer in &self.layers {
            match layer {
                Layer::Line {
                    points,
                    color,
                    dashed,
                    label,
                } => {
                    let dash = if *dashed {
                        r#" stroke-dasharray="6 4""#
                    } else {
                        ""
                    };
                    for segment in segments(points, &px, &py) {
                        if segment.len() < 2 {
                            continue;
                        }
                        let coords: Vec<String> = segment
                            .iter()
                            .map(|(x, y)| format!("{x:.2},{y:.2}"))
                            .collect();
                        let _ = writeln!(
                            out,
                            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
                            coords.join(" ")
                        );
                    }
                    if let Some(l) = label {
                        legend.push((l.clone(), *color, *dashed, false));
                    }
                }
                Layer::Points {
                    points,
                    color,
                    hollow,
                    label,
                } => {
                    for &(vx, vy) in points {
                        if let (Some(x), Some(y)) = (px(vx), py(vy)) {
                            let fill = if *hollow { "none" } else { color };
                            let _ = writeln!(
                                out,
                                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{fill}" stroke="{color}"/>"#
                            );
                        }
                    }
                    if let Some(l) = label {
                        legend.push((l.clone(), *color, false, true));
                    }
                }
                Layer::Label { at, text, color } => {
                    if let (Some(x), Some(y)) = (px(at.0), py(at.1)) {
                        let _ = writeln!(
                            out,
                            r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{color}">{}</text>"#,
                            x + 4.0,
                            y - 4.0,
                            escape(text)
                        );
                    }
                }
            }
        }
        let _ = writeln!(out, "</g>");

        for (i, (label, color, dashed, point)) in legend.iter().enumerate() {
            let lx = x1 + 14.0;
            let ly = y0 + 12.0 + 20.0 * i as f64;
            if *point {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{ly:.2}" r="3.5" fill="{color}"/>"#,
                    lx + 10.0
                );
            } else {
                let dash = if *dashed {
                    r#" stroke-dasharray="6 4""#
                } else {
                    ""
                };
                let _ = writeln!(
                    out,
                    r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
                    lx + 20.0
                );
            }
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
                lx + 26.0,
                ly + 4.0,
                escape(label)
            );
        }
    }
}

/// Splits a polyline where a point cannot be placed (e.g. zero on a log axis).
fn segments(
    points: &[(f64, f64)],
    px: &impl Fn(f64) -> Option<f64>,
    py: &impl Fn(f64) -> Option<f64>,
) -> Vec<Vec<(f64, f64)>> {
    let mut out = vec![Vec::new()];
    for &(vx, vy) in points {
        match (px(vx), py(vy)) {
            (Some(x), Some(y)) => out.last_mut().expect("non-empty").push((x, y)),
            _ => {
                if !out.last().expect("non-empty").is_empty() {
                    out.push(Vec::new());
                }
            }
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn document(panels: &[Panel]) -> String {
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        p.render(&mut out, i, PANEL_HEIGHT * i as f64);
    }
    out.push_str("</svg>\n");
    out
}

fn grid(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step).round() as usize;
    (0..=n).map(|i| from + i as f64 * step).collect()
}

fn log_grid(from: f64, to: f64, n: usize) -> Vec<f64> {
    let (a, b) = (from.log10(), to.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

fn need<'a, T: ?Sized>(
    value: Option<&'a T>,
    kind: FigureKind,
    missing: &'static str,
) -> Result<&'a T> {
    value.ok_or_else(|| Error::MissingFigureInput {
        figure: kind.as_str().into(),
        missing,
    })
}

fn glq_points(ds: &Dataset, qec: &QecParams) -> Vec<(f64, f64)> {
    ds.records()
        .iter()
        .filter_map(|r| {
            let z = ln_glq(r.ln_qubits(), r.gate_error_rate?.ln(), qec)?;
            Some((r.fractional_year, z.exp()))
        })
        .collect()
}

fn year_axis(values: impl IntoIterator<Item = f64>, fallback: (f64, f64)) -> Axis {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(None, |acc: Option<(f64, f64)>, v| {
            Some(acc.map_or((v, v), |(a, b)| (a.min(v), b.max(v))))
        })
        .unwrap_or(fallback);
    Axis::linear(lo.floor() - 1.0, hi.ceil() + 1.0)
}

fn threshold_label(g: f64) -> String {
    format!("{g} GLQ")
}

fn threshold_lines(panel: &mut Panel, thresholds: &[f64], x_range: (f64, f64)) {
    for &g in thresholds {
        panel.line(vec![(x_range.0, g), (x_range.1, g)], "#555", true, None);
        panel.layers.push(Layer::Label {
            at: (x_range.0, g),
            text: threshold_label(g),
            color: "#555",
        });
    }
}

/// Renders one figure as a standalone SVG document.
pub fn render_figure(kind: FigureKind, inputs: &FigureInputs) -> Result<String> {
    let qec = &inputs.qec;
    let title = |default: &str| inputs.title.clone().unwrap_or_else(|| default.to_string());
    let panels = match kind {
        FigureKind::GlqContour => {
            let p_grid = log_grid(1e-5, qec.p_th * (1.0 - 1e-4), 240);
            let mut panel = Panel::new(
                title("Generalized logical qubits"),
                "two-qubit gate error rate",
                "physical qubits",
                Axis::log(1e-5, 1e-1),
                Axis::log(1.0, 1e10),
            );
            let levels: [(f64, &'static str); 6] = [
                (1e-4, "#9ecae1"),
                (1e-2, "#6baed6"),
                (1.0, "#d62728"),
                (1e2, "#4292c6"),
                (4100.0, "#d62728"),
                (1e6, "#08519c"),
            ];
            for (g, color) in levels {
                let curve = glq_threshold_curve(g, qec, &p_grid)?;
                let dashed = inputs.thresholds.contains(&g);
                panel.line(curve, color, dashed, Some(threshold_label(g)));
            }
            panel.line(
                vec![(qec.p_th, 1.0), (qec.p_th, 1e10)],
                "#333",
                false,
                Some("threshold".into()),
            );
            vec![panel]
        }
        FigureKind::HistoryQubits | FigureKind::HistoryError | FigureKind::HistoryGlq => {
            let ds = need(inputs.dataset, kind, "dataset")?;
            let (pts, label, default_title): (Vec<(f64, f64)>, &str, &str) = match kind {
                FigureKind::HistoryQubits => (
                    ds.records()
                        .iter()
                        .map(|r| (r.fractional_year, r.physical_qubits as f64))
                        .collect(),
                    "physical qubits",
                    "Reported physical qubits",
                ),
                FigureKind::HistoryError => (
                    ds.records()
                        .iter()
                        .filter_map(|r| Some((r.fractional_year, r.gate_error_rate?)))
                        .collect(),
                    "two-qubit gate error rate",
                    "Reported two-qubit gate error rate",
                ),
                _ => (
                    glq_points(ds, qec),
                    "generalized logical qubits",
                    "Generalized logical qubits",
                ),
            };
            let x = year_axis(
                ds.records().iter().map(|r| r.fractional_year),
                (2000.0, 2020.0),
            );
            let y = Axis::log_fit(pts.iter().map(|p| p.1), (1e-3, 1.0));
            let mut panel = Panel::new(
                format!("{} (n={})", title(default_title), pts.len()),
                "year",
                label,
                x,
                y,
            );
            panel.points(pts, "#1f77b4", false, None);
            vec![panel]
        }
        FigureKind::Tradeoff => {
            let ds = need(inputs.dataset, kind, "dataset")?;
            let pts: Vec<(f64, f64)> = ds
                .records()
                .iter()
                .filter_map(|r| Some((r.gate_error_rate?, r.physical_qubits as f64)))
                .collect();
            let x = Axis::log_fit(pts.iter().map(|p| p.0), (1e-3, 1e-1));
            let y = Axis::log_fit(pts.iter().map(|p| p.1), (1.0, 100.0));
            let mut panel = Panel::new(
                format!(
                    "{} (n={})",
                    title("Physical qubits against gate error rate"),
                    pts.len()
                ),
                "two-qubit gate error rate",
                "physical qubits",
                x,
                y,
            );
            panel.points(pts, "#1f77b4", false, None);
            vec![panel]
        }
        FigureKind::FrontierEllipses => {
            let fit = need(inputs.frontier, kind, "frontier fit")?;
            let mut curves = Vec::new();
            for &level in &inputs.ellipse_levels {
                let e = conditional_ellipse(fit, inputs.ellipse_year, level)?;
                let mut pts: Vec<(f64, f64)> = e
                    .boundary(180)
                    .iter()
                    .map(|[lq, le]| (le.exp(), lq.exp()))
                    .collect();
                pts.push(pts[0]);
                curves.push((level, pts));
            }
            let scatter: Vec<(f64, f64)> = inputs
                .dataset
                .map(|ds| {
                    ds.records()
                        .iter()
                        .filter_map(|r| Some((r.gate_error_rate?, r.physical_qubits as f64)))
                        .collect()
                })
                .unwrap_or_default();
            let all = || {
                curves
                    .iter()
                    .flat_map(|(_, c)| c.iter().copied())
                    .chain(scatter.iter().copied())
            };
            let x = Axis::log_fit(all().map(|p| p.0), (1e-4, 1e-1));
            let y = Axis::log_fit(all().map(|p| p.1), (1.0, 1e3));
            let mut panel = Panel::new(
                title(&format!("Conditional model at {:.0}", inputs.ellipse_year)),
                "two-qubit gate error rate",
                "physical qubits",
                x,
                y,
            );
            const RAMP: [&str; 5] = ["#08519c", "#3182bd", "#6baed6", "#9ecae1", "#c6dbef"];
            for (i, (level, pts)) in curves.into_iter().enumerate() {
                panel.line(
                    pts,
                    RAMP[i % RAMP.len()],
                    false,
                    Some(format!("{:.0}%", level * 100.0)),
                );
            }
            if !scatter.is_empty() {
                panel.points(scatter, "#555", true, Some("systems".into()));
            }
            vec![panel]
        }
        FigureKind::GlqTrajectories => {
            let fc = need(inputs.forecast, kind, "forecast")?;
            let tf = fc.thresholds.get(inputs.trajectory_threshold).ok_or(
                Error::MissingFigureInput {
                    figure: kind.as_str().into(),
                    missing: "forecast threshold",
                },
            )?;
            let start = fc.diagnostics.search_window.0;
            let end = trajectory_end(fc);
            let years = grid(start.floor(), end, 0.1);
            let scatter = inputs
                .dataset
                .map(|ds| glq_points(ds, qec))
                .unwrap_or_default();
            let curves: Vec<(f64, Vec<(f64, f64)>)> = tf
                .representatives
                .iter()
                .map(|r| {
                    (
                        r.level,
                        trajectory(&r.fit_qubits, &r.fit_error, qec, &years),
                    )
                })
                .collect();
            let y_values = curves
                .iter()
                .flat_map(|(_, c)| c.iter().map(|p| p.1))
                .chain(scatter.iter().map(|p| p.1))
                .chain(inputs.thresholds.iter().copied());
            let (lo, hi) = positive_extent(y_values).unwrap_or((1e-4, 1e4));
            let y = Axis::log(
                10f64.powf(lo.log10().floor().max(-8.0)),
                10f64.powf(hi.log10().ceil().min(12.0)),
            );
            let x = Axis::linear(start.floor(), end);
            let mut panel = Panel::new(
                title("Extrapolated generalized logical qubits"),
                "year",
                "generalized logical qubits",
                x,
                y,
            );
            threshold_lines(&mut panel, &inputs.thresholds, (start.floor(), end));
            for (i, (level, pts)) in curves.into_iter().enumerate() {
                panel.line(
                    pts,
                    QUANTILE_COLORS[i % 3],
                    false,
                    Some(format!("{:.0}% quantile", level * 100.0)),
                );
            }
            if !scatter.is_empty() {
                panel.points(scatter, "#333", false, Some("systems".into()));
            }
            vec![panel]
        }
        FigureKind::MetricTrajectories => {
            let fc = need(inputs.forecast, kind, "forecast")?;
            let ds = need(inputs.dataset, kind, "dataset")?;
            let tf = fc.thresholds.get(inputs.trajectory_threshold).ok_or(
                Error::MissingFigureInput {
                    figure: kind.as_str().into(),
                    missing: "forecast threshold",
                },
            )?;
            let start = fc.diagnostics.search_window.0.floor();
            let end = trajectory_end(fc);
            let years = grid(start, end, 0.25);

            let qubits: Vec<(f64, f64)> = ds
                .records()
                .iter()
                .map(|r| (r.fractional_year, r.physical_qubits as f64))
                .collect();
            let errors: Vec<(f64, f64)> = ds
                .records()
                .iter()
                .filter_map(|r| Some((r.fractional_year, r.gate_error_rate?)))
                .collect();
            let q_records = extract_records(&qubits, Orientation::Max).points;
            let e_records = extract_records(&errors, Orientation::Min).points;

            let q_curves: Vec<Vec<(f64, f64)>> = tf
                .representatives
                .iter()
                .map(|r| {
                    years
                        .iter()
                        .map(|&t| (t, r.fit_qubits.predict(t).exp()))
                        .collect()
                })
                .collect();
            let e_curves: Vec<Vec<(f64, f64)>> = tf
                .representatives
                .iter()
                .map(|r| {
                    years
                        .iter()
                        .map(|&t| (t, r.fit_error.predict(t).exp()))
                        .collect()
                })
                .collect();

            let x = Axis::linear(start, end);
            let qy = Axis::log_fit(
                qubits
                    .iter()
                    .map(|p| p.1)
                    .chain(q_curves.iter().flatten().map(|p| p.1.min(1e12))),
                (1.0, 1e6),
            );
            let ey = Axis::log_fit(
                errors
                    .iter()
                    .map(|p| p.1)
                    .chain(e_curves.iter().flatten().map(|p| p.1.max(1e-8))),
                (1e-4, 1.0),
            );
            let mut top = Panel::new(
                title("Extrapolated physical qubits"),
                "year",
                "physical qubits",
                x,
                qy,
            );
            let mut bottom = Panel::new(
                "Extrapolated two-qubit gate error rate",
                "year",
                "gate error rate",
                x,
                ey,
            );
            for (i, (qc, ec)) in q_curves.into_iter().zip(e_curves).enumerate() {
                let label = Some(format!(
                    "{:.0}% quantile",
                    tf.representatives[i].level * 100.0
                ));
                top.line(qc, QUANTILE_COLORS[i % 3], false, label.clone());
                bottom.line(ec, QUANTILE_COLORS[i % 3], false, label);
            }
            bottom.line(
                vec![(start, qec.p_th), (end, qec.p_th)],
                "#555",
                true,
                Some("threshold".into()),
            );
            top.points(qubits, "#999", true, Some("systems".into()));
            top.points(q_records, "#333", false, Some("records".into()));
            bottom.points(errors, "#999", true, Some("systems".into()));
            bottom.points(e_records, "#333", false, Some("records".into()));
            vec![top, bottom]
        }
        FigureKind::NoiseBand => {
            let band = need(inputs.band, kind, "noise band")?;
            if band.is_empty() {
                return Err(Error::MissingFigureInput {
                    figure: kind.as_str().into(),
                    missing: "noise band points",
                });
            }
            let (start, end) = (band[0].year, band[band.len() - 1].year);
            let y_values = band
                .iter()
                .flat_map(|b| [b.lower, b.median, b.upper])
                .chain(inputs.thresholds.iter().copied());
            let (lo, hi) = positive_extent(y_values).unwrap_or((1e-4, 1e4));
            let y = Axis::log(
                10f64.powf(lo.log10().floor().max(-8.0)),
                10f64.powf(hi.log10().ceil().min(12.0)),
            );
            let mut panel = Panel::new(
                title("Gaussian noise band around the median trend"),
                "year",
                "generalized logical qubits",
                Axis::linear(start, end),
                y,
            );
            threshold_lines(&mut panel, &inputs.thresholds, (start, end));
            let pick =
                |f: fn(&BandPoint) -> f64| band.iter().map(|b| (b.year, f(b))).collect::<Vec<_>>();
            panel.line(
                pick(|b| b.lower),
                QUANTILE_COLORS[0],
                false,
                Some("lower".into()),
            );
            panel.line(
                pick(|b| b.median),
                QUANTILE_COLORS[1],
                false,
                Some("median".into()),
            );
            panel.line(
                pick(|b| b.upper),
                QUANTILE_COLORS[2],
                false,
                Some("upper".into()),
            );
            vec![panel]
        }
        FigureKind::SimpleFit => {
            let fit = need(inputs.simple_fit, kind, "simple GLQ fit")?;
            let scatter = inputs
                .dataset
                .map(|ds| glq_points(ds, qec))
                .unwrap_or_default();
            let start = scatter.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let start = if start.is_finite() {
                start.floor()
            } else {
                2010.0
            };
            let end = if fit.slope > 0.0 {
                let t = (4100f64.ln() - fit.intercept) / fit.slope;
                t.clamp(start + 10.0, start + 60.0).ceil()
            } else {
                start + 20.0
            };
            let years = grid(start, end, 0.25);
            let line: Vec<(f64, f64)> = years.iter().map(|&t| (t, fit.predict(t).exp())).collect();
            let y_values = line
                .iter()
                .map(|p| p.1)
                .chain(scatter.iter().map(|p| p.1))
                .chain(inputs.thresholds.iter().copied());
            let (lo, hi) = positive_extent(y_values).unwrap_or((1e-4, 1e4));
            let y = Axis::log(
                10f64.powf(lo.log10().floor().max(-8.0)),
                10f64.powf(hi.log10().ceil().min(12.0)),
            );
            let mut panel = Panel::new(
                title("Simple log-linear extrapolation of GLQ"),
                "year",
                "generalized logical qubits",
                Axis::linear(start, end),
                y,
            );
            threshold_lines(&mut panel, &inputs.thresholds, (start, end));
            panel.line(line, QUANTILE_COLORS[1], false, Some("fit".into()));
            if !scatter.is_empty() {
                panel.points(scatter, "#333", false, Some("systems".into()));
            }
            vec![panel]
        }
    };
    Ok(document(&panels))
}

/// Right edge for trajectory plots: a few years past the latest finite
/// representative crossing, within the search horizon.
fn trajectory_end(fc: &MilestoneForecast) -> f64 {
    let (start, horizon) = fc.diagnostics.search_window;
    let latest = fc
        .thresholds
        .iter()
        .flat_map(|t| t.representatives.iter().filter_map(|r| r.crossing))
        .fold(start + 20.0, f64::max);
    (latest + 5.0).ceil().min(horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trend::{
        gaussian_noise_band, Aggregation, CrossingQuantile, ForecastDiagnostics, Representative,
        ThresholdForecast,
    };

    fn fit(n0: f64, slope: f64, t0: f64) -> UnivariateFit {
        UnivariateFit {
            intercept: n0.ln() - slope * t0,
            slope,
            sigma2: 0.1,
            n_records: 5,
        }
    }

    fn toy_forecast() -> MilestoneForecast {
        let reps: Vec<Representative> = [(0.05, 0.6), (0.5, 0.45), (0.95, 0.35)]
            .iter()
            .enumerate()
            .map(|(i, &(level, s))| Representative {
                level,
                resample: i,
                crossing: Some(2025.0 + 3.0 * i as f64),
                fit_qubits: fit(50.0, s, 2020.0),
                fit_error: fit(3e-3, -0.15, 2020.0),
            })
            .collect();
        let tf = ThresholdForecast {
            threshold: 1.0,
            quantiles: reps
                .iter()
                .map(|r| CrossingQuantile {
                    level: r.level,
                    year: r.crossing,
                })
                .collect(),
            representatives: reps,
            censored: 0,
        };
        MilestoneForecast {
            aggregation: Aggregation::Record,
            thresholds: vec![tf],
            diagnostics: ForecastDiagnostics {
                n_records: 10,
                n_with_error_rate: 8,
                resamples: 3,
                redraws: 0,
                median_qubit_records: 5.0,
                median_error_records: 4.0,
                search_window: (2007.0, 2100.0),
            },
            draws: Vec::new(),
        }
    }

    #[test]
    fn contour_has_dashed_milestones() {
        let svg = render_figure(FigureKind::GlqContour, &FigureInputs::default()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("1 GLQ") && svg.contains("4100 GLQ"));
        let dashed_polylines = svg
            .lines()
            .filter(|l| l.starts_with("<polyline") && l.contains("stroke-dasharray"))
            .count();
        assert_eq!(dashed_polylines, 2);
    }

    #[test]
    fn trajectory_figure_structure() {
        let fc = toy_forecast();
        let inputs = FigureInputs {
            forecast: Some(&fc),
            ..FigureInputs::default()
        };
        let svg = render_figure(FigureKind::GlqTrajectories, &inputs).unwrap();
        let solid = svg
            .lines()
            .filter(|l| l.starts_with("<polyline") && !l.contains("dasharray"))
            .count();
        assert_eq!(solid, 3);
        assert!(!svg.contains("<circle cx"), "no scatter without a dataset");
        assert_eq!(
            svg,
            render_figure(FigureKind::GlqTrajectories, &inputs).unwrap()
        );
    }

    #[test]
    fn missing_inputs_are_named() {
        for kind in [
            FigureKind::GlqTrajectories,
            FigureKind::NoiseBand,
            FigureKind::SimpleFit,
            FigureKind::HistoryQubits,
        ] {
            match render_figure(kind, &FigureInputs::default()) {
                Err(Error::MissingFigureInput { figure, .. }) => assert_eq!(figure, kind.as_str()),
                other => panic!("{kind}: {other:?}"),
            }
        }
    }

    #[test]
    fn band_and_simple_fit_render() {
        let q = fit(50.0, 0.5, 2020.0);
        let e = fit(3e-3, -0.15, 2020.0);
        let band = gaussian_noise_band(
            &q,
            &e,
            &QecParams::default(),
            0.05,
            &grid(2020.0, 2040.0, 0.5),
        )
        .unwrap();
        let inputs = FigureInputs {
            band: Some(&band),
            simple_fit: Some(&q),
            ..FigureInputs::default()
        };
        assert!(render_figure(FigureKind::NoiseBand, &inputs)
            .unwrap()
            .contains("median"));
        assert!(render_figure(FigureKind::SimpleFit, &inputs)
            .unwrap()
            .contains("<polyline"));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in FigureKind::ALL {
            assert_eq!(k.as_str().parse::<FigureKind>().unwrap(), k);
        }
        assert!("pie-chart".parse::<FigureKind>().is_err());
    }

    #[test]
    fn zero_values_break_log_lines() {
        let ax = Axis::log(1e-3, 1.0);
        let lin = Axis::linear(0.0, 10.0);
        let px = |v: f64| lin.frac(v);
        let py = |v: f64| ax.frac(v);
        let segs = segments(&[(1.0, 0.1), (2.0, 0.0), (3.0, 0.2), (4.0, 0.3)], &px, &py);
        assert_eq!(segs.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 2]);
    }
}
