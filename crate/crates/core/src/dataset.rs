//! Hardware-announcement dataset: ingestion, validation, filtering and
//! the log-space design matrices consumed by the regression models.
//!
//! Input is UTF-8 CSV with a header row. The canonical columns are
//! `id,date,physical_qubits,gate_error_rate,technology,source`; any other
//! column is kept verbatim as a per-record annotation and never modeled.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::glq::QecParams;

/// Minimum number of complete records for the multivariate design.
pub const MIN_DESIGN_ROWS: usize = 3;

const DAYS_BEFORE_MONTH: [u32; 12] = [0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334];
const DAYS_IN_MONTH: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
const YEAR_RANGE: std::ops::RangeInclusive<i32> = 1990..=2100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Technology {
    Superconducting,
    TrappedIon,
    Spin,
    Silicon,
    Photonic,
    Other,
}

impl Technology {
    pub const ALL: [Technology; 6] = [
        Technology::Superconducting,
        Technology::TrappedIon,
        Technology::Spin,
        Technology::Silicon,
        Technology::Photonic,
        Technology::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Technology::Superconducting => "superconducting",
            Technology::TrappedIon => "trapped-ion",
            Technology::Spin => "spin",
            Technology::Silicon => "silicon",
            Technology::Photonic => "photonic",
            Technology::Other => "other",
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c == '_' || c == ' ' { '-' } else { c })
            .collect();
        Technology::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown technology `{s}`")))
    }
}

/// A calendar date whose month and day may be unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartialDate {
    pub year: i32,
    pub month: Option<u32>,
    pub day: Option<u32>,
}

impl PartialDate {
    pub fn fractional_year(&self) -> Result<f64> {
        impute_fractional_year(self.year, self.month, self.day)
    }
}

impl FromStr for PartialDate {
    type Err = Error;

    /// Accepts `YYYY`, `YYYY-MM` and `YYYY-MM-DD`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDate(format!("`{s}` is not YYYY, YYYY-MM or YYYY-MM-DD"));
        let parts: Vec<&str> = s.trim().split('-').collect();
        let num = |p: &str, width: usize| -> Result<u32> {
            if p.len() != width || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            p.parse().map_err(|_| bad())
        };
        let date = match parts.as_slice() {
            [y] => PartialDate {
                year: num(y, 4)? as i32,
                month: None,
                day: None,
            },
            [y, m] => PartialDate {
                year: num(y, 4)? as i32,
                month: Some(num(m, 2)?),
                day: None,
            },
            [y, m, d] => PartialDate {
                year: num(y, 4)? as i32,
                month: Some(num(m, 2)?),
                day: Some(num(d, 2)?),
            },
            _ => return Err(bad()),
        };
        date.fractional_year()?;
        Ok(date)
    }
}

impl fmt::Display for PartialDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}", self.year)?;
        if let Some(m) = self.month {
            write!(f, "-{m:02}")?;
        }
        if let Some(d) = self.day {
            write!(f, "-{d:02}")?;
        }
        Ok(())
    }
}

fn is_leap(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

/// Converts a (possibly partial) date to a fractional year on a uniform
/// 365-day calendar. Year-only dates land on June 1, year-month dates on
/// the 15th. Feb 29 shares its offset with Mar 1.
pub fn impute_fractional_year(year: i32, month: Option<u32>, day: Option<u32>) -> Result<f64> {
    if !YEAR_RANGE.contains(&year) {
        return Err(Error::InvalidDate(format!(
            "year {year} outside [1990, 2100]"
        )));
    }
    let (month, day) = match (month, day) {
        (None, None) => (6, 1),
        (Some(m), None) => (m, 15),
        (Some(m), Some(d)) => (m, d),
        (None, Some(_)) => {
            return Err(Error::InvalidDate("day given without a month".into()));
        }
    };
    if !(1..=12).contains(&month) {
        return Err(Error::InvalidDate(format!("month {month} out of range")));
    }
    let idx = (month - 1) as usize;
    let max_day = if month == 2 && is_leap(year) {
        29
    } else {
        DAYS_IN_MONTH[idx]
    };
    if day < 1 || day > max_day {
        return Err(Error::InvalidDate(format!(
            "day {day} invalid for {year}-{month:02}"
        )));
    }
    let day_of_year = DAYS_BEFORE_MONTH[idx] + day - 1;
    Ok(year as f64 + day_of_year as f64 / 365.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRecord {
    pub id: String,
    pub date: PartialDate,
    pub fractional_year: f64,
    pub physical_qubits: u64,
    pub gate_error_rate: Option<f64>,
    pub technology: Technology,
    pub source: String,
    /// Unmodeled notes (coherence time, connectivity, system name, ...).
    pub annotations: BTreeMap<String, String>,
}

impl SystemRecord {
    pub fn ln_qubits(&self) -> f64 {
        (self.physical_qubits as f64).ln()
    }

    pub fn has_both_metrics(&self) -> bool {
        self.gate_error_rate.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Hex SHA-256 of the ingested bytes.
    pub digest: String,
    /// Seconds since the Unix epoch at ingestion.
    pub ingested_at: u64,
}

impl Provenance {
    pub fn for_bytes(bytes: &[u8]) -> Self {
        let digest = hex::encode(Sha256::digest(bytes));
        let ingested_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Provenance {
            digest,
            ingested_at,
        }
    }
}

/// Immutable, sorted collection of records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<SystemRecord>,
    provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ViewCounts {
    pub total: usize,
    pub both_metrics: usize,
    pub glq_defined: usize,
}

impl Dataset {
    /// Sorts by (fractional year, id) and rejects duplicate ids.
    pub fn new(mut records: Vec<SystemRecord>, provenance: Provenance) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate record id `{}`",
                    r.id
                )));
            }
        }
        records.sort_by(|a, b| {
            a.fractional_year
                .total_cmp(&b.fractional_year)
                .then_with(|| a.id.cmp(&b.id))
        });
        Ok(Dataset {
            records,
            provenance,
        })
    }

    pub fn records(&self) -> &[SystemRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn filter(&self, spec: &FilterSpec) -> Dataset {
        apply_filter(self, spec)
    }

    pub fn view_counts(&self, qec: &QecParams) -> ViewCounts {
        let both: Vec<&SystemRecord> = self
            .records
            .iter()
            .filter(|r| r.has_both_metrics())
            .collect();
        ViewCounts {
            total: self.records.len(),
            both_metrics: both.len(),
            glq_defined: both
                .iter()
                .filter(|r| r.gate_error_rate.is_some_and(|p| p < qec.p_th))
                .count(),
        }
    }

    /// Keeps only the records at the given positions (used by resampling).
    pub(crate) fn from_sorted_unchecked(
        records: Vec<SystemRecord>,
        provenance: Provenance,
    ) -> Self {
        Dataset {
            records,
            provenance,
        }
    }
}

/// Column-name mapping from logical fields to CSV headers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub id: String,
    pub date: String,
    pub physical_qubits: String,
    pub gate_error_rate: String,
    pub technology: String,
    pub source: String,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            id: "id".into(),
            date: "date".into(),
            physical_qubits: "physical_qubits".into(),
            gate_error_rate: "gate_error_rate".into(),
            technology: "technology".into(),
            source: "source".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    #[default]
    Lenient,
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    /// 1-based line number in the input, header included.
    pub row: usize,
    pub column: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub rejections: Vec<Rejection>,
}

struct Columns {
    id: usize,
    date: usize,
    qubits: usize,
    error_rate: usize,
    technology: usize,
    source: Option<usize>,
    annotations: Vec<(usize, String)>,
}

fn locate_columns(headers: &csv::StringRecord, schema: &Schema) -> Result<Columns> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let need = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.to_string()));
    let id = need(&schema.id)?;
    let date = need(&schema.date)?;
    let qubits = need(&schema.physical_qubits)?;
    let error_rate = need(&schema.gate_error_rate)?;
    let technology = need(&schema.technology)?;
    let source = find(&schema.source);
    let used = [
        Some(id),
        Some(date),
        Some(qubits),
        Some(error_rate),
        Some(technology),
        source,
    ];
    let annotations = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !used.contains(&Some(*i)))
        .map(|(i, h)| (i, h.trim().to_string()))
        .collect();
    Ok(Columns {
        id,
        date,
        qubits,
        error_rate,
        technology,
        source,
        annotations,
    })
}

fn parse_row(
    row: &csv::StringRecord,
    cols: &Columns,
    schema: &Schema,
) -> std::result::Result<SystemRecord, (Option<String>, String)> {
    let cell = |i: usize| row.get(i).map(str::trim).unwrap_or("");
    let id = cell(cols.id);
    if id.is_empty() {
        return Err((Some(schema.id.clone()), "empty id".into()));
    }
    let date: PartialDate = cell(cols.date)
        .parse()
        .map_err(|e: Error| (Some(schema.date.clone()), e.to_string()))?;
    let fractional_year = date
        .fractional_year()
        .map_err(|e| (Some(schema.date.clone()), e.to_string()))?;
    let raw_qubits = cell(cols.qubits);
    let physical_qubits: u64 = raw_qubits.parse().map_err(|_| {
        (
            Some(schema.physical_qubits.clone()),
            format!("unparseable qubit count `{raw_qubits}`"),
        )
    })?;
    if physical_qubits == 0 {
        return Err((
            Some(schema.physical_qubits.clone()),
            "qubit count must be at least 1".into(),
        ));
    }
    let raw_p = cell(cols.error_rate);
    let gate_error_rate = if raw_p.is_empty() {
        None
    } else {
        let p: f64 = raw_p.parse().map_err(|_| {
            (
                Some(schema.gate_error_rate.clone()),
                format!("unparseable error rate `{raw_p}`"),
            )
        })?;
        if !(p > 0.0 && p < 1.0) {
            return Err((
                Some(schema.gate_error_rate.clone()),
                format!("error rate {p} outside (0, 1)"),
            ));
        }
        Some(p)
    };
    let technology: Technology = cell(cols.technology)
        .parse()
        .map_err(|e: Error| (Some(schema.technology.clone()), e.to_string()))?;
    let source = cols.source.map(|i| cell(i).to_string()).unwrap_or_default();
    let annotations = cols
        .annotations
        .iter()
        .filter(|(i, _)| !cell(*i).is_empty())
        .map(|(i, name)| (name.clone(), cell(*i).to_string()))
        .collect();
    Ok(SystemRecord {
        id: id.to_string(),
        date,
        fractional_year,
        physical_qubits,
        gate_error_rate,
        technology,
        source,
        annotations,
    })
}

/// Parses CSV text into a [`Dataset`].
///
/// In lenient mode malformed rows are skipped and reported; in strict mode
/// the first malformed row aborts ingestion. A missing mandatory column is
/// always fatal.
pub fn parse_dataset(text: &str, schema: &Schema, mode: ParseMode) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let cols = locate_columns(&headers, schema)?;

    let mut records = Vec::new();
    let mut rejections = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let parsed = parse_row(&row, &cols, schema).and_then(|r| {
            if seen.contains(&r.id) {
                Err((Some(schema.id.clone()), format!("duplicate id `{}`", r.id)))
            } else {
                Ok(r)
            }
        });
        match parsed {
            Ok(r) => {
                seen.insert(r.id.clone());
                records.push(r);
            }
            Err((column, reason)) => {
                if mode == ParseMode::Strict {
                    let reason = match &column {
                        Some(c) => format!("{c}: {reason}"),
                        None => reason,
                    };
                    return Err(Error::Validation { row: line, reason });
                }
                rejections.push(Rejection {
                    row: line,
                    column,
                    reason,
                });
            }
        }
    }
    let dataset = Dataset::new(records, Provenance::for_bytes(text.as_bytes()))?;
    Ok(Ingested {
        dataset,
        rejections,
    })
}

pub fn read_dataset(path: &Path, schema: &Schema, mode: ParseMode) -> Result<Ingested> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, schema, mode)
}

/// Writes the canonical normalized CSV. Annotation columns follow the
/// canonical ones in sorted order.
pub fn to_canonical_csv(dataset: &Dataset) -> Result<String> {
    let extra: BTreeSet<&str> = dataset
        .records()
        .iter()
        .flat_map(|r| r.annotations.keys().map(String::as_str))
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "id",
        "date",
        "physical_qubits",
        "gate_error_rate",
        "technology",
        "source",
    ];
    header.extend(extra.iter().copied());
    w.write_record(&header)?;
    for r in dataset.records() {
        let mut row = vec![
            r.id.clone(),
            r.date.to_string(),
            r.physical_qubits.to_string(),
            r.gate_error_rate.map(|p| p.to_string()).unwrap_or_default(),
            r.technology.to_string(),
            r.source.clone(),
        ];
        row.extend(
            extra
                .iter()
                .map(|k| r.annotations.get(*k).cloned().unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

pub fn rejections_csv(rejections: &[Rejection]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["row", "column", "reason"])?;
    for r in rejections {
        w.write_record([
            r.row.to_string(),
            r.column.clone().unwrap_or_default(),
            r.reason.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

/// Selection criteria; every present criterion must hold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub technologies: Option<BTreeSet<Technology>>,
    /// Inclusive window in fractional years.
    pub date_window: Option<(f64, f64)>,
    pub min_physical_qubits: Option<u64>,
    pub require_error_rate: bool,
}

impl FilterSpec {
    pub fn technologies(mut self, techs: impl IntoIterator<Item = Technology>) -> Self {
        self.technologies = Some(techs.into_iter().collect());
        self
    }

    pub fn window(mut self, start: f64, end: f64) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidConfig(format!(
                "window start {start} after end {end}"
            )));
        }
        self.date_window = Some((start, end));
        Ok(self)
    }

    /// Whole calendar years `from..=to`.
    pub fn years(self, from: i32, to: i32) -> Result<Self> {
        self.window(from as f64, to as f64 + 364.0 / 365.0)
    }

    pub fn min_qubits(mut self, n: u64) -> Self {
        self.min_physical_qubits = Some(n);
        self
    }

    pub fn require_error_rate(mut self) -> Self {
        self.require_error_rate = true;
        self
    }

    pub fn matches(&self, r: &SystemRecord) -> bool {
        if let Some(techs) = &self.technologies {
            if !techs.contains(&r.technology) {
                return false;
            }
        }
        if let Some((start, end)) = self.date_window {
            if r.fractional_year < start || r.fractional_year > end {
                return false;
            }
        }
        if let Some(min) = self.min_physical_qubits {
            if r.physical_qubits < min {
                return false;
            }
        }
        !(self.require_error_rate && r.gate_error_rate.is_none())
    }
}

pub fn apply_filter(dataset: &Dataset, spec: &FilterSpec) -> Dataset {
    let records = dataset
        .records()
        .iter()
        .filter(|r| spec.matches(r))
        .cloned()
        .collect();
    Dataset::from_sorted_unchecked(records, dataset.provenance().clone())
}

/// Rows `(1, year)` and `(ln qubits, ln error rate)` for records carrying
/// both metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    pub x: Vec<[f64; 2]>,
    pub y: Vec<[f64; 2]>,
}

impl DesignMatrices {
    pub fn n(&self) -> usize {
        self.x.len()
    }
}

pub fn design_matrices(dataset: &Dataset) -> Result<DesignMatrices> {
    design_matrices_min(dataset, MIN_DESIGN_ROWS)
}

/// Like [`design_matrices`] with a caller-chosen floor (never below 3).
pub fn design_matrices_min(dataset: &Dataset, min_rows: usize) -> Result<DesignMatrices> {
    let needed = min_rows.max(MIN_DESIGN_ROWS);
    let (x, y): (Vec<_>, Vec<_>) = dataset
        .records()
        .iter()
        .filter_map(|r| {
            r.gate_error_rate
                .map(|p| ([1.0, r.fractional_year], [r.ln_qubits(), p.ln()]))
        })
        .unzip();
    if x.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            found: x.len(),
        });
    }
    Ok(DesignMatrices { x, y })
}
