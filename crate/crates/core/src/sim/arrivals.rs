//! Piecewise-constant arrival-rate multipliers read from trace files.
//!
//! A trace is a delimited text file with rows
//! `bucket_start_time, class_id, rate_multiplier`; class ids are one-based.
//! Every class lists the same bucket start times, the first bucket starts at
//! 0, and the last bucket extends forever. Blank lines and lines starting
//! with `#` are skipped; a leading header row is allowed.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("cannot read trace {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("trace: {0}")]
    Shape(String),
}

fn row_err(line: u64, message: impl Into<String>) -> TraceError {
    TraceError::Row {
        line,
        message: message.into(),
    }
}

/// Rate multipliers per class over shared time buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSchedule {
    starts: Vec<f64>,
    // multipliers[class][bucket]
    multipliers: Vec<Vec<f64>>,
    max: Vec<f64>,
}

impl RateSchedule {
    pub fn new(starts: Vec<f64>, multipliers: Vec<Vec<f64>>) -> Result<Self, TraceError> {
        if starts.is_empty() || multipliers.is_empty() {
            return Err(TraceError::Shape("no buckets".into()));
        }
        if starts[0] != 0.0 {
            return Err(TraceError::Shape(format!(
                "first bucket starts at {} instead of 0",
                starts[0]
            )));
        }
        if starts
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
            || starts.iter().any(|s| !s.is_finite())
        {
            return Err(TraceError::Shape(
                "bucket starts must increase strictly".into(),
            ));
        }
        for (j, row) in multipliers.iter().enumerate() {
            if row.len() != starts.len() {
                return Err(TraceError::Shape(format!(
                    "class {} has {} buckets, expected {}",
                    j + 1,
                    row.len(),
                    starts.len()
                )));
            }
            if let Some(m) = row.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
                return Err(TraceError::Shape(format!(
                    "class {} has multiplier {m}",
                    j + 1
                )));
            }
        }
        let max = multipliers
            .iter()
            .map(|row| row.iter().copied().fold(0.0, f64::max))
            .collect();
        Ok(Self {
            starts,
            multipliers,
            max,
        })
    }

    /// Multiplier 1 everywhere: the stationary model.
    pub fn constant(classes: usize) -> Self {
        Self::new(vec![0.0], vec![vec![1.0]; classes]).expect("valid")
    }

    pub fn num_classes(&self) -> usize {
        self.multipliers.len()
    }

    pub fn bucket_starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn multiplier(&self, class: usize, time: f64) -> f64 {
        let b = self
            .starts
            .partition_point(|&s| s <= time)
            .saturating_sub(1);
        self.multipliers[class][b]
    }

    pub fn max_multiplier(&self, class: usize) -> f64 {
        self.max[class]
    }
}

pub fn parse_trace(text: &str) -> Result<RateSchedule, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    // class -> bucket start (as bits, for exact matching) -> multiplier
    let mut rows: BTreeMap<usize, BTreeMap<u64, (f64, f64, u64)>> = BTreeMap::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            row_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let is_header = first && record.get(0).is_some_and(|f| f.parse::<f64>().is_err());
        first = false;
        if is_header {
            continue;
        }
        if record.len() != 3 {
            return Err(row_err(
                line,
                format!(
                    "expected 3 fields (bucket_start, class_id, multiplier), got {}",
                    record.len()
                ),
            ));
        }
        let start: f64 = record[0]
            .parse()
            .map_err(|_| row_err(line, format!("bad bucket start '{}'", &record[0])))?;
        if !(start.is_finite() && start >= 0.0) {
            return Err(row_err(
                line,
                format!("bucket start {start} must be non-negative"),
            ));
        }
        let class: usize = record[1]
            .parse()
            .map_err(|_| row_err(line, format!("bad class id '{}'", &record[1])))?;
        if class == 0 {
            return Err(row_err(line, "class ids start at 1"));
        }
        let m: f64 = record[2]
            .parse()
            .map_err(|_| row_err(line, format!("bad multiplier '{}'", &record[2])))?;
        if !(m.is_finite() && m >= 0.0) {
            return Err(row_err(
                line,
                format!("negative or non-finite multiplier {m}"),
            ));
        }
        let slot = rows.entry(class).or_default();
        if let Some((_, _, prev)) = slot.insert(start.to_bits(), (start, m, line)) {
            return Err(row_err(
                line,
                format!("class {class} bucket {start} already given on line {prev}"),
            ));
        }
    }
    if rows.is_empty() {
        return Err(TraceError::Shape("empty trace".into()));
    }
    let max_class = *rows.keys().last().expect("non-empty");
    for j in 1..=max_class {
        if !rows.contains_key(&j) {
            return Err(TraceError::Shape(format!("class {j} has no rows")));
        }
    }
    let mut starts: Vec<f64> = rows[&1].values().map(|(s, _, _)| *s).collect();
    starts.sort_by(f64::total_cmp);
    let mut multipliers = Vec::new();
    for (class, buckets) in &rows {
        let mut mine: Vec<(f64, f64, u64)> = buckets.values().copied().collect();
        mine.sort_by(|a, b| a.0.total_cmp(&b.0));
        if mine.len() != starts.len() || mine.iter().zip(&starts).any(|(a, s)| a.0 != *s) {
            let line = mine
                .iter()
                .find(|(s, _, _)| !starts.contains(s))
                .map_or(0, |r| r.2);
            return Err(TraceError::Shape(format!(
                "class {class} buckets differ from class 1 (near line {line})"
            )));
        }
        multipliers.push(mine.iter().map(|r| r.1).collect());
    }
    RateSchedule::new(starts, multipliers)
}

pub fn load_trace(path: &Path) -> Result<RateSchedule, TraceError> {
    let text = std::fs::read_to_string(path).map_err(|e| TraceError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_trace(&text)
}
