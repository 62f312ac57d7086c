//! Return-series ingestion and CSV interchange.
//!
//! Files are UTF-8 CSV with header `date,value`, ISO-8601 dates and
//! decimal-point numerics. Price files are converted to daily percentage log
//! returns r_t = 100 (ln p_t - ln p_{t-1}), dropping the first observation.
//! Numeric values are written with the shortest round-tripping
//! representation, so re-ingesting an emitted file reproduces it exactly.

use std::fmt::Write as _;
use std::path::Path;

use regime_vol_core::stats::Descriptive;

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Returns,
    Prices,
}

impl DataKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "returns" => Ok(DataKind::Returns),
            "prices" => Ok(DataKind::Prices),
            other => Err(CliError::validation(format!(
                "data.kind must be returns or prices, got `{other}`"
            ))),
        }
    }
}

/// An ordered return series with its in/out-of-sample boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsDataset {
    /// Days since 1970-01-01, strictly increasing.
    pub dates: Vec<i64>,
    pub values: Vec<f64>,
    pub kind: DataKind,
    /// In-sample length; observations at and beyond this index are
    /// out-of-sample.
    pub split: usize,
}

impl ReturnsDataset {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn in_sample(&self) -> &[f64] {
        &self.values[..self.split]
    }

    pub fn out_of_sample(&self) -> &[f64] {
        &self.values[self.split..]
    }

    pub fn descriptive(&self) -> Descriptive {
        Descriptive::from_sample(&self.values).expect("dataset is non-empty")
    }
}

/// Read a `date,value` CSV and build the dataset. `split` of None defaults
/// to the 2:1 in/out proportion.
pub fn ingest(path: &Path, kind: DataKind, split: Option<usize>) -> Result<ReturnsDataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| io_err(&format!("reading {}", path.display()), e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "date,value" => {}
        Some((_, header)) => {
            return Err(CliError::validation(format!(
                "{}: expected header `date,value`, got `{header}`",
                path.display()
            )))
        }
        None => {
            return Err(CliError::validation(format!(
                "{}: empty file",
                path.display()
            )))
        }
    }

    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (lineno, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let loc = || format!("{}:{}", path.display(), lineno + 1);
        let (date_str, value_str) = line
            .split_once(',')
            .ok_or_else(|| CliError::validation(format!("{}: malformed row `{line}`", loc())))?;
        let day = parse_date(date_str.trim())
            .ok_or_else(|| CliError::validation(format!("{}: bad date `{date_str}`", loc())))?;
        let value: f64 = value_str
            .trim()
            .parse()
            .map_err(|_| CliError::validation(format!("{}: bad value `{value_str}`", loc())))?;
        if !value.is_finite() {
            return Err(CliError::validation(format!(
                "{}: non-finite value `{value_str}`",
                loc()
            )));
        }
        if let Some(&prev) = dates.last() {
            if day <= prev {
                return Err(CliError::validation(format!(
                    "{}: dates must be strictly increasing ({} after {})",
                    loc(),
                    format_date(day),
                    format_date(prev)
                )));
            }
        }
        if kind == DataKind::Prices && value <= 0.0 {
            return Err(CliError::validation(format!(
                "{}: prices must be positive, got {value}",
                loc()
            )));
        }
        dates.push(day);
        values.push(value);
    }
    if values.is_empty() {
        return Err(CliError::validation(format!(
            "{}: no observations",
            path.display()
        )));
    }

    let (dates, values) = match kind {
        DataKind::Returns => (dates, values),
        DataKind::Prices => {
            if values.len() < 2 {
                return Err(CliError::validation(
                    "price series needs at least two observations",
                ));
            }
            let returns: Vec<f64> = values
                .windows(2)
                .map(|w| 100.0 * (w[1].ln() - w[0].ln()))
                .collect();
            (dates[1..].to_vec(), returns)
        }
    };

    let n = values.len();
    let split = split.unwrap_or(n * 2 / 3);
    if split == 0 || split >= n {
        return Err(CliError::validation(format!(
            "split index {split} must lie strictly inside the {n} observations"
        )));
    }
    Ok(ReturnsDataset {
        dates,
        values,
        kind,
        split,
    })
}

/// Write a `date,value` CSV with round-tripping numerics.
pub fn write_returns_csv(path: &Path, dates: &[i64], values: &[f64]) -> Result<()> {
    let mut out = String::from("date,value\n");
    for (d, v) in dates.iter().zip(values) {
        let _ = writeln!(out, "{},{}", format_date(*d), v);
    }
    std::fs::write(path, out).map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

/// Parse an ISO-8601 calendar date to days since 1970-01-01.
pub fn parse_date(s: &str) -> Option<i64> {
    let bytes = s.as_bytes();
    if bytes.len() != 10 || bytes[4] != b'-' || bytes[7] != b'-' {
        return None;
    }
    let year: i64 = s[0..4].parse().ok()?;
    let month: u32 = s[5..7].parse().ok()?;
    let day: u32 = s[8..10].parse().ok()?;
    if !(1..=12).contains(&month) || day < 1 || day > days_in_month(year, month) {
        return None;
    }
    Some(days_from_civil(year, month, day))
}

/// Days since 1970-01-01 back to ISO-8601.
pub fn format_date(days: i64) -> String {
    let (y, m, d) = civil_from_days(days);
    format!("{y:04}-{m:02}-{d:02}")
}

fn is_leap(y: i64) -> bool {
    (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
}

fn days_in_month(y: i64, m: u32) -> u32 {
    match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(y) => 29,
        2 => 28,
        _ => 0,
    }
}

// civil <-> day-count conversions over the proleptic Gregorian calendar
fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = ((m as i64) + 9) % 12;
    let doy = (153 * mp + 2) / 5 + (d as i64) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}
