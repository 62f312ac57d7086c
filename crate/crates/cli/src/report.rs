//! Key-value documents and tabular emission.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{io_err, Result};

/// Builder for the flat `key = value` report documents.
#[derive(Debug, Default)]
pub struct KeyValueDoc {
    buf: String,
}

impl KeyValueDoc {
    pub fn new(title: &str) -> Self {
        let mut doc = KeyValueDoc::default();
        let _ = writeln!(doc.buf, "# {title}");
        doc
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        let _ = writeln!(self.buf, "\n# {name}");
        self
    }

    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.buf, "{key} = {value}");
        self
    }

    pub fn put_f64(&mut self, key: &str, value: f64) -> &mut Self {
        let _ = writeln!(self.buf, "{key} = {value}");
        self
    }

    pub fn put_slice(&mut self, key: &str, values: &[f64]) -> &mut Self {
        let joined = values
            .iter()
            .map(|v| format!("{v:.6}"))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(self.buf, "{key} = {joined}");
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.buf)
            .map_err(|e| io_err(&format!("writing {}", path.display()), e))
    }
}

/// CSV writer over string rows; callers format numerics.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

/// Histogram of one draw column: equal-width bins with relative masses.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, f64)> {
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![(lo, hi, 1.0)];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            (
                lo + width * i as f64,
                lo + width * (i + 1) as f64,
                c as f64 / values.len() as f64,
            )
        })
        .collect()
}
