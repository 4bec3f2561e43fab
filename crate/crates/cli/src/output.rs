//! Report rendering. Floats use the shortest representation that parses
//! back to the same value, in both JSON and CSV.

use std::io::Write;

use serde::Serialize;

use crate::commands::Failure;
use crate::{Common, Format};

/// A report with a JSON form and a CSV table.
pub trait Report: Serialize {
    fn csv_header(&self) -> Vec<&'static str>;
    fn csv_rows(&self) -> Vec<Vec<String>>;
}

pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

pub fn render<R: Report>(report: &R, format: Format) -> Result<Vec<u8>, Failure> {
    match format {
        Format::Json => {
            let mut text = serde_json::to_vec_pretty(report).map_err(|e| Failure::internal(e.to_string()))?;
            text.push(b'\n');
            Ok(text)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(report.csv_header()).map_err(|e| Failure::internal(e.to_string()))?;
            for row in report.csv_rows() {
                w.write_record(&row).map_err(|e| Failure::internal(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Failure::internal(e.to_string()))
        }
    }
}

pub fn emit<R: Report>(report: &R, common: &Common) -> Result<(), Failure> {
    let bytes = render(report, common.format)?;
    match &common.out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes).and_then(|_| out.flush()).map_err(|e| Failure::internal(e.to_string()))
        }
    }
}
