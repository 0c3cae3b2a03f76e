use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::CliError;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Explicit format, else the output file's extension, else CSV.
pub fn resolve_format(explicit: Option<Format>, out: Option<&Path>) -> Format {
    explicit.unwrap_or_else(|| match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Csv,
    })
}

fn sink(out: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(path) => {
            let f = File::create(path).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("write failed: {e}"))
}

/// A table that can be emitted as CSV (formatted strings) or JSON (typed rows).
pub trait Table: Serialize {
    fn header() -> &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

pub fn write_rows<T: Table>(rows: &[T], format: Format, out: Option<&PathBuf>) -> Result<(), CliError> {
    let mut w = sink(out)?;
    match format {
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.write_record(T::header()).map_err(io_err)?;
            for r in rows {
                csv.write_record(r.record()).map_err(io_err)?;
            }
            csv.flush().map_err(io_err)?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows).map_err(io_err)?;
            writeln!(w).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &PathBuf) -> Result<(), CliError> {
    let mut w = sink(Some(path))?;
    serde_json::to_writer_pretty(&mut w, value).map_err(io_err)?;
    writeln!(w).map_err(io_err)?;
    w.flush().map_err(io_err)
}
