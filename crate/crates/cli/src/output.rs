//! CSV and JSON emission.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// JSON for `.json` paths, CSV otherwise.
    pub fn for_path(path: Option<&Path>) -> Format {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Writes rows as CSV with a mandatory header. A leading
/// `# generated_unix=<seconds>` comment is added when `timestamp` is set.
pub fn write_csv<T: Serialize, W: Write>(
    rows: &[T],
    out: W,
    timestamp: bool,
) -> Result<(), CliError> {
    let mut out = out;
    if timestamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(out, "# generated_unix={secs}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)
            .map_err(|e| io::Error::other(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize, W: Write>(rows: &[T], mut out: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, rows).map_err(|e| io::Error::other(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

/// Emits rows to `path`, or CSV on stdout when no path is given.
pub fn emit<T: Serialize>(
    rows: &[T],
    path: Option<&Path>,
    timestamp: bool,
) -> Result<(), CliError> {
    let format = Format::for_path(path);
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match format {
        Format::Csv => write_csv(rows, sink, timestamp),
        Format::Json => write_json(rows, sink),
    }
}
