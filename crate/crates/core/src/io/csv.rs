//! Result tables: one row per [`RunRecord`], 12 significant digits.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::RunRecord;

pub const HEADER: [&str; 9] = [
    "ratio",
    "t_ori",
    "t_scr",
    "t_red",
    "screening_pct",
    "speedup",
    "max_diff",
    "metric",
    "stderr",
];

/// Formats with 12 significant digits.
pub fn fmt12(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        v.to_string()
    }
}

/// Rounds to what [`fmt12`] would print.
pub fn round12(v: f64) -> f64 {
    fmt12(v).parse().unwrap_or(v)
}

fn csv_err(path: &Path, e: ::csv::Error) -> Error {
    match e.into_kind() {
        ::csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::MalformedLine {
            line: 0,
            reason: format!("{other:?}"),
        },
    }
}

pub fn write_csv(records: &[RunRecord], out: impl Write) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let path = Path::new("<writer>");
    let mut w = ::csv::Writer::from_writer(out);
    w.write_record(HEADER).map_err(|e| csv_err(path, e))?;
    for r in records {
        w.write_record(r.fields().map(fmt12))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn emit_csv(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(records, f).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_csv(input: impl Read) -> Result<Vec<RunRecord>> {
    let mut r = ::csv::Reader::from_reader(input);
    let path = Path::new("<reader>");
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::MalformedLine {
            line: 1,
            reason: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (k, row) in r.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| csv_err(path, e))?;
        let mut vals = [0.0; 9];
        if row.len() != 9 {
            return Err(Error::MalformedLine {
                line,
                reason: format!("{} fields", row.len()),
            });
        }
        for (v, tok) in vals.iter_mut().zip(row.iter()) {
            *v = tok.parse().map_err(|_| Error::MalformedLine {
                line,
                reason: format!("`{tok}` is not a number"),
            })?;
        }
        out.push(RunRecord::from_fields(vals));
    }
    Ok(out)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(f)
}
