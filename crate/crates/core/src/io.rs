//! CSV signal matrices and JSON impulse-response files.
//!
//! A matrix file has one line per time index `0..=N` and one comma-separated
//! cell per experiment. Lines starting with `#` are comments. Values are
//! written with 17 significant digits so a write/read cycle is exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::divergence::ExtendedNonnegReal;
use crate::error::{Error, Result};
use crate::linop::{ImpulseResponse, SignalMatrix};
use crate::solver::{FitResult, FitStatus};

/// Format a value with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_matrix(text: &str) -> Result<SignalMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("row {r}: {e}")))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {r}, column {c}: '{cell}' is not a number")))?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Domain(format!(
                        "row {r}, column {c}: {cell} is not a finite nonnegative number"
                    )));
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("matrix file has no data rows".into()));
    }
    SignalMatrix::from_rows(&rows)
}

pub fn read_matrix(path: &Path) -> Result<SignalMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        Error::Domain(m) => Error::Domain(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn format_matrix(m: &SignalMatrix, header: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    for i in 0..m.rows() {
        let cells: Vec<String> = m.row(i).iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &SignalMatrix, header: Option<&str>) -> Result<()> {
    write_text(path, &format_matrix(m, header))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Contents of `h_hat.json`.
#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub q: usize,
    pub h: Vec<f64>,
    pub divergence: ExtendedNonnegReal,
    pub kkt_residual: f64,
    pub status: FitStatus,
    pub iterations: usize,
    pub condition_holds: bool,
    pub condition_failing_rows: Vec<usize>,
}

impl From<&FitResult> for FitSummary {
    fn from(r: &FitResult) -> Self {
        Self {
            q: r.h_hat.order(),
            h: r.h_hat.as_slice().to_vec(),
            divergence: r.final_divergence(),
            kkt_residual: r.kkt_residual,
            status: r.status,
            iterations: r.iterations_used,
            condition_holds: r.condition.holds,
            condition_failing_rows: r.condition.failing_rows.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ImpulseFile {
    Bare(Vec<f64>),
    Object { h: Vec<f64> },
}

/// Accepts a JSON array, a JSON object with an `h` array (such as
/// `h_hat.json`), or CSV with one value per line or per cell.
pub fn parse_impulse_response(text: &str) -> Result<ImpulseResponse> {
    let trimmed = text.trim_start();
    let values = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        match serde_json::from_str::<ImpulseFile>(trimmed)? {
            ImpulseFile::Bare(h) | ImpulseFile::Object { h } => h,
        }
    } else {
        parse_matrix(text)?.as_slice().to_vec()
    };
    ImpulseResponse::new(values)
}

pub fn read_impulse_response(path: &Path) -> Result<ImpulseResponse> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_impulse_response(&text)
}

/// `iteration,h_0,…,h_q,divergence`, one row per iterate starting at 0.
/// Without an iterate trace only `iteration,divergence` is written.
pub fn format_trace(result: &FitResult) -> String {
    let q = result.h_hat.order();
    let iterates = result.iterate_trace.as_ref();
    let mut out = String::from("iteration");
    if iterates.is_some() {
        for k in 0..=q {
            out.push_str(&format!(",h_{k}"));
        }
    }
    out.push_str(",divergence\n");
    for (t, f) in result.divergence_trace.iter().enumerate() {
        out.push_str(&t.to_string());
        if let Some(h) = iterates.map(|tr| &tr[t]) {
            for &v in h.as_slice() {
                out.push(',');
                out.push_str(&fmt_f64(v));
            }
        }
        out.push(',');
        out.push_str(&f.to_string());
        out.push('\n');
    }
    out
}

/// Hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
