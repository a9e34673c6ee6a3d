//! Plain-text matrix files, JSON sidecars and number formatting.
//!
//! Matrix file layout: the first non-comment line holds `rows cols`, then
//! one matrix row per line with whitespace-separated decimal entries.
//! Everything after `#` on a line is ignored. Entries are written with 17
//! significant digits so that a write/read cycle reproduces every bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line_no, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty matrix file".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse {
            line: line_no,
            msg: format!("bad header: {e}"),
        })?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse {
            line: line_no,
            msg: "header must be `rows cols`".into(),
        });
    };

    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (line_no, line) in lines {
        if seen == rows {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("more than {rows} rows"),
            });
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
        if row.len() != cols {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {cols} entries, found {}", row.len()),
            });
        }
        data.extend(row);
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {rows} rows, found {seen}"),
        });
    }
    DenseMatrix::new(rows, cols, data)
}

pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    fs::write(path, format_matrix(m))?;
    Ok(())
}

/// Metadata written next to a matrix file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub kind: String,
    pub params: serde_json::Value,
    pub labels: Vec<String>,
}

pub fn write_sidecar(path: impl AsRef<Path>, sidecar: &Sidecar) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(sidecar)?)?;
    Ok(())
}

pub fn read_sidecar(path: impl AsRef<Path>) -> Result<Sidecar> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// `%.{digits}g`-style formatting: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros removed.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
