//! JSON frame files.
//!
//! ```json
//! {"field": "complex", "rows": 2, "cols": 3,
//!  "columns": [[[re, im], [re, im]], ...]}
//! ```
//!
//! Columns are listed outermost. Complex entries are always `[re, im]`
//! pairs and real entries are bare numbers. Numbers are written with 17
//! significant digits so a write/read cycle is bit exact.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::frame::{normalize_columns, Frame};
use crate::linalg::{Field, Matrix, C64};

fn format_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Format {
        field: field.into(),
        message: message.into(),
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A parsed frame file before the unit-norm check.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFrame {
    pub field: Field,
    pub matrix: Matrix,
}

impl RawFrame {
    /// Validates unit norms.
    pub fn into_frame(self) -> Result<Frame> {
        Frame::new(self.field, self.matrix)
    }

    /// Normalizes columns first.
    pub fn into_normalized_frame(self) -> Result<Frame> {
        normalize_columns(self.field, &self.matrix)
    }
}

pub(crate) fn parse_usize(obj: &serde_json::Map<String, Value>, key: &str) -> Result<usize> {
    let v = obj.get(key).ok_or_else(|| format_err(key, "missing"))?;
    let n = v
        .as_u64()
        .ok_or_else(|| format_err(key, "expected a positive integer"))?;
    if n == 0 {
        return Err(format_err(key, "must be positive"));
    }
    Ok(n as usize)
}

pub(crate) fn parse_entry(v: &Value, field: Field, path: &str) -> Result<C64> {
    let num = |v: &Value, p: &str| -> Result<f64> {
        let x = v
            .as_f64()
            .ok_or_else(|| format_err(p, "expected a number"))?;
        if !x.is_finite() {
            return Err(format_err(p, "non-finite number"));
        }
        Ok(x)
    };
    match field {
        Field::Real => Ok(C64::new(num(v, path)?, 0.0)),
        Field::Complex => {
            let pair = v
                .as_array()
                .ok_or_else(|| format_err(path, "expected an [re, im] pair"))?;
            if pair.len() != 2 {
                return Err(format_err(path, "expected exactly two numbers [re, im]"));
            }
            Ok(C64::new(
                num(&pair[0], &format!("{path}[0]"))?,
                num(&pair[1], &format!("{path}[1]"))?,
            ))
        }
    }
}

pub(crate) fn parse_vector(v: &Value, len: usize, field: Field, path: &str) -> Result<Vec<C64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| format_err(path, "expected an array of entries"))?;
    if arr.len() != len {
        return Err(format_err(
            path,
            format!("expected {len} entries, found {}", arr.len()),
        ));
    }
    arr.iter()
        .enumerate()
        .map(|(i, e)| parse_entry(e, field, &format!("{path}[{i}]")))
        .collect()
}

pub(crate) fn write_entry(out: &mut String, z: C64, field: Field) {
    match field {
        Field::Real => out.push_str(&fmt_f64(z.re)),
        Field::Complex => {
            let _ = write!(out, "[{}, {}]", fmt_f64(z.re), fmt_f64(z.im));
        }
    }
}

pub(crate) fn write_vector(out: &mut String, v: &[C64], field: Field) {
    out.push('[');
    for (i, &z) in v.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_entry(out, z, field);
    }
    out.push(']');
}

pub(crate) fn parse_field(obj: &serde_json::Map<String, Value>) -> Result<Field> {
    match obj.get("field").and_then(Value::as_str) {
        Some("real") => Ok(Field::Real),
        Some("complex") => Ok(Field::Complex),
        Some(other) => Err(format_err(
            "field",
            format!("expected \"real\" or \"complex\", found \"{other}\""),
        )),
        None => Err(format_err("field", "missing or not a string")),
    }
}

/// Parses a frame file without enforcing unit norms.
pub fn parse_raw_frame(text: &str) -> Result<RawFrame> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| format_err("<document>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| format_err("<document>", "expected a JSON object"))?;
    let field = parse_field(obj)?;
    let rows = parse_usize(obj, "rows")?;
    let cols = parse_usize(obj, "cols")?;
    let columns = obj
        .get("columns")
        .and_then(Value::as_array)
        .ok_or_else(|| format_err("columns", "missing or not an array"))?;
    if columns.len() != cols {
        return Err(format_err(
            "columns",
            format!("expected {cols} columns, found {}", columns.len()),
        ));
    }
    let parsed: Vec<Vec<C64>> = columns
        .iter()
        .enumerate()
        .map(|(n, c)| parse_vector(c, rows, field, &format!("columns[{n}]")))
        .collect::<Result<_>>()?;
    Ok(RawFrame {
        field,
        matrix: Matrix::from_columns(rows, &parsed)?,
    })
}

/// Parses a frame file and checks that its columns are unit norm.
pub fn parse_frame(text: &str) -> Result<Frame> {
    parse_raw_frame(text)?.into_frame()
}

pub fn frame_to_json(f: &Frame) -> String {
    matrix_to_json(f.field(), f.synthesis())
}

/// Serializes any matrix in the frame file layout.
pub fn matrix_to_json(field: Field, m: &Matrix) -> String {
    let mut out = String::new();
    let name = match field {
        Field::Real => "real",
        Field::Complex => "complex",
    };
    let _ = write!(
        out,
        "{{\"field\": \"{name}\", \"rows\": {}, \"cols\": {}, \"columns\": [",
        m.rows(),
        m.cols()
    );
    for n in 0..m.cols() {
        if n > 0 {
            out.push_str(",\n  ");
        } else {
            out.push_str("\n  ");
        }
        write_vector(&mut out, &m.column(n), field);
    }
    out.push_str("\n]}\n");
    out
}

pub fn read_raw_frame(path: &Path) -> Result<RawFrame> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_raw_frame(&text)
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    read_raw_frame(path)?.into_frame()
}

pub fn write_frame(path: &Path, f: &Frame) -> Result<()> {
    std::fs::write(path, frame_to_json(f))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
