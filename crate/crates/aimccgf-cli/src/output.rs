//! Serialization of result tables and reports.
//!
//! Every artifact starts with the command name, the configuration hash and
//! the seed. Floating-point values are written with 17 significant digits so
//! that they round-trip exactly.

use serde::Serialize;

use crate::error::Result;

/// Reproducibility stamp carried by every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Stamp {
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

/// A table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_owned())
    }
}

/// `x` in scientific notation with 17 significant digits.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(x) => format_real(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// CSV document: `# key = value` comment lines, a header row and data rows.
pub fn csv_table(
    stamp: &Stamp,
    notes: &[(&str, String)],
    columns: &[&str],
    rows: &[Vec<Cell>],
) -> Result<Vec<u8>> {
    let mut buffer = Vec::new();
    let mut comments = vec![
        ("command", stamp.command.to_string()),
        ("config_sha256", stamp.config_sha256.clone()),
        ("seed", stamp.seed.to_string()),
    ];
    comments.extend(notes.iter().map(|(k, v)| (*k, v.clone())));
    for (key, value) in comments {
        buffer.extend_from_slice(format!("# {key} = {value}\n").as_bytes());
    }
    let mut writer = csv::Writer::from_writer(buffer);
    writer.write_record(columns)?;
    for row in rows {
        writer.write_record(row.iter().map(Cell::render))?;
    }
    writer.flush()?;
    writer
        .into_inner()
        .map_err(|e| crate::error::CliError::Serialize(e.to_string()))
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    #[serde(flatten)]
    stamp: &'a Stamp,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON object with the stamp fields merged into `body`.
pub fn json_document<T: Serialize>(stamp: &Stamp, body: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&Stamped { stamp, body })?;
    bytes.push(b'\n');
    Ok(bytes)
}
