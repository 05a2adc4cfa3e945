// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV ingestion into variable-major form.
//!
//! The orientation is never guessed from the shape. It comes from the
//! caller or from a leading directive line such as
//! `# orientation: rows-are-times`. A single header row and a single header
//! column are recognized when none of their data-position cells parse as
//! numbers.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use corrcp::ObservationMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Each row is one variable, each column one time point.
    RowsAreVariables,
    /// Each row is one time point.
    RowsAreTimes,
}

impl Orientation {
    pub fn name(self) -> &'static str {
        match self {
            Orientation::RowsAreVariables => "rows-are-variables",
            Orientation::RowsAreTimes => "rows-are-times",
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Orientation {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "rows-are-variables" | "variables" => Ok(Orientation::RowsAreVariables),
            "rows-are-times" | "times" => Ok(Orientation::RowsAreTimes),
            other => Err(CliError::Usage(format!("unknown orientation {other:?}"))),
        }
    }
}

/// Reads a directive of the form `# orientation: <value>` (or `=`).
fn directive(line: &str) -> Option<&str> {
    let body = line.trim().strip_prefix('#')?.trim();
    let rest = body.strip_prefix("orientation")?.trim_start();
    let value = rest.strip_prefix(':').or_else(|| rest.strip_prefix('='))?;
    Some(value.trim())
}

fn parse_cell(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn ingest_csv(path: &Path, orientation: Option<Orientation>) -> Result<ObservationMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(&text, orientation)
}

/// [`ingest_csv`] on in-memory text.
pub fn parse_csv(text: &str, orientation: Option<Orientation>) -> Result<ObservationMatrix> {
    let mut declared = None;
    let mut skipped = 0;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            skipped += 1;
            continue;
        }
        if let Some(v) = directive(trimmed) {
            declared = Some(v.parse::<Orientation>()?);
            skipped += 1;
            continue;
        }
        if trimmed.starts_with('#') {
            skipped += 1;
            continue;
        }
        break;
    }
    let orientation = match (orientation, declared) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Usage(format!("--orientation {a} contradicts the file directive {b}")))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => {
            return Err(CliError::Usage(
                "orientation is required: pass --orientation or start the file with '# orientation: ...'".into(),
            ))
        }
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Csv(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if line <= skipped || (rec.len() == 1 && rec[0].is_empty()) {
            continue;
        }
        if rec.get(0).is_some_and(|c| c.starts_with('#')) {
            continue;
        }
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    if rows.is_empty() {
        return Err(CliError::EmptyFile);
    }
    let width = rows[0].1.len();
    for (line, cells) in &rows {
        if cells.len() != width {
            return Err(CliError::RaggedRows {
                row: *line,
                expected: width,
                found: cells.len(),
            });
        }
    }

    let header_row = rows[0].1.iter().skip(1).all(|c| parse_cell(c).is_none())
        && (width > 1 || parse_cell(&rows[0].1[0]).is_none());
    let body = if header_row { &rows[1..] } else { &rows[..] };
    if body.is_empty() {
        return Err(CliError::EmptyFile);
    }
    let header_col = width > 1 && body.iter().all(|(_, c)| parse_cell(&c[0]).is_none());
    let skip = usize::from(header_col);

    let mut grid = Vec::with_capacity(body.len());
    for (line, cells) in body {
        let row = cells
            .iter()
            .enumerate()
            .skip(skip)
            .map(|(k, c)| {
                parse_cell(c).ok_or_else(|| CliError::NonNumericCell {
                    row: *line,
                    col: k + 1,
                    value: c.clone(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        grid.push(row);
    }
    if grid[0].is_empty() {
        return Err(CliError::EmptyFile);
    }
    let m = match orientation {
        Orientation::RowsAreVariables => ObservationMatrix::from_rows(&grid)?,
        Orientation::RowsAreTimes => ObservationMatrix::from_columns(&grid)?,
    };
    Ok(m)
}

/// Writes `data` as a headerless rows-are-variables grid.
pub fn write_csv(data: &ObservationMatrix) -> String {
    let mut out = String::from("# orientation: rows-are-variables\n");
    for i in 0..data.p() {
        let row: Vec<String> = data.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
