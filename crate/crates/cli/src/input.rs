//! CSV input loading.
//!
//! Two layouts are supported, both UTF-8 with a header row:
//!
//! - `records`: one scored observation per row. Requires `label` and
//!   `prediction` columns holding `0` or `1`; every other column is a group
//!   attribute selectable with `--group-by`. Empty attribute values become
//!   the category `"<missing>"`.
//! - `aggregated`: one group per row with columns `group`, `n` (trials,
//!   at least 1) and `z` (successes, at most `n`).
//!
//! Malformed rows are reported with their line number.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use disparity_core::{GroupKey, GroupOutcome, RawRecord};

use crate::CliError;

/// How the input CSV is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    Records,
    Aggregated,
}

impl InputFormat {
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            InputFormat::Records => "records",
            InputFormat::Aggregated => "aggregated",
        }
    }
}

impl std::fmt::Display for InputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "records" => Ok(InputFormat::Records),
            "aggregated" => Ok(InputFormat::Aggregated),
            other => Err(format!("unknown input format {other:?} (expected records or aggregated)")),
        }
    }
}

/// A loaded dataset, still format-shaped.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedInput {
    Records(Vec<RawRecord>),
    Aggregated(Vec<GroupOutcome>),
}

/// Reads a CSV file in the given layout.
pub fn load_input(path: &Path, format: InputFormat) -> Result<LoadedInput, CliError> {
    let file = File::open(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    match format {
        InputFormat::Records => load_records(path, &mut reader),
        InputFormat::Aggregated => load_aggregated(path, &mut reader),
    }
}

fn column_index(
    path: &Path,
    headers: &csv::StringRecord,
    column: &str,
) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| CliError::MissingColumn { path: path.into(), column: column.into() })
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, csv::Position::line)
}

fn parse_indicator(
    path: &Path,
    record: &csv::StringRecord,
    index: usize,
    column: &str,
) -> Result<bool, CliError> {
    match record.get(index) {
        Some("0") => Ok(false),
        Some("1") => Ok(true),
        other => Err(CliError::Malformed {
            path: path.into(),
            line: record_line(record),
            message: format!(
                "{column} must be 0 or 1, got {:?}",
                other.unwrap_or_default()
            ),
        }),
    }
}

fn load_records<R: std::io::Read>(
    path: &Path,
    reader: &mut csv::Reader<R>,
) -> Result<LoadedInput, CliError> {
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(CliError::NoData { path: path.into() });
    }
    let label_idx = column_index(path, &headers, "label")?;
    let prediction_idx = column_index(path, &headers, "prediction")?;
    let attribute_columns: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx && i != prediction_idx)
        .map(|(i, name)| (i, name.to_string()))
        .collect();

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let label = parse_indicator(path, &row, label_idx, "label")?;
        let prediction = parse_indicator(path, &row, prediction_idx, "prediction")?;
        let attributes = attribute_columns
            .iter()
            .map(|&(i, ref name)| {
                let value = match row.get(i) {
                    None | Some("") => "<missing>",
                    Some(v) => v,
                };
                (name.clone(), value.to_string())
            })
            .collect();
        records.push(RawRecord { attributes, label, prediction });
    }
    if records.is_empty() {
        return Err(CliError::NoData { path: path.into() });
    }
    Ok(LoadedInput::Records(records))
}

fn load_aggregated<R: std::io::Read>(
    path: &Path,
    reader: &mut csv::Reader<R>,
) -> Result<LoadedInput, CliError> {
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(CliError::NoData { path: path.into() });
    }
    let group_idx = column_index(path, &headers, "group")?;
    let n_idx = column_index(path, &headers, "n")?;
    let z_idx = column_index(path, &headers, "z")?;

    let malformed = |line: u64, message: String| CliError::Malformed {
        path: path.into(),
        line,
        message,
    };
    let parse_count = |row: &csv::StringRecord, index: usize, column: &str| -> Result<u64, CliError> {
        let raw = row.get(index).unwrap_or_default();
        raw.parse().map_err(|_| {
            malformed(
                record_line(row),
                format!("{column} must be a non-negative integer, got {raw:?}"),
            )
        })
    };

    let mut seen = std::collections::HashSet::new();
    let mut outcomes = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = record_line(&row);
        let group = row.get(group_idx).unwrap_or_default().to_string();
        if group.is_empty() {
            return Err(malformed(line, "group must be nonempty".to_string()));
        }
        if !seen.insert(group.clone()) {
            return Err(malformed(line, format!("duplicate group {group:?}")));
        }
        let n = parse_count(&row, n_idx, "n")?;
        let z = parse_count(&row, z_idx, "z")?;
        if n == 0 {
            return Err(malformed(line, "n must be at least 1".to_string()));
        }
        if z > n {
            return Err(malformed(line, format!("z ({z}) exceeds n ({n})")));
        }
        outcomes.push(
            GroupOutcome::new(GroupKey::single(group), n, z)
                .expect("bounds were checked above"),
        );
    }
    if outcomes.is_empty() {
        return Err(CliError::NoData { path: path.into() });
    }
    Ok(LoadedInput::Aggregated(outcomes))
}
