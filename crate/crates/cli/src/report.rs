//! Report types and JSON/CSV rendering.
//!
//! JSON is the lossless format: reports round-trip through serde with exact
//! float values. CSV is a flat long-format view for spreadsheets; floats are
//! written as `{:.16e}`, which also parses back to the identical value.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use disparity_core::{
    BiasSweepCell, BiasSweepConfig, BootstrapResult, CoverageReport, GroupMetricVector,
    MetaMetricResult, Scenario, VarianceEstimate,
};

use crate::input::InputFormat;
use crate::CliError;

/// Output rendering for all subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown output format {other:?} (expected json or csv)")),
        }
    }
}

/// Results for one `base metric x grouping` unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSection {
    /// Base metric name, or `"aggregated"` when counts came pre-aggregated.
    pub base_metric: String,
    /// The grouping columns this section was computed under.
    pub grouping: Vec<String>,
    pub groups: GroupMetricVector,
    pub meta_metrics: Vec<MetaMetricResult>,
    pub variance: VarianceEstimate,
    pub intervals: Vec<BootstrapResult>,
}

/// Full output of one `analyze` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityReport {
    pub input: String,
    pub input_format: InputFormat,
    pub bootstrap: disparity_core::BootstrapConfig,
    pub sections: Vec<AnalysisSection>,
}

/// Bias sweep output with the grid that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSweepReport {
    pub config: BiasSweepConfig,
    pub cells: Vec<BiasSweepCell>,
}

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match out {
        None => Ok(Box::new(io::stdout().lock())),
        Some(path) => {
            let file = File::create(path)
                .map_err(|source| CliError::Io { path: path.into(), source })?;
            Ok(Box::new(file))
        }
    }
}

/// Serializes any value as pretty JSON to the given path or stdout.
pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut writer = open_output(out)?;
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer
        .write_all(b"\n")
        .map_err(|source| CliError::Io { path: out_path(out), source })?;
    Ok(())
}

fn out_path(out: Option<&Path>) -> PathBuf {
    out.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
}

/// Float cell format: 17 significant digits, enough to reparse exactly.
fn fnum(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows(
    out: Option<&Path>,
    header: &[&str],
    rows: Vec<Vec<String>>,
) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_writer(open_output(out)?);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|source| CliError::Io { path: out_path(out), source })?;
    Ok(())
}

/// Long-format CSV: one row per statistic, with interval bounds where the
/// statistic carries them.
pub fn write_report_csv(report: &DisparityReport, out: Option<&Path>) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for section in &report.sections {
        let grouping = section.grouping.join(",");
        let mut push = |statistic: &str, value: String, lower: String, upper: String| {
            rows.push(vec![
                section.base_metric.clone(),
                grouping.clone(),
                statistic.to_string(),
                value,
                lower,
                upper,
            ]);
        };
        push("groups", section.groups.k().to_string(), String::new(), String::new());
        push(
            "excluded_groups",
            section.groups.excluded().len().to_string(),
            String::new(),
            String::new(),
        );
        for outcome in section.groups.groups() {
            push(&format!("group:{}", outcome.group_key()), fnum(outcome.y()), String::new(), String::new());
        }
        for m in &section.meta_metrics {
            push(&m.kind.name(), fnum(m.value), String::new(), String::new());
        }
        push("corrected_variance", fnum(section.variance.corrected), String::new(), String::new());
        push(
            "corrected_variance_raw",
            fnum(section.variance.corrected_raw),
            String::new(),
            String::new(),
        );
        push(
            "correction_term",
            fnum(section.variance.correction_term),
            String::new(),
            String::new(),
        );
        for interval in &section.intervals {
            push(
                &interval.statistic_name,
                fnum(interval.point_estimate),
                fnum(interval.lower),
                fnum(interval.upper),
            );
        }
    }
    write_rows(
        out,
        &["base_metric", "grouping", "statistic", "value", "lower", "upper"],
        rows,
    )
}

/// One row per sweep cell.
pub fn write_bias_csv(cells: &[BiasSweepCell], out: Option<&Path>) -> Result<(), CliError> {
    let rows = cells
        .iter()
        .map(|c| {
            vec![
                c.kind.name(),
                c.k.to_string(),
                fnum(c.lower),
                c.group_size.to_string(),
                fnum(c.true_value),
                fnum(c.mean_bias),
                fnum(c.std_error),
                c.replicates_used.to_string(),
                c.analytic_bias.map(fnum).unwrap_or_default(),
            ]
        })
        .collect();
    write_rows(
        out,
        &[
            "meta_metric",
            "k",
            "lower_bound",
            "group_size",
            "true_value",
            "mean_bias",
            "std_error",
            "replicates_used",
            "analytic_bias",
        ],
        rows,
    )
}

/// One row per scenario and estimator.
pub fn write_coverage_csv(report: &CoverageReport, out: Option<&Path>) -> Result<(), CliError> {
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.scenario.clone(),
                r.estimator.name().to_string(),
                fnum(r.true_variance),
                r.hits.to_string(),
                report.replicates.to_string(),
                fnum(r.coverage_percent),
            ]
        })
        .collect();
    write_rows(
        out,
        &["scenario", "estimator", "true_variance", "hits", "replicates", "coverage_percent"],
        rows,
    )
}

/// One row per scenario group, so the full rate and size vectors are visible.
pub fn write_scenarios_csv(scenarios: &[Scenario], out: Option<&Path>) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for s in scenarios {
        for (i, (&mu, &n)) in s.true_rates().iter().zip(s.group_sizes()).enumerate() {
            rows.push(vec![
                s.name().to_string(),
                (i + 1).to_string(),
                fnum(mu),
                n.to_string(),
                fnum(s.true_variance()),
            ]);
        }
    }
    write_rows(
        out,
        &["scenario", "group", "true_rate", "group_size", "true_variance"],
        rows,
    )
}
