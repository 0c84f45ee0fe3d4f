use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use disparity_core::{
    bias_sweep, coverage_study, standard_scenarios, BaseMetric, BiasSweepConfig,
    BootstrapConfig, MetaMetricKind, VarianceEstimator,
};
use disparity_cli::report::{
    write_bias_csv, write_coverage_csv, write_json, write_report_csv, write_scenarios_csv,
    BiasSweepReport,
};
use disparity_cli::{run_analysis, AnalysisRequest, CliError, InputFormat, OutputFormat};

/// Between-group disparity measurement that corrects for sampling noise.
#[derive(Parser)]
#[command(name = "disparity", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a CSV of scored predictions or pre-aggregated group counts
    Analyze(AnalyzeArgs),
    /// Measure the upward bias of plug-in disparity summaries on a simulation grid
    SimulateBias(SimulateBiasArgs),
    /// Measure bootstrap interval coverage of the variance estimators
    SimulateCoverage(SimulateCoverageArgs),
    /// Print the built-in benchmark scenarios
    Scenarios(ScenariosArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Write results to this file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Result rendering: json (lossless) or csv (flat)
    #[arg(long, default_value = "json")]
    output_format: OutputFormat,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input CSV file
    #[arg(long)]
    input: PathBuf,
    /// Input layout: records (label/prediction rows) or aggregated (group/n/z rows)
    #[arg(long, default_value = "records")]
    format: InputFormat,
    /// Comma-separated attribute columns forming one grouping; repeat the
    /// flag to analyze several groupings
    #[arg(long = "group-by", value_name = "COLS")]
    group_by: Vec<String>,
    /// Base metric: accuracy, false_positive_rate, true_positive_rate, or
    /// selection_rate; repeatable
    #[arg(long = "metric", value_name = "METRIC")]
    metric: Vec<BaseMetric>,
    /// Disparity summary to report (default: variance); repeatable. One of
    /// max_min_diff, max_min_ratio, max_abs_diff, mean_abs_dev, variance,
    /// generalized_entropy[:alpha]
    #[arg(long = "meta-metric", value_name = "SUMMARY")]
    meta_metric: Vec<MetaMetricKind>,
    /// Bootstrap resample count
    #[arg(long = "bootstrap-b", default_value_t = 500)]
    bootstrap_b: usize,
    /// Confidence level for bootstrap intervals
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// RNG seed; identical inputs and seed reproduce the report exactly
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateBiasArgs {
    /// Total observations per replicate, split evenly across groups
    #[arg(long = "total-n", default_value_t = 5000)]
    total_n: u64,
    /// Comma-separated group counts to sweep
    #[arg(long = "k-grid", value_delimiter = ',', value_name = "K,...")]
    k_grid: Option<Vec<usize>>,
    /// Comma-separated lower bounds of the true-rate range
    #[arg(long = "lower-bounds", value_delimiter = ',', value_name = "L,...")]
    lower_bounds: Option<Vec<f64>>,
    /// Upper bound of the true-rate range
    #[arg(long, default_value_t = 0.9)]
    upper: f64,
    /// Replicates per grid cell
    #[arg(long, default_value_t = 1000)]
    replicates: u32,
    /// Order of the generalized entropy index included in the sweep
    #[arg(long = "entropy-alpha", default_value_t = 2.0)]
    entropy_alpha: f64,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateCoverageArgs {
    /// Replicates per scenario
    #[arg(long, default_value_t = 1000)]
    replicates: u32,
    /// Bootstrap resamples per replicate
    #[arg(long = "bootstrap-b", default_value_t = 500)]
    bootstrap_b: usize,
    /// Nominal confidence level of the intervals
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Master RNG seed for the whole study
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimator to evaluate (default: all three); repeatable. One of
    /// uncorrected, corrected, double_corrected
    #[arg(long = "estimator", value_name = "ESTIMATOR")]
    estimator: Vec<VarianceEstimator>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ScenariosArgs {
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = err.source();
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze(args) => {
            let request = AnalysisRequest {
                input: args.input,
                input_format: args.format,
                group_by: args
                    .group_by
                    .iter()
                    .map(|cols| cols.split(',').map(|c| c.trim().to_string()).collect())
                    .collect(),
                base_metrics: args.metric,
                meta_metrics: if args.meta_metric.is_empty() {
                    vec![MetaMetricKind::Variance]
                } else {
                    args.meta_metric
                },
                bootstrap: BootstrapConfig {
                    b: args.bootstrap_b,
                    level: args.level,
                    seed: args.seed,
                },
                output: args.output.output,
                output_format: args.output.output_format,
            };
            let report = run_analysis(&request)?;
            let out = request.output.as_deref();
            match request.output_format {
                OutputFormat::Json => write_json(&report, out),
                OutputFormat::Csv => write_report_csv(&report, out),
            }
        }
        Command::SimulateBias(args) => {
            let defaults = BiasSweepConfig::default();
            let config = BiasSweepConfig {
                total_n: args.total_n,
                k_grid: args.k_grid.unwrap_or(defaults.k_grid),
                lower_bounds: args.lower_bounds.unwrap_or(defaults.lower_bounds),
                upper: args.upper,
                replicates: args.replicates,
                seed: args.seed,
                entropy_alpha: args.entropy_alpha,
            };
            let cells = bias_sweep(&config)?;
            let out = args.output.output.as_deref();
            match args.output.output_format {
                OutputFormat::Json => write_json(&BiasSweepReport { config, cells }, out),
                OutputFormat::Csv => write_bias_csv(&cells, out),
            }
        }
        Command::SimulateCoverage(args) => {
            let estimators = if args.estimator.is_empty() {
                VarianceEstimator::ALL.to_vec()
            } else {
                args.estimator
            };
            let config = BootstrapConfig {
                b: args.bootstrap_b,
                level: args.level,
                seed: args.seed,
            };
            let report =
                coverage_study(&standard_scenarios(), &estimators, args.replicates, &config)?;
            let out = args.output.output.as_deref();
            match args.output.output_format {
                OutputFormat::Json => write_json(&report, out),
                OutputFormat::Csv => write_coverage_csv(&report, out),
            }
        }
        Command::Scenarios(args) => {
            let scenarios = standard_scenarios();
            let out = args.output.output.as_deref();
            match args.output.output_format {
                OutputFormat::Json => write_json(&scenarios, out),
                OutputFormat::Csv => write_scenarios_csv(&scenarios, out),
            }
        }
    }
}
