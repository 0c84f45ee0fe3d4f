//! Measurement of between-group model performance disparities that accounts
//! for sampling noise in the per-group rates.
//!
//! A per-group performance rate (accuracy, selection rate, false or true
//! positive rate) is an estimate, not a truth: a group of 20 people pins its
//! rate down far less precisely than a group of 20,000. Disparity summaries
//! computed straight from observed rates inherit that noise and overstate
//! how much performance actually varies between groups, most severely when
//! groups are small or numerous. This crate measures the spread of group
//! rates while correcting for that effect:
//!
//! - [`group_metrics`] turns labeled binary predictions into per-group
//!   trial/success counts, for single and intersectional groupings;
//! - [`meta_metrics`] computes scalar summaries of how a rate vector
//!   spreads (max-min difference and ratio, max absolute difference, mean
//!   absolute deviation, variance, generalized entropy index);
//! - [`variance`] provides between-group variance estimators that subtract
//!   the sampling-noise contribution, including the double correction
//!   required on bootstrap resamples;
//! - [`bootstrap`] computes seeded percentile intervals for any statistic
//!   of a group vector, resampling within groups;
//! - [`simulation`] runs Monte-Carlo studies of estimator bias and interval
//!   coverage against known-truth scenarios;
//! - [`rng`] derives the deterministic substreams that make every
//!   randomized result reproducible bit for bit, independent of thread
//!   count.

#![forbid(unsafe_code)]

pub mod bootstrap;
pub mod group_metrics;
pub mod meta_metrics;
pub mod rng;
pub mod simulation;
pub mod variance;

pub use bootstrap::{
    bootstrap_estimators, bootstrap_statistic, percentile_interval, resample_group,
    resample_vector, BootstrapConfig, BootstrapError, BootstrapResult,
};
pub use group_metrics::{
    aggregate, intersect_groups, plug_in_variance, BaseMetric, ClassificationRecord,
    ExcludedGroup, GroupKey, GroupMetricVector, GroupMetricsError, GroupOutcome, RawRecord,
};
pub use meta_metrics::{
    meta_metric, EntropyAlpha, MetaMetricError, MetaMetricKind, MetaMetricResult,
};
pub use simulation::{
    bias_sweep, coverage_study, draw_replicate, replicate_study, standard_scenarios,
    BiasSweepCell, BiasSweepConfig, CoverageReport, CoverageRow, ReplicateStudy, Scenario,
    SimulationError,
};
pub use variance::{
    bootstrap_sample_variance, corrected_variance, double_corrected_variance, VarianceEstimate,
    VarianceError, VarianceEstimator,
};
