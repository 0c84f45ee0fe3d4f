//! Seeded within-group percentile bootstrap.
//!
//! Groups are resampled independently: group `k` keeps its size `n_k` and
//! redraws its success count as one `Binomial(n_k, y_k)` draw, which is
//! distributionally identical to resampling `n_k` of its 0/1 outcomes with
//! replacement and far cheaper. Each resample index gets its own RNG
//! substream, so the resample sequence is reproducible from the seed alone
//! and does not depend on thread scheduling.

use std::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group_metrics::{GroupMetricVector, GroupOutcome};
use crate::rng::substream;
use crate::variance::VarianceEstimator;

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("need at least 2 bootstrap resamples, got {b}")]
    TooFewResamples { b: usize },
    #[error("confidence level must lie strictly between 0 and 1, got {level}")]
    InvalidLevel { level: f64 },
    #[error("no samples to take quantiles of")]
    EmptySamples,
    #[error("need at least 2 groups, found {found}")]
    InsufficientGroups { found: usize },
    #[error("statistic {name:?} failed on the original data: {message}")]
    PointEstimateFailed { name: String, message: String },
    #[error("statistic {name:?} failed on resample {index}: {message}")]
    StatisticFailed { name: String, index: usize, message: String },
}

/// Resample count, confidence level, and seed for one bootstrap run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub b: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { b: 500, level: 0.95, seed: 0 }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<(), BootstrapError> {
        if self.b < 2 {
            return Err(BootstrapError::TooFewResamples { b: self.b });
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(BootstrapError::InvalidLevel { level: self.level });
        }
        Ok(())
    }
}

/// One bootstrapped statistic: its value on the original data, the resample
/// values in resample-index order, and the percentile interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub statistic_name: String,
    pub point_estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub samples: Vec<f64>,
}

/// Redraws one group's success count, keeping its size and key.
pub fn resample_group<R: Rng + ?Sized>(outcome: &GroupOutcome, rng: &mut R) -> GroupOutcome {
    let z = Binomial::new(outcome.n(), outcome.y())
        .expect("observed rate lies in [0, 1]")
        .sample(rng);
    GroupOutcome::new(outcome.group_key().clone(), outcome.n(), z)
        .expect("binomial draw never exceeds its trial count")
}

/// Resamples every group of a vector once, preserving order, metric, and
/// the exclusion list.
pub fn resample_vector<R: Rng + ?Sized>(
    groups: &GroupMetricVector,
    rng: &mut R,
) -> GroupMetricVector {
    let resampled = groups
        .groups()
        .iter()
        .map(|g| resample_group(g, rng))
        .collect();
    GroupMetricVector::new(groups.metric(), resampled, groups.excluded().to_vec())
        .expect("resampling preserves key uniqueness")
}

/// Equal-tailed percentile interval from bootstrap samples.
///
/// Quantiles interpolate linearly between order statistics: the `q`-quantile
/// of `b` sorted values sits at fractional position `1 + (b - 1) q`
/// (1-indexed). With `level = 0.95` the interval spans the 0.025 and 0.975
/// quantiles.
pub fn percentile_interval(samples: &[f64], level: f64) -> Result<(f64, f64), BootstrapError> {
    if samples.is_empty() {
        return Err(BootstrapError::EmptySamples);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(BootstrapError::InvalidLevel { level });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail)))
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Runs `config.b` resamples and evaluates `eval` on each. Resample `i`
/// draws from substream `i` of `config.seed`, so the output is independent
/// of how the loop is scheduled.
fn run_resamples<T, F>(
    groups: &GroupMetricVector,
    config: &BootstrapConfig,
    eval: F,
) -> Result<Vec<T>, BootstrapError>
where
    T: Send,
    F: Fn(usize, &GroupMetricVector) -> Result<T, BootstrapError> + Sync,
{
    config.validate()?;
    if groups.k() < 2 {
        return Err(BootstrapError::InsufficientGroups { found: groups.k() });
    }
    (0..config.b)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(config.seed, i as u64);
            let resampled = resample_vector(groups, &mut rng);
            eval(i, &resampled)
        })
        .collect()
}

/// Bootstraps an arbitrary statistic of a group vector.
///
/// The statistic is evaluated once on the original data (the point estimate)
/// and once per resample; a statistic that fails on any input aborts the
/// run with the failing resample index.
pub fn bootstrap_statistic<F, E>(
    groups: &GroupMetricVector,
    statistic_name: &str,
    statistic: F,
    config: &BootstrapConfig,
) -> Result<BootstrapResult, BootstrapError>
where
    F: Fn(&GroupMetricVector) -> Result<f64, E> + Sync,
    E: fmt::Display,
{
    let point_estimate =
        statistic(groups).map_err(|e| BootstrapError::PointEstimateFailed {
            name: statistic_name.to_string(),
            message: e.to_string(),
        })?;
    let samples = run_resamples(groups, config, |index, resampled| {
        statistic(resampled).map_err(|e| BootstrapError::StatisticFailed {
            name: statistic_name.to_string(),
            index,
            message: e.to_string(),
        })
    })?;
    let (lower, upper) = percentile_interval(&samples, config.level)?;
    Ok(BootstrapResult {
        statistic_name: statistic_name.to_string(),
        point_estimate,
        lower,
        upper,
        samples,
    })
}

/// Bootstraps several variance estimators over one shared set of resamples,
/// so their intervals describe the same resampled data rather than
/// independent redraws.
pub fn bootstrap_estimators(
    groups: &GroupMetricVector,
    estimators: &[VarianceEstimator],
    config: &BootstrapConfig,
) -> Result<Vec<BootstrapResult>, BootstrapError> {
    let point_estimates: Vec<f64> = estimators
        .iter()
        .map(|est| {
            est.evaluate(groups).map_err(|e| BootstrapError::PointEstimateFailed {
                name: est.name().to_string(),
                message: e.to_string(),
            })
        })
        .collect::<Result<_, _>>()?;
    let rows = run_resamples(groups, config, |index, resampled| {
        estimators
            .iter()
            .map(|est| {
                est.evaluate(resampled).map_err(|e| BootstrapError::StatisticFailed {
                    name: est.name().to_string(),
                    index,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()
    })?;
    estimators
        .iter()
        .enumerate()
        .map(|(j, est)| {
            let samples: Vec<f64> = rows.iter().map(|row| row[j]).collect();
            let (lower, upper) = percentile_interval(&samples, config.level)?;
            Ok(BootstrapResult {
                statistic_name: est.name().to_string(),
                point_estimate: point_estimates[j],
                lower,
                upper,
                samples,
            })
        })
        .collect()
}
