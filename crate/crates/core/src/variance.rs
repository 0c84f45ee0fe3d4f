//! Between-group variance estimators that remove sampling noise.
//!
//! The observed between-group variance decomposes, in expectation, into the
//! true variance of the underlying group rates plus the average sampling
//! variance of the per-group estimates:
//!
//! ```text
//! E[var(Y)] = var(mu) + (1/K) * sum_k mu_k (1 - mu_k) / n_k
//! ```
//!
//! so subtracting a plug-in estimate of the second term gives an (almost)
//! unbiased estimate of the first. Negative results are truncated to zero,
//! since a variance cannot be negative; truncation trades a little bias near
//! zero for a sane estimate.
//!
//! The double-corrected form applies when the statistic is computed on a
//! within-group bootstrap resample of the observed data. Resampled rates
//! carry the sampling noise twice over (draw plus redraw), which inflates
//! their variance around the truth to `2y(1-y)/n - y(1-y)/n^2` per group,
//! and that is the term subtracted.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::group_metrics::{plug_in_variance, GroupMetricVector, GroupOutcome};
use crate::meta_metrics::sample_variance;

#[derive(Debug, Error)]
pub enum VarianceError {
    #[error("need at least 2 groups, found {found}")]
    InsufficientGroups { found: usize },
    #[error("unknown variance estimator {0:?} (expected uncorrected, corrected, or double_corrected)")]
    UnknownEstimator(String),
}

/// Noise-corrected between-group variance, with the pieces it was built
/// from. `corrected` is `corrected_raw` truncated at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub uncorrected: f64,
    pub corrected: f64,
    pub corrected_raw: f64,
    pub correction_term: f64,
}

/// Between-group variance of the observed rates minus the mean plug-in
/// sampling variance, truncated at zero.
pub fn corrected_variance(groups: &GroupMetricVector) -> Result<VarianceEstimate, VarianceError> {
    let k = groups.k();
    if k < 2 {
        return Err(VarianceError::InsufficientGroups { found: k });
    }
    let uncorrected = sample_variance(&groups.rates());
    let correction_term =
        groups.groups().iter().map(plug_in_variance).sum::<f64>() / k as f64;
    let corrected_raw = uncorrected - correction_term;
    Ok(VarianceEstimate {
        uncorrected,
        corrected: corrected_raw.max(0.0),
        corrected_raw,
        correction_term,
    })
}

/// Sampling variance of a resampled group rate around the original truth:
/// `2y(1-y)/n - y(1-y)/n^2`.
///
/// A resampled rate `y*` is a binomial draw around an observed rate that is
/// itself a draw around the truth, so its noise is roughly twice a single
/// draw's, less the overlap term.
#[must_use]
pub fn bootstrap_sample_variance(outcome: &GroupOutcome) -> f64 {
    let y = outcome.y();
    let n = outcome.n() as f64;
    2.0 * y * (1.0 - y) / n - y * (1.0 - y) / (n * n)
}

/// Corrected variance for a vector of resampled rates: subtracts the
/// doubled noise term instead of the single-draw one, truncated at zero.
pub fn double_corrected_variance(groups: &GroupMetricVector) -> Result<f64, VarianceError> {
    let k = groups.k();
    if k < 2 {
        return Err(VarianceError::InsufficientGroups { found: k });
    }
    let correction =
        groups.groups().iter().map(bootstrap_sample_variance).sum::<f64>() / k as f64;
    Ok((sample_variance(&groups.rates()) - correction).max(0.0))
}

/// The three variance statistics, as a value so interval code can run the
/// same bootstrap over any of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarianceEstimator {
    Uncorrected,
    Corrected,
    DoubleCorrected,
}

impl VarianceEstimator {
    pub const ALL: [VarianceEstimator; 3] = [
        VarianceEstimator::Uncorrected,
        VarianceEstimator::Corrected,
        VarianceEstimator::DoubleCorrected,
    ];

    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            VarianceEstimator::Uncorrected => "uncorrected_variance",
            VarianceEstimator::Corrected => "corrected_variance",
            VarianceEstimator::DoubleCorrected => "double_corrected_variance",
        }
    }

    pub fn evaluate(self, groups: &GroupMetricVector) -> Result<f64, VarianceError> {
        match self {
            VarianceEstimator::Uncorrected => Ok(corrected_variance(groups)?.uncorrected),
            VarianceEstimator::Corrected => Ok(corrected_variance(groups)?.corrected),
            VarianceEstimator::DoubleCorrected => double_corrected_variance(groups),
        }
    }
}

impl fmt::Display for VarianceEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VarianceEstimator {
    type Err = VarianceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "uncorrected" | "uncorrected_variance" => Ok(VarianceEstimator::Uncorrected),
            "corrected" | "corrected_variance" => Ok(VarianceEstimator::Corrected),
            "double_corrected" | "double_corrected_variance" => {
                Ok(VarianceEstimator::DoubleCorrected)
            }
            _ => Err(VarianceError::UnknownEstimator(s.to_string())),
        }
    }
}

impl Serialize for VarianceEstimator {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for VarianceEstimator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
