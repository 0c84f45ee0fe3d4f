//! Scalar summaries of how much a vector of group rates spreads out.
//!
//! For rates `Y_1..Y_K` with mean `Ybar`, the supported summaries are:
//!
//! - `max_min_diff`: `max Y - min Y`
//! - `max_min_ratio`: `max Y / min Y` (requires strictly positive rates)
//! - `max_abs_diff`: `max_k |Y_k - Ybar|`
//! - `mean_abs_dev`: `(1/K) * sum |Y_k - Ybar|`
//! - `variance`: `(1/(K-1)) * sum (Y_k - Ybar)^2`
//! - `generalized_entropy:a`: `(1/(K a (a-1))) * sum ((Y_k/Ybar)^a - 1)`,
//!   defined here for `a` outside `{0, 1}` and strictly positive rates
//!
//! All of them are zero (one for the ratio) exactly when every group has the
//! same rate, and they grow as the rates spread apart. Computed on observed
//! rates they are biased upward, because sampling noise itself spreads the
//! observations; see [`crate::variance`] for the corrected variance form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetaMetricError {
    #[error("need at least 2 groups, found {found}")]
    InsufficientGroups { found: usize },
    #[error("{kind} is undefined when a rate is zero")]
    ZeroRate { kind: &'static str },
    #[error("rates must be finite")]
    NonFiniteRate,
    #[error("generalized entropy order must be a finite number other than 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error("unknown meta-metric {0:?} (expected max_min_diff, max_min_ratio, max_abs_diff, mean_abs_dev, variance, or generalized_entropy[:alpha])")]
    UnknownKind(String),
}

/// Order parameter of the generalized entropy index. Excludes 0 and 1,
/// where the index takes different limiting forms this crate does not
/// implement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyAlpha(f64);

impl EntropyAlpha {
    pub fn new(alpha: f64) -> Result<Self, MetaMetricError> {
        if !alpha.is_finite() || alpha == 0.0 || alpha == 1.0 {
            return Err(MetaMetricError::InvalidAlpha(alpha));
        }
        Ok(EntropyAlpha(alpha))
    }

    #[must_use]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Which disparity summary to compute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetaMetricKind {
    MaxMinDiff,
    MaxMinRatio,
    MaxAbsDiff,
    MeanAbsDev,
    Variance,
    GeneralizedEntropy(EntropyAlpha),
}

impl MetaMetricKind {
    /// The full set of summaries, with the given entropy order.
    #[must_use]
    pub fn standard(alpha: EntropyAlpha) -> [MetaMetricKind; 6] {
        [
            MetaMetricKind::MaxMinDiff,
            MetaMetricKind::MaxMinRatio,
            MetaMetricKind::MaxAbsDiff,
            MetaMetricKind::MeanAbsDev,
            MetaMetricKind::Variance,
            MetaMetricKind::GeneralizedEntropy(alpha),
        ]
    }

    /// Stable name; `generalized_entropy` carries its order after a colon.
    #[must_use]
    pub fn name(&self) -> String {
        match self {
            MetaMetricKind::MaxMinDiff => "max_min_diff".to_string(),
            MetaMetricKind::MaxMinRatio => "max_min_ratio".to_string(),
            MetaMetricKind::MaxAbsDiff => "max_abs_diff".to_string(),
            MetaMetricKind::MeanAbsDev => "mean_abs_dev".to_string(),
            MetaMetricKind::Variance => "variance".to_string(),
            MetaMetricKind::GeneralizedEntropy(alpha) => {
                format!("generalized_entropy:{}", alpha.get())
            }
        }
    }
}

impl fmt::Display for MetaMetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for MetaMetricKind {
    type Err = MetaMetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.to_ascii_lowercase().replace('-', "_");
        let (head, alpha) = match normalized.split_once(':') {
            Some((head, tail)) => {
                let alpha: f64 = tail
                    .trim()
                    .parse()
                    .map_err(|_| MetaMetricError::UnknownKind(s.to_string()))?;
                (head, Some(alpha))
            }
            None => (normalized.as_str(), None),
        };
        match (head, alpha) {
            ("max_min_diff", None) => Ok(MetaMetricKind::MaxMinDiff),
            ("max_min_ratio", None) => Ok(MetaMetricKind::MaxMinRatio),
            ("max_abs_diff", None) => Ok(MetaMetricKind::MaxAbsDiff),
            ("mean_abs_dev", None) => Ok(MetaMetricKind::MeanAbsDev),
            ("variance", None) => Ok(MetaMetricKind::Variance),
            // Order 2 is the conventional default for the entropy index.
            ("generalized_entropy", None) => {
                Ok(MetaMetricKind::GeneralizedEntropy(EntropyAlpha::new(2.0)?))
            }
            ("generalized_entropy", Some(a)) => {
                Ok(MetaMetricKind::GeneralizedEntropy(EntropyAlpha::new(a)?))
            }
            _ => Err(MetaMetricError::UnknownKind(s.to_string())),
        }
    }
}

impl Serialize for MetaMetricKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for MetaMetricKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A computed summary: which one, its value, and how many groups went in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaMetricResult {
    pub kind: MetaMetricKind,
    pub value: f64,
    pub k: usize,
}

/// Sample variance with divisor `K - 1`. Callers guarantee `values.len() >= 2`.
pub(crate) fn sample_variance(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
}

/// Computes one disparity summary over a vector of rates.
///
/// Rates must be finite; the ratio and entropy forms additionally require
/// every rate to be strictly positive.
pub fn meta_metric(rates: &[f64], kind: MetaMetricKind) -> Result<MetaMetricResult, MetaMetricError> {
    let k = rates.len();
    if k < 2 {
        return Err(MetaMetricError::InsufficientGroups { found: k });
    }
    if rates.iter().any(|y| !y.is_finite()) {
        return Err(MetaMetricError::NonFiniteRate);
    }

    let mean = rates.iter().sum::<f64>() / k as f64;
    let value = match kind {
        MetaMetricKind::MaxMinDiff => max_rate(rates) - min_rate(rates),
        MetaMetricKind::MaxMinRatio => {
            let min = min_rate(rates);
            if min <= 0.0 {
                return Err(MetaMetricError::ZeroRate { kind: "max_min_ratio" });
            }
            max_rate(rates) / min
        }
        MetaMetricKind::MaxAbsDiff => rates
            .iter()
            .map(|y| (y - mean).abs())
            .fold(0.0, f64::max),
        MetaMetricKind::MeanAbsDev => {
            rates.iter().map(|y| (y - mean).abs()).sum::<f64>() / k as f64
        }
        MetaMetricKind::Variance => sample_variance(rates),
        MetaMetricKind::GeneralizedEntropy(alpha) => {
            if min_rate(rates) <= 0.0 {
                return Err(MetaMetricError::ZeroRate { kind: "generalized_entropy" });
            }
            let a = alpha.get();
            let sum: f64 = rates.iter().map(|y| (y / mean).powf(a) - 1.0).sum();
            sum / (k as f64 * a * (a - 1.0))
        }
    };
    Ok(MetaMetricResult { kind, value, k })
}

fn max_rate(rates: &[f64]) -> f64 {
    rates.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_rate(rates: &[f64]) -> f64 {
    rates.iter().copied().fold(f64::INFINITY, f64::min)
}
