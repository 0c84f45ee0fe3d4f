//! Monte-Carlo studies of estimator bias and interval coverage.
//!
//! The generative model is binomial throughout: a scenario fixes true group
//! rates `mu_k` and group sizes `n_k`, and a replicate draws each group's
//! success count as `Binomial(n_k, mu_k)`. Because the true rates are known,
//! a study can measure estimator bias directly and check whether confidence
//! intervals cover the truth at their nominal rate.
//!
//! Seeding is hierarchical: a study derives one seed per scenario or sweep
//! cell, each replicate draws from its own substream of that seed, and a
//! replicate's bootstrap run is seeded from the replicate's stream. Results
//! are therefore reproducible from the top-level seed alone, independent of
//! thread count.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::bootstrap::{bootstrap_estimators, BootstrapConfig, BootstrapError};
use crate::group_metrics::{GroupKey, GroupMetricVector, GroupOutcome};
use crate::meta_metrics::{
    meta_metric, sample_variance, EntropyAlpha, MetaMetricError, MetaMetricKind,
};
use crate::rng::{derive_seed, substream};
use crate::variance::{corrected_variance, VarianceError, VarianceEstimator};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("scenario {name:?}: rate and size vectors differ in length ({rates} vs {sizes})")]
    LengthMismatch { name: String, rates: usize, sizes: usize },
    #[error("scenario {name:?}: need at least 2 groups")]
    TooFewGroups { name: String },
    #[error("scenario {name:?}: true rate {value} is outside [0, 1]")]
    RateOutOfRange { name: String, value: f64 },
    #[error("scenario {name:?}: every group size must be at least 1")]
    ZeroGroupSize { name: String },
    #[error("need at least {minimum} replicates, got {got}")]
    TooFewReplicates { minimum: u32, got: u32 },
    #[error("no scenarios given")]
    NoScenarios,
    #[error("no estimators given")]
    NoEstimators,
    #[error("sweep needs a nonempty K grid")]
    EmptyKGrid,
    #[error("sweep needs at least 2 groups per cell, got K = {0}")]
    KTooSmall(usize),
    #[error("sweep needs a nonempty list of lower bounds")]
    EmptyLowerBounds,
    #[error("lower bound {lower} must lie in (0, {upper}]")]
    BadLowerBound { lower: f64, upper: f64 },
    #[error("upper bound {0} must lie in (0, 1]")]
    BadUpperBound(f64),
    #[error("groups of size round({total_n}/{k}) = 0; raise total_n or shrink the K grid")]
    GroupSizeRoundsToZero { total_n: u64, k: usize },
    #[error(transparent)]
    Meta(#[from] MetaMetricError),
    #[error(transparent)]
    Variance(#[from] VarianceError),
    #[error(transparent)]
    Bootstrap(#[from] BootstrapError),
}

/// A known-truth population: true rate and size per group.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: String,
    mu: Vec<f64>,
    sizes: Vec<u64>,
    true_variance: f64,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        mu: Vec<f64>,
        sizes: Vec<u64>,
    ) -> Result<Self, SimulationError> {
        let name = name.into();
        if mu.len() != sizes.len() {
            return Err(SimulationError::LengthMismatch {
                name,
                rates: mu.len(),
                sizes: sizes.len(),
            });
        }
        if mu.len() < 2 {
            return Err(SimulationError::TooFewGroups { name });
        }
        if let Some(&bad) = mu.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(SimulationError::RateOutOfRange { name, value: bad });
        }
        if sizes.contains(&0) {
            return Err(SimulationError::ZeroGroupSize { name });
        }
        let true_variance = sample_variance(&mu);
        Ok(Scenario { name, mu, sizes, true_variance })
    }

    #[must_use]
    pub fn name(&self) -> &str {
        &self.name
    }

    #[must_use]
    pub fn true_rates(&self) -> &[f64] {
        &self.mu
    }

    #[must_use]
    pub fn group_sizes(&self) -> &[u64] {
        &self.sizes
    }

    #[must_use]
    pub fn k(&self) -> usize {
        self.mu.len()
    }

    #[must_use]
    pub fn total_n(&self) -> u64 {
        self.sizes.iter().sum()
    }

    /// Between-group variance of the true rates (divisor `K - 1`). This is
    /// the quantity the corrected estimators target.
    #[must_use]
    pub fn true_variance(&self) -> f64 {
        self.true_variance
    }

    /// Mean binomial sampling variance `(1/K) sum mu_k(1-mu_k)/n_k`: the
    /// exact amount by which the uncorrected between-group variance
    /// overshoots the truth in expectation.
    #[must_use]
    pub fn mean_sampling_variance(&self) -> f64 {
        self.mu
            .iter()
            .zip(&self.sizes)
            .map(|(&m, &n)| m * (1.0 - m) / n as f64)
            .sum::<f64>()
            / self.k() as f64
    }
}

impl Serialize for Scenario {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Scenario", 6)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("k", &self.k())?;
        st.serialize_field("total_n", &self.total_n())?;
        st.serialize_field("true_rates", &self.mu)?;
        st.serialize_field("group_sizes", &self.sizes)?;
        st.serialize_field("true_variance", &self.true_variance)?;
        st.end()
    }
}

fn equally_spaced(lower: f64, upper: f64, k: usize) -> Vec<f64> {
    let step = (upper - lower) / (k - 1) as f64;
    (0..k).map(|i| lower + step * i as f64).collect()
}

/// The four benchmark scenarios: K = 100 groups and 5000 observations,
/// crossing equal against unequal group sizes (all 50, or 10 rising to 90)
/// and equal against unequal true rates (all 0.8, or 0.1 rising to 0.9).
#[must_use]
pub fn standard_scenarios() -> Vec<Scenario> {
    let k = 100;
    let equal_sizes = vec![50u64; k];
    let unequal_sizes: Vec<u64> = (0..k)
        .map(|i| (10.0 + 80.0 * i as f64 / (k - 1) as f64).round() as u64)
        .collect();
    let equal_rates = vec![0.8; k];
    let unequal_rates = equally_spaced(0.1, 0.9, k);
    vec![
        Scenario::new("equal_size_equal_perf", equal_rates.clone(), equal_sizes.clone()),
        Scenario::new("unequal_size_equal_perf", equal_rates, unequal_sizes.clone()),
        Scenario::new("equal_size_unequal_perf", unequal_rates.clone(), equal_sizes),
        Scenario::new("unequal_size_unequal_perf", unequal_rates, unequal_sizes),
    ]
    .into_iter()
    .collect::<Result<_, _>>()
    .expect("benchmark scenarios are well formed")
}

/// Draws one synthetic dataset from a scenario: each group's success count
/// is one binomial draw at its true rate. Group keys are the 1-based group
/// indices, zero-padded so they sort numerically.
pub fn draw_replicate<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> GroupMetricVector {
    let width = scenario.k().to_string().len();
    let groups = scenario
        .mu
        .iter()
        .zip(&scenario.sizes)
        .enumerate()
        .map(|(i, (&m, &n))| {
            let z = Binomial::new(n, m)
                .expect("scenario rates lie in [0, 1]")
                .sample(rng);
            GroupOutcome::new(GroupKey::single(format!("{:0width$}", i + 1)), n, z)
                .expect("draw never exceeds group size")
        })
        .collect();
    GroupMetricVector::new(None, groups, Vec::new()).expect("indices are unique")
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Standard error of the mean; NaN below 2 observations.
    fn std_error(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
        }
    }
}

/// Grid for the bias sweep: group counts crossed with the lower end of the
/// true-rate range. Within a cell the true rates rise linearly from `lower`
/// to `upper` over `k` groups of size `round(total_n / k)` each, so total
/// sample size stays comparable as K varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSweepConfig {
    pub total_n: u64,
    pub k_grid: Vec<usize>,
    pub lower_bounds: Vec<f64>,
    pub upper: f64,
    pub replicates: u32,
    pub seed: u64,
    /// Order of the generalized entropy index included in the sweep.
    pub entropy_alpha: f64,
}

impl Default for BiasSweepConfig {
    fn default() -> Self {
        BiasSweepConfig {
            total_n: 5000,
            k_grid: vec![5, 10, 25, 50, 75, 100, 125, 150],
            lower_bounds: vec![0.1, 0.5, 0.7, 0.9],
            upper: 0.9,
            replicates: 1000,
            seed: 0,
            entropy_alpha: 2.0,
        }
    }
}

impl BiasSweepConfig {
    pub fn validate(&self) -> Result<EntropyAlpha, SimulationError> {
        if self.k_grid.is_empty() {
            return Err(SimulationError::EmptyKGrid);
        }
        if let Some(&k) = self.k_grid.iter().find(|&&k| k < 2) {
            return Err(SimulationError::KTooSmall(k));
        }
        if self.lower_bounds.is_empty() {
            return Err(SimulationError::EmptyLowerBounds);
        }
        if !(self.upper > 0.0 && self.upper <= 1.0) {
            return Err(SimulationError::BadUpperBound(self.upper));
        }
        if let Some(&l) = self
            .lower_bounds
            .iter()
            .find(|&&l| !(l > 0.0 && l <= self.upper))
        {
            return Err(SimulationError::BadLowerBound { lower: l, upper: self.upper });
        }
        if self.replicates < 2 {
            return Err(SimulationError::TooFewReplicates { minimum: 2, got: self.replicates });
        }
        if let Some(&k) = self
            .k_grid
            .iter()
            .find(|&&k| (self.total_n as f64 / k as f64).round() < 1.0)
        {
            return Err(SimulationError::GroupSizeRoundsToZero { total_n: self.total_n, k });
        }
        Ok(EntropyAlpha::new(self.entropy_alpha)?)
    }
}

/// One sweep cell: the measured bias of one summary at one `(K, lower)`
/// grid point.
///
/// `replicates_used` counts the replicates where the summary was defined;
/// draws that produce a zero rate leave the ratio and entropy forms
/// undefined and are skipped for those summaries only. `analytic_bias` is
/// the exact expected bias, known in closed form for the variance summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSweepCell {
    pub kind: MetaMetricKind,
    pub k: usize,
    pub lower: f64,
    pub group_size: u64,
    pub true_value: f64,
    pub mean_bias: f64,
    pub std_error: f64,
    pub replicates_used: u32,
    pub analytic_bias: Option<f64>,
}

/// Measures the upward bias of every summary over the sweep grid.
///
/// For each cell, each replicate draws observed rates at the cell's true
/// rates and records `M(observed) - M(true)`; the cell reports the mean and
/// its Monte-Carlo standard error. Cells are ordered by K, then lower
/// bound, then summary kind.
pub fn bias_sweep(config: &BiasSweepConfig) -> Result<Vec<BiasSweepCell>, SimulationError> {
    let alpha = config.validate()?;
    let kinds = MetaMetricKind::standard(alpha);
    let grid: Vec<(usize, usize, f64)> = config
        .k_grid
        .iter()
        .flat_map(|&k| config.lower_bounds.iter().map(move |&l| (k, l)))
        .enumerate()
        .map(|(cell, (k, l))| (cell, k, l))
        .collect();

    let per_cell: Vec<Vec<BiasSweepCell>> = grid
        .par_iter()
        .map(|&(cell, k, l)| -> Result<Vec<BiasSweepCell>, SimulationError> {
            let group_size = (config.total_n as f64 / k as f64).round() as u64;
            let mu = equally_spaced(l, config.upper, k);
            let truths = kinds
                .iter()
                .map(|&kind| meta_metric(&mu, kind).map(|r| r.value))
                .collect::<Result<Vec<f64>, _>>()?;

            let cell_seed = derive_seed(config.seed, cell as u64);
            let mut acc = [Welford::default(); 6];
            let mut rates = vec![0.0; k];
            for rep in 0..config.replicates {
                let mut rng = substream(cell_seed, u64::from(rep));
                for (slot, &m) in rates.iter_mut().zip(&mu) {
                    let z = Binomial::new(group_size, m)
                        .expect("lower bounds keep rates in (0, 1]")
                        .sample(&mut rng);
                    *slot = z as f64 / group_size as f64;
                }
                for (j, &kind) in kinds.iter().enumerate() {
                    match meta_metric(&rates, kind) {
                        Ok(r) => acc[j].push(r.value - truths[j]),
                        Err(MetaMetricError::ZeroRate { .. }) => {}
                        Err(e) => return Err(e.into()),
                    }
                }
            }

            let sampling_bias = mu
                .iter()
                .map(|&m| m * (1.0 - m) / group_size as f64)
                .sum::<f64>()
                / k as f64;
            Ok(kinds
                .iter()
                .enumerate()
                .map(|(j, &kind)| BiasSweepCell {
                    kind,
                    k,
                    lower: l,
                    group_size,
                    true_value: truths[j],
                    mean_bias: acc[j].mean(),
                    std_error: acc[j].std_error(),
                    replicates_used: acc[j].count as u32,
                    analytic_bias: match kind {
                        MetaMetricKind::Variance => Some(sampling_bias),
                        _ => None,
                    },
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;

    Ok(per_cell.into_iter().flatten().collect())
}

/// Distribution of the variance estimators over repeated draws from one
/// scenario. `mean_correction_term` should sit near
/// [`Scenario::mean_sampling_variance`] (reported as `analytic_correction`),
/// and `mean_corrected_raw` near `true_variance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateStudy {
    pub scenario: String,
    pub replicates: u32,
    pub true_variance: f64,
    pub analytic_correction: f64,
    pub mean_uncorrected: f64,
    pub se_uncorrected: f64,
    pub mean_corrected: f64,
    pub se_corrected: f64,
    pub mean_corrected_raw: f64,
    pub se_corrected_raw: f64,
    pub mean_correction_term: f64,
}

/// Draws `replicates` datasets from a scenario and summarizes how the
/// variance estimators distribute around the known truth.
pub fn replicate_study(
    scenario: &Scenario,
    replicates: u32,
    seed: u64,
) -> Result<ReplicateStudy, SimulationError> {
    if replicates < 2 {
        return Err(SimulationError::TooFewReplicates { minimum: 2, got: replicates });
    }
    let estimates = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream(seed, u64::from(rep));
            let data = draw_replicate(scenario, &mut rng);
            corrected_variance(&data).map_err(SimulationError::from)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut uncorrected = Welford::default();
    let mut corrected = Welford::default();
    let mut corrected_raw = Welford::default();
    let mut correction = Welford::default();
    for est in &estimates {
        uncorrected.push(est.uncorrected);
        corrected.push(est.corrected);
        corrected_raw.push(est.corrected_raw);
        correction.push(est.correction_term);
    }
    Ok(ReplicateStudy {
        scenario: scenario.name().to_string(),
        replicates,
        true_variance: scenario.true_variance(),
        analytic_correction: scenario.mean_sampling_variance(),
        mean_uncorrected: uncorrected.mean(),
        se_uncorrected: uncorrected.std_error(),
        mean_corrected: corrected.mean(),
        se_corrected: corrected.std_error(),
        mean_corrected_raw: corrected_raw.mean(),
        se_corrected_raw: corrected_raw.std_error(),
        mean_correction_term: correction.mean(),
    })
}

/// Coverage of one estimator's intervals under one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub scenario: String,
    pub estimator: VarianceEstimator,
    pub true_variance: f64,
    pub hits: u32,
    pub coverage_percent: f64,
}

/// Full coverage study output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub replicates: u32,
    pub b: usize,
    pub level: f64,
    pub seed: u64,
    pub rows: Vec<CoverageRow>,
}

/// Measures how often each estimator's bootstrap interval covers the true
/// between-group variance.
///
/// Per replicate: draw a dataset, bootstrap every estimator over one shared
/// set of resamples (`bootstrap.b` resamples at `bootstrap.level`), and
/// score a hit when the interval contains the scenario's true variance.
/// `bootstrap.seed` doubles as the master seed for the whole study.
pub fn coverage_study(
    scenarios: &[Scenario],
    estimators: &[VarianceEstimator],
    replicates: u32,
    bootstrap: &BootstrapConfig,
) -> Result<CoverageReport, SimulationError> {
    if scenarios.is_empty() {
        return Err(SimulationError::NoScenarios);
    }
    if estimators.is_empty() {
        return Err(SimulationError::NoEstimators);
    }
    if replicates == 0 {
        return Err(SimulationError::TooFewReplicates { minimum: 1, got: 0 });
    }
    bootstrap.validate()?;

    let mut rows = Vec::with_capacity(scenarios.len() * estimators.len());
    for (s_idx, scenario) in scenarios.iter().enumerate() {
        let scenario_seed = derive_seed(bootstrap.seed, s_idx as u64);
        let truth = scenario.true_variance();
        let hit_rows = (0..replicates)
            .into_par_iter()
            .map(|rep| -> Result<Vec<bool>, SimulationError> {
                let mut rng = substream(scenario_seed, u64::from(rep));
                let data = draw_replicate(scenario, &mut rng);
                let rep_config = BootstrapConfig {
                    b: bootstrap.b,
                    level: bootstrap.level,
                    seed: rng.random(),
                };
                let results = bootstrap_estimators(&data, estimators, &rep_config)?;
                Ok(results
                    .iter()
                    .map(|r| r.lower <= truth && truth <= r.upper)
                    .collect())
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (e_idx, &estimator) in estimators.iter().enumerate() {
            let hits = hit_rows.iter().filter(|row| row[e_idx]).count() as u32;
            rows.push(CoverageRow {
                scenario: scenario.name().to_string(),
                estimator,
                true_variance: truth,
                hits,
                coverage_percent: 100.0 * f64::from(hits) / f64::from(replicates),
            });
        }
    }
    Ok(CoverageReport {
        replicates,
        b: bootstrap.b,
        level: bootstrap.level,
        seed: bootstrap.seed,
        rows,
    })
}
