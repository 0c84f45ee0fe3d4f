//! Structural invariants checked over randomized inputs.

use std::collections::BTreeMap;

use proptest::prelude::*;

use disparity_core::{
    aggregate, bootstrap_statistic, corrected_variance, double_corrected_variance, meta_metric,
    percentile_interval, BaseMetric, BootstrapConfig, ClassificationRecord, EntropyAlpha,
    GroupKey, GroupMetricVector, GroupOutcome, MetaMetricKind,
};

fn vector_from(counts: &[(u64, u64)]) -> GroupMetricVector {
    let groups = counts
        .iter()
        .enumerate()
        .map(|(i, &(n, z))| GroupOutcome::new(GroupKey::single(format!("g{i}")), n, z).unwrap())
        .collect();
    GroupMetricVector::new(None, groups, Vec::new()).unwrap()
}

fn counts_strategy() -> impl Strategy<Value = Vec<(u64, u64)>> {
    prop::collection::vec((1..200u64).prop_flat_map(|n| (Just(n), 0..=n)), 2..10)
}

fn rates_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, 2..12)
}

fn positive_rates_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..=1.0f64, 2..12)
}

fn all_kinds() -> [MetaMetricKind; 6] {
    MetaMetricKind::standard(EntropyAlpha::new(2.0).unwrap())
}

fn records_strategy() -> impl Strategy<Value = Vec<ClassificationRecord>> {
    prop::collection::vec((0..5u8, any::<bool>(), any::<bool>()), 2..150).prop_map(|raw| {
        raw.into_iter()
            .map(|(g, label, prediction)| {
                ClassificationRecord::new(GroupKey::single(format!("g{g}")), label, prediction)
                    .unwrap()
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn meta_metrics_ignore_group_order(rates in positive_rates_strategy(), seed in any::<u64>()) {
        let mut shuffled = rates.clone();
        // Cheap deterministic shuffle.
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        for kind in all_kinds() {
            let a = meta_metric(&rates, kind).unwrap().value;
            let b = meta_metric(&shuffled, kind).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn equal_rates_mean_no_disparity(rate in 0.05..=1.0f64, k in 2..30usize) {
        let rates = vec![rate; k];
        for kind in all_kinds() {
            let value = meta_metric(&rates, kind).unwrap().value;
            let expected = match kind {
                MetaMetricKind::MaxMinRatio => 1.0,
                _ => 0.0,
            };
            prop_assert!((value - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_rates_scales_summaries_predictably(
        rates in positive_rates_strategy(),
        c in 0.05..=1.0f64,
    ) {
        let scaled: Vec<f64> = rates.iter().map(|y| y * c).collect();
        let v = |rs: &[f64], kind| meta_metric(rs, kind).unwrap().value;
        let tol = 1e-9;
        // Differences scale linearly, the variance quadratically, and the
        // purely relative summaries not at all.
        prop_assert!((v(&scaled, MetaMetricKind::MaxMinDiff) - c * v(&rates, MetaMetricKind::MaxMinDiff)).abs() < tol);
        prop_assert!((v(&scaled, MetaMetricKind::MaxAbsDiff) - c * v(&rates, MetaMetricKind::MaxAbsDiff)).abs() < tol);
        prop_assert!((v(&scaled, MetaMetricKind::MeanAbsDev) - c * v(&rates, MetaMetricKind::MeanAbsDev)).abs() < tol);
        prop_assert!((v(&scaled, MetaMetricKind::Variance) - c * c * v(&rates, MetaMetricKind::Variance)).abs() < tol);
        prop_assert!((v(&scaled, MetaMetricKind::MaxMinRatio) - v(&rates, MetaMetricKind::MaxMinRatio)).abs() < tol * 100.0);
        let gei = MetaMetricKind::GeneralizedEntropy(EntropyAlpha::new(2.0).unwrap());
        prop_assert!((v(&scaled, gei) - v(&rates, gei)).abs() < tol * 100.0);
    }

    #[test]
    fn summaries_are_nonnegative(rates in rates_strategy()) {
        for kind in all_kinds() {
            if let Ok(result) = meta_metric(&rates, kind) {
                let floor = match kind {
                    MetaMetricKind::MaxMinRatio => 1.0,
                    _ => 0.0,
                };
                prop_assert!(result.value >= floor - 1e-12);
            }
        }
    }

    #[test]
    fn corrections_order_consistently(counts in counts_strategy()) {
        let v = vector_from(&counts);
        let est = corrected_variance(&v).unwrap();
        let double = double_corrected_variance(&v).unwrap();
        prop_assert!(est.uncorrected >= 0.0);
        prop_assert!(est.correction_term >= 0.0);
        prop_assert!(est.corrected >= 0.0);
        prop_assert!(est.corrected <= est.uncorrected);
        // The doubled noise term is at least the single one, so the double
        // correction can only push the estimate further down.
        prop_assert!(double <= est.corrected + 1e-15);
        prop_assert!((est.corrected_raw - (est.uncorrected - est.correction_term)).abs() < 1e-15);
        prop_assert_eq!(est.corrected, est.corrected_raw.max(0.0));
    }

    #[test]
    fn accuracy_denominators_partition_the_records(records in records_strategy()) {
        let sizes: BTreeMap<GroupKey, u64> = records.iter().fold(BTreeMap::new(), |mut acc, r| {
            *acc.entry(r.group_key.clone()).or_default() += 1;
            acc
        });
        prop_assume!(sizes.len() >= 2);
        for metric in [BaseMetric::Accuracy, BaseMetric::SelectionRate] {
            let v = aggregate(&records, metric).unwrap();
            prop_assert_eq!(v.k(), sizes.len());
            prop_assert!(v.excluded().is_empty());
            let total: u64 = v.groups().iter().map(GroupOutcome::n).sum();
            prop_assert_eq!(total, records.len() as u64);
            for g in v.groups() {
                prop_assert_eq!(g.n(), sizes[g.group_key()]);
            }
        }
    }

    #[test]
    fn fpr_and_tpr_denominators_split_each_group(records in records_strategy()) {
        let fpr = aggregate(&records, BaseMetric::FalsePositiveRate);
        let tpr = aggregate(&records, BaseMetric::TruePositiveRate);
        prop_assume!(fpr.is_ok() && tpr.is_ok());
        let (fpr, tpr) = (fpr.unwrap(), tpr.unwrap());
        let n_of = |v: &GroupMetricVector, key: &GroupKey| {
            v.groups()
                .iter()
                .find(|g| g.group_key() == key)
                .map_or(0, GroupOutcome::n)
        };
        let sizes: BTreeMap<GroupKey, u64> = records.iter().fold(BTreeMap::new(), |mut acc, r| {
            *acc.entry(r.group_key.clone()).or_default() += 1;
            acc
        });
        // Every record is either truly positive or truly negative, so the
        // two denominators partition each group.
        for (key, size) in &sizes {
            prop_assert_eq!(n_of(&fpr, key) + n_of(&tpr, key), *size);
        }
        // Exclusions and rated groups together account for every group.
        prop_assert_eq!(fpr.k() + fpr.excluded().len(), sizes.len());
        prop_assert_eq!(tpr.k() + tpr.excluded().len(), sizes.len());
    }

    #[test]
    fn interval_widens_with_level(counts in counts_strategy(), seed in any::<u64>()) {
        let v = vector_from(&counts);
        let config = BootstrapConfig { b: 40, level: 0.5, seed };
        let stat = |g: &GroupMetricVector| corrected_variance(g).map(|e| e.corrected);
        let narrow = bootstrap_statistic(&v, "corrected", stat, &config).unwrap();
        let wide = bootstrap_statistic(
            &v,
            "corrected",
            stat,
            &BootstrapConfig { level: 0.99, ..config },
        )
        .unwrap();
        // Same seed, same resamples: only the quantiles move.
        prop_assert_eq!(&narrow.samples, &wide.samples);
        prop_assert!(wide.lower <= narrow.lower + 1e-15);
        prop_assert!(wide.upper >= narrow.upper - 1e-15);

        let (lo, hi) = percentile_interval(&narrow.samples, 0.5).unwrap();
        prop_assert_eq!((lo, hi), (narrow.lower, narrow.upper));
    }

    #[test]
    fn bootstrap_is_reproducible_for_any_input(counts in counts_strategy(), seed in any::<u64>()) {
        let v = vector_from(&counts);
        let config = BootstrapConfig { b: 16, level: 0.9, seed };
        let stat = |g: &GroupMetricVector| double_corrected_variance(g);
        let a = bootstrap_statistic(&v, "double", stat, &config).unwrap();
        let b = bootstrap_statistic(&v, "double", stat, &config).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn group_vectors_round_trip_through_json(counts in counts_strategy()) {
        let v = vector_from(&counts);
        let json = serde_json::to_string(&v).unwrap();
        let back: GroupMetricVector = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn resampled_rates_stay_in_range(counts in counts_strategy(), seed in any::<u64>()) {
        let v = vector_from(&counts);
        let mut rng = disparity_core::rng::substream(seed, 0);
        let r = disparity_core::resample_vector(&v, &mut rng);
        prop_assert_eq!(r.k(), v.k());
        for (orig, res) in v.groups().iter().zip(r.groups()) {
            prop_assert_eq!(orig.group_key(), res.group_key());
            prop_assert_eq!(orig.n(), res.n());
            prop_assert!(res.z() <= res.n());
        }
    }
}
