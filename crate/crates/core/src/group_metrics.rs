//! Per-group performance rates from labeled binary predictions.
//!
//! Every rate this crate works with is a binomial proportion: a group of
//! `n` relevant records of which `z` satisfy the metric's success condition,
//! observed rate `y = z / n`. The counting conventions per base metric are:
//!
//! | metric                | denominator `n`         | numerator `z`                            |
//! |-----------------------|-------------------------|------------------------------------------|
//! | `accuracy`            | group size              | records with `prediction == label`       |
//! | `false_positive_rate` | truly negative records  | predicted positive among truly negative  |
//! | `true_positive_rate`  | truly positive records  | predicted positive among truly positive  |
//! | `selection_rate`      | group size              | predicted positive                       |
//!
//! Groups whose denominator is empty (for example a group with no truly
//! negative records when computing the false positive rate) cannot carry a
//! rate. [`aggregate`] excludes them and records the reason rather than
//! dropping them silently.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde::ser::SerializeStruct;
use thiserror::Error;

/// Errors from grouping and aggregation.
#[derive(Debug, Error)]
pub enum GroupMetricsError {
    #[error("no records to aggregate")]
    NoRecords,
    #[error("need at least 2 groups with a nonzero denominator, found {found}")]
    InsufficientGroups { found: usize },
    #[error("unknown group column {0:?}")]
    UnknownColumn(String),
    #[error("no group columns given")]
    NoGroupColumns,
    #[error("group key must have at least one part")]
    EmptyGroupKey,
    #[error("group {key}: success count {z} exceeds trial count {n}")]
    CountExceedsTrials { key: GroupKey, n: u64, z: u64 },
    #[error("group {key}: trial count must be at least 1")]
    ZeroTrials { key: GroupKey },
    #[error("duplicate group key {0}")]
    DuplicateKey(GroupKey),
    #[error("unknown base metric {0:?} (expected accuracy, false_positive_rate, true_positive_rate, or selection_rate)")]
    UnknownMetric(String),
}

/// Identity of a group: one category label per grouping column, in column
/// order. `["White", "25-35"]` under grouping `["race", "age"]` is the
/// intersection of those two categories.
///
/// Cheap to clone; resampling loops copy keys per resample.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey(Arc<[String]>);

impl GroupKey {
    pub fn new<I, S>(parts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        GroupKey(parts.into_iter().map(Into::into).collect())
    }

    /// Key with a single part, for data grouped by one column.
    pub fn single(part: impl Into<String>) -> Self {
        GroupKey::new([part.into()])
    }

    #[must_use]
    pub fn parts(&self) -> &[String] {
        &self.0
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("|"))
    }
}

impl Serialize for GroupKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.parts().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GroupKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(GroupKey::new(Vec::<String>::deserialize(deserializer)?))
    }
}

/// One scored observation: the group it belongs to, the true label, and the
/// model's prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationRecord {
    pub group_key: GroupKey,
    pub label: bool,
    pub prediction: bool,
}

impl ClassificationRecord {
    pub fn new(
        group_key: GroupKey,
        label: bool,
        prediction: bool,
    ) -> Result<Self, GroupMetricsError> {
        if group_key.is_empty() {
            return Err(GroupMetricsError::EmptyGroupKey);
        }
        Ok(ClassificationRecord { group_key, label, prediction })
    }
}

/// An observation whose group membership is still expressed as named
/// attributes. [`intersect_groups`] turns a choice of attribute columns into
/// concrete [`ClassificationRecord`]s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    /// `(column, value)` pairs. Order does not matter; lookups are by name.
    pub attributes: Vec<(String, String)>,
    pub label: bool,
    pub prediction: bool,
}

/// The per-group rates a disparity summary can be computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMetric {
    Accuracy,
    FalsePositiveRate,
    TruePositiveRate,
    SelectionRate,
}

impl BaseMetric {
    pub const ALL: [BaseMetric; 4] = [
        BaseMetric::Accuracy,
        BaseMetric::FalsePositiveRate,
        BaseMetric::TruePositiveRate,
        BaseMetric::SelectionRate,
    ];

    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            BaseMetric::Accuracy => "accuracy",
            BaseMetric::FalsePositiveRate => "false_positive_rate",
            BaseMetric::TruePositiveRate => "true_positive_rate",
            BaseMetric::SelectionRate => "selection_rate",
        }
    }

    /// Trial and success counts `(n, z)` for this metric over one group's
    /// records. `n` can be zero (no record qualifies for the denominator);
    /// `z <= n` always holds.
    pub fn counts<'a>(
        self,
        records: impl IntoIterator<Item = &'a ClassificationRecord>,
    ) -> (u64, u64) {
        let mut n = 0;
        let mut z = 0;
        for r in records {
            match self {
                BaseMetric::Accuracy => {
                    n += 1;
                    if r.prediction == r.label {
                        z += 1;
                    }
                }
                BaseMetric::SelectionRate => {
                    n += 1;
                    if r.prediction {
                        z += 1;
                    }
                }
                BaseMetric::FalsePositiveRate => {
                    if !r.label {
                        n += 1;
                        if r.prediction {
                            z += 1;
                        }
                    }
                }
                BaseMetric::TruePositiveRate => {
                    if r.label {
                        n += 1;
                        if r.prediction {
                            z += 1;
                        }
                    }
                }
            }
        }
        (n, z)
    }
}

impl fmt::Display for BaseMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseMetric {
    type Err = GroupMetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "accuracy" | "acc" => Ok(BaseMetric::Accuracy),
            "false_positive_rate" | "fpr" => Ok(BaseMetric::FalsePositiveRate),
            "true_positive_rate" | "tpr" => Ok(BaseMetric::TruePositiveRate),
            "selection_rate" | "sr" => Ok(BaseMetric::SelectionRate),
            _ => Err(GroupMetricsError::UnknownMetric(s.to_string())),
        }
    }
}

/// Counted outcome for one group: `z` successes out of `n >= 1` trials.
///
/// The observed rate `y = z / n` is derived, never stored, so it cannot
/// drift out of sync with the counts. Serializes with a redundant `y` field
/// for human readers; deserialization ignores it and re-checks `z <= n`.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(try_from = "GroupOutcomeWire")]
pub struct GroupOutcome {
    group_key: GroupKey,
    n: u64,
    z: u64,
}

#[derive(Deserialize)]
struct GroupOutcomeWire {
    group_key: GroupKey,
    n: u64,
    z: u64,
}

impl TryFrom<GroupOutcomeWire> for GroupOutcome {
    type Error = GroupMetricsError;

    fn try_from(w: GroupOutcomeWire) -> Result<Self, Self::Error> {
        GroupOutcome::new(w.group_key, w.n, w.z)
    }
}

impl GroupOutcome {
    pub fn new(group_key: GroupKey, n: u64, z: u64) -> Result<Self, GroupMetricsError> {
        if group_key.is_empty() {
            return Err(GroupMetricsError::EmptyGroupKey);
        }
        if n == 0 {
            return Err(GroupMetricsError::ZeroTrials { key: group_key });
        }
        if z > n {
            return Err(GroupMetricsError::CountExceedsTrials { key: group_key, n, z });
        }
        Ok(GroupOutcome { group_key, n, z })
    }

    #[must_use]
    pub fn group_key(&self) -> &GroupKey {
        &self.group_key
    }

    /// Trial count (denominator). Always at least 1.
    #[must_use]
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Success count (numerator). Never exceeds `n`.
    #[must_use]
    pub fn z(&self) -> u64 {
        self.z
    }

    /// Observed rate `z / n`, always in `[0, 1]`.
    #[must_use]
    pub fn y(&self) -> f64 {
        self.z as f64 / self.n as f64
    }
}

impl Serialize for GroupOutcome {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("GroupOutcome", 4)?;
        st.serialize_field("group_key", &self.group_key)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("z", &self.z)?;
        st.serialize_field("y", &self.y())?;
        st.end()
    }
}

/// A group left out of a [`GroupMetricVector`], with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedGroup {
    pub group_key: GroupKey,
    pub reason: String,
}

/// Per-group outcomes for one base metric under one grouping, plus the
/// groups that had to be excluded. Keys are unique; order is whatever the
/// producer chose ([`aggregate`] sorts by key).
///
/// `metric` is `None` when the counts did not come from classified records:
/// pre-aggregated input and simulated draws carry no base metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GroupMetricVectorWire")]
pub struct GroupMetricVector {
    metric: Option<BaseMetric>,
    groups: Vec<GroupOutcome>,
    excluded: Vec<ExcludedGroup>,
}

#[derive(Deserialize)]
struct GroupMetricVectorWire {
    metric: Option<BaseMetric>,
    groups: Vec<GroupOutcome>,
    #[serde(default)]
    excluded: Vec<ExcludedGroup>,
}

impl TryFrom<GroupMetricVectorWire> for GroupMetricVector {
    type Error = GroupMetricsError;

    fn try_from(w: GroupMetricVectorWire) -> Result<Self, Self::Error> {
        GroupMetricVector::new(w.metric, w.groups, w.excluded)
    }
}

impl GroupMetricVector {
    pub fn new(
        metric: Option<BaseMetric>,
        groups: Vec<GroupOutcome>,
        excluded: Vec<ExcludedGroup>,
    ) -> Result<Self, GroupMetricsError> {
        let mut seen = HashSet::with_capacity(groups.len());
        for g in &groups {
            if !seen.insert(g.group_key()) {
                return Err(GroupMetricsError::DuplicateKey(g.group_key().clone()));
            }
        }
        Ok(GroupMetricVector { metric, groups, excluded })
    }

    #[must_use]
    pub fn metric(&self) -> Option<BaseMetric> {
        self.metric
    }

    #[must_use]
    pub fn groups(&self) -> &[GroupOutcome] {
        &self.groups
    }

    #[must_use]
    pub fn excluded(&self) -> &[ExcludedGroup] {
        &self.excluded
    }

    /// Number of groups carrying a rate.
    #[must_use]
    pub fn k(&self) -> usize {
        self.groups.len()
    }

    /// Observed rates in group order.
    #[must_use]
    pub fn rates(&self) -> Vec<f64> {
        self.groups.iter().map(GroupOutcome::y).collect()
    }
}

/// Plug-in estimate of the sampling variance of a group's observed rate:
/// `y(1 - y) / n`, the binomial variance with the rate itself standing in
/// for the unknown truth.
#[must_use]
pub fn plug_in_variance(outcome: &GroupOutcome) -> f64 {
    let y = outcome.y();
    y * (1.0 - y) / outcome.n as f64
}

/// Resolves a choice of attribute columns into concrete group keys.
///
/// Every record must carry a value for every requested column; the key
/// parts follow the order of `columns`, so distinct value combinations
/// yield distinct intersectional groups.
pub fn intersect_groups(
    records: &[RawRecord],
    columns: &[String],
) -> Result<Vec<ClassificationRecord>, GroupMetricsError> {
    if columns.is_empty() {
        return Err(GroupMetricsError::NoGroupColumns);
    }
    records
        .iter()
        .map(|r| {
            let mut parts = Vec::with_capacity(columns.len());
            for col in columns {
                let value = r
                    .attributes
                    .iter()
                    .find(|(name, _)| name == col)
                    .map(|(_, value)| value.clone())
                    .ok_or_else(|| GroupMetricsError::UnknownColumn(col.clone()))?;
                parts.push(value);
            }
            ClassificationRecord::new(GroupKey::new(parts), r.label, r.prediction)
        })
        .collect()
}

/// Counts each group's trials and successes for `metric` and assembles the
/// group vector, sorted by key.
///
/// Groups with an empty denominator are excluded with a reason. Fewer than
/// two groups with a nonzero denominator leave nothing to compare, which is
/// an error rather than a degenerate answer.
pub fn aggregate(
    records: &[ClassificationRecord],
    metric: BaseMetric,
) -> Result<GroupMetricVector, GroupMetricsError> {
    if records.is_empty() {
        return Err(GroupMetricsError::NoRecords);
    }
    let mut by_key: BTreeMap<GroupKey, Vec<&ClassificationRecord>> = BTreeMap::new();
    for record in records {
        if record.group_key.is_empty() {
            return Err(GroupMetricsError::EmptyGroupKey);
        }
        by_key.entry(record.group_key.clone()).or_default().push(record);
    }

    let mut groups = Vec::new();
    let mut excluded = Vec::new();
    for (key, members) in by_key {
        let (n, z) = metric.counts(members.iter().copied());
        if n == 0 {
            excluded.push(ExcludedGroup {
                group_key: key,
                reason: format!("no records in the denominator of {metric}"),
            });
        } else {
            groups.push(GroupOutcome::new(key, n, z)?);
        }
    }
    if groups.len() < 2 {
        return Err(GroupMetricsError::InsufficientGroups { found: groups.len() });
    }
    GroupMetricVector::new(Some(metric), groups, excluded)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(group: &str, label: bool, prediction: bool) -> ClassificationRecord {
        ClassificationRecord::new(GroupKey::single(group), label, prediction).unwrap()
    }

    #[test]
    fn accuracy_counts_matching_predictions() {
        // Two correct out of four.
        let records = vec![
            rec("a", true, true),
            rec("a", false, false),
            rec("a", true, false),
            rec("a", false, true),
        ];
        let (n, z) = BaseMetric::Accuracy.counts(&records);
        assert_eq!((n, z), (4, 2));
    }

    #[test]
    fn fpr_counts_predicted_positives_among_truly_negative() {
        let records = vec![
            rec("a", false, true),
            rec("a", false, false),
            rec("a", true, true),
            rec("a", true, false),
        ];
        let (n, z) = BaseMetric::FalsePositiveRate.counts(&records);
        assert_eq!((n, z), (2, 1));
        let (n, z) = BaseMetric::TruePositiveRate.counts(&records);
        assert_eq!((n, z), (2, 1));
        let (n, z) = BaseMetric::SelectionRate.counts(&records);
        assert_eq!((n, z), (4, 2));
    }

    #[test]
    fn aggregate_counts_per_group_and_sorts_keys() {
        let mut records = vec![
            rec("b", true, true),
            rec("b", false, false),
            rec("b", true, false),
            rec("b", false, true),
        ];
        records.push(rec("a", true, true));
        let vector = aggregate(&records, BaseMetric::Accuracy).unwrap();
        assert_eq!(vector.k(), 2);
        assert_eq!(vector.metric(), Some(BaseMetric::Accuracy));
        let keys: Vec<String> = vector.groups().iter().map(|g| g.group_key().to_string()).collect();
        assert_eq!(keys, ["a", "b"]);
        assert_eq!(vector.groups()[0].n(), 1);
        assert_eq!(vector.groups()[1].n(), 4);
        assert_eq!(vector.groups()[1].z(), 2);
        assert_eq!(vector.groups()[1].y(), 0.5);
    }

    #[test]
    fn aggregate_excludes_empty_denominators_with_reason() {
        // Group "b" has no truly negative records, so it carries no false
        // positive rate.
        let records = vec![
            rec("a", false, true),
            rec("a", false, false),
            rec("b", true, true),
            rec("c", false, false),
        ];
        let vector = aggregate(&records, BaseMetric::FalsePositiveRate).unwrap();
        assert_eq!(vector.k(), 2);
        assert_eq!(vector.excluded().len(), 1);
        assert_eq!(vector.excluded()[0].group_key, GroupKey::single("b"));
        assert!(vector.excluded()[0].reason.contains("false_positive_rate"));
    }

    #[test]
    fn aggregate_requires_two_rated_groups() {
        let records = vec![
            rec("a", true, true),
            rec("a", false, false),
            rec("a", true, false),
            rec("a", false, true),
        ];
        match aggregate(&records, BaseMetric::Accuracy) {
            Err(GroupMetricsError::InsufficientGroups { found: 1 }) => {}
            other => panic!("expected InsufficientGroups, got {other:?}"),
        }
        assert!(matches!(
            aggregate(&[], BaseMetric::Accuracy),
            Err(GroupMetricsError::NoRecords)
        ));
    }

    #[test]
    fn intersect_groups_crosses_columns_in_order() {
        let mut records = Vec::new();
        for race in ["r1", "r2"] {
            for age in ["a1", "a2"] {
                records.push(RawRecord {
                    attributes: vec![
                        ("race".to_string(), race.to_string()),
                        ("age".to_string(), age.to_string()),
                    ],
                    label: true,
                    prediction: true,
                });
            }
        }
        let columns = vec!["race".to_string(), "age".to_string()];
        let classified = intersect_groups(&records, &columns).unwrap();
        let keys: HashSet<GroupKey> =
            classified.iter().map(|r| r.group_key.clone()).collect();
        assert_eq!(keys.len(), 4);
        assert!(keys.contains(&GroupKey::new(["r2", "a1"])));

        // 5 x 8 attribute values cross into 40 intersectional groups.
        let mut wide = Vec::new();
        for i in 0..5 {
            for j in 0..8 {
                wide.push(RawRecord {
                    attributes: vec![
                        ("race".to_string(), format!("r{i}")),
                        ("age".to_string(), format!("a{j}")),
                    ],
                    label: false,
                    prediction: false,
                });
            }
        }
        let wide_keys: HashSet<GroupKey> = intersect_groups(&wide, &columns)
            .unwrap()
            .into_iter()
            .map(|r| r.group_key)
            .collect();
        assert_eq!(wide_keys.len(), 40);
    }

    #[test]
    fn intersect_groups_rejects_missing_columns() {
        let records = vec![RawRecord {
            attributes: vec![("race".to_string(), "r1".to_string())],
            label: true,
            prediction: false,
        }];
        let missing = vec!["age".to_string()];
        assert!(matches!(
            intersect_groups(&records, &missing),
            Err(GroupMetricsError::UnknownColumn(col)) if col == "age"
        ));
        assert!(matches!(
            intersect_groups(&records, &[]),
            Err(GroupMetricsError::NoGroupColumns)
        ));
    }

    #[test]
    fn plug_in_variance_matches_binomial_formula() {
        let g = GroupOutcome::new(GroupKey::single("a"), 20, 10).unwrap();
        assert!((plug_in_variance(&g) - 0.0125).abs() < 1e-15);
        let all = GroupOutcome::new(GroupKey::single("b"), 7, 7).unwrap();
        assert_eq!(plug_in_variance(&all), 0.0);
        let none = GroupOutcome::new(GroupKey::single("c"), 7, 0).unwrap();
        assert_eq!(plug_in_variance(&none), 0.0);
        let g = GroupOutcome::new(GroupKey::single("d"), 100, 40).unwrap();
        assert!((plug_in_variance(&g) - 0.0024).abs() < 1e-15);
    }

    #[test]
    fn outcome_invariants_are_enforced() {
        assert!(matches!(
            GroupOutcome::new(GroupKey::single("a"), 0, 0),
            Err(GroupMetricsError::ZeroTrials { .. })
        ));
        assert!(matches!(
            GroupOutcome::new(GroupKey::single("a"), 3, 4),
            Err(GroupMetricsError::CountExceedsTrials { .. })
        ));
        assert!(matches!(
            GroupOutcome::new(GroupKey::new(Vec::<String>::new()), 3, 1),
            Err(GroupMetricsError::EmptyGroupKey)
        ));
    }

    #[test]
    fn vector_rejects_duplicate_keys() {
        let groups = vec![
            GroupOutcome::new(GroupKey::single("a"), 5, 1).unwrap(),
            GroupOutcome::new(GroupKey::single("a"), 6, 2).unwrap(),
        ];
        assert!(matches!(
            GroupMetricVector::new(None, groups, Vec::new()),
            Err(GroupMetricsError::DuplicateKey(_))
        ));
    }

    #[test]
    fn outcome_serializes_with_derived_rate() {
        let g = GroupOutcome::new(GroupKey::new(["x", "y"]), 100, 40).unwrap();
        let json = serde_json::to_value(&g).unwrap();
        assert_eq!(json["group_key"], serde_json::json!(["x", "y"]));
        assert_eq!(json["n"], 100);
        assert_eq!(json["z"], 40);
        assert_eq!(json["y"], 0.4);
        let back: GroupOutcome = serde_json::from_value(json).unwrap();
        assert_eq!(back, g);

        // Reload re-checks the count invariant.
        let bad = serde_json::json!({"group_key": ["a"], "n": 3, "z": 9});
        assert!(serde_json::from_value::<GroupOutcome>(bad).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for metric in BaseMetric::ALL {
            assert_eq!(metric.name().parse::<BaseMetric>().unwrap(), metric);
        }
        assert_eq!("FPR".parse::<BaseMetric>().unwrap(), BaseMetric::FalsePositiveRate);
        assert_eq!("selection-rate".parse::<BaseMetric>().unwrap(), BaseMetric::SelectionRate);
        assert!("f1".parse::<BaseMetric>().is_err());
        assert_eq!(
            serde_json::to_value(BaseMetric::TruePositiveRate).unwrap(),
            serde_json::json!("true_positive_rate")
        );
    }
}
