//! Post-hoc analytics over impurity importance: grouping week-lagged
//! feature copies, the temporal-weight metric, and box-plot summaries.
//!
//! Temporal features appear once per week in a design matrix, so a family
//! like the assignment flag owns several columns. Grouping sums the
//! per-column relative importance back into one number per family, and the
//! temporal weight measures how many weeks before the prediction that
//! importance mass sits: 0 means all mass on the most recent week, `lag`
//! means all mass on week 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::MetricValue;
use crate::features::FeatureDescriptor;

/// Grouped relative importance for one feature family in one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRecord {
    pub group_id: String,
    /// Share of the prediction's normalized impurity decrease.
    pub ri: f64,
    /// Per-week components, empty for profile features.
    pub per_week: BTreeMap<usize, f64>,
    /// Lag of the originating prediction; `None` for profile-only runs.
    pub lag: Option<usize>,
}

/// Sums column relative importance by group: week copies of a temporal
/// feature collapse into their family, and one-hot level columns collapse
/// into their profile feature.
pub fn group_importance(
    column_ri: &[f64],
    descriptors: &[FeatureDescriptor],
) -> Result<Vec<ImportanceRecord>> {
    if column_ri.len() != descriptors.len() {
        return Err(Error::DimensionMismatch {
            expected: descriptors.len(),
            got: column_ri.len(),
        });
    }
    let lag = descriptors.iter().filter_map(|d| d.source_week).max();
    let mut records: BTreeMap<&str, ImportanceRecord> = BTreeMap::new();
    for (d, &ri) in descriptors.iter().zip(column_ri) {
        let record = records
            .entry(d.group_id.as_str())
            .or_insert_with(|| ImportanceRecord {
                group_id: d.group_id.clone(),
                ri: 0.0,
                per_week: BTreeMap::new(),
                lag,
            });
        record.ri += ri;
        if let Some(w) = d.source_week {
            *record.per_week.entry(w).or_insert(0.0) += ri;
        }
    }
    Ok(records.into_values().collect())
}

/// Temporal weight `TW(x) = sum_i RI(x_i)/RI(x) * (lag - i)`.
///
/// Undefined when the group has no importance mass or is not temporal.
pub fn temporal_weight(record: &ImportanceRecord) -> MetricValue {
    if record.per_week.is_empty() {
        return MetricValue::Undefined(format!(
            "group {} has no temporal components",
            record.group_id
        ));
    }
    let Some(lag) = record.lag else {
        return MetricValue::Undefined("prediction had no temporal lag".into());
    };
    if record.ri <= 0.0 {
        return MetricValue::Undefined(format!(
            "group {} has zero relative importance",
            record.group_id
        ));
    }
    let mut tw = 0.0;
    for (&week, &mass) in &record.per_week {
        tw += mass / record.ri * (lag - week) as f64;
    }
    MetricValue::Defined(tw)
}

/// Five-number summary with Tukey outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Values beyond 1.5 IQR from the quartiles.
    pub outliers: Vec<f64>,
}

/// Quantile by linear interpolation at position `(n - 1) * p` of the
/// sorted values.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Box statistics of a non-empty value list.
pub fn summarize_distribution(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::InvalidData("box stats of an empty list".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidData("NaN in box-stats input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let outliers = sorted
        .iter()
        .copied()
        .filter(|&v| v < lo_fence || v > hi_fence)
        .collect();
    Ok(BoxStats {
        min: sorted[0],
        q1,
        median,
        q3,
        max: *sorted.last().expect("non-empty"),
        outliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Encoding;

    fn temporal_descriptor(id: &str, week: usize) -> FeatureDescriptor {
        FeatureDescriptor {
            feature_id: id.to_string(),
            source_week: Some(week),
            encoding: Encoding::Boolean,
            group_id: id.to_string(),
        }
    }

    fn profile_descriptor(id: &str, level: &str) -> FeatureDescriptor {
        FeatureDescriptor {
            feature_id: id.to_string(),
            source_week: None,
            encoding: Encoding::OneHotLevel(level.to_string()),
            group_id: id.to_string(),
        }
    }

    #[test]
    fn week_copies_sum_into_their_family() {
        let descriptors = vec![
            temporal_descriptor("a", 0),
            temporal_descriptor("a", 1),
            temporal_descriptor("a", 2),
        ];
        let records = group_importance(&[0.0, 15.0, 65.0], &descriptors).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].ri, 80.0);
        assert_eq!(records[0].lag, Some(2));
        assert_eq!(records[0].per_week[&1], 15.0);
    }

    #[test]
    fn worked_temporal_weight_example() {
        let descriptors = vec![
            temporal_descriptor("a", 0),
            temporal_descriptor("a", 1),
            temporal_descriptor("a", 2),
        ];
        let records = group_importance(&[0.0, 15.0, 65.0], &descriptors).unwrap();
        let tw = temporal_weight(&records[0]);
        assert_eq!(tw, MetricValue::Defined(15.0 / 80.0));
    }

    #[test]
    fn tw_extremes() {
        let descriptors = vec![
            temporal_descriptor("fp", 0),
            temporal_descriptor("fp", 1),
            temporal_descriptor("fp", 2),
            temporal_descriptor("fp", 3),
        ];
        // All mass on the latest week.
        let recent = group_importance(&[0.0, 0.0, 0.0, 9.0], &descriptors).unwrap();
        assert_eq!(temporal_weight(&recent[0]), MetricValue::Defined(0.0));
        // All mass on week 0 with lag 3.
        let old = group_importance(&[9.0, 0.0, 0.0, 0.0], &descriptors).unwrap();
        assert_eq!(temporal_weight(&old[0]), MetricValue::Defined(3.0));
    }

    #[test]
    fn zero_mass_group_is_undefined() {
        let descriptors = vec![temporal_descriptor("gh", 0)];
        let records = group_importance(&[0.0], &descriptors).unwrap();
        assert!(!temporal_weight(&records[0]).is_defined());
    }

    #[test]
    fn one_hot_levels_collapse_and_conserve() {
        let descriptors = vec![
            profile_descriptor("gender", "female"),
            profile_descriptor("gender", "male"),
            profile_descriptor("gender", "NC"),
            temporal_descriptor("a", 0),
        ];
        let ri = [10.0, 5.0, 25.0, 60.0];
        let records = group_importance(&ri, &descriptors).unwrap();
        let total: f64 = records.iter().map(|r| r.ri).sum();
        assert_eq!(total, 100.0);
        let gender = records.iter().find(|r| r.group_id == "gender").unwrap();
        assert_eq!(gender.ri, 40.0);
        assert!(gender.per_week.is_empty());
        assert!(!temporal_weight(gender).is_defined());
    }

    #[test]
    fn component_sum_matches_ri() {
        let descriptors = vec![
            temporal_descriptor("fp", 0),
            temporal_descriptor("fp", 1),
            temporal_descriptor("fp", 2),
        ];
        let records = group_importance(&[1.25, 2.5, 3.75], &descriptors).unwrap();
        let sum: f64 = records[0].per_week.values().sum();
        assert!((records[0].ri - sum).abs() < 1e-9);
    }

    #[test]
    fn tw_is_scale_invariant() {
        let descriptors = vec![
            temporal_descriptor("fp", 0),
            temporal_descriptor("fp", 1),
            temporal_descriptor("fp", 2),
        ];
        let a = group_importance(&[1.0, 4.0, 5.0], &descriptors).unwrap();
        let b = group_importance(&[7.0, 28.0, 35.0], &descriptors).unwrap();
        assert_eq!(temporal_weight(&a[0]), temporal_weight(&b[0]));
    }

    #[test]
    fn tw_stays_within_bounds() {
        use rand::Rng;
        let mut rng = crate::seeds::rng(3);
        for _ in 0..100 {
            let lag = rng.gen_range(1..6usize);
            let descriptors: Vec<FeatureDescriptor> =
                (0..=lag).map(|w| temporal_descriptor("x", w)).collect();
            let ri: Vec<f64> = (0..=lag).map(|_| rng.gen::<f64>()).collect();
            let records = group_importance(&ri, &descriptors).unwrap();
            if let MetricValue::Defined(tw) = temporal_weight(&records[0]) {
                assert!(tw >= 0.0 && tw <= lag as f64, "tw {tw} lag {lag}");
            }
        }
    }

    #[test]
    fn box_stats_simple() {
        let stats = summarize_distribution(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(stats.median, 3.0);
        assert_eq!(stats.q1, 2.0);
        assert_eq!(stats.q3, 4.0);
        assert!(stats.outliers.is_empty());
    }

    #[test]
    fn box_stats_constant_list() {
        let stats = summarize_distribution(&[2.0; 7]).unwrap();
        assert_eq!(stats.min, 2.0);
        assert_eq!(stats.q1, 2.0);
        assert_eq!(stats.median, 2.0);
        assert_eq!(stats.q3, 2.0);
        assert_eq!(stats.max, 2.0);
        assert!(stats.outliers.is_empty());
    }

    #[test]
    fn box_stats_flags_outlier_with_zero_iqr() {
        let stats = summarize_distribution(&[1.0, 1.0, 1.0, 1.0, 100.0]).unwrap();
        assert_eq!(stats.outliers, vec![100.0]);
        assert_eq!(stats.max, 100.0);
    }

    #[test]
    fn box_stats_rejects_empty() {
        assert!(summarize_distribution(&[]).is_err());
    }
}
