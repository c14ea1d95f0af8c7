//! Fold construction, bootstrap sampling, and SMOTE minority oversampling.
//!
//! Everything here is a pure function of its inputs and seed, so fold plans
//! and resamples can be rebuilt bit-for-bit from the seed lineage.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, Encoding};
use crate::seeds;

/// A k-fold partition of row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold id per row index.
    pub assignment: Vec<usize>,
    pub stratified: bool,
    pub seed: u64,
    /// Degradation notices (e.g. a class smaller than k).
    pub warnings: Vec<String>,
}

impl FoldPlan {
    /// Row indices of fold `f`.
    pub fn fold_rows(&self, f: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == f)
            .map(|(i, _)| i)
            .collect()
    }

    /// Row indices outside fold `f`.
    pub fn complement_rows(&self, f: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != f)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Builds a deterministic shuffled k-fold plan.
///
/// With labels, shuffling happens within each class and rows are dealt
/// round-robin so per-fold positive counts differ by at most one. A class
/// smaller than `k` degrades stratification with a recorded warning.
pub fn kfold_plan(
    n: usize,
    k: usize,
    labels: Option<&[u8]>,
    seed: u64,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("fold count {k} must be >= 2")));
    }
    if k > n {
        return Err(Error::InvalidConfig(format!(
            "fold count {k} exceeds row count {n}"
        )));
    }
    if let Some(labels) = labels {
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
    }

    let mut rng = seeds::rng(seed);
    let mut assignment = vec![0usize; n];
    let mut warnings = Vec::new();

    match labels {
        Some(labels) => {
            // Deal class by class, continuing the fold cursor across
            // classes so total fold sizes stay within one of each other.
            let mut cursor = 0usize;
            for class in [1u8, 0u8] {
                let mut idx: Vec<usize> =
                    (0..n).filter(|&i| labels[i] == class).collect();
                if !idx.is_empty() && idx.len() < k {
                    warnings.push(format!(
                        "class {class} has {} rows, fewer than {k} folds; \
                         stratification degraded",
                        idx.len()
                    ));
                }
                idx.shuffle(&mut rng);
                for i in idx {
                    assignment[i] = cursor % k;
                    cursor += 1;
                }
            }
        }
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            for (pos, i) in idx.into_iter().enumerate() {
                assignment[i] = pos % k;
            }
        }
    }

    Ok(FoldPlan {
        k,
        assignment,
        stratified: labels.is_some(),
        seed,
        warnings,
    })
}

/// `n` uniform draws with replacement from `[0, n)`, deterministic per seed.
pub fn bootstrap_indices(n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::InvalidData("bootstrap of an empty set".into()));
    }
    let mut rng = seeds::rng(seed);
    Ok((0..n).map(|_| rng.gen_range(0..n)).collect())
}

/// SMOTE parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Minority count after synthesis as a fraction of the majority count.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

/// Result of a SMOTE pass.
#[derive(Debug)]
pub struct SmoteOutcome {
    pub dataset: Dataset,
    pub synthesized: usize,
    pub notice: Option<String>,
}

/// Oversamples the minority class by interpolating toward minority nearest
/// neighbors.
///
/// Numeric and ordinal coordinates interpolate as `r + u*(q - r)` (clamped
/// into the parent interval so convexity is exact); boolean and one-hot
/// columns are copied whole from the base sample. Synthetic rows carry the
/// minority label and a synthetic flag.
pub fn smote_augment(dataset: &Dataset, config: &SmoteConfig) -> Result<SmoteOutcome> {
    if config.k_neighbors == 0 {
        return Err(Error::InvalidConfig("k_neighbors must be >= 1".into()));
    }
    if !(config.target_ratio > 0.0 && config.target_ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "target_ratio {} outside (0, 1]",
            config.target_ratio
        )));
    }

    let n = dataset.n_rows();
    let pos: Vec<usize> = (0..n).filter(|&i| dataset.labels[i] == 1).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| dataset.labels[i] == 0).collect();
    let (minority_label, minority, majority_count) = if pos.len() <= neg.len() {
        (1u8, pos, neg.len())
    } else {
        (0u8, neg, pos.len())
    };

    let target = (config.target_ratio * majority_count as f64).ceil() as usize;
    if minority.len() >= target {
        return Ok(SmoteOutcome {
            dataset: dataset.clone(),
            synthesized: 0,
            notice: Some(format!(
                "minority count {} already at target {target}; no rows synthesized",
                minority.len()
            )),
        });
    }
    if minority.len() < 2 {
        return Err(Error::InvalidData(format!(
            "SMOTE needs at least 2 minority rows, found {}",
            minority.len()
        )));
    }
    let need = target - minority.len();
    let m = minority.len();
    let k = config.k_neighbors.min(m - 1);

    // Exact brute-force neighbor lists over all columns.
    let mut neighbors: Vec<Vec<usize>> = Vec::with_capacity(m);
    for (a, &ra) in minority.iter().enumerate() {
        let row_a = dataset.row(ra);
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(m - 1);
        for (b, &rb) in minority.iter().enumerate() {
            if a == b {
                continue;
            }
            let row_b = dataset.row(rb);
            let d2: f64 = row_a
                .iter()
                .zip(row_b.iter())
                .map(|(&x, &y)| (x - y) * (x - y))
                .sum();
            dist.push((d2, b));
        }
        dist.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        neighbors.push(dist.into_iter().take(k).map(|(_, b)| b).collect());
    }

    let interpolates: Vec<bool> = dataset
        .descriptors
        .iter()
        .map(|d| {
            matches!(
                d.encoding,
                Encoding::NumericStandardized | Encoding::OrdinalCode
            )
        })
        .collect();

    let mut out = dataset.clone();
    let p = dataset.n_cols();
    for j in 0..need {
        let mut rng = seeds::rng(seeds::child_indexed(
            config.seed,
            seeds::domain::SMOTE,
            j as u64,
        ));
        let base = rng.gen_range(0..m);
        let neigh = neighbors[base][rng.gen_range(0..k)];
        let u: f64 = rng.gen();
        let row_r = dataset.row(minority[base]);
        let row_q = dataset.row(minority[neigh]);
        let mut new_row = Vec::with_capacity(p);
        for c in 0..p {
            let (r, q) = (row_r[c], row_q[c]);
            if interpolates[c] {
                let (lo, hi) = if r <= q { (r, q) } else { (q, r) };
                new_row.push((r + u * (q - r)).clamp(lo, hi));
            } else {
                new_row.push(r);
            }
        }
        out.push_row(&new_row, minority_label, format!("synthetic:{j}"), true)?;
    }

    Ok(SmoteOutcome {
        dataset: out,
        synthesized: need,
        notice: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leave_one_out_partition() {
        let plan = kfold_plan(10, 10, None, 1).unwrap();
        let mut sizes = vec![0usize; 10];
        for &a in &plan.assignment {
            sizes[a] += 1;
        }
        assert!(sizes.iter().all(|&s| s == 1));
    }

    #[test]
    fn fold_sizes_differ_by_at_most_one() {
        let plan = kfold_plan(10, 3, None, 7).unwrap();
        let mut sizes = vec![0usize; 3];
        for &a in &plan.assignment {
            sizes[a] += 1;
        }
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
    }

    #[test]
    fn stratified_folds_balance_positives() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i < 10)).collect();
        let plan = kfold_plan(100, 10, Some(&labels), 3).unwrap();
        for f in 0..10 {
            let pos = plan
                .fold_rows(f)
                .iter()
                .filter(|&&i| labels[i] == 1)
                .count();
            assert_eq!(pos, 1, "fold {f}");
        }
        assert!(plan.warnings.is_empty());
    }

    #[test]
    fn tiny_class_degrades_with_warning() {
        let labels: Vec<u8> = (0..20).map(|i| u8::from(i < 2)).collect();
        let plan = kfold_plan(20, 5, Some(&labels), 3).unwrap();
        assert_eq!(plan.warnings.len(), 1);
    }

    #[test]
    fn kfold_rejects_bad_k() {
        assert!(kfold_plan(5, 6, None, 0).is_err());
        assert!(kfold_plan(5, 1, None, 0).is_err());
    }

    #[test]
    fn kfold_is_pure() {
        let labels: Vec<u8> = (0..50).map(|i| u8::from(i % 5 == 0)).collect();
        let a = kfold_plan(50, 5, Some(&labels), 42).unwrap();
        let b = kfold_plan(50, 5, Some(&labels), 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_singleton() {
        assert_eq!(bootstrap_indices(1, 9).unwrap(), vec![0]);
    }

    #[test]
    fn bootstrap_deterministic() {
        assert_eq!(
            bootstrap_indices(100, 5).unwrap(),
            bootstrap_indices(100, 5).unwrap()
        );
    }

    #[test]
    fn bootstrap_distinct_fraction_near_632() {
        let idx = bootstrap_indices(10_000, 11).unwrap();
        let mut seen = vec![false; 10_000];
        for i in idx {
            seen[i] = true;
        }
        let distinct = seen.iter().filter(|&&s| s).count() as f64 / 10_000.0;
        let expected = 1.0 - (-1.0f64).exp();
        assert!(
            (distinct - expected).abs() < 0.01,
            "distinct fraction {distinct}"
        );
    }
}
