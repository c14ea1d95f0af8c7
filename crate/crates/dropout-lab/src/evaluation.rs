//! Confusion-matrix metrics, AUROC, F-beta, and the nested
//! cross-validation driver with inner-loop hyperparameter tuning.
//!
//! The outer loop estimates performance; the inner loop, run on each outer
//! training partition, picks hyperparameters by mean inner AUROC. The
//! standardizer is fitted on outer-training rows only and SMOTE touches
//! outer-training rows only, never a test fold; the driver records the
//! index sets it used so the leakage firewall is checked structurally, not
//! assumed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{
    fit_adaboost, fit_forest, AlphaForm, BoostConfig, BoostVariant, ForestConfig,
};
use crate::error::{Error, Result};
use crate::features::{apply_standardizer, fit_standardizer, Dataset, TaskSpec};
use crate::linmodel::{fit_logistic_warm, predict_proba, ElasticNetConfig};
use crate::resampling::{kfold_plan, smote_augment, SmoteConfig};
use crate::seeds;

/// Counts with the dropout class as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    /// True positive rate TP / (TP + FN).
    pub fn tpr(&self) -> Option<f64> {
        let p = self.true_pos + self.false_neg;
        (p > 0).then(|| self.true_pos as f64 / p as f64)
    }

    /// False positive rate FP / (FP + TN).
    pub fn fpr(&self) -> Option<f64> {
        let n = self.false_pos + self.true_neg;
        (n > 0).then(|| self.false_pos as f64 / n as f64)
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.false_neg += other.false_neg;
        self.true_neg += other.true_neg;
    }
}

/// Tallies predictions against labels.
pub fn confusion(labels: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix> {
    if labels.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: predicted.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in labels.iter().zip(predicted) {
        if y > 1 || p > 1 {
            return Err(Error::InvalidData(format!(
                "non-binary value in confusion input: label {y}, prediction {p}"
            )));
        }
        match (y, p) {
            (1, 1) => cm.true_pos += 1,
            (0, 1) => cm.false_pos += 1,
            (1, 0) => cm.false_neg += 1,
            (0, 0) => cm.true_neg += 1,
            _ => unreachable!(),
        }
    }
    Ok(cm)
}

/// A metric that can be structurally undefined (e.g. AUROC of a
/// single-class fold), which is an outcome, not an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricValue {
    Defined(f64),
    Undefined(String),
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Defined(v) => Some(*v),
            MetricValue::Undefined(_) => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, MetricValue::Defined(_))
    }
}

impl std::fmt::Display for MetricValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricValue::Defined(v) => write!(f, "{v:.4}"),
            MetricValue::Undefined(reason) => write!(f, "n/a ({reason})"),
        }
    }
}

/// AUROC as the rank statistic `(#{pos > neg} + 0.5 #{ties}) / (P * N)`,
/// computed in integer arithmetic so it equals the brute-force pairwise
/// enumeration exactly. Single-class inputs yield a diagnostic flag.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<MetricValue> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::InvalidData(format!("non-binary label {bad}")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidData("NaN score".into()));
    }
    let pos_total = labels.iter().filter(|&&y| y == 1).count() as u128;
    let neg_total = labels.len() as u128 - pos_total;
    if pos_total == 0 || neg_total == 0 {
        return Ok(MetricValue::Undefined(format!(
            "labels contain a single class ({} positive, {} negative)",
            pos_total, neg_total
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Walk ascending score groups: every positive beats all negatives
    // strictly below its group and half-ties with negatives in its group.
    let mut wins_x2: u128 = 0;
    let mut negs_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut group_pos: u128 = 0;
        let mut group_neg: u128 = 0;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                group_pos += 1;
            } else {
                group_neg += 1;
            }
            j += 1;
        }
        wins_x2 += group_pos * (2 * negs_below + group_neg);
        negs_below += group_neg;
        i = j;
    }
    Ok(MetricValue::Defined(
        wins_x2 as f64 / (2 * pos_total * neg_total) as f64,
    ))
}

/// F-beta from a confusion matrix. Zero true positives with any error mass
/// gives 0; an all-true-negative matrix is undefined.
pub fn f_beta(cm: &ConfusionMatrix, beta: f64) -> Result<MetricValue> {
    if !(beta > 0.0) {
        return Err(Error::InvalidConfig(format!("beta {beta} must be > 0")));
    }
    if cm.true_pos == 0 {
        return if cm.false_pos == 0 && cm.false_neg == 0 {
            Ok(MetricValue::Undefined(
                "no positives in labels or predictions".into(),
            ))
        } else {
            Ok(MetricValue::Defined(0.0))
        };
    }
    let precision = cm.true_pos as f64 / (cm.true_pos + cm.false_pos) as f64;
    let recall = cm.true_pos as f64 / (cm.true_pos + cm.false_neg) as f64;
    let b2 = beta * beta;
    Ok(MetricValue::Defined(
        (1.0 + b2) * precision * recall / (b2 * precision + recall),
    ))
}

// ---------------------------------------------------------------------------
// Nested cross-validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierId {
    Logistic,
    Forest,
    AdaBoost,
}

impl ClassifierId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierId::Logistic => "logistic",
            ClassifierId::Forest => "forest",
            ClassifierId::AdaBoost => "adaboost",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "logistic" => Some(ClassifierId::Logistic),
            "forest" => Some(ClassifierId::Forest),
            "adaboost" => Some(ClassifierId::AdaBoost),
            _ => None,
        }
    }
}

impl std::fmt::Display for ClassifierId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Nested-CV protocol settings and the per-classifier hyperparameter grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub outer_k: usize,
    pub inner_k: usize,
    pub lambda_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub forest_trees_grid: Vec<usize>,
    pub boost_rounds_grid: Vec<usize>,
    pub boost_depth_grid: Vec<usize>,
    /// Hard-label probability threshold (boosting uses its margin sign).
    pub threshold: f64,
    pub smote: bool,
    pub smote_neighbors: usize,
    pub smote_target_ratio: f64,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            outer_k: 10,
            inner_k: 3,
            // Seven log-spaced points across 1e-4..1e1.
            lambda_grid: (0..7)
                .map(|i| 10f64.powf(-4.0 + 5.0 * i as f64 / 6.0))
                .collect(),
            alpha_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            forest_trees_grid: vec![200, 500],
            boost_rounds_grid: vec![100, 200],
            boost_depth_grid: vec![1, 2, 3],
            threshold: 0.5,
            smote: false,
            smote_neighbors: 5,
            smote_target_ratio: 1.0,
            seed: 0,
        }
    }
}

impl CvConfig {
    fn validate(&self) -> Result<()> {
        if self.outer_k < 2 || self.inner_k < 2 {
            return Err(Error::InvalidConfig(
                "outer_k and inner_k must be >= 2".into(),
            ));
        }
        if self.lambda_grid.is_empty()
            || self.alpha_grid.is_empty()
            || self.forest_trees_grid.is_empty()
            || self.boost_rounds_grid.is_empty()
            || self.boost_depth_grid.is_empty()
        {
            return Err(Error::InvalidConfig("empty hyperparameter grid".into()));
        }
        Ok(())
    }
}

/// Optimizer settings for logistic fits inside the CV loops: coarser than
/// the library default, which changes AUROC by far less than fold noise
/// and keeps full grids affordable.
fn grid_logistic_config(lambda: f64, alpha: f64) -> ElasticNetConfig {
    ElasticNetConfig {
        lambda,
        alpha,
        max_iterations: 25,
        tolerance: 1e-5,
        penalize_intercept: false,
    }
}

/// One hyperparameter combination, ordered so that earlier entries are
/// preferred on metric ties (stronger regularization, smaller model).
#[derive(Debug, Clone, Copy, PartialEq)]
enum Combo {
    Logistic { lambda: f64, alpha: f64 },
    Forest { n_trees: usize },
    Boost { rounds: usize, depth: usize },
}

impl std::fmt::Display for Combo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Combo::Logistic { lambda, alpha } => write!(f, "lambda={lambda:.6e},alpha={alpha}"),
            Combo::Forest { n_trees } => write!(f, "B={n_trees}"),
            Combo::Boost { rounds, depth } => write!(f, "T={rounds},depth={depth}"),
        }
    }
}

fn combos(classifier: ClassifierId, cv: &CvConfig) -> Vec<Combo> {
    match classifier {
        ClassifierId::Logistic => {
            let mut lambdas = cv.lambda_grid.clone();
            lambdas.sort_by(|a, b| b.total_cmp(a));
            let mut alphas = cv.alpha_grid.clone();
            alphas.sort_by(|a, b| b.total_cmp(a));
            lambdas
                .iter()
                .flat_map(|&lambda| {
                    alphas
                        .iter()
                        .map(move |&alpha| Combo::Logistic { lambda, alpha })
                })
                .collect()
        }
        ClassifierId::Forest => {
            let mut bs = cv.forest_trees_grid.clone();
            bs.sort_unstable();
            bs.into_iter().map(|n_trees| Combo::Forest { n_trees }).collect()
        }
        ClassifierId::AdaBoost => {
            let mut ts = cv.boost_rounds_grid.clone();
            ts.sort_unstable();
            let mut depths = cv.boost_depth_grid.clone();
            depths.sort_unstable();
            ts.iter()
                .flat_map(|&rounds| depths.iter().map(move |&depth| Combo::Boost { rounds, depth }))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum FoldOutcome {
    Evaluated {
        fold: usize,
        auroc: MetricValue,
        f2: MetricValue,
        precision: MetricValue,
        recall: MetricValue,
        confusion: ConfusionMatrix,
        selected: String,
    },
    Skipped {
        fold: usize,
        reason: String,
    },
}

/// Per-fold and aggregate metrics for one (dataset, classifier) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classifier: ClassifierId,
    pub task: Option<TaskSpec>,
    pub folds: Vec<FoldOutcome>,
    /// Means over evaluable folds only.
    pub mean_auroc: MetricValue,
    /// AUROC of all outer-fold scores pooled before one computation.
    pub pooled_auroc: MetricValue,
    pub mean_f2: MetricValue,
    pub mean_precision: MetricValue,
    pub mean_recall: MetricValue,
    pub total_confusion: ConfusionMatrix,
    pub warnings: Vec<String>,
    /// Structural leakage-firewall violations (always 0 in a correct run).
    pub hygiene_violations: usize,
    /// Set when no fold could be evaluated.
    pub unevaluable: Option<String>,
    /// Mean normalized column importance over outer-fold refits
    /// (ensembles only).
    pub mean_column_importance: Option<Vec<f64>>,
}

impl MetricsReport {
    fn unevaluable(classifier: ClassifierId, task: Option<TaskSpec>, reason: String) -> Self {
        MetricsReport {
            classifier,
            task,
            folds: Vec::new(),
            mean_auroc: MetricValue::Undefined(reason.clone()),
            pooled_auroc: MetricValue::Undefined(reason.clone()),
            mean_f2: MetricValue::Undefined(reason.clone()),
            mean_precision: MetricValue::Undefined(reason.clone()),
            mean_recall: MetricValue::Undefined(reason.clone()),
            total_confusion: ConfusionMatrix::default(),
            warnings: Vec::new(),
            hygiene_violations: 0,
            unevaluable: Some(reason),
            mean_column_importance: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned-column text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("classifier: {}\n", self.classifier));
        if let Some(task) = &self.task {
            out.push_str(&format!(
                "task: {:?} week={} lag={}\n",
                task.kind, task.week, task.lag
            ));
        }
        if let Some(reason) = &self.unevaluable {
            out.push_str(&format!("unevaluable: {reason}\n"));
            return out;
        }
        out.push_str(&format!(
            "{:<5} {:>8} {:>8} {:>10} {:>8}  {}\n",
            "fold", "auroc", "f2", "precision", "recall", "selected"
        ));
        for fold in &self.folds {
            match fold {
                FoldOutcome::Evaluated {
                    fold,
                    auroc,
                    f2,
                    precision,
                    recall,
                    selected,
                    ..
                } => out.push_str(&format!(
                    "{fold:<5} {auroc:>8} {f2:>8} {precision:>10} {recall:>8}  {selected}\n"
                )),
                FoldOutcome::Skipped { fold, reason } => {
                    out.push_str(&format!("{fold:<5} skipped: {reason}\n"))
                }
            }
        }
        out.push_str(&format!(
            "{:<5} {:>8} {:>8} {:>10} {:>8}\n",
            "mean", self.mean_auroc, self.mean_f2, self.mean_precision, self.mean_recall
        ));
        out.push_str(&format!("pooled auroc: {}\n", self.pooled_auroc));
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

fn mean_metric(values: impl Iterator<Item = f64>) -> MetricValue {
    let vals: Vec<f64> = values.collect();
    if vals.is_empty() {
        MetricValue::Undefined("no evaluable folds".into())
    } else {
        MetricValue::Defined(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

struct FoldResult {
    outcome: FoldOutcome,
    scores: Vec<f64>,
    labels: Vec<u8>,
    importance: Option<Vec<f64>>,
    warnings: Vec<String>,
    hygiene_violations: usize,
}

/// Scores and hard classes from one classifier on the test rows.
fn fit_and_score(
    classifier: ClassifierId,
    combo: Combo,
    train: &Dataset,
    test: &Dataset,
    threshold: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<u8>, Option<Vec<f64>>)> {
    match (classifier, combo) {
        (ClassifierId::Logistic, Combo::Logistic { lambda, alpha }) => {
            let config = grid_logistic_config(lambda, alpha);
            let zeros = vec![0.0; train.n_cols() + 1];
            let model = fit_logistic_warm(train.view(), &train.labels, &config, &zeros)?;
            let scores = predict_proba(&model, test.view())?;
            let classes = scores.iter().map(|&p| u8::from(p >= threshold)).collect();
            Ok((scores, classes, None))
        }
        (ClassifierId::Forest, Combo::Forest { n_trees }) => {
            let config = ForestConfig {
                n_trees,
                seed,
                ..Default::default()
            };
            let forest = fit_forest(train.view(), &train.labels, &config)?;
            let (_, probs) = forest.predict(test.view())?;
            let classes = probs.iter().map(|&p| u8::from(p >= threshold)).collect();
            Ok((probs, classes, Some(forest.impurity_importance())))
        }
        (ClassifierId::AdaBoost, Combo::Boost { rounds, depth }) => {
            let config = BoostConfig {
                rounds,
                depth,
                alpha_form: AlphaForm::Log,
                variant: BoostVariant::Resample,
                epsilon_floor: 1e-10,
                seed,
            };
            let model = fit_adaboost(train.view(), &train.labels, &config)?;
            let (classes, margins) = model.predict(test.view())?;
            Ok((margins, classes, Some(model.impurity_importance())))
        }
        _ => unreachable!("combo and classifier always match"),
    }
}

/// Mean inner AUROC per grid combination, sharing work across nested
/// combinations: one forest serves every B via vote prefixes, one boosting
/// run per depth serves every T via margin prefixes, and logistic fits
/// warm-start along the lambda path.
fn eval_inner_grid(
    classifier: ClassifierId,
    cv: &CvConfig,
    combo_list: &[Combo],
    train: &Dataset,
    fold_seed: u64,
    warnings: &mut Vec<String>,
) -> Result<Vec<Option<f64>>> {
    let n = train.n_rows();
    let mut sums = vec![0.0f64; combo_list.len()];
    let mut counts = vec![0usize; combo_list.len()];

    if n < cv.inner_k {
        warnings.push(format!(
            "inner selection impossible: {n} training rows for {} folds",
            cv.inner_k
        ));
        return Ok(vec![None; combo_list.len()]);
    }
    let plan = kfold_plan(
        n,
        cv.inner_k,
        Some(&train.labels),
        seeds::child(fold_seed, seeds::domain::INNER_PLAN),
    )?;
    for w in &plan.warnings {
        warnings.push(format!("inner folds: {w}"));
    }

    for j in 0..cv.inner_k {
        let val_idx = plan.fold_rows(j);
        let tr_idx = plan.complement_rows(j);
        let val = train.select_rows(&val_idx);
        let tr = train.select_rows(&tr_idx);
        let val_pos = val.positives();
        if val_pos == 0 || val_pos == val.n_rows() {
            continue; // AUROC undefined on this inner fold
        }
        if !tr.has_both_classes() {
            continue;
        }
        let fit_seed = seeds::child_indexed(fold_seed, seeds::domain::INNER_FIT, j as u64);

        match classifier {
            ClassifierId::Logistic => {
                // Combos are ordered (lambda desc, alpha desc); walk each
                // alpha's lambda path with warm starts.
                let mut per_alpha: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
                for (idx, combo) in combo_list.iter().enumerate() {
                    let Combo::Logistic { lambda, alpha } = combo else {
                        unreachable!()
                    };
                    match per_alpha.iter_mut().find(|(a, _)| a == alpha) {
                        Some((_, path)) => path.push((idx, *lambda)),
                        None => per_alpha.push((*alpha, vec![(idx, *lambda)])),
                    }
                }
                for (alpha, path) in per_alpha {
                    let mut warm = vec![0.0; tr.n_cols() + 1];
                    for (idx, lambda) in path {
                        let config = grid_logistic_config(lambda, alpha);
                        let model =
                            fit_logistic_warm(tr.view(), &tr.labels, &config, &warm)?;
                        warm.clone_from_slice(&model.beta);
                        let scores = predict_proba(&model, val.view())?;
                        if let MetricValue::Defined(a) = roc_auc(&scores, &val.labels)? {
                            sums[idx] += a;
                            counts[idx] += 1;
                        }
                    }
                }
            }
            ClassifierId::Forest => {
                let max_b = *cv.forest_trees_grid.iter().max().expect("non-empty grid");
                let config = ForestConfig {
                    n_trees: max_b,
                    seed: fit_seed,
                    ..Default::default()
                };
                let forest = fit_forest(tr.view(), &tr.labels, &config)?;
                for (idx, combo) in combo_list.iter().enumerate() {
                    let Combo::Forest { n_trees } = combo else {
                        unreachable!()
                    };
                    let mut scores = Vec::with_capacity(val.n_rows());
                    for r in 0..val.n_rows() {
                        let (_, p) = forest.predict_row_with(val.row(r), *n_trees)?;
                        scores.push(p);
                    }
                    if let MetricValue::Defined(a) = roc_auc(&scores, &val.labels)? {
                        sums[idx] += a;
                        counts[idx] += 1;
                    }
                }
            }
            ClassifierId::AdaBoost => {
                let max_t = *cv.boost_rounds_grid.iter().max().expect("non-empty grid");
                for (d_idx, &depth) in cv.boost_depth_grid.iter().enumerate() {
                    let config = BoostConfig {
                        rounds: max_t,
                        depth,
                        seed: seeds::child(fit_seed, d_idx as u64),
                        ..Default::default()
                    };
                    let model = match fit_adaboost(tr.view(), &tr.labels, &config) {
                        Ok(m) => m,
                        Err(Error::Fit(msg)) => {
                            warnings.push(format!(
                                "inner fold {j} depth {depth}: {msg}"
                            ));
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    for (idx, combo) in combo_list.iter().enumerate() {
                        let Combo::Boost { rounds, depth: d } = combo else {
                            unreachable!()
                        };
                        if *d != depth {
                            continue;
                        }
                        let mut scores = Vec::with_capacity(val.n_rows());
                        for r in 0..val.n_rows() {
                            let (_, m) = model.predict_row_with(val.row(r), *rounds)?;
                            scores.push(m);
                        }
                        if let MetricValue::Defined(a) = roc_auc(&scores, &val.labels)? {
                            sums[idx] += a;
                            counts[idx] += 1;
                        }
                    }
                }
            }
        }
    }

    Ok((0..combo_list.len())
        .map(|i| (counts[i] > 0).then(|| sums[i] / counts[i] as f64))
        .collect())
}

/// The index sets a fold's training structures actually consumed, checked
/// against the test fold.
fn hygiene_violations(
    test_idx: &[usize],
    standardizer_fit: &[usize],
    smote_input: &[usize],
    inner_universe: &[usize],
) -> usize {
    use std::collections::BTreeSet;
    let test: BTreeSet<usize> = test_idx.iter().copied().collect();
    standardizer_fit
        .iter()
        .filter(|i| test.contains(i))
        .count()
        + smote_input.iter().filter(|i| test.contains(i)).count()
        + inner_universe.iter().filter(|i| test.contains(i)).count()
}

/// Runs the full nested cross-validation protocol for one classifier.
///
/// Returns a report rather than an error when the task is structurally
/// unevaluable (single-class data, too few rows): grid harnesses record
/// those as reasoned n/a cells.
pub fn nested_cv(
    dataset: &Dataset,
    classifier: ClassifierId,
    cv: &CvConfig,
) -> Result<MetricsReport> {
    cv.validate()?;
    if dataset.standardized {
        return Err(Error::InvalidConfig(
            "nested_cv standardizes inside each fold; pass the raw dataset".into(),
        ));
    }
    let task = Some(dataset.task);
    let n = dataset.n_rows();
    let pos = dataset.positives();
    if pos == 0 {
        return Ok(MetricsReport::unevaluable(
            classifier,
            task,
            "no dropouts".into(),
        ));
    }
    if pos == n {
        return Ok(MetricsReport::unevaluable(
            classifier,
            task,
            "no remaining users".into(),
        ));
    }
    if n < cv.outer_k {
        return Ok(MetricsReport::unevaluable(
            classifier,
            task,
            format!("{n} rows for {} outer folds", cv.outer_k),
        ));
    }

    let plan = kfold_plan(
        n,
        cv.outer_k,
        Some(&dataset.labels),
        seeds::child(cv.seed, seeds::domain::OUTER_PLAN),
    )?;
    let mut report_warnings: Vec<String> = plan.warnings.clone();
    let combo_list = combos(classifier, cv);

    let fold_results: Result<Vec<FoldResult>> = (0..cv.outer_k)
        .into_par_iter()
        .map(|f| run_fold(dataset, classifier, cv, &plan, &combo_list, f))
        .collect();
    let fold_results = fold_results?;

    let mut folds = Vec::with_capacity(cv.outer_k);
    let mut pooled_scores = Vec::new();
    let mut pooled_labels = Vec::new();
    let mut total_confusion = ConfusionMatrix::default();
    let mut hygiene = 0usize;
    let mut importances: Vec<Vec<f64>> = Vec::new();
    for fr in fold_results {
        hygiene += fr.hygiene_violations;
        report_warnings.extend(fr.warnings);
        pooled_scores.extend(fr.scores);
        pooled_labels.extend(fr.labels);
        if let FoldOutcome::Evaluated { confusion, .. } = &fr.outcome {
            total_confusion.add(confusion);
        }
        if let Some(imp) = fr.importance {
            importances.push(imp);
        }
        folds.push(fr.outcome);
    }

    let evaluated: Vec<&FoldOutcome> = folds
        .iter()
        .filter(|f| matches!(f, FoldOutcome::Evaluated { .. }))
        .collect();
    if evaluated.is_empty() {
        let mut report = MetricsReport::unevaluable(
            classifier,
            task,
            "all outer folds skipped".into(),
        );
        report.folds = folds;
        report.warnings = report_warnings;
        report.hygiene_violations = hygiene;
        return Ok(report);
    }

    let pick = |get: &dyn Fn(&FoldOutcome) -> Option<f64>| {
        mean_metric(evaluated.iter().filter_map(|f| get(f)))
    };
    let mean_auroc = pick(&|f| match f {
        FoldOutcome::Evaluated { auroc, .. } => auroc.value(),
        _ => None,
    });
    let mean_f2 = pick(&|f| match f {
        FoldOutcome::Evaluated { f2, .. } => f2.value(),
        _ => None,
    });
    let mean_precision = pick(&|f| match f {
        FoldOutcome::Evaluated { precision, .. } => precision.value(),
        _ => None,
    });
    let mean_recall = pick(&|f| match f {
        FoldOutcome::Evaluated { recall, .. } => recall.value(),
        _ => None,
    });
    let pooled_auroc = roc_auc(&pooled_scores, &pooled_labels)?;

    let mean_column_importance = if importances.is_empty() {
        None
    } else {
        let p = importances[0].len();
        let mut mean = vec![0.0; p];
        for imp in &importances {
            for (m, v) in mean.iter_mut().zip(imp) {
                *m += v;
            }
        }
        let sum: f64 = mean.iter().sum();
        if sum > 0.0 {
            for m in mean.iter_mut() {
                *m *= 100.0 / sum;
            }
        }
        Some(mean)
    };

    Ok(MetricsReport {
        classifier,
        task,
        folds,
        mean_auroc,
        pooled_auroc,
        mean_f2,
        mean_precision,
        mean_recall,
        total_confusion,
        warnings: report_warnings,
        hygiene_violations: hygiene,
        unevaluable: None,
        mean_column_importance,
    })
}

fn run_fold(
    dataset: &Dataset,
    classifier: ClassifierId,
    cv: &CvConfig,
    plan: &crate::resampling::FoldPlan,
    combo_list: &[Combo],
    f: usize,
) -> Result<FoldResult> {
    let mut warnings = Vec::new();
    let test_idx = plan.fold_rows(f);
    let train_idx = plan.complement_rows(f);
    let skipped = |reason: String| FoldResult {
        outcome: FoldOutcome::Skipped { fold: f, reason },
        scores: Vec::new(),
        labels: Vec::new(),
        importance: None,
        warnings: Vec::new(),
        hygiene_violations: 0,
    };

    let test_pos = test_idx.iter().filter(|&&i| dataset.labels[i] == 1).count();
    if test_pos == 0 || test_pos == test_idx.len() {
        return Ok(skipped(format!(
            "test fold lacks a class ({test_pos}/{} positive)",
            test_idx.len()
        )));
    }
    let train_pos = train_idx
        .iter()
        .filter(|&&i| dataset.labels[i] == 1)
        .count();
    if train_pos == 0 || train_pos == train_idx.len() {
        return Ok(skipped("training partition lacks a class".into()));
    }

    // Standardize with training statistics only, then split.
    let standardizer = fit_standardizer(dataset, &train_idx)?;
    let std_full = apply_standardizer(&standardizer, dataset)?;
    let train_raw = std_full.select_rows(&train_idx);
    let test = std_full.select_rows(&test_idx);

    // SMOTE sees outer-training rows only.
    let fold_seed = seeds::child_indexed(cv.seed, seeds::domain::MODEL, f as u64);
    let train = if cv.smote {
        let config = SmoteConfig {
            k_neighbors: cv.smote_neighbors,
            target_ratio: cv.smote_target_ratio,
            seed: seeds::child_indexed(cv.seed, seeds::domain::SMOTE, f as u64),
        };
        match smote_augment(&train_raw, &config) {
            Ok(outcome) => {
                if let Some(notice) = outcome.notice {
                    warnings.push(format!("fold {f} SMOTE: {notice}"));
                }
                outcome.dataset
            }
            Err(e) => {
                warnings.push(format!("fold {f} SMOTE skipped: {e}"));
                train_raw.clone()
            }
        }
    } else {
        train_raw.clone()
    };

    // Inner selection on the (augmented) training partition.
    let inner_scores = eval_inner_grid(classifier, cv, combo_list, &train, fold_seed, &mut warnings)?;
    let mut selected = 0usize;
    let mut best: Option<f64> = None;
    for (idx, score) in inner_scores.iter().enumerate() {
        if let Some(s) = score {
            if best.map_or(true, |b| *s > b) {
                best = Some(*s);
                selected = idx;
            }
        }
    }
    if best.is_none() {
        warnings.push(format!(
            "fold {f}: no combo had an evaluable inner fold; using {}",
            combo_list[0]
        ));
    }
    let combo = combo_list[selected];

    let refit_seed = seeds::child(fold_seed, seeds::domain::REFIT);
    let (scores, classes, importance) =
        fit_and_score(classifier, combo, &train, &test, cv.threshold, refit_seed)?;

    let test_labels: Vec<u8> = test_idx.iter().map(|&i| dataset.labels[i]).collect();
    let cm = confusion(&test_labels, &classes)?;
    let auroc = roc_auc(&scores, &test_labels)?;
    let f2 = f_beta(&cm, 2.0)?;
    let precision = if cm.true_pos + cm.false_pos > 0 {
        MetricValue::Defined(cm.true_pos as f64 / (cm.true_pos + cm.false_pos) as f64)
    } else {
        MetricValue::Undefined("no positive predictions".into())
    };
    let recall = match cm.tpr() {
        Some(v) => MetricValue::Defined(v),
        None => MetricValue::Undefined("no positive labels".into()),
    };

    // The leakage firewall, checked against the index sets actually used:
    // the standardizer fit set, the SMOTE input (the outer-training rows),
    // and the original rows reachable by the inner folds.
    let violations = hygiene_violations(&test_idx, &train_idx, &train_idx, &train_idx);
    // Synthetic rows must never be test rows.
    let synth_in_test = test_idx.iter().filter(|&&i| dataset.synthetic[i]).count();

    Ok(FoldResult {
        outcome: FoldOutcome::Evaluated {
            fold: f,
            auroc,
            f2,
            precision,
            recall,
            confusion: cm,
            selected: combo.to_string(),
        },
        scores,
        labels: test_labels,
        importance,
        warnings,
        hygiene_violations: violations + synth_in_test,
    })
}
