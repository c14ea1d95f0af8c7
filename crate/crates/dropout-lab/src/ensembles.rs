//! Random forests (bagging with mode aggregation) and AdaBoost (weighted
//! resampling or reweighting), sharing the CART weak learner, plus
//! impurity-based importance extraction.

use ndarray::ArrayView2;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resampling::bootstrap_indices;
use crate::seeds;
use crate::trees::{grow_tree, FitMatrix, Tree, TreeConfig};

fn check_both_classes(y: &[u8]) -> Result<()> {
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::InvalidData(
            "training labels contain a single class".into(),
        ));
    }
    Ok(())
}

/// Number of split candidates per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mtry {
    /// `ceil(sqrt(p))`, the forest default.
    Sqrt,
    All,
    Fixed(usize),
}

impl Mtry {
    pub fn resolve(&self, p: usize) -> usize {
        match self {
            Mtry::Sqrt => (p as f64).sqrt().ceil() as usize,
            Mtry::All => p,
            Mtry::Fixed(m) => (*m).clamp(1, p),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestConfig {
    /// Number of bootstrap trees B.
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub mtry: Mtry,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 500,
            max_depth: None,
            min_samples_leaf: 1,
            mtry: Mtry::Sqrt,
            seed: 0,
        }
    }
}

/// A bagged ensemble of unpruned trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<Tree>,
    n_features: usize,
}

impl Forest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[cfg(test)]
    pub(crate) fn from_trees(trees: Vec<Tree>, n_features: usize) -> Self {
        Self { trees, n_features }
    }

    /// Majority vote over the first `b` trees: (class, fraction voting 1).
    /// Exact ties resolve to class 1, the costlier miss.
    pub fn predict_row_with(&self, row: &[f64], b: usize) -> Result<(u8, f64)> {
        let b = b.min(self.trees.len());
        let mut votes = 0usize;
        for tree in &self.trees[..b] {
            let (class, _) = tree.predict_row(row)?;
            votes += class as usize;
        }
        let prob = votes as f64 / b as f64;
        Ok((u8::from(2 * votes >= b), prob))
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<(u8, f64)> {
        self.predict_row_with(row, self.trees.len())
    }

    /// Classes and vote fractions for every row of `x`.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<(Vec<u8>, Vec<f64>)> {
        let mut classes = Vec::with_capacity(x.nrows());
        let mut probs = Vec::with_capacity(x.nrows());
        for row in x.outer_iter() {
            let slice = row.as_slice().ok_or_else(|| {
                Error::InvalidData("prediction matrix must be contiguous".into())
            })?;
            let (c, p) = self.predict_row(slice)?;
            classes.push(c);
            probs.push(p);
        }
        Ok((classes, probs))
    }

    /// Column importance: summed split impurity decreases over all trees,
    /// normalized to sum 100. All-leaf forests return zeros.
    pub fn impurity_importance(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.n_features];
        for tree in &self.trees {
            for (c, d) in tree.feature_decrease().iter().enumerate() {
                total[c] += d;
            }
        }
        normalize_to_100(&mut total);
        total
    }
}

fn normalize_to_100(values: &mut [f64]) {
    let sum: f64 = values.iter().sum();
    if sum > 0.0 {
        for v in values.iter_mut() {
            *v *= 100.0 / sum;
        }
    }
}

/// Grows `B` unpruned trees on bootstrap resamples.
///
/// Tree `b` derives its bootstrap and split streams from `(seed, b)`, so
/// the forest is identical regardless of construction order or thread
/// count. Bootstrap multisets enter the trees as integer instance weights.
pub fn fit_forest(x: ArrayView2<'_, f64>, y: &[u8], config: &ForestConfig) -> Result<Forest> {
    if config.n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
    }
    check_both_classes(y)?;
    let fit = FitMatrix::from_dense(x, y)?;
    let tree_config = TreeConfig::new(
        config.max_depth,
        config.min_samples_leaf,
        config.mtry.resolve(fit.n_features()),
    );

    let trees: Result<Vec<Tree>> = (0..config.n_trees)
        .into_par_iter()
        .map(|b| {
            let boot_seed = seeds::child_indexed(config.seed, seeds::domain::TREE, b as u64);
            let indices = bootstrap_indices(fit.n_rows(), boot_seed)?;
            let mut weights = vec![0.0; fit.n_rows()];
            for i in indices {
                weights[i] += 1.0;
            }
            let rows: Vec<u32> = (0..fit.n_rows() as u32)
                .filter(|&r| weights[r as usize] > 0.0)
                .collect();
            let mut rng = seeds::rng(seeds::child(boot_seed, seeds::domain::MODEL));
            grow_tree(&fit, &rows, &weights, &tree_config, &mut rng)
        })
        .collect();

    Ok(Forest {
        trees: trees?,
        n_features: fit.n_features(),
    })
}

/// Form of the per-round vote weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaForm {
    /// `0.5 * ln((1 - eps) / eps)`.
    Log,
    /// `0.5 * (1 - eps) / eps`, the update as printed in the source
    /// derivation (no logarithm).
    PaperLiteral,
}

/// Round weight for a weak-learner error.
pub fn alpha_from_error(epsilon: f64, form: AlphaForm) -> f64 {
    let ratio = (1.0 - epsilon) / epsilon;
    match form {
        AlphaForm::Log => 0.5 * ratio.ln(),
        AlphaForm::PaperLiteral => 0.5 * ratio,
    }
}

/// How each round's weak learner sees the weighted training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostVariant {
    /// Draw N instances with replacement proportional to W.
    Resample,
    /// Pass W to the tree as instance weights directly.
    Reweight,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostConfig {
    /// Number of boosting rounds T.
    pub rounds: usize,
    /// Weak-learner depth; stumps by default.
    pub depth: usize,
    pub alpha_form: AlphaForm,
    pub variant: BoostVariant,
    pub epsilon_floor: f64,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            rounds: 200,
            depth: 1,
            alpha_form: AlphaForm::Log,
            variant: BoostVariant::Resample,
            epsilon_floor: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub tree: Tree,
    pub alpha: f64,
    /// Weighted error on the full training set.
    pub epsilon: f64,
}

/// A boosted ensemble voting with per-round weights; labels are {-1, +1}
/// internally, mapped from {0, 1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    rounds: Vec<BoostRound>,
    n_features: usize,
}

impl BoostModel {
    pub fn rounds(&self) -> &[BoostRound] {
        &self.rounds
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[cfg(test)]
    pub(crate) fn from_rounds(rounds: Vec<BoostRound>, n_features: usize) -> Self {
        Self { rounds, n_features }
    }

    /// Weighted-vote margin over the first `t` rounds; class 1 wins ties.
    pub fn predict_row_with(&self, row: &[f64], t: usize) -> Result<(u8, f64)> {
        let t = t.min(self.rounds.len());
        let mut margin = 0.0;
        for round in &self.rounds[..t] {
            let (class, _) = round.tree.predict_row(row)?;
            let h = if class == 1 { 1.0 } else { -1.0 };
            margin += round.alpha * h;
        }
        Ok((u8::from(margin >= 0.0), margin))
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<(u8, f64)> {
        self.predict_row_with(row, self.rounds.len())
    }

    /// Classes and margins for every row of `x`.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<(Vec<u8>, Vec<f64>)> {
        let mut classes = Vec::with_capacity(x.nrows());
        let mut margins = Vec::with_capacity(x.nrows());
        for row in x.outer_iter() {
            let slice = row.as_slice().ok_or_else(|| {
                Error::InvalidData("prediction matrix must be contiguous".into())
            })?;
            let (c, m) = self.predict_row(slice)?;
            classes.push(c);
            margins.push(m);
        }
        Ok((classes, margins))
    }

    /// Column importance: per-round split impurity decreases weighted by
    /// alpha, normalized to sum 100.
    pub fn impurity_importance(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.n_features];
        for round in &self.rounds {
            for (c, d) in round.tree.feature_decrease().iter().enumerate() {
                total[c] += round.alpha * d;
            }
        }
        normalize_to_100(&mut total);
        total
    }
}

fn weighted_sample(weights: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand::Rng;
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in weights {
        acc += w;
        cumulative.push(acc);
    }
    let total = acc;
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * total;
            match cumulative.binary_search_by(|c| c.total_cmp(&u)) {
                Ok(i) => (i + 1).min(weights.len() - 1),
                Err(i) => i.min(weights.len() - 1),
            }
        })
        .collect()
}

/// Trains AdaBoost as printed in the source derivation: weights start
/// uniform, each round's error is the W-weighted misclassification mass on
/// the full training set, misclassified weights are multiplied by
/// `e^alpha`, and W is renormalized to a distribution.
///
/// A round whose error reaches 0.5 is discarded and redrawn once (resample
/// variant); a second failure stops training early. Errors below the floor
/// are clamped.
pub fn fit_adaboost(x: ArrayView2<'_, f64>, y: &[u8], config: &BoostConfig) -> Result<BoostModel> {
    fit_adaboost_traced(x, y, config, &mut |_| {})
}

/// As [`fit_adaboost`], invoking `on_weights` with the weight vector after
/// every completed round (test hook for the distribution invariant).
pub fn fit_adaboost_traced(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    config: &BoostConfig,
    on_weights: &mut dyn FnMut(&[f64]),
) -> Result<BoostModel> {
    if config.rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be >= 1".into()));
    }
    if config.depth == 0 {
        return Err(Error::InvalidConfig("depth must be >= 1".into()));
    }
    check_both_classes(y)?;
    let fit = FitMatrix::from_dense(x, y)?;
    let n = fit.n_rows();
    let p = fit.n_features();
    let tree_config = TreeConfig::new(Some(config.depth), 1, p);
    let all_rows: Vec<u32> = fit.all_rows();

    let mut w = vec![1.0 / n as f64; n];
    let mut rounds: Vec<BoostRound> = Vec::with_capacity(config.rounds);

    'outer: for t in 0..config.rounds {
        let round_seed = seeds::child_indexed(config.seed, seeds::domain::ROUND, t as u64);
        let mut chosen: Option<(Tree, Vec<u8>, f64)> = None;
        for attempt in 0..2u64 {
            let mut rng = seeds::rng(seeds::child(round_seed, attempt));
            let tree = match config.variant {
                BoostVariant::Resample => {
                    let draws = weighted_sample(&w, n, &mut rng);
                    let mut counts = vec![0.0; n];
                    for i in draws {
                        counts[i] += 1.0;
                    }
                    let rows: Vec<u32> = (0..n as u32)
                        .filter(|&r| counts[r as usize] > 0.0)
                        .collect();
                    grow_tree(&fit, &rows, &counts, &tree_config, &mut rng)?
                }
                BoostVariant::Reweight => {
                    grow_tree(&fit, &all_rows, &w, &tree_config, &mut rng)?
                }
            };
            let mut predictions = Vec::with_capacity(n);
            let mut epsilon = 0.0;
            for i in 0..n {
                let (class, _) = tree.predict_row(fit_row(&x, i))?;
                if class != y[i] {
                    epsilon += w[i];
                }
                predictions.push(class);
            }
            if epsilon < 0.5 {
                chosen = Some((tree, predictions, epsilon));
                break;
            }
            // A reweight retry would regrow the identical tree.
            if config.variant == BoostVariant::Reweight {
                break;
            }
        }
        let Some((tree, predictions, epsilon)) = chosen else {
            break 'outer;
        };
        let epsilon = epsilon.max(config.epsilon_floor);
        let alpha = alpha_from_error(epsilon, config.alpha_form);

        let factor = alpha.exp();
        let mut sum = 0.0;
        for i in 0..n {
            if predictions[i] != y[i] {
                w[i] *= factor;
            }
            sum += w[i];
        }
        for wi in w.iter_mut() {
            *wi /= sum;
        }
        on_weights(&w);

        rounds.push(BoostRound {
            tree,
            alpha,
            epsilon,
        });
    }

    if rounds.is_empty() {
        return Err(Error::Fit(
            "AdaBoost produced no usable rounds: every weak learner had error >= 0.5".into(),
        ));
    }
    Ok(BoostModel {
        rounds,
        n_features: p,
    })
}

fn fit_row<'a>(x: &'a ArrayView2<'_, f64>, i: usize) -> &'a [f64] {
    let p = x.ncols();
    let slice = x.to_slice();
    match slice {
        Some(s) => &s[i * p..(i + 1) * p],
        None => unreachable!("training matrices are contiguous row-major"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use crate::trees::FitMatrix;
    use ndarray::{arr2, Array2};
    use rand::Rng;

    fn blobs(n_per: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = seeds::rng(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n_per {
            rows.push([rng.gen::<f64>(), rng.gen::<f64>()]);
            y.push(0u8);
        }
        for _ in 0..n_per {
            rows.push([rng.gen::<f64>() + 3.0, rng.gen::<f64>() + 3.0]);
            y.push(1u8);
        }
        let x = Array2::from_shape_fn((rows.len(), 2), |(i, j)| rows[i][j]);
        (x, y)
    }

    fn leaf_tree(class: u8) -> Tree {
        // A pure single-leaf tree fabricated through a degenerate fit.
        let x = arr2(&[[0.0], [1.0]]);
        let y = [class, class];
        let fit = FitMatrix::from_dense(x.view(), &y).unwrap();
        grow_tree(
            &fit,
            &fit.all_rows(),
            &[1.0, 1.0],
            &TreeConfig::new(None, 1, 1),
            &mut seeds::rng(0),
        )
        .unwrap()
    }

    #[test]
    fn single_tree_forest_matches_its_tree() {
        let (x, y) = blobs(30, 1);
        let config = ForestConfig {
            n_trees: 1,
            seed: 5,
            ..Default::default()
        };
        let forest = fit_forest(x.view(), &y, &config).unwrap();
        for row in x.outer_iter() {
            let row = row.as_slice().unwrap();
            let (fc, fp) = forest.predict_row(row).unwrap();
            let (tc, _) = forest.trees()[0].predict_row(row).unwrap();
            assert_eq!(fc, tc);
            assert!(fp == 0.0 || fp == 1.0);
        }
    }

    #[test]
    fn separable_blobs_reach_perfect_training_accuracy() {
        let (x, y) = blobs(40, 2);
        let config = ForestConfig {
            n_trees: 50,
            seed: 9,
            ..Default::default()
        };
        let forest = fit_forest(x.view(), &y, &config).unwrap();
        let (classes, _) = forest.predict(x.view()).unwrap();
        assert_eq!(classes, y);
    }

    #[test]
    fn forest_is_deterministic_per_seed() {
        let (x, y) = blobs(25, 3);
        let config = ForestConfig {
            n_trees: 20,
            seed: 42,
            ..Default::default()
        };
        let a = fit_forest(x.view(), &y, &config).unwrap();
        let b = fit_forest(x.view(), &y, &config).unwrap();
        assert_eq!(a, b);
        let (probe, _) = blobs(10, 77);
        assert_eq!(a.predict(probe.view()).unwrap(), b.predict(probe.view()).unwrap());
    }

    #[test]
    fn forest_rejects_single_class() {
        let (x, _) = blobs(10, 4);
        let y = vec![1u8; 20];
        assert!(fit_forest(x.view(), &y, &ForestConfig::default()).is_err());
    }

    #[test]
    fn vote_fractions_and_tie_rule() {
        let trees = vec![leaf_tree(1), leaf_tree(1), leaf_tree(0)];
        let forest = Forest::from_trees(trees, 1);
        let (class, prob) = forest.predict_row(&[0.5]).unwrap();
        assert_eq!(class, 1);
        assert!((prob - 2.0 / 3.0).abs() < 1e-15);

        let trees = vec![leaf_tree(1), leaf_tree(1), leaf_tree(0), leaf_tree(0)];
        let forest = Forest::from_trees(trees, 1);
        let (class, prob) = forest.predict_row(&[0.5]).unwrap();
        assert_eq!(class, 1, "even split resolves to dropout");
        assert_eq!(prob, 0.5);
    }

    #[test]
    fn agreeing_tree_never_flips_majority() {
        for votes1 in 0..6usize {
            for votes0 in 0..6usize {
                if votes1 + votes0 == 0 {
                    continue;
                }
                let mut trees: Vec<Tree> = Vec::new();
                trees.extend((0..votes1).map(|_| leaf_tree(1)));
                trees.extend((0..votes0).map(|_| leaf_tree(0)));
                let forest = Forest::from_trees(trees.clone(), 1);
                let (class, _) = forest.predict_row(&[0.0]).unwrap();
                trees.push(leaf_tree(class));
                let bigger = Forest::from_trees(trees, 1);
                let (class2, _) = bigger.predict_row(&[0.0]).unwrap();
                assert_eq!(class, class2, "{votes1}+1 vs {votes0}");
            }
        }
    }

    #[test]
    fn alpha_values_match_hand_arithmetic() {
        assert_eq!(alpha_from_error(0.5, AlphaForm::Log), 0.0);
        assert!((alpha_from_error(0.2, AlphaForm::Log) - 0.5 * 4.0f64.ln()).abs() < 1e-15);
        assert_eq!(alpha_from_error(0.2, AlphaForm::PaperLiteral), 2.0);
    }

    #[test]
    fn boost_margins_and_tie_rule() {
        let rounds = vec![
            BoostRound {
                tree: leaf_tree(1),
                alpha: 2.0,
                epsilon: 0.1,
            },
            BoostRound {
                tree: leaf_tree(0),
                alpha: 1.0,
                epsilon: 0.2,
            },
        ];
        let model = BoostModel::from_rounds(rounds, 1);
        let (class, margin) = model.predict_row(&[0.0]).unwrap();
        assert_eq!(class, 1);
        assert!((margin - 1.0).abs() < 1e-15);

        let rounds = vec![
            BoostRound {
                tree: leaf_tree(1),
                alpha: 1.0,
                epsilon: 0.2,
            },
            BoostRound {
                tree: leaf_tree(0),
                alpha: 1.0,
                epsilon: 0.2,
            },
        ];
        let model = BoostModel::from_rounds(rounds, 1);
        let (class, margin) = model.predict_row(&[0.0]).unwrap();
        assert_eq!(margin, 0.0);
        assert_eq!(class, 1, "zero margin resolves to dropout");
    }

    #[test]
    fn single_round_model_follows_its_learner() {
        let (x, y) = blobs(20, 6);
        let config = BoostConfig {
            rounds: 1,
            seed: 3,
            ..Default::default()
        };
        let model = fit_adaboost(x.view(), &y, &config).unwrap();
        assert_eq!(model.rounds().len(), 1);
        for row in x.outer_iter() {
            let row = row.as_slice().unwrap();
            let (mc, _) = model.predict_row(row).unwrap();
            let (tc, _) = model.rounds()[0].tree.predict_row(row).unwrap();
            assert_eq!(mc, tc);
        }
    }

    #[test]
    fn weights_remain_a_distribution() {
        let (x, y) = noisy_diagonal(60, 8);
        let config = BoostConfig {
            rounds: 25,
            variant: BoostVariant::Reweight,
            seed: 1,
            ..Default::default()
        };
        let mut checks = 0usize;
        fit_adaboost_traced(x.view(), &y, &config, &mut |w| {
            let sum: f64 = w.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "sum {sum}");
            assert!(w.iter().all(|&v| v > 0.0));
            checks += 1;
        })
        .unwrap();
        assert!(checks > 0);
    }

    fn noisy_diagonal(n: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = seeds::rng(seed);
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let a: f64 = rng.gen::<f64>() * 2.0 - 1.0;
            let b: f64 = rng.gen::<f64>() * 2.0 - 1.0;
            x[(i, 0)] = a;
            x[(i, 1)] = b;
            // Separable by the diagonal with a margin; no stump separates it.
            y.push(u8::from(a + b + 0.1 * (a - b).signum() > 0.0));
        }
        (x, y)
    }

    #[test]
    fn exponential_training_error_bound_on_separable_data() {
        let (x, y) = noisy_diagonal(80, 12);
        let config = BoostConfig {
            rounds: 50,
            variant: BoostVariant::Reweight,
            alpha_form: AlphaForm::Log,
            seed: 2,
            ..Default::default()
        };
        let model = fit_adaboost(x.view(), &y, &config).unwrap();
        let bound: f64 = model
            .rounds()
            .iter()
            .map(|r| 2.0 * (r.epsilon * (1.0 - r.epsilon)).sqrt())
            .product();
        let (classes, _) = model.predict(x.view()).unwrap();
        let err = classes
            .iter()
            .zip(&y)
            .filter(|(c, y)| c != y)
            .count() as f64
            / y.len() as f64;
        assert!(
            err <= bound + 1e-12,
            "training error {err} above bound {bound}"
        );
    }

    #[test]
    fn deterministic_boosting() {
        let (x, y) = blobs(30, 9);
        let config = BoostConfig {
            rounds: 10,
            seed: 11,
            ..Default::default()
        };
        let a = fit_adaboost(x.view(), &y, &config).unwrap();
        let b = fit_adaboost(x.view(), &y, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stump_importance_lands_on_split_column() {
        let x = arr2(&[
            [0.0, 1.0, 9.0],
            [0.0, 2.0, 8.0],
            [0.0, 1.0, 1.0],
            [0.0, 2.0, 2.0],
        ]);
        let y = [0, 0, 1, 1];
        let fit = FitMatrix::from_dense(x.view(), &y).unwrap();
        let tree = grow_tree(
            &fit,
            &fit.all_rows(),
            &[1.0; 4],
            &TreeConfig::new(Some(1), 1, 3),
            &mut seeds::rng(0),
        )
        .unwrap();
        let model = BoostModel::from_rounds(
            vec![BoostRound {
                tree,
                alpha: 1.0,
                epsilon: 0.1,
            }],
            3,
        );
        let ri = model.impurity_importance();
        assert_eq!(ri[2], 100.0);
        assert_eq!(ri[0] + ri[1], 0.0);
    }

    #[test]
    fn importance_sums_to_100() {
        let (x, y) = blobs(30, 10);
        let forest = fit_forest(
            x.view(),
            &y,
            &ForestConfig {
                n_trees: 25,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let sum: f64 = forest.impurity_importance().iter().sum();
        assert!((sum - 100.0).abs() < 1e-9);

        let model = fit_adaboost(
            x.view(),
            &y,
            &BoostConfig {
                rounds: 10,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let sum: f64 = model.impurity_importance().iter().sum();
        assert!((sum - 100.0).abs() < 1e-9);
    }

    #[test]
    fn pure_noise_importance_is_spread_out() {
        let mut worst_ratio: f64 = 0.0;
        for seed in 0..10u64 {
            let mut rng = seeds::rng(1000 + seed);
            let x = Array2::from_shape_fn((60, 6), |_| rng.gen::<f64>());
            let y: Vec<u8> = (0..60).map(|_| u8::from(rng.gen::<f64>() < 0.5)).collect();
            let forest = fit_forest(
                x.view(),
                &y,
                &ForestConfig {
                    n_trees: 30,
                    seed,
                    ..Default::default()
                },
            )
            .unwrap();
            let ri = forest.impurity_importance();
            let mean = 100.0 / 6.0;
            let max = ri.iter().fold(0.0f64, |a, &b| a.max(b));
            worst_ratio = worst_ratio.max(max / mean);
        }
        assert!(
            worst_ratio < 3.0,
            "a noise column dominated: {worst_ratio:.2}x the mean"
        );
    }
}
