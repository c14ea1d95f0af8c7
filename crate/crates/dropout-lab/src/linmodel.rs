//! Logistic regression with elastic-net regularization.
//!
//! The training objective is the penalized negative log-likelihood
//! `-l(beta) + lambda * J(beta)` where `J` mixes a ridge and a lasso term
//! by `alpha`. Because the L1 part is non-smooth, plain Newton steps are
//! replaced by proximal Newton: each outer iteration forms the IRLS
//! quadratic model of `-l` and solves the penalized subproblem by cyclic
//! coordinate descent with soft-thresholding, with step halving so the
//! objective never increases.
//!
//! `beta[0]` is the intercept, paired with an implicit constant-1 column;
//! it is excluded from the penalty unless `penalize_intercept` is set.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureDescriptor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetConfig {
    /// Penalty weight, >= 0.
    pub lambda: f64,
    /// L1/L2 mixing in [0, 1]: 0 = ridge, 1 = lasso.
    pub alpha: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the max absolute coefficient change.
    pub tolerance: f64,
    pub penalize_intercept: bool,
}

impl Default for ElasticNetConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            alpha: 0.5,
            max_iterations: 100,
            tolerance: 1e-7,
            penalize_intercept: false,
        }
    }
}

impl ElasticNetConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda {} must be >= 0",
                self.lambda
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// A fitted logistic model: `beta[0]` is the intercept, `beta[1..]` pair
/// with the feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub beta: Vec<f64>,
    pub config: ElasticNetConfig,
    /// Column identities captured at fit time (empty for matrix-level use).
    pub descriptors: Vec<FeatureDescriptor>,
}

impl LogisticModel {
    pub fn with_descriptors(mut self, descriptors: Vec<FeatureDescriptor>) -> Self {
        self.descriptors = descriptors;
        self
    }

    pub fn n_features(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Linear predictors are clamped to this magnitude before exponentiation;
/// `exp(700)` is still finite in f64 and the clamp keeps probabilities
/// strictly inside (0, 1).
const LINPRED_CLAMP: f64 = 700.0;

fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LINPRED_CLAMP, LINPRED_CLAMP);
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    // 1/(1 + e^-700) rounds to 1.0 in f64; pin the result into (0, 1).
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `log(1 + e^z)` without overflow.
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Per-row dropout probabilities `1 / (1 + exp(-beta . x))`, overflow-safe
/// for any magnitude of the linear predictor.
pub fn predict_proba(model: &LogisticModel, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if x.ncols() + 1 != model.beta.len() {
        return Err(Error::DimensionMismatch {
            expected: model.beta.len() - 1,
            got: x.ncols(),
        });
    }
    Ok(x.outer_iter()
        .map(|row| {
            let z = model.beta[0]
                + row
                    .iter()
                    .zip(&model.beta[1..])
                    .map(|(xi, bi)| xi * bi)
                    .sum::<f64>();
            sigmoid(z)
        })
        .collect())
}

/// Log-likelihood `sum y log(pi) + (1 - y) log(1 - pi)`, evaluated in the
/// log-sum-exp form `sum y*z - log(1 + e^z)` so it stays finite.
pub fn log_likelihood(beta: &[f64], x: ArrayView2<'_, f64>, y: &[u8]) -> Result<f64> {
    if x.ncols() + 1 != beta.len() {
        return Err(Error::DimensionMismatch {
            expected: beta.len() - 1,
            got: x.ncols(),
        });
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let mut ll = 0.0;
    for (row, &yi) in x.outer_iter().zip(y) {
        let z = beta[0]
            + row
                .iter()
                .zip(&beta[1..])
                .map(|(xi, bi)| xi * bi)
                .sum::<f64>();
        ll += f64::from(yi) * z - log1p_exp(z);
    }
    Ok(ll)
}

/// Gradient of the log-likelihood: `X~' (y - pi)` with the dummy intercept
/// column prepended.
pub fn log_likelihood_gradient(beta: &[f64], x: ArrayView2<'_, f64>, y: &[u8]) -> Result<Vec<f64>> {
    if x.ncols() + 1 != beta.len() {
        return Err(Error::DimensionMismatch {
            expected: beta.len() - 1,
            got: x.ncols(),
        });
    }
    let mut grad = vec![0.0; beta.len()];
    for (row, &yi) in x.outer_iter().zip(y) {
        let z = beta[0]
            + row
                .iter()
                .zip(&beta[1..])
                .map(|(xi, bi)| xi * bi)
                .sum::<f64>();
        let resid = f64::from(yi) - sigmoid(z);
        grad[0] += resid;
        for (g, xi) in grad[1..].iter_mut().zip(row.iter()) {
            *g += resid * xi;
        }
    }
    Ok(grad)
}

/// Elastic-net shrinkage penalty
/// `(1 - alpha) * sum b_k^2 / 2 + alpha * sum |b_k|`, summed over the
/// non-intercept coefficients unless `penalize_intercept`.
pub fn penalty(beta: &[f64], config: &ElasticNetConfig) -> f64 {
    let start = usize::from(!config.penalize_intercept);
    let mut ridge = 0.0;
    let mut lasso = 0.0;
    for &b in &beta[start..] {
        ridge += b * b / 2.0;
        lasso += b.abs();
    }
    (1.0 - config.alpha) * ridge + config.alpha * lasso
}

/// Penalized negative log-likelihood, the training objective.
pub fn pnll(beta: &[f64], x: ArrayView2<'_, f64>, y: &[u8], config: &ElasticNetConfig) -> Result<f64> {
    Ok(-log_likelihood(beta, x, y)? + config.lambda * penalty(beta, config))
}

/// IRLS weights below this floor are lifted to it so the quadratic
/// subproblem stays well-posed at saturated probabilities.
const WEIGHT_FLOOR: f64 = 1e-10;

/// Backtracking makes inexact subproblem solves safe, so the inner loop is
/// capped well below convergence on ill-conditioned (collinear one-hot)
/// designs where exact coordinate descent would crawl.
const MAX_CD_PASSES: usize = 30;

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Fits by proximal Newton from a zero coefficient vector.
pub fn fit_logistic(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    config: &ElasticNetConfig,
) -> Result<LogisticModel> {
    fit_logistic_traced(x, y, config, None).map(|(m, _)| m)
}

/// Fits from `warm_start` when given (the optimum of the convex objective
/// does not depend on it), used by regularization-path sweeps.
pub fn fit_logistic_warm(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    config: &ElasticNetConfig,
    warm_start: &[f64],
) -> Result<LogisticModel> {
    fit_logistic_traced(x, y, config, Some(warm_start)).map(|(m, _)| m)
}

/// As [`fit_logistic`], also returning the objective value after each
/// accepted outer iteration.
pub fn fit_logistic_traced(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    config: &ElasticNetConfig,
    warm_start: Option<&[f64]>,
) -> Result<(LogisticModel, Vec<f64>)> {
    config.validate()?;
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value in the design matrix".into()));
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == n {
        return Err(Error::InvalidData(
            "logistic fit needs at least one row of each class".into(),
        ));
    }

    let mut beta = match warm_start {
        Some(b) if b.len() == p + 1 => b.to_vec(),
        Some(b) => {
            return Err(Error::DimensionMismatch {
                expected: p + 1,
                got: b.len(),
            })
        }
        None => vec![0.0; p + 1],
    };

    let rows: Vec<&[f64]> = (0..n)
        .map(|i| {
            x.row(i)
                .to_slice()
                .expect("design matrices are contiguous row-major")
        })
        .collect();

    let eta_of = |beta: &[f64]| -> Vec<f64> {
        rows.iter()
            .map(|row| {
                beta[0]
                    + row
                        .iter()
                        .zip(&beta[1..])
                        .map(|(xi, bi)| xi * bi)
                        .sum::<f64>()
            })
            .collect()
    };

    let mut current = pnll(&beta, x, y, config)?;
    let mut trace = vec![current];
    let mut weights = vec![0.0; n];
    let mut working = vec![0.0; n];
    let mut residual = vec![0.0; n];
    let mut denom = vec![0.0; p + 1];

    for _outer in 0..config.max_iterations {
        let eta = eta_of(&beta);
        for i in 0..n {
            let pi = sigmoid(eta[i]);
            let w = (pi * (1.0 - pi)).max(WEIGHT_FLOOR);
            weights[i] = w;
            working[i] = eta[i] + (f64::from(y[i]) - pi) / w;
        }

        // Quadratic subproblem by cyclic coordinate descent, warm-started
        // at the current coefficients.
        let mut b = beta.clone();
        for i in 0..n {
            residual[i] = working[i] - eta[i];
        }
        denom[0] = weights.iter().sum();
        for k in 1..=p {
            denom[k] = rows
                .iter()
                .zip(&weights)
                .map(|(row, &w)| w * row[k - 1] * row[k - 1])
                .sum();
        }
        let l1 = config.lambda * config.alpha;
        let l2 = config.lambda * (1.0 - config.alpha);
        for _pass in 0..MAX_CD_PASSES {
            let mut max_step = 0.0f64;
            for k in 0..=p {
                if denom[k] == 0.0 {
                    continue;
                }
                let old = b[k];
                let num: f64 = if k == 0 {
                    residual
                        .iter()
                        .zip(&weights)
                        .map(|(&r, &w)| w * r)
                        .sum::<f64>()
                        + denom[0] * old
                } else {
                    rows.iter()
                        .zip(&weights)
                        .zip(&residual)
                        .map(|((row, &w), &r)| w * row[k - 1] * r)
                        .sum::<f64>()
                        + denom[k] * old
                };
                let penalized = k > 0 || config.penalize_intercept;
                let new = if penalized {
                    soft_threshold(num, l1) / (denom[k] + l2)
                } else {
                    num / denom[k]
                };
                let step = new - old;
                if step != 0.0 {
                    b[k] = new;
                    if k == 0 {
                        for r in residual.iter_mut() {
                            *r -= step;
                        }
                    } else {
                        for (r, row) in residual.iter_mut().zip(&rows) {
                            *r -= step * row[k - 1];
                        }
                    }
                    max_step = max_step.max(step.abs());
                }
            }
            if max_step < config.tolerance.max(1e-9) {
                break;
            }
        }

        // Step halving keeps the objective non-increasing.
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-12 {
            let candidate: Vec<f64> = beta
                .iter()
                .zip(&b)
                .map(|(&old, &new)| old + step * (new - old))
                .collect();
            let value = pnll(&candidate, x, y, config)?;
            if value <= current + 1e-10 {
                accepted = Some((candidate, value));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, value)) = accepted else {
            break; // no descent direction left at this precision
        };

        let delta = beta
            .iter()
            .zip(&candidate)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        beta = candidate;
        current = value;
        trace.push(current);
        if delta < config.tolerance {
            break;
        }
    }

    Ok((
        LogisticModel {
            beta,
            config: config.clone(),
            descriptors: Vec::new(),
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use ndarray::{arr2, Array2};
    use rand::Rng;

    fn model(beta: &[f64]) -> LogisticModel {
        LogisticModel {
            beta: beta.to_vec(),
            config: ElasticNetConfig::default(),
            descriptors: Vec::new(),
        }
    }

    #[test]
    fn logistic_midpoint() {
        let m = model(&[0.0, 1.0]);
        let x = arr2(&[[0.0]]);
        assert_eq!(predict_proba(&m, x.view()).unwrap()[0], 0.5);
    }

    #[test]
    fn ln3_gives_three_quarters() {
        let m = model(&[0.0, 1.0]);
        let x = arr2(&[[3.0f64.ln()]]);
        let p = predict_proba(&m, x.view()).unwrap()[0];
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn saturated_predictor_stays_in_open_interval() {
        let m = model(&[0.0, 1.0]);
        let x = arr2(&[[-1000.0], [1000.0]]);
        let p = predict_proba(&m, x.view()).unwrap();
        assert!(p[0] > 0.0 && p[0] <= 1e-300, "{}", p[0]);
        assert!(p[1] < 1.0 && p[1] > 0.9999, "{}", p[1]);
        assert!(!p[0].is_nan() && !p[1].is_nan());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = model(&[0.0, 1.0]);
        let x = arr2(&[[1.0, 2.0]]);
        assert!(predict_proba(&m, x.view()).is_err());
    }

    #[test]
    fn zero_beta_likelihood_is_n_log_half() {
        let x = arr2(&[[1.0], [2.0], [3.0], [4.0]]);
        let y = [0, 1, 0, 1];
        let ll = log_likelihood(&[0.0, 0.0], x.view(), &y).unwrap();
        assert!((ll - 4.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_point_likelihood_matches_probability() {
        let x = arr2(&[[3.0f64.ln()]]);
        let ll = log_likelihood(&[0.0, 1.0], x.view(), &[1]).unwrap();
        assert!((ll - 0.75f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_dataset_likelihood_is_zero() {
        let x = Array2::<f64>::zeros((0, 1));
        assert_eq!(log_likelihood(&[0.5, 1.0], x.view(), &[]).unwrap(), 0.0);
    }

    #[test]
    fn penalty_examples() {
        let beta = [9.0, 3.0]; // intercept 9 excluded by default
        let cfg = |alpha: f64| ElasticNetConfig {
            alpha,
            ..Default::default()
        };
        assert_eq!(penalty(&beta, &cfg(1.0)), 3.0);
        assert_eq!(penalty(&beta, &cfg(0.0)), 4.5);
        assert_eq!(penalty(&beta, &cfg(0.5)), 3.75);
        let literal = ElasticNetConfig {
            alpha: 1.0,
            penalize_intercept: true,
            ..Default::default()
        };
        assert_eq!(penalty(&beta, &literal), 12.0);
    }

    #[test]
    fn mle_calibrates_to_prevalence() {
        // Overlapping 1-D data, 3 positives out of 8.
        let x = arr2(&[
            [0.1],
            [0.4],
            [0.6],
            [0.9],
            [0.2],
            [0.5],
            [0.7],
            [0.3],
        ]);
        let y = [0, 0, 1, 1, 0, 1, 0, 0];
        let config = ElasticNetConfig {
            tolerance: 1e-10,
            max_iterations: 200,
            ..Default::default()
        };
        let m = fit_logistic(x.view(), &y, &config).unwrap();
        let mean: f64 =
            predict_proba(&m, x.view()).unwrap().iter().sum::<f64>() / y.len() as f64;
        assert!((mean - 3.0 / 8.0).abs() < 1e-6, "mean {mean}");
    }

    #[test]
    fn huge_lasso_zeroes_every_coefficient() {
        let x = random_design(60, 4, 3);
        let y: Vec<u8> = (0..60).map(|i| u8::from(i % 2 == 0)).collect();
        let config = ElasticNetConfig {
            lambda: 1e6,
            alpha: 1.0,
            ..Default::default()
        };
        let m = fit_logistic(x.view(), &y, &config).unwrap();
        for &b in &m.beta[1..] {
            assert!(b.abs() < 1e-8, "{b}");
        }
    }

    #[test]
    fn recovers_known_coefficients() {
        let mut rng = seeds::rng(31);
        let n = 50_000;
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let a: f64 = rng.gen::<f64>() * 2.0 - 1.0;
            let b: f64 = rng.gen::<f64>() * 2.0 - 1.0;
            x[(i, 0)] = a;
            x[(i, 1)] = b;
            let p = 1.0 / (1.0 + (-(2.0 * a - b)).exp());
            y.push(u8::from(rng.gen::<f64>() < p));
        }
        let m = fit_logistic(x.view(), &y, &ElasticNetConfig::default()).unwrap();
        assert!(m.beta[0].abs() < 0.1, "intercept {}", m.beta[0]);
        assert!((m.beta[1] - 2.0).abs() < 0.1, "b1 {}", m.beta[1]);
        assert!((m.beta[2] + 1.0).abs() < 0.1, "b2 {}", m.beta[2]);
    }

    fn random_design(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = seeds::rng(seed);
        Array2::from_shape_fn((n, p), |_| rng.gen::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = seeds::rng(17);
        for _ in 0..10 {
            let n = 5 + rng.gen_range(0..26);
            let p = 1 + rng.gen_range(0..10);
            let x = random_design(n, p, rng.gen());
            let y: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<f64>() < 0.5)).collect();
            let beta: Vec<f64> = (0..=p).map(|_| rng.gen::<f64>() - 0.5).collect();
            let grad = log_likelihood_gradient(&beta, x.view(), &y).unwrap();
            let h = 1e-5;
            for k in 0..=p {
                let mut up = beta.clone();
                let mut dn = beta.clone();
                up[k] += h;
                dn[k] -= h;
                let fd = (log_likelihood(&up, x.view(), &y).unwrap()
                    - log_likelihood(&dn, x.view(), &y).unwrap())
                    / (2.0 * h);
                let denom = grad[k].abs().max(1.0);
                assert!(
                    (grad[k] - fd).abs() / denom < 1e-6,
                    "coordinate {k}: analytic {} vs fd {fd}",
                    grad[k]
                );
            }
        }
    }

    #[test]
    fn objective_never_increases() {
        let x = random_design(80, 5, 23);
        let y: Vec<u8> = (0..80).map(|i| u8::from((i * 13) % 7 < 3)).collect();
        for (lambda, alpha) in [(0.0, 0.5), (0.5, 1.0), (2.0, 0.3)] {
            let config = ElasticNetConfig {
                lambda,
                alpha,
                ..Default::default()
            };
            let (_, trace) = fit_logistic_traced(x.view(), &y, &config, None).unwrap();
            for pair in trace.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-10,
                    "objective rose from {} to {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn lasso_path_shrinks_monotonically() {
        let x = random_design(100, 6, 29);
        let y: Vec<u8> = (0..100).map(|i| u8::from((i * 7) % 10 < 4)).collect();
        let mut last = f64::INFINITY;
        for i in 0..10 {
            let lambda = 10f64.powf(-3.0 + 4.0 * i as f64 / 9.0);
            let config = ElasticNetConfig {
                lambda,
                alpha: 1.0,
                ..Default::default()
            };
            let m = fit_logistic(x.view(), &y, &config).unwrap();
            let l1: f64 = m.beta[1..].iter().map(|b| b.abs()).sum();
            assert!(
                l1 <= last + 1e-8,
                "L1 norm rose to {l1} at lambda {lambda}"
            );
            last = l1;
        }
    }

    #[test]
    fn scaling_a_column_rescales_its_coefficient() {
        let x = random_design(120, 3, 41);
        let y: Vec<u8> = (0..120).map(|i| u8::from((i * 11) % 9 < 4)).collect();
        let config = ElasticNetConfig {
            tolerance: 1e-10,
            max_iterations: 300,
            ..Default::default()
        };
        let base = fit_logistic(x.view(), &y, &config).unwrap();
        let mut scaled = x.clone();
        for v in scaled.column_mut(1) {
            *v *= 4.0;
        }
        let refit = fit_logistic(scaled.view(), &y, &config).unwrap();
        assert!((refit.beta[2] - base.beta[2] / 4.0).abs() < 1e-6);
        let p0 = predict_proba(&base, x.view()).unwrap();
        let p1 = predict_proba(&refit, scaled.view()).unwrap();
        for (a, b) in p0.iter().zip(&p1) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = arr2(&[[f64::NAN], [1.0]]);
        assert!(fit_logistic(x.view(), &[0, 1], &ElasticNetConfig::default()).is_err());
        let x = arr2(&[[1.0], [2.0]]);
        assert!(fit_logistic(x.view(), &[1, 1], &ElasticNetConfig::default()).is_err());
    }

    #[test]
    fn model_json_round_trips_exactly() {
        let x = random_design(50, 3, 55);
        let y: Vec<u8> = (0..50).map(|i| u8::from(i % 3 == 0)).collect();
        let m = fit_logistic(x.view(), &y, &ElasticNetConfig::default()).unwrap();
        let back = LogisticModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m.beta, back.beta);
    }
}
