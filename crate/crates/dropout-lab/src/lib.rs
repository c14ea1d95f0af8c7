//! Temporal dropout prediction for online courses.
//!
//! This crate turns raw course event logs (or a calibrated synthetic cohort)
//! into week-indexed feature matrices, trains three classifiers implemented
//! from first principles (elastic-net logistic regression, random forests,
//! AdaBoost), evaluates them with imbalance-aware nested cross-validation,
//! and extracts grouped feature importance with a temporal-weight summary.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`dataset`]: event-log data model, CSV ingestion, dropout labels, and
//!   the seeded synthetic cohort generator.
//! - [`features`]: profile and per-week temporal feature extraction,
//!   encoding, and leakage-free standardization.
//! - [`linmodel`]: logistic regression with elastic-net regularization.
//! - [`trees`]: CART-style weighted classification trees, the shared weak
//!   learner.
//! - [`ensembles`]: random forests and AdaBoost, plus impurity importance.
//! - [`resampling`]: fold plans, bootstrap sampling, and SMOTE.
//! - [`evaluation`]: confusion metrics, AUROC, F-beta, and the nested
//!   cross-validation driver.
//! - [`importance`]: grouped relative importance, the temporal weight
//!   metric, and box-plot summaries.
//! - [`harness`]: the experiment grids behind the `dropout-lab` binary.
//!
//! A narrative guide lives in the `book/` directory of the repository; its
//! code snippets are compiled and run as doc-tests via the [`guide`] module.

pub mod dataset;
pub mod ensembles;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod guide;
pub mod harness;
pub mod importance;
pub mod linmodel;
pub mod resampling;
pub mod seeds;
pub mod trees;

pub use error::{Error, Result};
