//! Gradient-boosted regression trees built from scratch.
//!
//! * [`fit_xgboost`]: second-order boosting. Each round expands the loss to
//!   second order around the current margin and grows a tree whose leaf
//!   weights minimise `Σ_i (g_i w + ½ h_i w²) + ½ λ w²` per leaf, with a
//!   per-leaf penalty `γ`.
//! * [`fit_gbm_first_order`]: classic residual boosting for squared loss.
//! * [`fit_bagged_trees`]: bootstrap-aggregated Gini CART trees with majority voting.

mod bagging;
mod booster;
mod loss;
mod tree;

pub use bagging::{fit_bagged_trees, majority_vote, BaggedTrees, ClassificationTree, ClassNode};
pub use booster::{base_score, fit_gbm_first_order, fit_xgboost, BoostedModel, GbmConfig};
pub use loss::{grad_hess, sigmoid, Loss};
pub use tree::{build_tree_second_order, leaf_objective, Node, RegressionTree, TreeConfig};

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major sample matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_samples: usize,
    n_features: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(n_features: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if n_features == 0 {
            return Err(crate::error::invalid("n_features", "must be positive"));
        }
        if x.len() != y.len() * n_features {
            return Err(Error::DimensionMismatch { expected: y.len() * n_features, found: x.len() });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Self { n_samples: y.len(), n_features, x, y })
    }

    /// Builds a dataset from rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: y.len(), found: rows.len() });
        }
        let mut x = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: r.len() });
            }
            x.extend_from_slice(r);
        }
        Self::new(d, x, y)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn is_empty(&self) -> bool {
        self.n_samples == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    #[inline]
    pub fn value(&self, i: usize, feature: usize) -> f64 {
        self.x[i * self.n_features + feature]
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(rows.len() * self.n_features);
        let mut y = Vec::with_capacity(rows.len());
        for &i in rows {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Dataset { n_samples: rows.len(), n_features: self.n_features, x, y }
    }

    pub(crate) fn check_binary_labels(&self) -> Result<()> {
        match self.y.iter().find(|&&v| v != 0.0 && v != 1.0) {
            Some(&v) => Err(Error::NonBinaryLabel(v)),
            None => Ok(()),
        }
    }
}

/// Candidate split position for one sorted feature column: thresholds are
/// placed between consecutive distinct values, in `(a, b]`, so `x < threshold`
/// routes `a` left and `b` right.
#[inline]
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid <= a {
        b
    } else {
        mid
    }
}
