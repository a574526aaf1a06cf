use alloc::vec;
use alloc::vec::Vec;

use super::loss::{grad_hess, sigmoid, Loss};
use super::tree::{build_tree_second_order, RegressionTree, TreeConfig};
use super::Dataset;
use crate::error::{invalid, Error, Result};

const LOGIT_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GbmConfig {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub lambda_reg: f64,
    pub gamma: f64,
    /// Seeds data splitting in callers; boosting itself draws no randomness.
    pub seed: u64,
}

impl Default for GbmConfig {
    fn default() -> Self {
        Self { rounds: 50, learning_rate: 0.3, max_depth: 3, min_samples_leaf: 1, lambda_reg: 1.0, gamma: 0.0, seed: 0 }
    }
}

impl GbmConfig {
    pub fn tree(&self) -> TreeConfig {
        TreeConfig {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            lambda_reg: self.lambda_reg,
            gamma: self.gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(invalid("learning_rate", "must lie in (0, 1]"));
        }
        self.tree().validate()
    }
}

/// Additive model `F(x) = F0 + η Σ_m tree_m(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub loss: Loss,
    pub n_features: usize,
    pub trees: Vec<RegressionTree>,
}

impl BoostedModel {
    /// Validates tree feature indices against `n_features`.
    pub fn new(base_score: f64, learning_rate: f64, loss: Loss, n_features: usize, trees: Vec<RegressionTree>) -> Result<Self> {
        if !base_score.is_finite() || !learning_rate.is_finite() {
            return Err(Error::NonFinite("model parameters"));
        }
        if let Some(f) = trees.iter().filter_map(RegressionTree::max_feature).max() {
            if f >= n_features {
                return Err(invalid("trees", "split feature index exceeds feature count"));
            }
        }
        Ok(Self { base_score, learning_rate, loss, n_features, trees })
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, found: row.len() });
        }
        Ok(())
    }

    /// Raw score (margin for the logistic loss).
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        self.check_row(row)?;
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        Ok(self.base_score + self.learning_rate * sum)
    }

    /// Score on the label scale: the probability for the logistic loss, the raw score otherwise.
    pub fn predict_score(&self, row: &[f64]) -> Result<f64> {
        let f = self.predict(row)?;
        Ok(match self.loss {
            Loss::Logistic => sigmoid(f),
            Loss::Squared => f,
        })
    }

    /// Class decision: score `>= 0.5` is positive.
    pub fn predict_class(&self, row: &[f64]) -> Result<bool> {
        Ok(self.predict_score(row)? >= 0.5)
    }

    /// Training-set mean squared error after 0, 1, ..., M trees.
    pub fn mse_trace(&self, ds: &Dataset) -> Result<Vec<f64>> {
        if ds.n_features() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, found: ds.n_features() });
        }
        let n = ds.n_samples();
        if n == 0 {
            return Err(Error::Empty("dataset"));
        }
        let mut f = vec![self.base_score; n];
        let mse = |f: &[f64]| f.iter().zip(ds.labels()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
        let mut trace = vec![mse(&f)];
        for t in &self.trees {
            for (i, fi) in f.iter_mut().enumerate() {
                *fi += self.learning_rate * t.predict(ds.row(i));
            }
            trace.push(mse(&f));
        }
        Ok(trace)
    }
}

/// Constant model minimising the loss: the mean for squared loss, the
/// clamped log-odds of the positive rate for logistic loss.
pub fn base_score(y: &[f64], loss: Loss) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Empty("labels"));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    Ok(match loss {
        Loss::Squared => mean,
        Loss::Logistic => {
            let p = mean.clamp(LOGIT_CLAMP, 1.0 - LOGIT_CLAMP);
            let q = (1.0 - mean).clamp(LOGIT_CLAMP, 1.0 - LOGIT_CLAMP);
            libm::log(p / q)
        }
    })
}

fn boost(ds: &Dataset, config: &GbmConfig, loss: Loss, tree_cfg: TreeConfig) -> Result<BoostedModel> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let f0 = base_score(ds.labels(), loss)?;
    let mut margin = vec![f0; ds.n_samples()];
    let mut trees = Vec::with_capacity(config.rounds);
    for _ in 0..config.rounds {
        let (g, h) = grad_hess(loss, ds.labels(), &margin)?;
        let tree = build_tree_second_order(ds, &g, &h, &tree_cfg)?;
        for (i, m) in margin.iter_mut().enumerate() {
            *m += config.learning_rate * tree.predict(ds.row(i));
        }
        trees.push(tree);
    }
    Ok(BoostedModel { base_score: f0, learning_rate: config.learning_rate, loss, n_features: ds.n_features(), trees })
}

/// Second-order boosting: every round fits a tree to the gradient and
/// hessian of `loss` at the current margin and adds it scaled by the
/// learning rate.
pub fn fit_xgboost(ds: &Dataset, config: &GbmConfig, loss: Loss) -> Result<BoostedModel> {
    config.validate()?;
    if loss == Loss::Logistic {
        ds.check_binary_labels()?;
    }
    boost(ds, config, loss, config.tree())
}

/// First-order residual boosting for squared loss: each tree is a
/// least-squares fit to the residuals `y − F_{m−1}(x)` with leaf means and
/// variance-reduction splits, so the regularization settings are ignored.
pub fn fit_gbm_first_order(ds: &Dataset, config: &GbmConfig) -> Result<BoostedModel> {
    config.validate()?;
    let tree_cfg = TreeConfig { lambda_reg: 0.0, gamma: 0.0, ..config.tree() };
    boost(ds, config, Loss::Squared, tree_cfg)
}
