use alloc::vec;
use alloc::vec::Vec;

use super::{midpoint, Dataset};
use crate::error::{invalid, Error, Result};

/// Tree node. Samples with `x[feature] < threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { weight: f64 },
}

/// Regression tree with nodes stored in pre-order (root first, then the
/// whole left subtree, then the right subtree).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(weight: f64) -> Self {
        Self { nodes: vec![Node::Leaf { weight }] }
    }

    /// Validates that `nodes` form a single pre-order tree.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        fn walk(nodes: &[Node], i: usize) -> Result<usize> {
            // returns one past the last index of the subtree rooted at i
            match nodes.get(i) {
                None => Err(invalid("tree", "child index out of range")),
                Some(Node::Leaf { weight }) => {
                    if weight.is_finite() {
                        Ok(i + 1)
                    } else {
                        Err(Error::NonFinite("leaf weight"))
                    }
                }
                Some(&Node::Split { left, right, threshold, .. }) => {
                    if !threshold.is_finite() {
                        return Err(Error::NonFinite("split threshold"));
                    }
                    if left != i + 1 {
                        return Err(invalid("tree", "nodes are not in pre-order"));
                    }
                    let end_left = walk(nodes, left)?;
                    if right != end_left {
                        return Err(invalid("tree", "nodes are not in pre-order"));
                    }
                    walk(nodes, right)
                }
            }
        }
        if walk(&nodes, 0)? != nodes.len() {
            return Err(invalid("tree", "unreachable nodes"));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] < threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { weight } => weight,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Depth of the deepest leaf; a single leaf has depth 0.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Largest feature index used by a split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

/// Growth controls for a single tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// L2 penalty on leaf weights.
    pub lambda_reg: f64,
    /// Penalty per additional leaf.
    pub gamma: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { max_depth: 3, min_samples_leaf: 1, lambda_reg: 1.0, gamma: 0.0 }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(invalid("max_depth", "must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(invalid("min_samples_leaf", "must be at least 1"));
        }
        if !(self.lambda_reg >= 0.0) || !self.lambda_reg.is_finite() {
            return Err(invalid("lambda_reg", "must be finite and non-negative"));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(invalid("gamma", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Per-leaf second-order objective `G w + ½ (H + λ) w²`.
pub fn leaf_objective(g_sum: f64, h_sum: f64, lambda_reg: f64, weight: f64) -> f64 {
    g_sum * weight + 0.5 * (h_sum + lambda_reg) * weight * weight
}

#[inline]
fn optimal_weight(g_sum: f64, h_sum: f64, lambda_reg: f64) -> f64 {
    let den = h_sum + lambda_reg;
    if den > 0.0 {
        -g_sum / den
    } else {
        0.0
    }
}

#[inline]
fn score(g_sum: f64, h_sum: f64, lambda_reg: f64) -> f64 {
    let den = h_sum + lambda_reg;
    if den > 0.0 {
        g_sum * g_sum / den
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Builder<'a> {
    ds: &'a Dataset,
    grad: &'a [f64],
    hess: &'a [f64],
    cfg: TreeConfig,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn best_split(&self, idx: &[usize], g_sum: f64, h_sum: f64) -> Option<SplitChoice> {
        let lam = self.cfg.lambda_reg;
        let parent = score(g_sum, h_sum, lam);
        let min_leaf = self.cfg.min_samples_leaf;
        if idx.len() < 2 * min_leaf {
            return None;
        }
        let mut best: Option<SplitChoice> = None;
        let mut order = idx.to_vec();
        for f in 0..self.ds.n_features() {
            order.sort_by(|&a, &b| self.ds.value(a, f).total_cmp(&self.ds.value(b, f)).then(a.cmp(&b)));
            let (mut gl, mut hl) = (0.0, 0.0);
            for pos in 0..order.len() - 1 {
                let i = order[pos];
                gl += self.grad[i];
                hl += self.hess[i];
                let left_n = pos + 1;
                if left_n < min_leaf || order.len() - left_n < min_leaf {
                    continue;
                }
                let (a, b) = (self.ds.value(i, f), self.ds.value(order[pos + 1], f));
                if a == b {
                    continue;
                }
                let (gr, hr) = (g_sum - gl, h_sum - hl);
                let gain = 0.5 * (score(gl, hl, lam) + score(gr, hr, lam) - parent) - self.cfg.gamma;
                // features and thresholds are scanned in increasing order, so a
                // strict comparison keeps the lowest (feature, threshold) on ties
                if best.is_none_or(|b| gain > b.gain) {
                    best = Some(SplitChoice { feature: f, threshold: midpoint(a, b), gain });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let (g_sum, h_sum) = idx.iter().fold((0.0, 0.0), |(g, h), &i| (g + self.grad[i], h + self.hess[i]));
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { weight: optimal_weight(g_sum, h_sum, self.cfg.lambda_reg) });
        if depth >= self.cfg.max_depth {
            return at;
        }
        let Some(split) = self.best_split(&idx, g_sum, h_sum) else {
            return at;
        };
        if !(split.gain >= 0.0) {
            return at;
        }
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.ds.value(i, split.feature) < split.threshold);
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        self.nodes[at] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        at
    }
}

/// Greedy depth-first tree growth on per-sample gradients and hessians.
///
/// Leaf weights are `−G / (H + λ)`. A split scores
/// `½ [G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ`; the best candidate over
/// all features and all midpoints between consecutive distinct values is kept
/// when its score is non-negative. Ties go to the lowest feature index, then
/// the lowest threshold. Only `ds`'s features are used, not its labels.
pub fn build_tree_second_order(ds: &Dataset, grad: &[f64], hess: &[f64], config: &TreeConfig) -> Result<RegressionTree> {
    config.validate()?;
    if ds.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    let n = ds.n_samples();
    if grad.len() != n || hess.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: grad.len().min(hess.len()) });
    }
    if grad.iter().chain(hess).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient statistics"));
    }
    if hess.iter().any(|&h| h < 0.0) {
        return Err(invalid("hessian", "must be non-negative"));
    }
    let mut b = Builder { ds, grad, hess, cfg: *config, nodes: Vec::new() };
    b.grow((0..n).collect(), 0);
    Ok(RegressionTree { nodes: b.nodes })
}
