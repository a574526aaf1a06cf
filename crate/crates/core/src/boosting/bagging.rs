use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tree::TreeConfig;
use super::{midpoint, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { class: u8 },
}

/// Binary CART classifier grown with Gini impurity.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationTree {
    nodes: Vec<ClassNode>,
}

impl ClassificationTree {
    pub fn nodes(&self) -> &[ClassNode] {
        &self.nodes
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                ClassNode::Leaf { class } => return class,
                ClassNode::Split { feature, threshold, left, right } => {
                    i = if row[feature] < threshold { left } else { right };
                }
            }
        }
    }
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct CartBuilder<'a> {
    ds: &'a Dataset,
    cfg: TreeConfig,
    nodes: Vec<ClassNode>,
}

impl CartBuilder<'_> {
    fn positives(&self, idx: &[usize]) -> usize {
        idx.iter().filter(|&&i| self.ds.labels()[i] == 1.0).count()
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let n = idx.len();
        let pos = self.positives(&idx);
        let at = self.nodes.len();
        // majority class, ties to 0
        self.nodes.push(ClassNode::Leaf { class: (2 * pos > n) as u8 });
        if depth >= self.cfg.max_depth || pos == 0 || pos == n || n < 2 * self.cfg.min_samples_leaf {
            return at;
        }
        let parent = gini(pos, n);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.clone();
        for f in 0..self.ds.n_features() {
            order.sort_by(|&a, &b| self.ds.value(a, f).total_cmp(&self.ds.value(b, f)).then(a.cmp(&b)));
            let mut left_pos = 0;
            for k in 0..n - 1 {
                left_pos += (self.ds.labels()[order[k]] == 1.0) as usize;
                let nl = k + 1;
                if nl < self.cfg.min_samples_leaf || n - nl < self.cfg.min_samples_leaf {
                    continue;
                }
                let (a, b) = (self.ds.value(order[k], f), self.ds.value(order[k + 1], f));
                if a == b {
                    continue;
                }
                let weighted = (nl as f64 * gini(left_pos, nl) + (n - nl) as f64 * gini(pos - left_pos, n - nl)) / n as f64;
                let decrease = parent - weighted;
                if decrease > best.map_or(0.0, |b| b.2) {
                    best = Some((f, midpoint(a, b), decrease));
                }
            }
        }
        let Some((feature, threshold, _)) = best else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.ds.value(i, feature) < threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = ClassNode::Split { feature, threshold, left, right };
        at
    }
}

/// Bootstrap-aggregated CART trees.
#[derive(Debug, Clone, PartialEq)]
pub struct BaggedTrees {
    pub trees: Vec<ClassificationTree>,
}

impl BaggedTrees {
    pub fn predict(&self, row: &[f64]) -> u8 {
        let votes: Vec<u8> = self.trees.iter().map(|t| t.predict(row)).collect();
        majority_vote(&votes)
    }
}

/// Majority of 0/1 votes; ties (and no votes) go to class 0.
pub fn majority_vote(votes: &[u8]) -> u8 {
    let ones = votes.iter().filter(|&&v| v == 1).count();
    (2 * ones > votes.len()) as u8
}

/// Trains `n_trees` Gini trees, each on a bootstrap resample of size `n`
/// drawn with replacement.
pub fn fit_bagged_trees(ds: &Dataset, n_trees: usize, config: &TreeConfig, seed: u64) -> Result<BaggedTrees> {
    config.validate()?;
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    ds.check_binary_labels()?;
    let n = ds.n_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trees = (0..n_trees)
        .map(|_| {
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let sample = ds.select(&rows);
            let mut b = CartBuilder { ds: &sample, cfg: *config, nodes: Vec::new() };
            b.grow((0..n).collect(), 0);
            ClassificationTree { nodes: b.nodes }
        })
        .collect();
    Ok(BaggedTrees { trees })
}
