//! `model v1` text files: a header followed by every tree's nodes in pre-order.
//!
//! ```text
//! model v1
//! loss logistic
//! base_score 0
//! learning_rate 0.3
//! n_features 2
//! trees 1
//! tree 3
//! split 0 0.5
//! leaf -0.4
//! leaf 0.4
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use lesion_core::boosting::{BoostedModel, Loss, Node, RegressionTree};
use thiserror::Error;

use crate::text::{fmt_f64, parse_f64};

pub const MAGIC: &str = "model v1";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("unsupported model version: expected `{MAGIC}`, found `{0}`")]
    Version(String),
    #[error("line {line}: expected {expected}, found `{found}`")]
    Syntax { line: usize, expected: &'static str, found: String },
    #[error("unexpected end of model file, expected {0}")]
    Eof(&'static str),
    #[error("line {0}: trailing content after the last tree")]
    Trailing(usize),
    #[error("tree {index}: {source}")]
    Tree { index: usize, source: lesion_core::Error },
    #[error(transparent)]
    Invalid(#[from] lesion_core::Error),
}

pub fn write_model(model: &BoostedModel) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "loss {}", model.loss.name()).unwrap();
    writeln!(out, "base_score {}", fmt_f64(model.base_score)).unwrap();
    writeln!(out, "learning_rate {}", fmt_f64(model.learning_rate)).unwrap();
    writeln!(out, "n_features {}", model.n_features).unwrap();
    writeln!(out, "trees {}", model.trees.len()).unwrap();
    for tree in &model.trees {
        writeln!(out, "tree {}", tree.nodes().len()).unwrap();
        for node in tree.nodes() {
            match *node {
                Node::Split { feature, threshold, .. } => writeln!(out, "split {feature} {}", fmt_f64(threshold)),
                Node::Leaf { weight } => writeln!(out, "leaf {}", fmt_f64(weight)),
            }
            .unwrap();
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next line split into its keyword and the remaining tokens.
    fn keyed(&mut self, key: &'static str, expected: &'static str) -> Result<(usize, Vec<&'a str>), ModelError> {
        let (i, raw) = self.inner.next().ok_or(ModelError::Eof(expected))?;
        let mut tokens = raw.split_ascii_whitespace();
        if tokens.next() != Some(key) {
            return Err(ModelError::Syntax { line: i + 1, expected, found: raw.to_string() });
        }
        Ok((i + 1, tokens.collect()))
    }

    fn value<T>(&mut self, key: &'static str, expected: &'static str, parse: impl Fn(&str) -> Option<T>) -> Result<T, ModelError> {
        let (line, tokens) = self.keyed(key, expected)?;
        match tokens.as_slice() {
            [v] => parse(v).ok_or_else(|| ModelError::Syntax { line, expected, found: tokens.join(" ") }),
            _ => Err(ModelError::Syntax { line, expected, found: tokens.join(" ") }),
        }
    }
}

fn parse_count(s: &str) -> Option<usize> {
    s.parse().ok()
}

/// Turns a pre-order node list into linked nodes.
fn link(flat: Vec<(Option<usize>, f64)>) -> Result<Vec<Node>, lesion_core::Error> {
    fn subtree_end(flat: &[(Option<usize>, f64)], i: usize) -> Option<usize> {
        match flat.get(i)? {
            (None, _) => Some(i + 1),
            (Some(_), _) => subtree_end(flat, subtree_end(flat, i + 1)?),
        }
    }
    let mut nodes = Vec::with_capacity(flat.len());
    for (i, &(feature, value)) in flat.iter().enumerate() {
        nodes.push(match feature {
            None => Node::Leaf { weight: value },
            // a dangling split points past the end and is rejected by `from_nodes`
            Some(feature) => {
                let right = subtree_end(&flat, i + 1).unwrap_or(flat.len());
                Node::Split { feature, threshold: value, left: i + 1, right }
            }
        });
    }
    Ok(nodes)
}

pub fn read_model(text: &str) -> Result<BoostedModel, ModelError> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    let magic = lines.inner.next().map_or("", |(_, l)| l);
    if magic != MAGIC {
        return Err(ModelError::Version(magic.to_string()));
    }
    let loss = lines.value("loss", "`loss squared|logistic`", Loss::from_name)?;
    let base_score = lines.value("base_score", "`base_score <float>`", parse_f64)?;
    let learning_rate = lines.value("learning_rate", "`learning_rate <float>`", parse_f64)?;
    let n_features = lines.value("n_features", "`n_features <count>`", parse_count)?;
    let n_trees = lines.value("trees", "`trees <count>`", parse_count)?;

    let mut trees = Vec::new();
    for index in 0..n_trees {
        let n_nodes = lines.value("tree", "`tree <node count>`", parse_count)?;
        let mut flat = Vec::new();
        for _ in 0..n_nodes {
            let (i, raw) = lines.inner.next().ok_or(ModelError::Eof("`split` or `leaf` line"))?;
            let tokens: Vec<&str> = raw.split_ascii_whitespace().collect();
            let node = match tokens.as_slice() {
                ["split", f, t] => parse_count(f).zip(parse_f64(t)).map(|(f, t)| (Some(f), t)),
                ["leaf", w] => parse_f64(w).map(|w| (None, w)),
                _ => None,
            };
            let expected = "`split <feature> <threshold>` or `leaf <weight>`";
            flat.push(node.ok_or_else(|| ModelError::Syntax { line: i + 1, expected, found: raw.to_string() })?);
        }
        let tree = link(flat)
            .and_then(RegressionTree::from_nodes)
            .map_err(|source| ModelError::Tree { index, source })?;
        trees.push(tree);
    }
    if let Some((i, _)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(ModelError::Trailing(i + 1));
    }
    Ok(BoostedModel::new(base_score, learning_rate, loss, n_features, trees)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<BoostedModel, ModelError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ModelError::Io { path: path.to_path_buf(), source: e })?;
    read_model(&text)
}

pub fn save_model(model: &BoostedModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    fs::write(path, write_model(model)).map_err(|e| ModelError::Io { path: path.to_path_buf(), source: e })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> BoostedModel {
        let tree = RegressionTree::from_nodes(vec![
            Node::Split { feature: 1, threshold: 0.5, left: 1, right: 2 },
            Node::Leaf { weight: -0.4 },
            Node::Leaf { weight: 0.4 },
        ])
        .unwrap();
        BoostedModel::new(0.0, 0.3, Loss::Logistic, 2, vec![tree, RegressionTree::leaf(1e-9)]).unwrap()
    }

    #[test]
    fn layout_is_line_per_node() {
        let text = write_model(&stump());
        assert_eq!(
            text,
            "model v1\nloss logistic\nbase_score 0\nlearning_rate 0.3\nn_features 2\ntrees 2\n\
             tree 3\nsplit 1 0.5\nleaf -0.4\nleaf 0.4\ntree 1\nleaf 1e-9\n"
        );
        assert_eq!(read_model(&text).unwrap(), stump());
    }

    #[test]
    fn nested_pre_order_links() {
        let flat = vec![(Some(0), 1.0), (Some(1), 2.0), (None, 1.0), (None, 2.0), (None, 3.0)];
        let nodes = link(flat).unwrap();
        assert_eq!(nodes[0], Node::Split { feature: 0, threshold: 1.0, left: 1, right: 4 });
        assert_eq!(nodes[1], Node::Split { feature: 1, threshold: 2.0, left: 2, right: 3 });
        assert!(RegressionTree::from_nodes(nodes).is_ok());
    }

    #[test]
    fn malformed_models_are_rejected() {
        let good = write_model(&stump());
        assert!(matches!(read_model("model v2\n"), Err(ModelError::Version(_))));
        assert!(matches!(read_model(&good.replace("logistic", "hinge")), Err(ModelError::Syntax { line: 2, .. })));
        assert!(matches!(read_model(&good.replace("tree 3\n", "tree 2\n")), Err(ModelError::Tree { index: 0, .. })));
        assert!(matches!(read_model(&good.replace("tree 1\nleaf 1e-9\n", "")), Err(ModelError::Eof(_))));
        assert!(matches!(read_model(&format!("{good}leaf 1\n")), Err(ModelError::Trailing(13))));
        assert!(matches!(read_model(&good.replace("split 1", "split 5")), Err(ModelError::Invalid(_))));
    }
}
