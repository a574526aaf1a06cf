//! `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Every key is optional, unknown
//! or repeated keys are errors.
//!
//! ```text
//! seed = 7
//! fcm.clusters = 3
//! levelset.iterations = 200
//! boost.rounds = 80
//! features.source = builtin
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lesion_core::boosting::{GbmConfig, Loss};
use lesion_core::levelset::{LevelSetParams, SegmentOptions};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("config line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("config line {line}: `{key}` expects {expected}, found `{value}`")]
    BadValue { line: usize, key: String, value: String, expected: &'static str },
    #[error("invalid configuration: {0}")]
    Invalid(#[from] lesion_core::Error),
}

/// Where classify and pipeline get feature vectors for images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSource {
    /// Computed from each image by the built-in descriptor.
    Builtin,
    /// Looked up by image stem in a `lesionfeat v1` file.
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Seeds the train/holdout split and the clustering initialisation.
    pub seed: u64,
    pub out: PathBuf,
    pub segment: SegmentOptions,
    pub boost: GbmConfig,
    pub loss: Loss,
    pub feature_source: FeatureSource,
    /// Expected feature dimension; checked against feature files when set.
    pub feature_dim: Option<usize>,
    /// Positive class when the score reaches this value.
    pub threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("."),
            segment: SegmentOptions::default(),
            boost: GbmConfig::default(),
            loss: Loss::Logistic,
            feature_source: FeatureSource::Builtin,
            feature_dim: None,
            threshold: 0.5,
        }
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str, expected: &'static str) -> Result<T, ConfigError> {
    raw.parse().map_err(|_| ConfigError::BadValue { line, key: key.to_string(), value: raw.to_string(), expected })
}

fn real(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    let v: f64 = value(line, key, raw, "a finite number")?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::BadValue { line, key: key.to_string(), value: raw.to_string(), expected: "a finite number" })
    }
}

fn count(line: usize, key: &str, raw: &str) -> Result<usize, ConfigError> {
    value(line, key, raw, "a non-negative integer")
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, val)) = content.split_once('=') else {
                return Err(ConfigError::Syntax { line, text: raw.to_string() });
            };
            let (key, val) = (key.trim(), val.trim());
            if key.is_empty() || val.is_empty() {
                return Err(ConfigError::Syntax { line, text: raw.to_string() });
            }
            cfg.set(line, key, val)?;
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate { line, key: key.to_string() });
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.to_path_buf(), source: e })?;
        Self::parse(&text)
    }

    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<(), ConfigError> {
        let seg = &mut self.segment;
        let ov = &mut seg.overrides;
        match key {
            "seed" => self.seed = value(line, key, v, "an unsigned integer")?,
            "out" => self.out = PathBuf::from(v),
            "fcm.clusters" => seg.fcm.clusters = count(line, key, v)?,
            "fcm.fuzzifier" => seg.fcm.fuzzifier = real(line, key, v)?,
            "fcm.tolerance" => seg.fcm.tolerance = real(line, key, v)?,
            "fcm.max_iter" => seg.fcm.max_iter = count(line, key, v)?,
            "segment.window" => seg.window = count(line, key, v)?,
            "segment.edge_sigma" => seg.edge_sigma = real(line, key, v)?,
            "segment.auto" => seg.auto = value(line, key, v, "true or false")?,
            "segment.lesion_cluster" => seg.lesion_cluster = Some(count(line, key, v)?),
            "levelset.lambda" => ov.lambda = Some(real(line, key, v)?),
            "levelset.dirac_eps" => ov.dirac_eps = Some(real(line, key, v)?),
            "levelset.tau" => ov.tau = Some(real(line, key, v)?),
            "levelset.iterations" => ov.iterations = Some(count(line, key, v)?),
            "levelset.reg_mu" => ov.reg_mu = Some(real(line, key, v)?),
            "levelset.balloon_weight" => ov.balloon_weight = Some(real(line, key, v)?),
            "levelset.c0" => ov.c0 = Some(real(line, key, v)?),
            "boost.rounds" => self.boost.rounds = count(line, key, v)?,
            "boost.learning_rate" => self.boost.learning_rate = real(line, key, v)?,
            "boost.max_depth" => self.boost.max_depth = count(line, key, v)?,
            "boost.min_samples_leaf" => self.boost.min_samples_leaf = count(line, key, v)?,
            "boost.lambda" => self.boost.lambda_reg = real(line, key, v)?,
            "boost.gamma" => self.boost.gamma = real(line, key, v)?,
            "boost.loss" => {
                self.loss = Loss::from_name(v).ok_or_else(|| ConfigError::BadValue {
                    line,
                    key: key.to_string(),
                    value: v.to_string(),
                    expected: "squared or logistic",
                })?
            }
            "features.source" => {
                self.feature_source = match v {
                    "builtin" => FeatureSource::Builtin,
                    "file" => FeatureSource::File,
                    _ => {
                        return Err(ConfigError::BadValue {
                            line,
                            key: key.to_string(),
                            value: v.to_string(),
                            expected: "builtin or file",
                        })
                    }
                }
            }
            "features.dim" => self.feature_dim = Some(count(line, key, v)?),
            "classify.threshold" => self.threshold = real(line, key, v)?,
            _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
        }
        Ok(())
    }

    /// Checks every setting that can be checked before data is seen.
    pub fn validate(&self) -> Result<(), ConfigError> {
        use lesion_core::Error::InvalidParameter;
        let bad = |name: &'static str, reason: &str| InvalidParameter { name, reason: reason.into() };
        self.segment.fcm.validate()?;
        self.boost.validate()?;
        let mut params = LevelSetParams::default();
        self.segment.overrides.apply(&mut params);
        params.validate()?;
        if self.segment.window.is_multiple_of(2) {
            return Err(bad("segment.window", "must be odd").into());
        }
        if !(self.segment.edge_sigma >= 0.0) {
            return Err(bad("segment.edge_sigma", "must be non-negative").into());
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(bad("classify.threshold", "must lie strictly between 0 and 1").into());
        }
        if self.feature_dim == Some(0) {
            return Err(bad("features.dim", "must be positive").into());
        }
        Ok(())
    }
}
