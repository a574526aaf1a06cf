//! `lesionfeat v1` text files.
//!
//! ```text
//! lesionfeat v1
//! dim 2
//! a 1 0.5 -1
//! b ? 0.25 3e-7
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use lesion_core::features::{FeatureFile, FeatureRecord};
use thiserror::Error;

use crate::text::{fmt_f64, parse_f64};

pub const MAGIC: &str = "lesionfeat v1";

#[derive(Debug, Error)]
pub enum FeatError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("unsupported feature file version: expected `{MAGIC}`, found `{0}`")]
    Version(String),
    #[error("line 2: expected `dim <positive integer>`, found `{0}`")]
    DimLine(String),
    #[error("line {line}: expected {expected} values, found {found}")]
    DimMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unparsable float `{token}`")]
    BadFloat { line: usize, token: String },
    #[error("line {line}: label must be 0, 1 or ?, found `{token}`")]
    BadLabel { line: usize, token: String },
    #[error("line {line}: missing id or label")]
    ShortRecord { line: usize },
    #[error(transparent)]
    Invalid(#[from] lesion_core::Error),
}

pub fn write_features(file: &FeatureFile) -> String {
    let mut out = format!("{MAGIC}\ndim {}\n", file.dim());
    for r in file.records() {
        out.push_str(&r.id);
        match r.label {
            Some(l) => write!(out, " {l}").unwrap(),
            None => out.push_str(" ?"),
        }
        for &v in &r.vector {
            out.push(' ');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    out
}

pub fn read_features(text: &str) -> Result<FeatureFile, FeatError> {
    let mut lines = text.lines();
    let magic = lines.next().unwrap_or("");
    if magic != MAGIC {
        return Err(FeatError::Version(magic.to_string()));
    }
    let dim_line = lines.next().unwrap_or("");
    let dim = dim_line
        .strip_prefix("dim ")
        .and_then(|d| d.trim().parse::<usize>().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| FeatError::DimLine(dim_line.to_string()))?;

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, raw) in lines.enumerate() {
        let line = i + 3;
        let mut tokens = raw.split_ascii_whitespace();
        let (Some(id), Some(label)) = (tokens.next(), tokens.next()) else {
            return Err(FeatError::ShortRecord { line });
        };
        if !seen.insert(id) {
            return Err(FeatError::DuplicateId { line, id: id.to_string() });
        }
        let label = match label {
            "0" => Some(0),
            "1" => Some(1),
            "?" => None,
            other => return Err(FeatError::BadLabel { line, token: other.to_string() }),
        };
        let vector = tokens
            .map(|t| parse_f64(t).ok_or_else(|| FeatError::BadFloat { line, token: t.to_string() }))
            .collect::<Result<Vec<f64>, _>>()?;
        if vector.len() != dim {
            return Err(FeatError::DimMismatch { line, expected: dim, found: vector.len() });
        }
        records.push(FeatureRecord::new(id, label, vector));
    }
    Ok(FeatureFile::new(dim, records)?)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureFile, FeatError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| FeatError::Io { path: path.to_path_buf(), source: e })?;
    read_features(&text)
}

pub fn save_features(file: &FeatureFile, path: impl AsRef<Path>) -> Result<(), FeatError> {
    let path = path.as_ref();
    fs::write(path, write_features(file)).map_err(|e| FeatError::Io { path: path.to_path_buf(), source: e })
}
