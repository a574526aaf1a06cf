//! Feature vectors exchanged between extractors and the classifier, and a
//! small built-in image descriptor.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::boosting::Dataset;
use crate::error::{Error, Result};
use crate::imaging::{gradient_central, ImageGrid};

pub const INTENSITY_BINS: usize = 16;
pub const CELLS_PER_SIDE: usize = 4;
pub const ORIENTATION_BINS: usize = 8;
/// Length of [`builtin_descriptor`] output.
pub const DESCRIPTOR_LEN: usize = INTENSITY_BINS + CELLS_PER_SIDE * CELLS_PER_SIDE * ORIENTATION_BINS;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub id: String,
    pub label: Option<u8>,
    pub vector: Vec<f64>,
}

impl FeatureRecord {
    pub fn new(id: impl Into<String>, label: Option<u8>, vector: Vec<f64>) -> Self {
        Self { id: id.into(), label, vector }
    }
}

/// Ordered records sharing one vector length and unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    dim: usize,
    records: Vec<FeatureRecord>,
}

impl FeatureFile {
    pub fn new(dim: usize, records: Vec<FeatureRecord>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidRecord(String::from("dimension must be positive")));
        }
        let mut seen = BTreeSet::new();
        for r in &records {
            if r.id.is_empty() || r.id.chars().any(char::is_whitespace) {
                return Err(Error::InvalidRecord(format!("id {:?} is empty or contains whitespace", r.id)));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(Error::InvalidRecord(format!("duplicate id {}", r.id)));
            }
            if r.vector.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.vector.len() });
            }
            if matches!(r.label, Some(l) if l > 1) {
                return Err(Error::InvalidRecord(format!("label of {} must be 0 or 1", r.id)));
            }
            if r.vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("feature vector"));
            }
        }
        Ok(Self { dim, records })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<FeatureRecord> {
        self.records
    }

    /// Training view; fails if any record is unlabeled.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let mut x = Vec::with_capacity(self.records.len() * self.dim);
        let mut y = Vec::with_capacity(self.records.len());
        for r in &self.records {
            let label = r
                .label
                .ok_or_else(|| Error::InvalidRecord(format!("record {} is unlabeled", r.id)))?;
            x.extend_from_slice(&r.vector);
            y.push(label as f64);
        }
        Dataset::new(self.dim, x, y)
    }
}

fn l2_normalize(block: &mut [f64]) {
    let norm = libm::sqrt(block.iter().map(|v| v * v).sum::<f64>());
    if norm > 0.0 {
        for v in block {
            *v /= norm;
        }
    }
}

/// 144-value descriptor of a normalized image.
///
/// The first 16 values are an intensity histogram over `[0, 1]` that sums to
/// one. The rest are a 4x4 grid of cells, each holding an 8-bin histogram of
/// gradient orientation (full circle, bin 0 starting at angle 0) weighted by
/// gradient magnitude and L2-normalized; cells without gradient stay zero.
/// Pixel `(x, y)` belongs to cell `(4x / width, 4y / height)`.
pub fn builtin_descriptor(image: &ImageGrid) -> Result<Vec<f64>> {
    let mut out = vec![0.0; DESCRIPTOR_LEN];
    let n = image.len() as f64;
    for &v in image.values() {
        let bin = ((v.clamp(0.0, 1.0) * INTENSITY_BINS as f64) as usize).min(INTENSITY_BINS - 1);
        out[bin] += 1.0;
    }
    for v in &mut out[..INTENSITY_BINS] {
        *v /= n;
    }

    let (w, h) = (image.width(), image.height());
    let (gx, gy) = gradient_central(image)?;
    let cells = &mut out[INTENSITY_BINS..];
    for y in 0..h {
        let cy = y * CELLS_PER_SIDE / h;
        for x in 0..w {
            let cx = x * CELLS_PER_SIDE / w;
            let (a, b) = (gx.get(x, y), gy.get(x, y));
            let mag = libm::sqrt(a * a + b * b);
            if mag == 0.0 {
                continue;
            }
            let mut angle = libm::atan2(b, a);
            if angle < 0.0 {
                angle += 2.0 * PI;
            }
            let bin = ((angle / (2.0 * PI) * ORIENTATION_BINS as f64) as usize).min(ORIENTATION_BINS - 1);
            cells[(cy * CELLS_PER_SIDE + cx) * ORIENTATION_BINS + bin] += mag;
        }
    }
    for block in cells.chunks_exact_mut(ORIENTATION_BINS) {
        l2_normalize(block);
    }
    Ok(out)
}
