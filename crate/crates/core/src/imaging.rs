//! Grids, masks and the finite-difference operators shared by the numeric modules.
//!
//! Storage is row-major in scan order: pixel `(x, y)` with `0 <= x < width`,
//! `0 <= y < height` lives at `y * width + x`. This is the order PGM payloads
//! use, and it is the point index handed to clustering, so membership row `n`
//! always refers to the same pixel as grid value `n`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Stabilizer added to gradient norms before dividing by them.
pub const NORM_EPS: f64 = 1e-10;

/// A 2-D scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

/// Intermediate fields (gradients, curvature, Dirac, edge indicator, forces)
/// share the image layout.
pub type ScalarField = ImageGrid;

impl ImageGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("dimensions", "width and height must be positive"));
        }
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| invalid("dimensions", "width * height overflows"))?;
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: values.len() });
        }
        Ok(Self { width, height, values })
    }

    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Self { width, height, values: vec![value; width * height] }
    }

    /// Panics if either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self { width, height, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        let i = self.index(x, y);
        self.values[i] = value;
    }

    pub fn same_shape(&self, other: &ImageGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, width: usize, height: usize) -> Result<()> {
        if self.width == width && self.height == height {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(self.width, self.height, width, height))
        }
    }

    pub(crate) fn check_min_size(&self, min: usize) -> Result<()> {
        if self.width < min || self.height < min {
            Err(Error::GridTooSmall { width: self.width, height: self.height, min })
        } else {
            Ok(())
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Binary segmentation mask, `true` marks lesion pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl SegMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("dimensions", "width and height must be positive"));
        }
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch { expected: width * height, found: bits.len() });
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Number of `true` pixels.
    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Pixels inside the mask with at least one 4-neighbour outside it
    /// (pixels on the image border count as touching the outside).
    pub fn boundary(&self) -> SegMask {
        let (w, h) = (self.width, self.height);
        SegMask::from_fn(w, h, |x, y| {
            if !self.get(x, y) {
                return false;
            }
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                return true;
            }
            !(self.get(x - 1, y) && self.get(x + 1, y) && self.get(x, y - 1) && self.get(x, y + 1))
        })
    }
}

/// Min-max rescaling to `[0, 1]`. A constant image maps to all zeros.
pub fn normalize(grid: &ImageGrid) -> ImageGrid {
    let (lo, hi) = grid.min_max();
    let span = hi - lo;
    if !(span > 0.0) {
        return ImageGrid::filled(grid.width, grid.height, 0.0);
    }
    grid.map(|v| (v - lo) / span)
}

/// Central differences in the interior, one-sided differences on the border.
/// Unit grid spacing.
pub fn gradient_central(field: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    field.check_min_size(3)?;
    Ok(gradient_unchecked(field))
}

pub(crate) fn gradient_unchecked(field: &ScalarField) -> (ScalarField, ScalarField) {
    let (w, h) = (field.width, field.height);
    let f = &field.values;
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        let row = y * w;
        for x in 0..w {
            let i = row + x;
            gx[i] = if x == 0 {
                f[i + 1] - f[i]
            } else if x + 1 == w {
                f[i] - f[i - 1]
            } else {
                0.5 * (f[i + 1] - f[i - 1])
            };
            gy[i] = if y == 0 {
                f[i + w] - f[i]
            } else if y + 1 == h {
                f[i] - f[i - w]
            } else {
                0.5 * (f[i + w] - f[i - w])
            };
        }
    }
    (
        ImageGrid { width: w, height: h, values: gx },
        ImageGrid { width: w, height: h, values: gy },
    )
}

/// Half-sample symmetric reflection of `i` into `0..n` (`... 1 0 | 0 1 ... n-1 | n-1 n-2 ...`).
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = libm::ceil(3.0 * sigma) as usize;
    let denom = 2.0 * sigma * sigma;
    let mut kernel: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            libm::exp(-d * d / denom)
        })
        .collect();
    let total: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= total;
    }
    kernel
}

/// Separable Gaussian blur, kernel radius `ceil(3 sigma)`, reflective boundary.
/// `sigma == 0` returns the input unchanged.
pub fn gaussian_smooth(field: &ScalarField, sigma: f64) -> Result<ScalarField> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma", "must be finite and non-negative"));
    }
    if sigma == 0.0 {
        return Ok(field.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = (field.width, field.height);

    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &field.values[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * row[reflect(x as isize + k as isize - radius, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * tmp[reflect(y as isize + k as isize - radius, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    Ok(ImageGrid { width: w, height: h, values: out })
}

/// Dice overlap `2|A∩B| / (|A|+|B|)`; two empty masks score 1.
pub fn dice(a: &SegMask, b: &SegMask) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::ShapeMismatch(a.width, a.height, b.width, b.height));
    }
    let (mut inter, mut total) = (0usize, 0usize);
    for (&p, &q) in a.bits.iter().zip(&b.bits) {
        inter += (p && q) as usize;
        total += p as usize + q as usize;
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}
