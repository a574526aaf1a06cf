use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Differentiable training loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// `½ (y − f)²`
    Squared,
    /// Binary log-loss on the margin `f`, with `p = 1 / (1 + e^−f)`.
    Logistic,
}

pub fn sigmoid(f: f64) -> f64 {
    if f >= 0.0 {
        1.0 / (1.0 + libm::exp(-f))
    } else {
        let e = libm::exp(f);
        e / (1.0 + e)
    }
}

impl Loss {
    pub fn value(self, y: f64, f: f64) -> f64 {
        match self {
            Loss::Squared => 0.5 * (y - f) * (y - f),
            // log(1 + e^f) − y f, written to avoid overflow
            Loss::Logistic => f.max(0.0) + libm::log1p(libm::exp(-libm::fabs(f))) - y * f,
        }
    }

    pub fn gradient(self, y: f64, f: f64) -> f64 {
        match self {
            Loss::Squared => f - y,
            Loss::Logistic => sigmoid(f) - y,
        }
    }

    pub fn hessian(self, _y: f64, f: f64) -> f64 {
        match self {
            Loss::Squared => 1.0,
            Loss::Logistic => {
                let p = sigmoid(f);
                p * (1.0 - p)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Loss::Squared => "squared",
            Loss::Logistic => "logistic",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "squared" => Some(Loss::Squared),
            "logistic" => Some(Loss::Logistic),
            _ => None,
        }
    }
}

/// Per-sample gradient and hessian of `loss` at margins `f`.
pub fn grad_hess(loss: Loss, y: &[f64], f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if y.len() != f.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), found: f.len() });
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("margins"));
    }
    Ok(y.iter().zip(f).map(|(&yi, &fi)| (loss.gradient(yi, fi), loss.hessian(yi, fi))).unzip())
}
