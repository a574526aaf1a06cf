//! Numerical core for CT lesion analysis.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`imaging`]: scalar grids, masks, finite-difference operators and the Dice overlap.
//! * [`fcm`]: fuzzy c-means clustering of pixel intensities with spatial smoothing of memberships.
//! * [`levelset`]: a fuzzy-clustering-seeded level-set evolution engine.
//! * [`boosting`]: second-order gradient-boosted trees, residual boosting and a bagged CART baseline.
//! * [`features`]: the feature-record model and a built-in histogram/gradient descriptor.
//!
//! Math functions come from `libm` so results are identical with and without `std`.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` deliberately rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod boosting;
mod error;
pub mod fcm;
pub mod features;
pub mod imaging;
pub mod levelset;

pub use error::{Error, Result};
