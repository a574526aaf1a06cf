//! File formats, configuration and the `lesioncad` command line around
//! [`lesion_core`].

// `!(x > 0.0)` deliberately rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod featfile;
pub mod model_io;
pub mod pgm;
pub mod pipeline;
pub mod text;

pub use error::{CadError, Result};
