//! Leakage and decoherence of a driven transmon coupled to an ohmic bath.

// `!(x > 0.0)` is how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod analytic;
pub mod bath;
pub mod cli;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod quadrature;
pub mod transmon;

pub use error::{Error, Result};
