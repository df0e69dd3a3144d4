// Tensor code indexes several arrays by the same coordinate index, and
// `!(x < tol)` is used on purpose so NaN fails.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod checks;
pub mod error;
pub mod exec;
pub mod exprlang;
pub mod geodesics;
pub mod jets;
pub mod report;
pub mod rigging;
pub mod sampling;
pub mod spacetime;
pub mod transverse;

pub use error::{Error, Result};
