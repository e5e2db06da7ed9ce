//! Gradient descent of the frame potential over unit norm frames, with
//! orthogonal splitting for frames that cannot reach tightness directly.

// Negated comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autotune;
pub mod cli;
pub mod descent;
pub mod error;
pub mod frame;
pub mod io;
pub mod linalg;
pub mod partition;
pub mod structured;
