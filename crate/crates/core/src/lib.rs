#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Reference solvers and DeepONet surrogates for single-drainage 1-D
//! consolidation.
pub mod cli;
pub mod consolidation;
pub mod dataset;
pub mod deeponet;
pub mod error;
pub mod eval;
pub mod nn;
pub mod ode;
pub mod random_fields;
mod storage;

pub use error::{Error, Result};
pub use storage::FileEntry;
