//! First-passage percolation on Z^d: time constants, discrete cell problems,
//! the symmetric-medium variational algorithm, dual norms, and
//! distribution-comparison bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cellproblem;
pub mod distcompare;
pub mod environment;
pub mod error;
pub mod fpp;
pub mod lattice;
pub mod norms;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod symmin;
pub mod validation;

pub use error::{Error, Result};
