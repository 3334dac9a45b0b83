// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod pencil;
pub mod projection;
pub mod pseudospectra;
pub mod transient;
pub mod weighted;

pub use error::{Error, Result};
pub use exec::Execution;
