// Tensor code indexes several arrays with the same loop variable, and the
// negated comparisons are there to reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ad;
pub mod algebra;
pub mod chern_forms;
pub mod cli;
pub mod connection;
pub mod error;
pub mod forms;
pub mod manifolds;
pub mod metric;
pub mod quadrature;
pub mod topology;

pub use error::{GbcError, Result};
