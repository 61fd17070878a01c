//! Joint user association, function placement and routing for satellite
//! networks with network-function virtualization, solved by Benders
//! decomposition with an annealing-based master.

// Index loops mirror the model's subscripts; `!(a < b)` comparisons reject NaN on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod benders;
pub mod error;
pub mod lp;
pub mod mfteg;
pub mod milp;
pub mod qubo;
pub mod sampler;
pub mod scenario;

pub use error::{Error, Result};
