//! The Benders loop: subproblems from the LP engine, masters from an
//! annealer, exhaustive search or branch and bound.

mod bnb;
mod log;
mod master;
mod run;

pub use crate::milp::initial_w;
pub use bnb::{branch_and_bound, BnbLimits, BnbOutcome, INTEGRALITY_TOL};
pub use log::{IterationLog, IterationRecord, StopReason};
pub use master::{Cut, CutKind, MasterState, CUT_DEDUP_TOL};
pub use run::{
    relative_gap, run_classical_bd, run_hqcbd, run_multicut, solve_monolithic, BendersResult, MasterBackend, MonolithicResult,
    SolverConfig,
};

#[cfg(test)]
mod tests;
