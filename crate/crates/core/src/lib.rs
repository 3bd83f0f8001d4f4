//! AC optimal load shedding under line-outage contingencies, contingency
//! dataset generation from local post-contingency measurements, and
//! per-load-center neural decision rules.
//!
//! Pipeline: [`netcase`] parses and stresses the grid model,
//! [`powerflow`] computes post-contingency states, [`ols`] solves the
//! shedding problem with a primal-dual interior-point method,
//! [`scenarios`] enumerates outages and samples loads, [`features`] turns
//! solved samples into per-bus training rows, [`mlp`] trains the decision
//! rules and [`eval`] scores them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod features;
pub mod linalg;
pub mod mlp;
pub mod netcase;
pub mod ols;
pub mod pipeline;
pub mod powerflow;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
pub use netcase::{AdmittanceMatrix, BranchRecord, BusKind, BusRecord, GenRecord, NetworkCase};
pub use powerflow::{FrequencyProxy, LineFlowSet, PowerFlowSolution};
pub use ols::{assemble_ols, solve_ols, CostConfig, OlsProblem, OlsSolution, ShedMode, SolverOptions};
