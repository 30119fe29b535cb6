//! Exact solver for the fuel-constrained multi-vehicle path planning problem.
//!
//! The crate builds four MILP formulations of the problem, solves their LP
//! relaxations with an embedded bounded simplex, and runs a branch-and-cut
//! that separates depot-connectivity cuts lazily at integer points.

pub mod bench;
pub mod bnc;
pub mod error;
pub mod formulation;
pub mod generator;
pub mod instance;
pub mod lp;
pub mod milp;
pub mod oracle;
pub mod par;

pub use error::{Error, Result};
pub use formulation::{build_formulation, BuildOptions, Formulation, FormulationVariant};
pub use instance::{check_feasibility, solution_cost, validate_instance, Instance, Solution};
