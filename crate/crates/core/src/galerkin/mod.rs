//! The stochastic Galerkin system and its mean-based preconditioned solver.

mod operator;
mod pcg;
mod system;

pub use operator::{to_block_major, to_node_major, KroneckerOperator};
pub use pcg::{pcg, PcgStats};
pub use system::{triple_table, GalerkinSolution, KroneckerSystem, DEFAULT_MAX_ITER, DEFAULT_REL_TOL};
