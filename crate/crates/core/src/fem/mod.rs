//! Uniform square grids, Q1/Q2 spaces, the bubble detail space and assembly.

mod assembly;
pub mod bubble;
mod cholesky;
mod grid;
mod jumps;
mod space;
mod sparse;

pub use assembly::{Assembler, SquareRule, TermMatrices};
pub use bubble::{BubbleRule, BubbleSpace, EdgeRule};
pub use cholesky::ProfileCholesky;
pub use grid::{Edge, UniformGrid};
pub use jumps::{edge_jump_integrals, edge_sides, normal_jumps};
pub use space::{shape_functions, ElementKind, FESpace, NOT_FREE};
pub use sparse::{dot, norm2, CsrMatrix, CsrPattern};
