//! Multi-indices and orthonormal polynomials for the truncated Gaussian measure.

mod basis;
mod multi_index;
mod triple;

pub use basis::{composite_gauss_legendre, gauss_legendre, GaussRule, UnivariateBasis};
pub use multi_index::{IndexSet, MultiIndex};
pub use triple::{spectral_matrix, triangle_ok, triple_product, SpectralMatrix, SpectralTerms, TripleTable, DROP_TOL};

/// Default number of recurrence coefficients.
pub const DEFAULT_N_MAX: usize = 30;

/// Complete index set of total degree at most `d` in `m` variables.
pub fn complete_set(m: usize, d: u32) -> IndexSet {
    IndexSet::complete(m, d)
}

/// N(P, Q).
pub fn neighborhood(p: &IndexSet, q: &IndexSet) -> IndexSet {
    p.neighborhood(q)
}
