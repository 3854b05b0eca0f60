//! Affine random fields and the gPC coefficients of exp(a) and a^2.

mod coefficient;
mod field;
mod kl;

pub use coefficient::{CoefficientKind, CoefficientModel, EvalScratch, TermEvaluator, EXP_EXTRA_POINTS};
pub use field::{cosine_field, cosine_frequencies, kl_field, AffineField, Rect, SpatialFn};
pub use kl::{kl_1d, kl_2d, KLEigenpair, KLMode2d, Parity};
