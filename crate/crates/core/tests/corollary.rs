//! The sum of the per-index parametric contributions under B0 equals the
//! energy of the coupled detail problem on X (x) P_Q.

mod common;

use std::sync::Arc;

use common::{coupled_energy, model};
use proptest::prelude::*;
use sgfem::estimator::{parametric_estimator_b0, parametric_rhs};
use sgfem::fem::{Assembler, ElementKind, FESpace, UniformGrid};
use sgfem::galerkin::KroneckerSystem;
use sgfem::polychaos::IndexSet;
use sgfem::randfield::{CoefficientKind, Rect};

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn per_index_sum_equals_coupled_solve(
        m in 1usize..=3,
        square in any::<bool>(),
        amps in proptest::collection::vec(0.05f64..0.3, 3),
        tilt in -0.4f64..0.4,
        level in 2u32..=3,
        degree in 1u32..=2,
        extra in 1u32..=2,
    ) {
        let kind = if square { CoefficientKind::Square } else { CoefficientKind::Exp };
        let model = model(kind, &amps[..m], tilt);
        let grid = UniformGrid::new(Rect::unit(), level).unwrap();
        let asm = Arc::new(Assembler::new(Arc::new(FESpace::new(grid, ElementKind::Q1))));
        let p = IndexSet::complete(m, degree);
        let q_full = IndexSet::complete(m, degree + extra).difference(&p);
        let q = IndexSet::from_indices(m, q_full.iter().take(30).cloned());
        prop_assert!(q.len() <= 30);
        let sys = KroneckerSystem::assemble(model.clone(), asm.clone(), &p, 1.0).unwrap();
        let u = sys.solve(1e-12, 500).unwrap();
        let parts = parametric_estimator_b0(&sys, &u, &q).unwrap();
        let sum: f64 = parts.iter().sum();
        let r = parametric_rhs(&sys, &u, &q).unwrap();
        let coupled = coupled_energy(&model, &asm, &q, &r);
        prop_assert!(coupled > 0.0);
        prop_assert!((sum - coupled).abs() <= 1e-10 * coupled, "{} vs {}", sum, coupled);
    }
}
