use nalgebra::DMatrix;
use rayon::prelude::*;

use super::spatial::invert_spd;
use super::{b1_matrix, Coupling};
use crate::error::{Result, SgfemError};
use crate::fem::{shape_functions, NOT_FREE};
use crate::galerkin::{triple_table, GalerkinSolution, KroneckerSystem};
use crate::polychaos::{IndexSet, SpectralTerms};

const CHUNK: usize = 64;

/// Right-hand sides of the parametric estimator problems, node-major n_X x #Q:
/// column mu holds -sum_gamma sum_alpha [G_gamma]_{alpha, mu} K_gamma u_alpha
/// over gamma in N(P, Q). Computed element by element without storing K_gamma.
pub fn parametric_rhs(sys: &KroneckerSystem, u: &GalerkinSolution, q: &IndexSet) -> Result<Vec<f64>> {
    let asm = &sys.assembler;
    let sp = &asm.space;
    let n = sys.n_x();
    let nq = q.len();
    if q.is_empty() {
        return Ok(Vec::new());
    }
    if q.iter().any(|m| sys.index_set.contains(m)) {
        return Err(SgfemError::DimensionMismatch(
            "detail set must be disjoint from the index set".into(),
        ));
    }
    let p_set = &sys.index_set;
    let p = p_set.len();
    let table = triple_table(&sys.model.basis, p_set.max_entry() + q.max_entry())?;
    let support = sys.model.support();
    let terms = SpectralTerms::build(p_set, q, &table, support.as_ref());
    let nt = terms.len();
    let mut out = vec![0.0; n * nq];
    if nt == 0 {
        return Ok(out);
    }
    let ev = sys.model.evaluator(terms.gammas.members())?;
    let full = u.full_node_major(sp);
    let nloc = sp.nloc();
    let h = sp.grid.h();
    let free = sp.free_of_node();
    let elems: Vec<usize> = (0..sp.grid.num_elements()).collect();
    for chunk in elems.chunks(CHUNK) {
        let locals: Vec<Vec<f64>> = chunk
            .par_iter()
            .map_init(
                || {
                    (
                        ev.scratch(),
                        vec![0.0; nt],
                        vec![[0.0; 2]; p],
                        vec![[0.0; 2]; nq],
                        vec![0.0; nloc],
                        vec![[0.0; 2]; nloc],
                    )
                },
                |(scratch, tv, gu, vm, sv, sg), &e| {
                    let nodes = sp.element_nodes(e);
                    let mut loc = vec![0.0; nloc * nq];
                    for (qi, x) in asm.element_points(e).enumerate() {
                        let xi = asm.rule.points[qi];
                        ev.eval(x, scratch, tv, None);
                        shape_functions(sp.kind, xi, sv, sg);
                        gu.fill([0.0; 2]);
                        for (a, &node) in nodes.iter().enumerate() {
                            let c = &full[node as usize * p..(node as usize + 1) * p];
                            for (o, cv) in gu.iter_mut().zip(c) {
                                o[0] += cv * sg[a][0] / h;
                                o[1] += cv * sg[a][1] / h;
                            }
                        }
                        vm.fill([0.0; 2]);
                        for (t, g) in terms.mats.iter().enumerate() {
                            let tt = tv[t];
                            if tt == 0.0 {
                                continue;
                            }
                            for &(a, b, v) in &g.entries {
                                let s = tt * v;
                                let ga = gu[a as usize];
                                vm[b as usize][0] += s * ga[0];
                                vm[b as usize][1] += s * ga[1];
                            }
                        }
                        // physical gradient of phi_a is sg / h, the Jacobian is h^2
                        let w = asm.rule.weights[qi] * h;
                        for a in 0..nloc {
                            let l = &mut loc[a * nq..(a + 1) * nq];
                            for (lv, v) in l.iter_mut().zip(vm.iter()) {
                                *lv -= w * (sg[a][0] * v[0] + sg[a][1] * v[1]);
                            }
                        }
                    }
                    loc
                },
            )
            .collect();
        for (&e, loc) in chunk.iter().zip(&locals) {
            for (a, &node) in sp.element_nodes(e).iter().enumerate() {
                let fi = free[node as usize];
                if fi == NOT_FREE {
                    continue;
                }
                let dst = &mut out[fi as usize * nq..(fi as usize + 1) * nq];
                for (d, v) in dst.iter_mut().zip(&loc[a * nq..(a + 1) * nq]) {
                    *d += v;
                }
            }
        }
    }
    Ok(out)
}

/// Per-index squared contributions ||e^(mu)||^2_{B0}, mu in Q (in the order of Q).
pub fn parametric_estimator_b0(sys: &KroneckerSystem, u: &GalerkinSolution, q: &IndexSet) -> Result<Vec<f64>> {
    let nq = q.len();
    if nq == 0 {
        return Ok(Vec::new());
    }
    let r = parametric_rhs(sys, u, q)?;
    let mut e = r.clone();
    sys.k0_factor().solve_multi(&mut e, nq);
    let mut out = vec![0.0; nq];
    for (rr, ee) in r.chunks(nq).zip(e.chunks(nq)) {
        for k in 0..nq {
            out[k] += rr[k] * ee[k];
        }
    }
    Ok(out.into_iter().map(|v| v.max(0.0)).collect())
}

/// The coupled contribution ||e_XQ||^2_{B1}: the operator
/// (sum_{gamma in N(Q,Q)} C_gamma G_gamma) (x) K_0 is inverted through its two
/// factors.
pub fn parametric_estimator_b1(
    sys: &KroneckerSystem,
    u: &GalerkinSolution,
    q: &IndexSet,
    coupling: Coupling,
) -> Result<f64> {
    let nq = q.len();
    if nq == 0 {
        return Ok(0.0);
    }
    let r = parametric_rhs(sys, u, q)?;
    let table = triple_table(&sys.model.basis, 2 * q.max_entry())?;
    let support = sys.model.support();
    let terms = SpectralTerms::build(q, q, &table, support.as_ref());
    let gc = b1_matrix(&sys.model, &sys.assembler, &terms.gammas, &terms.mats)?;
    let gi = match coupling {
        Coupling::Inverse => invert_spd(gc)?,
        Coupling::Direct => gc,
    };
    let mut e = r.clone();
    sys.k0_factor().solve_multi(&mut e, nq);
    let n = sys.n_x();
    let em = DMatrix::from_row_slice(n, nq, &e) * gi;
    let rm = DMatrix::from_row_slice(n, nq, &r);
    Ok(rm.iter().zip(em.iter()).map(|(a, b)| a * b).sum::<f64>().max(0.0))
}
