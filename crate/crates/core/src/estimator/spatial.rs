use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{b1_matrix, AuxForm, Coupling, SpatialOptions};
use crate::error::{Result, SgfemError};
use crate::fem::bubble::{side_point, NB};
use crate::fem::{edge_sides, shape_functions, BubbleRule, BubbleSpace, EdgeRule, ElementKind};
use crate::galerkin::{GalerkinSolution, KroneckerSystem};

/// Gradients of all blocks u_alpha at reference point xi of element e
/// (node-major full coefficients, p blocks), written to out[alpha].
fn grad_blocks(sys: &KroneckerSystem, full: &[f64], p: usize, e: usize, xi: [f64; 2], out: &mut [[f64; 2]]) {
    let sp = &sys.assembler.space;
    let mut v = [0.0; 4];
    let mut g = [[0.0; 2]; 4];
    shape_functions(ElementKind::Q1, xi, &mut v, &mut g);
    let inv_h = 1.0 / sp.grid.h();
    out.fill([0.0; 2]);
    for (a, &node) in sp.element_nodes(e).iter().enumerate() {
        let u = &full[node as usize * p..(node as usize + 1) * p];
        for (o, c) in out.iter_mut().zip(u) {
            o[0] += c * g[a][0] * inv_h;
            o[1] += c * g[a][1] * inv_h;
        }
    }
}

/// Element residual problem on the five bubbles of one element: the B0
/// matrix int_K t_0 grad(psi_k).grad(psi_l) and the right-hand sides
/// (node-major, NB x #P) with volume residual and halved flux jumps.
#[derive(Clone, Debug)]
pub struct LocalProblem {
    pub dofs: [usize; NB],
    pub matrix: [[f64; NB]; NB],
    pub rhs: Vec<f64>,
}

pub fn local_problems(sys: &KroneckerSystem, u: &GalerkinSolution, opts: &SpatialOptions) -> Result<Vec<LocalProblem>> {
    let sp = &sys.assembler.space;
    if sp.kind != ElementKind::Q1 {
        return Err(SgfemError::DimensionMismatch(
            "spatial estimator expects a Q1 approximation".into(),
        ));
    }
    let p = sys.index_set.len();
    let nt = sys.num_terms();
    let grid = &sp.grid;
    let h = grid.h();
    let full = u.full_node_major(sp);
    let gammas = sys.gammas.members();
    let spectral = &sys.operator.spectral;
    let ev = sys.model.evaluator(gammas)?;
    let zt = sys.zero_term();
    let zi = sys.index_set.members().iter().position(|a| a.is_zero()).unwrap();

    // edge jump terms, once per interior edge and shared by both neighbours
    let bubbles = BubbleSpace::new(grid.clone());
    let erule = EdgeRule::new();
    let edges = grid.interior_edges();
    let edge_vals: Vec<(usize, Vec<f64>)> = edges
        .par_iter()
        .map_init(
            || {
                (
                    ev.scratch(),
                    vec![0.0; nt],
                    vec![[0.0; 2]; p],
                    vec![[0.0; 2]; p],
                    vec![0.0; nt * p],
                )
            },
            |(scratch, tv, gm, gp, tj), edge| {
                let (sm, spl) = edge_sides(edge);
                let d = if edge.vertical { 0 } else { 1 };
                let o = grid.element_origin(edge.minus);
                let mut acc = vec![0.0; p];
                for (q, &s) in erule.s.iter().enumerate() {
                    let r = side_point(sm, s);
                    let x = [o[0] + h * r[0], o[1] + h * r[1]];
                    ev.eval(x, scratch, tv, None);
                    grad_blocks(sys, &full, p, edge.minus, r, gm);
                    grad_blocks(sys, &full, p, edge.plus, side_point(spl, s), gp);
                    let w = erule.weights[q] * h * erule.trace[q];
                    for t in 0..nt {
                        for a in 0..p {
                            tj[t * p + a] = tv[t] * (gm[a][d] - gp[a][d]);
                        }
                    }
                    for (t, g) in spectral.iter().enumerate() {
                        for &(a, b, v) in &g.entries {
                            acc[b as usize] += w * v * tj[t * p + a as usize];
                        }
                    }
                }
                let dof = bubbles.element_dofs(edge.minus)[if edge.vertical { 1 } else { 2 }];
                (dof, acc)
            },
        )
        .collect();
    let mut jumps = vec![0.0; bubbles.num_edges() * p];
    for (dof, acc) in edge_vals {
        jumps[dof * p..(dof + 1) * p].copy_from_slice(&acc);
    }

    let rule = BubbleRule::new();
    let f = sys.forcing;
    let vw = opts.volume_weight;
    let elems: Vec<usize> = (0..grid.num_elements()).collect();
    let problems: Vec<LocalProblem> = elems
        .par_iter()
        .map_init(
            || {
                (
                    ev.scratch(),
                    vec![0.0; nt],
                    vec![[0.0; 2]; nt],
                    vec![[0.0; 2]; p],
                    vec![0.0; nt * p],
                    vec![0.0; p],
                )
            },
            |(scratch, tv, tg, gu, dd, w), &e| {
                let o = grid.element_origin(e);
                let mut matrix = [[0.0; NB]; NB];
                let mut rhs = vec![0.0; NB * p];
                for (q, pt) in rule.points.iter().enumerate() {
                    let x = [o[0] + h * pt[0], o[1] + h * pt[1]];
                    ev.eval(x, scratch, tv, Some(tg));
                    grad_blocks(sys, &full, p, e, *pt, gu);
                    for t in 0..nt {
                        for a in 0..p {
                            dd[t * p + a] = vw * (tg[t][0] * gu[a][0] + tg[t][1] * gu[a][1]);
                        }
                    }
                    w.fill(0.0);
                    w[zi] = f;
                    for (t, g) in spectral.iter().enumerate() {
                        for &(a, b, v) in &g.entries {
                            w[b as usize] += v * dd[t * p + a as usize];
                        }
                    }
                    let wq = rule.weights[q];
                    let t0 = tv[zt];
                    let psi = &rule.vals[q];
                    let gp = &rule.grads[q];
                    for k in 0..NB {
                        let s = wq * h * h * psi[k];
                        if s != 0.0 {
                            for (rb, wb) in rhs[k * p..(k + 1) * p].iter_mut().zip(w.iter()) {
                                *rb += s * wb;
                            }
                        }
                        for l in 0..NB {
                            matrix[k][l] += wq * t0 * (gp[k][0] * gp[l][0] + gp[k][1] * gp[l][1]);
                        }
                    }
                }
                let dofs = bubbles.element_dofs(e);
                for k in 0..4 {
                    if bubbles.is_boundary(dofs[k]) {
                        continue;
                    }
                    let j = &jumps[dofs[k] * p..(dofs[k] + 1) * p];
                    for (rb, jb) in rhs[k * p..(k + 1) * p].iter_mut().zip(j) {
                        *rb -= 0.5 * jb;
                    }
                }
                LocalProblem { dofs, matrix, rhs }
            },
        )
        .collect();
    Ok(problems)
}

/// Squared local estimates ||e_YP|_K||^2 for every element. The local space
/// holds all five bubbles of the element, including those of edges on the
/// Dirichlet boundary (which only see the volume residual).
pub fn spatial_estimator(
    sys: &KroneckerSystem,
    u: &GalerkinSolution,
    form: AuxForm,
    opts: &SpatialOptions,
) -> Result<Vec<f64>> {
    let p = sys.index_set.len();
    let gc_inv = match form {
        AuxForm::B0 => None,
        AuxForm::B1 => {
            let gc = b1_matrix(&sys.model, &sys.assembler, &sys.gammas, &sys.operator.spectral)?;
            match opts.coupling {
                Coupling::Inverse => Some(invert_spd(gc)?),
                Coupling::Direct => Some(gc),
            }
        }
    };
    let problems = local_problems(sys, u, opts)?;
    problems
        .par_iter()
        .enumerate()
        .map(|(e, lp)| {
            let am = DMatrix::from_fn(NB, NB, |i, j| lp.matrix[i][j]);
            let rm = DMatrix::from_row_slice(NB, p, &lp.rhs);
            let chol = am.cholesky().ok_or(SgfemError::NotPositiveDefinite {
                pivot: e,
                value: f64::NAN,
            })?;
            let mut em = chol.solve(&rm);
            if let Some(gi) = &gc_inv {
                em = em * gi;
            }
            Ok(rm.iter().zip(em.iter()).map(|(a, b)| a * b).sum::<f64>().max(0.0))
        })
        .collect()
}

/// Inverse of a small symmetric positive definite matrix; fails with the
/// indefiniteness error otherwise.
pub(super) fn invert_spd(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.cholesky()
        .map(|c| c.inverse())
        .ok_or(SgfemError::NotPositiveDefinite {
            pivot: 0,
            value: f64::NAN,
        })
}
