use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::*;
use crate::fem::bubble::{bubble_eval, side_point, NB};
use crate::fem::{
    edge_sides, normal_jumps, Assembler, BubbleRule, BubbleSpace, EdgeRule, ElementKind, FESpace, ProfileCholesky,
    UniformGrid,
};
use crate::polychaos::{IndexSet, MultiIndex, UnivariateBasis};
use crate::randfield::{cosine_field, AffineField, CoefficientKind, Rect, SpatialFn};

fn basis() -> Arc<UnivariateBasis> {
    Arc::new(UnivariateBasis::new(1.0, 30).unwrap())
}

fn assembler(level: u32, domain: Rect) -> Arc<Assembler> {
    Arc::new(Assembler::new(Arc::new(FESpace::new(
        UniformGrid::new(domain, level).unwrap(),
        ElementKind::Q1,
    ))))
}

fn linear_model(kind: CoefficientKind, m: usize, amp: f64) -> Arc<CoefficientModel> {
    let terms = (0..m)
        .map(|k| SpatialFn::Linear {
            c: amp / (k + 1) as f64,
            g: [0.3 * amp, -0.2 * amp * k as f64],
        })
        .collect();
    let field = AffineField::new(Rect::unit(), SpatialFn::Linear { c: 1.0, g: [0.3, 0.1] }, terms);
    Arc::new(CoefficientModel::new(kind, field, basis()).unwrap())
}

fn solve(model: &Arc<CoefficientModel>, level: u32, p: &IndexSet, f: f64) -> (KroneckerSystem, GalerkinSolution) {
    let sys = KroneckerSystem::assemble(model.clone(), assembler(level, Rect::unit()), p, f).unwrap();
    let u = sys.solve(1e-13, 500).unwrap();
    (sys, u)
}

#[test]
fn detail_sets() {
    let sq = linear_model(CoefficientKind::Square, 3, 0.2);
    let p0 = IndexSet::complete(3, 0);
    assert_eq!(detail_index_set(&p0, &sq), IndexSet::complete(3, 2).difference(&p0));
    let exp5 =
        Arc::new(CoefficientModel::new(CoefficientKind::Exp, cosine_field(0.4, 2.0, 5).unwrap(), basis()).unwrap());
    let p = IndexSet::complete(5, 1);
    let q = detail_index_set(&p, &exp5);
    assert_eq!(q, IndexSet::complete(5, 3).difference(&p));
    assert!(q.intersection(&p).is_empty());
    // square model, P_{5,1}: the parametric coupling uses 20 gammas
    let sq5 =
        Arc::new(CoefficientModel::new(CoefficientKind::Square, cosine_field(0.4, 2.0, 5).unwrap(), basis()).unwrap());
    let q = detail_index_set(&p, &sq5);
    assert_eq!(q, IndexSet::complete(5, 3).difference(&p));
    let n = sq5.restrict(&p.neighborhood(&q));
    assert_eq!(n.len(), 20);
}

#[test]
fn b1_coefficients_basic() {
    let model = linear_model(CoefficientKind::Exp, 2, 0.3);
    let asm = assembler(2, Rect::unit());
    let g = IndexSet::complete(2, 2);
    let c = b1_coefficients(&model, &asm, &g).unwrap();
    assert_eq!(c[0], 1.0);
    assert!(c.iter().skip(1).any(|v| v.abs() > 1e-6));
    // parameter-free field: t_gamma = 0 for gamma != 0
    let field = AffineField::new(
        Rect::unit(),
        SpatialFn::Constant(0.2),
        vec![SpatialFn::Constant(0.0); 2],
    );
    let pf = CoefficientModel::new(CoefficientKind::Exp, field, basis()).unwrap();
    let c = b1_coefficients(&pf, &asm, &g).unwrap();
    assert_eq!(c[0], 1.0);
    assert!(c.iter().skip(1).all(|&v| v == 0.0));
}

/// ||e^(mu)||^2 under B0 from brute-force parameter quadrature of the
/// residual B(u, phi_i P_mu) with T evaluated directly.
fn brute_parametric_rhs(
    model: &CoefficientModel,
    asm: &Assembler,
    u: &GalerkinSolution,
    q: &IndexSet,
) -> Vec<Vec<f64>> {
    assert_eq!(model.dim(), 1);
    let sp = &asm.space;
    let rule = model.basis.gauss_rule(28).unwrap();
    let n = sp.num_free();
    let p = &u.index_set;
    let full: Vec<Vec<f64>> = (0..p.len()).map(|k| sp.expand(u.block(k))).collect();
    let mut out = vec![vec![0.0; n]; q.len()];
    let mut pv = vec![0.0; 31];
    for e in 0..sp.grid.num_elements() {
        for (qi, x) in asm.element_points(e).enumerate() {
            let xi = asm.rule.points[qi];
            let w = asm.rule.weights[qi];
            let grads: Vec<[f64; 2]> = full.iter().map(|f| sp.eval_element(e, f, xi).1).collect();
            let mut v = [0.0; 4];
            let mut g = [[0.0; 2]; 4];
            crate::fem::shape_functions(ElementKind::Q1, xi, &mut v, &mut g);
            let h = sp.grid.h();
            for (&y, &wy) in rule.nodes.iter().zip(&rule.weights) {
                model.basis.eval_into(y, &mut pv);
                let t = model.coefficient(x, &[y]);
                let mut gu = [0.0; 2];
                for (k, a) in p.iter().enumerate() {
                    gu[0] += grads[k][0] * pv[a[0] as usize];
                    gu[1] += grads[k][1] * pv[a[0] as usize];
                }
                for (a, &node) in sp.element_nodes(e).iter().enumerate() {
                    let Some(i) = sp.free_index(node as usize) else {
                        continue;
                    };
                    let d = (g[a][0] * gu[0] + g[a][1] * gu[1]) / h;
                    for (m, mu) in q.iter().enumerate() {
                        out[m][i] -= w * h * h * wy * t * d * pv[mu[0] as usize];
                    }
                }
            }
        }
    }
    out
}

#[test]
fn parametric_b0_matches_dense_oracle() {
    for kind in [CoefficientKind::Exp, CoefficientKind::Square] {
        let model = linear_model(kind, 1, 0.4);
        let p = IndexSet::complete(1, 2);
        let (sys, u) = solve(&model, 2, &p, 1.0);
        let q = IndexSet::complete(1, 5).difference(&p);
        let est = parametric_estimator_b0(&sys, &u, &q).unwrap();
        let rhs = brute_parametric_rhs(&model, &sys.assembler, &u, &q);
        let k0 = sys
            .assembler
            .stiffness(|x| model.t_gamma(&MultiIndex::zero(1), x).unwrap());
        let n = k0.n();
        let kd = DMatrix::from_fn(n, n, |i, j| k0.get(i, j));
        let ch = kd.cholesky().unwrap();
        let total: f64 = est.iter().sum();
        assert!(total > 0.0);
        for (m, r) in rhs.iter().enumerate() {
            let rv = DVector::from_vec(r.clone());
            let e = ch.solve(&rv);
            let oracle = rv.dot(&e);
            assert!(
                (est[m] - oracle).abs() <= 1e-10 * total,
                "{kind:?} mu={m}: {} vs {oracle}",
                est[m]
            );
        }
        if kind == CoefficientKind::Square {
            // only gammas of degree <= 2 couple: indices of degree 5 get nothing
            assert_eq!(est[q.len() - 1], 0.0);
        }
    }
}

#[test]
fn parametric_b1_matches_dense_oracle() {
    let model = linear_model(CoefficientKind::Exp, 1, 0.5);
    let p = IndexSet::complete(1, 1);
    let (sys, u) = solve(&model, 2, &p, 1.0);
    let q = IndexSet::complete(1, 4).difference(&p);
    let est = parametric_estimator_b1(&sys, &u, &q, Coupling::Inverse).unwrap();
    // fitted parametric weight S(y) = (t_0, T(., y)) / ||t_0||^2
    let asm = &sys.assembler;
    let zero = MultiIndex::zero(1);
    let rule = model.basis.gauss_rule(28).unwrap();
    let mut t0t0 = 0.0;
    let mut s = vec![0.0; rule.len()];
    for e in 0..asm.space.grid.num_elements() {
        for (qi, x) in asm.element_points(e).enumerate() {
            let w = asm.rule.weights[qi];
            let t0 = model.t_gamma(&zero, x).unwrap();
            t0t0 += w * t0 * t0;
            for (r, &y) in rule.nodes.iter().enumerate() {
                s[r] += w * t0 * model.coefficient(x, &[y]);
            }
        }
    }
    let nq = q.len();
    let mut gc = DMatrix::zeros(nq, nq);
    let mut pv = vec![0.0; 31];
    for (r, (&y, &wy)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        model.basis.eval_into(y, &mut pv);
        for (a, mu) in q.iter().enumerate() {
            for (b, nu) in q.iter().enumerate() {
                gc[(a, b)] += wy * s[r] / t0t0 * pv[mu[0] as usize] * pv[nu[0] as usize];
            }
        }
    }
    let rhs = brute_parametric_rhs(&model, asm, &u, &q);
    let k0 = asm.stiffness(|x| model.t_gamma(&zero, x).unwrap());
    let n = k0.n();
    let kd = DMatrix::from_fn(n, n, |i, j| k0.get(i, j));
    let big = gc.kronecker(&kd);
    let rv = DVector::from_iterator(n * nq, rhs.iter().flatten().copied());
    let e = big.cholesky().unwrap().solve(&rv);
    let oracle = rv.dot(&e);
    assert!((est - oracle).abs() <= 1e-10 * oracle, "{est} vs {oracle}");
    let direct = parametric_estimator_b1(&sys, &u, &q, Coupling::Direct).unwrap();
    let kinv = kd.cholesky().unwrap().inverse();
    let oracle = rv.dot(&(gc.kronecker(&kinv) * &rv));
    assert!((direct - oracle).abs() <= 1e-10 * oracle, "{direct} vs {oracle}");
}

/// Element residual estimator for the deterministic problem -div(T grad u) = f,
/// computed from a scalar finite element solution.
fn scalar_estimator(a0: impl Fn([f64; 2]) -> (f64, [f64; 2]) + Sync, level: u32, f: f64, vw: f64) -> Vec<f64> {
    let asm = assembler(level, Rect::unit());
    let sp = &asm.space;
    let t = |x: [f64; 2]| a0(x).0.exp();
    let k = asm.stiffness(t);
    let mut u = asm.load(|_| f);
    ProfileCholesky::factor(&k).unwrap().solve_in_place(&mut u);
    let full = sp.expand(&u);
    let grid = &sp.grid;
    let h = grid.h();
    let bs = BubbleSpace::new(grid.clone());
    let er = EdgeRule::new();
    let mut jumps = vec![0.0; bs.num_edges()];
    let mut j = vec![0.0; er.s.len()];
    for edge in grid.interior_edges() {
        normal_jumps(sp, &full, &edge, &er, &mut j);
        let (sm, _) = edge_sides(&edge);
        let o = grid.element_origin(edge.minus);
        let mut s = 0.0;
        for (qq, &tt) in er.s.iter().enumerate() {
            let r = side_point(sm, tt);
            s += er.weights[qq] * h * t([o[0] + h * r[0], o[1] + h * r[1]]) * j[qq] * er.trace[qq];
        }
        jumps[bs.element_dofs(edge.minus)[if edge.vertical { 1 } else { 2 }]] = s;
    }
    let rule = BubbleRule::new();
    (0..grid.num_elements())
        .map(|e| {
            let o = grid.element_origin(e);
            let mut a = [[0.0; NB]; NB];
            let mut r = [0.0; NB];
            for (qq, pt) in rule.points.iter().enumerate() {
                let x = [o[0] + h * pt[0], o[1] + h * pt[1]];
                let (av, ag) = a0(x);
                let tv = av.exp();
                let gu = sp.eval_element(e, &full, *pt).1;
                // f + div(T grad u) with a bilinear u
                let res = f + vw * tv * (ag[0] * gu[0] + ag[1] * gu[1]);
                for kk in 0..NB {
                    let (bv, bg) = bubble_eval(kk, *pt);
                    r[kk] += rule.weights[qq] * h * h * res * bv;
                    for l in 0..NB {
                        let cg = bubble_eval(l, *pt).1;
                        a[kk][l] += rule.weights[qq] * tv * (bg[0] * cg[0] + bg[1] * cg[1]);
                    }
                }
            }
            let dofs = bs.element_dofs(e);
            // boundary-edge bubbles stay in the local space; they carry no jump
            for kk in 0..4 {
                r[kk] -= 0.5 * jumps[dofs[kk]];
            }
            let am = DMatrix::from_fn(NB, NB, |i, jj| a[i][jj]);
            let rv = DVector::from_row_slice(&r);
            let ev = am.cholesky().unwrap().solve(&rv);
            rv.dot(&ev)
        })
        .collect()
}

#[test]
fn parameter_free_spatial_matches_scalar_estimator() {
    let a0 = SpatialFn::Linear { c: 0.2, g: [0.5, -0.4] };
    let field = AffineField::new(Rect::unit(), a0.clone(), vec![SpatialFn::Constant(0.0); 2]);
    let model = Arc::new(CoefficientModel::new(CoefficientKind::Exp, field, basis()).unwrap());
    let p = IndexSet::complete(2, 1);
    let (sys, u) = solve(&model, 3, &p, 1.0);
    for vw in [1.0, -2.0] {
        let oracle = scalar_estimator(|x| a0.eval(x), 3, 1.0, vw);
        let scale: f64 = oracle.iter().sum();
        for (form, coupling) in [
            (AuxForm::B0, Coupling::Inverse),
            (AuxForm::B1, Coupling::Inverse),
            (AuxForm::B1, Coupling::Direct),
        ] {
            let opts = SpatialOptions {
                volume_weight: vw,
                coupling,
            };
            let est = spatial_estimator(&sys, &u, form, &opts).unwrap();
            for (a, b) in est.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-10 * scale, "{form:?} {vw}: {a} vs {b}");
            }
        }
    }
    for form in [AuxForm::B0, AuxForm::B1] {
        let q = detail_index_set(&p, &model);
        let rep = estimate(&sys, &u, &q, form).unwrap();
        assert!(rep.parametric_sq.abs() < 1e-20);
        assert!(rep.parametric.iter().all(|&v| v.abs() < 1e-20));
    }
}

/// Summing the local right-hand sides of the elements sharing an interior
/// bubble recovers the global residual F(psi P_b) - B(u, psi P_b), computed
/// here from T(x, y) itself by tensor quadrature in y.
#[test]
fn local_rhs_sum_to_global_residual() {
    let model = linear_model(CoefficientKind::Square, 2, 0.4);
    let p = IndexSet::complete(2, 2);
    let (sys, u) = solve(&model, 2, &p, 1.0);
    let np = p.len();
    let sp = &sys.assembler.space;
    let grid = &sp.grid;
    let h = grid.h();
    let bs = BubbleSpace::new(grid.clone());
    let mut local = vec![0.0; bs.num_dofs() * np];
    for (e, lp) in local_problems(&sys, &u, &SpatialOptions::default())
        .unwrap()
        .iter()
        .enumerate()
    {
        assert_eq!(lp.dofs, bs.element_dofs(e));
        for k in 0..NB {
            for b in 0..np {
                local[lp.dofs[k] * np + b] += lp.rhs[k * np + b];
            }
        }
    }
    let rule_y = model.basis.gauss_rule(6).unwrap();
    let blocks: Vec<Vec<f64>> = (0..np).map(|k| sp.expand(u.block(k))).collect();
    let rule = BubbleRule::new();
    let mut oracle = vec![0.0; bs.num_dofs() * np];
    for e in 0..grid.num_elements() {
        let o = grid.element_origin(e);
        let dofs = bs.element_dofs(e);
        for (qq, pt) in rule.points.iter().enumerate() {
            let x = [o[0] + h * pt[0], o[1] + h * pt[1]];
            let grads: Vec<[f64; 2]> = blocks.iter().map(|b| sp.eval_element(e, b, *pt).1).collect();
            for (&y1, &w1) in rule_y.nodes.iter().zip(&rule_y.weights) {
                for (&y2, &w2) in rule_y.nodes.iter().zip(&rule_y.weights) {
                    let y = [y1, y2];
                    let t = model.coefficient(x, &y);
                    let pv: Vec<f64> = p
                        .iter()
                        .map(|a| model.basis.eval(4, y1)[a[0] as usize] * model.basis.eval(4, y2)[a[1] as usize])
                        .collect();
                    let mut gu = [0.0; 2];
                    for (g, pa) in grads.iter().zip(&pv) {
                        gu[0] += g[0] * pa;
                        gu[1] += g[1] * pa;
                    }
                    for k in 0..NB {
                        let (bv, bg) = bubble_eval(k, *pt);
                        let val = 1.0 * bv - t * (gu[0] * bg[0] + gu[1] * bg[1]) / h;
                        for (b, pb) in pv.iter().enumerate() {
                            oracle[dofs[k] * np + b] += w1 * w2 * rule.weights[qq] * h * h * val * pb;
                        }
                    }
                }
            }
        }
    }
    let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut checked = 0;
    for dof in (0..bs.num_dofs()).filter(|&d| !bs.is_boundary(d)) {
        for b in 0..np {
            let (a, c) = (local[dof * np + b], oracle[dof * np + b]);
            assert!((a - c).abs() <= 1e-10 * scale, "dof {dof} block {b}: {a} vs {c}");
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn zero_forcing_gives_zero_estimates() {
    let model = linear_model(CoefficientKind::Exp, 2, 0.3);
    let p = IndexSet::complete(2, 1);
    let (sys, u) = solve(&model, 2, &p, 0.0);
    assert!(u.coefficients.iter().all(|&v| v == 0.0));
    let q = detail_index_set(&p, &model);
    for form in [AuxForm::B0, AuxForm::B1] {
        let rep = estimate(&sys, &u, &q, form).unwrap();
        assert_eq!(rep.eta, 0.0);
    }
}

#[test]
fn forcing_scales_quadratically_and_forms_agree() {
    let model = linear_model(CoefficientKind::Square, 2, 0.3);
    let p = IndexSet::complete(2, 1);
    let q = detail_index_set(&p, &model);
    let (s1, u1) = solve(&model, 3, &p, 1.0);
    let (s3, u3) = solve(&model, 3, &p, -3.0);
    for form in [AuxForm::B0, AuxForm::B1] {
        let r1 = estimate(&s1, &u1, &q, form).unwrap();
        let r3 = estimate(&s3, &u3, &q, form).unwrap();
        for (a, b) in r1.spatial.iter().zip(&r3.spatial) {
            assert!((9.0 * a - b).abs() <= 1e-10 * b.abs().max(1e-300));
        }
        assert!((9.0 * r1.parametric_sq - r3.parametric_sq).abs() <= 1e-10 * r3.parametric_sq);
        assert!((r1.recompute_eta() - r1.eta).abs() <= 1e-15 * r1.eta);
        assert!(r1.spatial.iter().chain(&r1.parametric).all(|&v| v >= 0.0));
    }
    let e0 = estimate(&s1, &u1, &q, AuxForm::B0).unwrap().eta;
    let e1 = estimate(&s1, &u1, &q, AuxForm::B1).unwrap().eta;
    assert!(e0 > 0.0 && e1 > 0.0 && e1 / e0 < 10.0);
}

#[test]
fn effectivity_errors() {
    assert!(matches!(
        effectivity(1.0, 2.0, 2.0),
        Err(SgfemError::NonPositiveDenominator(_))
    ));
    assert!((effectivity(1.0, 1.0, 5.0).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(total_estimate(0.0, 0.0), 0.0);
    assert_eq!(total_estimate(4.0, 0.0), 2.0);
}
