//! Oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use sgfem::fem::Assembler;
use sgfem::polychaos::{IndexSet, MultiIndex, UnivariateBasis};
use sgfem::randfield::{AffineField, CoefficientKind, CoefficientModel, Rect, SpatialFn};

pub fn model(kind: CoefficientKind, amps: &[f64], tilt: f64) -> Arc<CoefficientModel> {
    let terms = amps
        .iter()
        .enumerate()
        .map(|(k, &a)| SpatialFn::Cosine {
            amp: a,
            b1: (k % 2) as f64,
            b2: (k / 2 + 1) as f64,
        })
        .collect();
    let a0 = SpatialFn::Linear {
        c: 1.0,
        g: [tilt, -0.5 * tilt],
    };
    let field = AffineField::new(Rect::unit(), a0, terms);
    let basis = Arc::new(UnivariateBasis::new(1.0, 30).unwrap());
    Arc::new(CoefficientModel::new(kind, field, basis).unwrap())
}

/// Energy of the coupled B0 problem, assembled densely with the Gram matrix
/// of the detail polynomials taken from tensor quadrature.
pub fn coupled_energy(model: &CoefficientModel, asm: &Assembler, q: &IndexSet, r: &[f64]) -> f64 {
    let m = model.dim();
    let nq = q.len();
    let rule = model.basis.gauss_rule(16).unwrap();
    let deg = q.max_entry() as usize;
    let mut gram = DMatrix::<f64>::zeros(nq, nq);
    let mut idx = vec![0usize; m];
    loop {
        let mut w = 1.0;
        let mut pv = vec![1.0; nq];
        for (k, &i) in idx.iter().enumerate() {
            w *= rule.weights[i];
            let p = model.basis.eval(deg, rule.nodes[i]);
            for (v, mu) in pv.iter_mut().zip(q.iter()) {
                *v *= p[mu.entries()[k] as usize];
            }
        }
        for a in 0..nq {
            for b in 0..nq {
                gram[(a, b)] += w * pv[a] * pv[b];
            }
        }
        let mut k = 0;
        while k < m {
            idx[k] += 1;
            if idx[k] < rule.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == m {
            break;
        }
    }
    let zero = MultiIndex::zero(m);
    let k0 = asm.stiffness(|x| model.t_gamma(&zero, x).unwrap());
    let n = k0.n();
    let kd = DMatrix::from_fn(n, n, |i, j| k0.get(i, j));
    let big = kd.kronecker(&gram);
    let rv = DVector::from_row_slice(r);
    let e = big.cholesky().expect("coupled B0 matrix is SPD").solve(&rv);
    rv.dot(&e)
}

/// Tensor Gauss rule in the parameters, as (y, weight) pairs.
pub fn tensor_rule(model: &CoefficientModel, n: usize) -> Vec<(Vec<f64>, f64)> {
    let m = model.dim();
    let rule = model.basis.gauss_rule(n).unwrap();
    let total = n.pow(m as u32);
    (0..total)
        .map(|r| {
            let mut idx = r;
            let mut y = vec![0.0; m];
            let mut w = 1.0;
            for yk in y.iter_mut() {
                *yk = rule.nodes[idx % n];
                w *= rule.weights[idx % n];
                idx /= n;
            }
            (y, w)
        })
        .collect()
}

/// P_alpha(y) for every index of the set.
pub fn poly_values(model: &CoefficientModel, set: &IndexSet, y: &[f64]) -> Vec<f64> {
    let deg = set.max_entry() as usize;
    let pv: Vec<Vec<f64>> = y.iter().map(|&yk| model.basis.eval(deg, yk)).collect();
    set.iter()
        .map(|a| a.entries().iter().zip(&pv).map(|(&e, p)| p[e as usize]).product())
        .collect()
}

/// Stiffness matrix of the deterministic problem with T(., y) frozen.
pub fn frozen_stiffness(model: &CoefficientModel, asm: &Assembler, y: &[f64]) -> DMatrix<f64> {
    let k = asm.stiffness(|x| model.coefficient(x, y));
    let n = k.n();
    DMatrix::from_fn(n, n, |i, j| k.get(i, j))
}

/// Galerkin operator in block-major ordering, from a tensor rule over frozen
/// deterministic stiffness matrices.
pub fn brute_operator(model: &CoefficientModel, asm: &Assembler, p: &IndexSet, npts: usize) -> DMatrix<f64> {
    let n = asm.num_free();
    let np = p.len();
    let mut a = DMatrix::<f64>::zeros(n * np, n * np);
    for (y, w) in tensor_rule(model, npts) {
        let k = frozen_stiffness(model, asm, &y);
        let pv = poly_values(model, p, &y);
        for ka in 0..np {
            for kb in 0..np {
                let s = w * pv[ka] * pv[kb];
                let mut blk = a.view_mut((ka * n, kb * n), (n, n));
                blk += &k * s;
            }
        }
    }
    a
}

/// Per-index B0 contributions r^T K0^{-1} r with r the residual of u tested
/// against v P_mu, all integrals done by the tensor rule.
pub fn brute_b0_contributions(
    model: &CoefficientModel,
    asm: &Assembler,
    p: &IndexSet,
    blocks: &[&[f64]],
    q: &IndexSet,
    npts: usize,
) -> Vec<f64> {
    let n = asm.num_free();
    let mut k0 = DMatrix::<f64>::zeros(n, n);
    let mut r = vec![DVector::<f64>::zeros(n); q.len()];
    for (y, w) in tensor_rule(model, npts) {
        let k = frozen_stiffness(model, asm, &y);
        k0 += &k * w;
        let pp = poly_values(model, p, &y);
        let mut uy = DVector::<f64>::zeros(n);
        for (b, &c) in blocks.iter().zip(&pp) {
            uy += DVector::from_column_slice(b) * c;
        }
        let ku = &k * uy;
        for (rm, pm) in r.iter_mut().zip(poly_values(model, q, &y)) {
            *rm -= &ku * (w * pm);
        }
    }
    let chol = k0.cholesky().expect("K0 is SPD");
    r.iter().map(|rm| rm.dot(&chol.solve(rm))).collect()
}

/// t_gamma(x) by the tensor rule.
pub fn brute_t_gamma(model: &CoefficientModel, gamma: &MultiIndex, x: [f64; 2], npts: usize) -> f64 {
    let set = IndexSet::from_indices(model.dim(), [gamma.clone()]);
    tensor_rule(model, npts)
        .into_iter()
        .map(|(y, w)| w * model.coefficient(x, &y) * poly_values(model, &set, &y)[0])
        .sum()
}
