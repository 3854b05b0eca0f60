use std::sync::Arc;

use rayon::prelude::*;

use super::space::{shape_functions, FESpace, NOT_FREE};
use super::sparse::{CsrMatrix, CsrPattern};
use crate::polychaos::gauss_legendre;
use crate::randfield::TermEvaluator;

const CHUNK: usize = 64;

/// Tensor Gauss rule on the reference square [0, 1]^2.
#[derive(Clone, Debug)]
pub struct SquareRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl SquareRule {
    pub fn gauss(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                points.push([0.5 * (x[i] + 1.0), 0.5 * (x[j] + 1.0)]);
                weights.push(0.25 * w[i] * w[j]);
            }
        }
        SquareRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Per-space assembly data: sparsity of the free-dof system, element scatter
/// map and shape function tables at the 3 x 3 Gauss points.
#[derive(Debug)]
pub struct Assembler {
    pub space: Arc<FESpace>,
    pub pattern: Arc<CsrPattern>,
    pub rule: SquareRule,
    /// per element, nloc x nloc positions into the CSR values (NOT_FREE if eliminated)
    scatter: Vec<u32>,
    /// shape values at the rule points, [q][a]
    vals: Vec<f64>,
    /// reference-gradient products weighted by the rule, [q][a][b]
    stiff: Vec<f64>,
}

/// Several stiffness matrices on one pattern, values interleaved by term:
/// entry k of term t sits at `values[k * nterms + t]`.
#[derive(Clone, Debug)]
pub struct TermMatrices {
    pub pattern: Arc<CsrPattern>,
    pub nterms: usize,
    pub values: Vec<f64>,
}

impl TermMatrices {
    pub fn term(&self, t: usize) -> CsrMatrix {
        CsrMatrix {
            pattern: self.pattern.clone(),
            values: (0..self.pattern.nnz())
                .map(|k| self.values[k * self.nterms + t])
                .collect(),
        }
    }
}

impl Assembler {
    pub fn new(space: Arc<FESpace>) -> Self {
        let nloc = space.nloc();
        let nf = space.num_free();
        let ne = space.grid.num_elements();
        let free = space.free_of_node();
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); nf];
        for e in 0..ne {
            let nodes = space.element_nodes(e);
            for &a in nodes {
                let fa = free[a as usize];
                if fa == NOT_FREE {
                    continue;
                }
                for &b in nodes {
                    let fb = free[b as usize];
                    if fb != NOT_FREE {
                        rows[fa as usize].push(fb);
                    }
                }
            }
        }
        let pattern = Arc::new(CsrPattern::from_rows(rows));
        let mut scatter = Vec::with_capacity(ne * nloc * nloc);
        for e in 0..ne {
            let nodes = space.element_nodes(e);
            for &a in nodes {
                for &b in nodes {
                    let (fa, fb) = (free[a as usize], free[b as usize]);
                    if fa == NOT_FREE || fb == NOT_FREE {
                        scatter.push(NOT_FREE);
                    } else {
                        scatter.push(pattern.position(fa as usize, fb as usize).unwrap() as u32);
                    }
                }
            }
        }
        let rule = SquareRule::gauss(3);
        let nq = rule.len();
        let mut vals = vec![0.0; nq * nloc];
        let mut stiff = vec![0.0; nq * nloc * nloc];
        let mut g = vec![[0.0; 2]; nloc];
        for q in 0..nq {
            shape_functions(space.kind, rule.points[q], &mut vals[q * nloc..(q + 1) * nloc], &mut g);
            for a in 0..nloc {
                for b in 0..nloc {
                    stiff[(q * nloc + a) * nloc + b] = rule.weights[q] * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                }
            }
        }
        Assembler {
            space,
            pattern,
            rule,
            scatter,
            vals,
            stiff,
        }
    }

    pub fn num_free(&self) -> usize {
        self.space.num_free()
    }

    /// Physical quadrature points of element e.
    pub fn element_points(&self, e: usize) -> impl Iterator<Item = [f64; 2]> + '_ {
        let o = self.space.grid.element_origin(e);
        let h = self.space.grid.h();
        self.rule.points.iter().map(move |p| [o[0] + h * p[0], o[1] + h * p[1]])
    }

    /// Stiffness matrix with weight w: entries of the integral of w grad(phi_i) . grad(phi_j).
    pub fn stiffness(&self, w: impl Fn([f64; 2]) -> f64 + Sync) -> CsrMatrix {
        let nloc = self.space.nloc();
        let ne = self.space.grid.num_elements();
        let mut out = CsrMatrix::zeros(self.pattern.clone());
        let elems: Vec<usize> = (0..ne).collect();
        for chunk in elems.chunks(CHUNK) {
            let locals: Vec<Vec<f64>> = chunk
                .par_iter()
                .map(|&e| {
                    let mut loc = vec![0.0; nloc * nloc];
                    for (q, x) in self.element_points(e).enumerate() {
                        let wq = w(x);
                        let s = &self.stiff[q * nloc * nloc..(q + 1) * nloc * nloc];
                        for (l, v) in loc.iter_mut().zip(s) {
                            *l += wq * v;
                        }
                    }
                    loc
                })
                .collect();
            for (&e, loc) in chunk.iter().zip(&locals) {
                let sc = &self.scatter[e * nloc * nloc..(e + 1) * nloc * nloc];
                for (&pos, v) in sc.iter().zip(loc) {
                    if pos != NOT_FREE {
                        out.values[pos as usize] += v;
                    }
                }
            }
        }
        out
    }

    /// Stiffness matrices for every t_gamma of an evaluator, interleaved.
    pub fn stiffness_terms(&self, ev: &TermEvaluator<'_>) -> TermMatrices {
        let nloc = self.space.nloc();
        let nq = self.rule.len();
        let nt = ev.len();
        let ne = self.space.grid.num_elements();
        let mut values = vec![0.0; self.pattern.nnz() * nt];
        let elems: Vec<usize> = (0..ne).collect();
        for chunk in elems.chunks(CHUNK) {
            let locals: Vec<Vec<f64>> = chunk
                .par_iter()
                .map_init(
                    || (ev.scratch(), vec![0.0; nq * nt]),
                    |(scratch, tv), &e| {
                        for (q, x) in self.element_points(e).enumerate() {
                            ev.eval(x, scratch, &mut tv[q * nt..(q + 1) * nt], None);
                        }
                        let mut loc = vec![0.0; nloc * nloc * nt];
                        for ab in 0..nloc * nloc {
                            let dst = &mut loc[ab * nt..(ab + 1) * nt];
                            for q in 0..nq {
                                let s = self.stiff[q * nloc * nloc + ab];
                                if s == 0.0 {
                                    continue;
                                }
                                for (d, t) in dst.iter_mut().zip(&tv[q * nt..(q + 1) * nt]) {
                                    *d += s * t;
                                }
                            }
                        }
                        loc
                    },
                )
                .collect();
            for (&e, loc) in chunk.iter().zip(&locals) {
                let sc = &self.scatter[e * nloc * nloc..(e + 1) * nloc * nloc];
                for (ab, &pos) in sc.iter().enumerate() {
                    if pos == NOT_FREE {
                        continue;
                    }
                    let dst = &mut values[pos as usize * nt..(pos as usize + 1) * nt];
                    for (d, v) in dst.iter_mut().zip(&loc[ab * nt..(ab + 1) * nt]) {
                        *d += v;
                    }
                }
            }
        }
        TermMatrices {
            pattern: self.pattern.clone(),
            nterms: nt,
            values,
        }
    }

    /// Load vector on all nodes (before elimination).
    pub fn load_full(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let nloc = self.space.nloc();
        let h = self.space.grid.h();
        let mut out = vec![0.0; self.space.num_nodes()];
        for e in 0..self.space.grid.num_elements() {
            let nodes = self.space.element_nodes(e);
            for (q, x) in self.element_points(e).enumerate() {
                let fw = f(x) * self.rule.weights[q] * h * h;
                for (a, &node) in nodes.iter().enumerate() {
                    out[node as usize] += fw * self.vals[q * nloc + a];
                }
            }
        }
        out
    }

    /// Load vector on free dofs.
    pub fn load(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let full = self.load_full(f);
        self.space.free_nodes().iter().map(|&n| full[n as usize]).collect()
    }
}
