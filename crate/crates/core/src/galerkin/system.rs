use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::operator::{to_block_major, to_node_major, KroneckerOperator};
use super::pcg::{pcg, PcgStats};
use crate::error::{Result, SgfemError};
use crate::fem::{dot, norm2, Assembler, ElementKind, FESpace, ProfileCholesky, TermMatrices};
use crate::polychaos::{IndexSet, SpectralTerms, TripleTable, UnivariateBasis};
use crate::randfield::CoefficientModel;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;

/// Triple-product table able to serve every product <P_a P_b P_g> with
/// entries up to `max_entry`.
pub fn triple_table(basis: &UnivariateBasis, max_entry: u32) -> Result<TripleTable> {
    TripleTable::new(basis, max_entry.max(1) as usize)
}

/// The Galerkin system (sum_gamma G_gamma (x) K_gamma) u = g (x) f on X (x) P.
#[derive(Debug)]
pub struct KroneckerSystem {
    pub model: Arc<CoefficientModel>,
    pub assembler: Arc<Assembler>,
    pub index_set: IndexSet,
    /// gammas of the retained terms, in the order of `operator.spectral`
    pub gammas: IndexSet,
    pub operator: KroneckerOperator,
    /// f on the free dofs
    pub load: Vec<f64>,
    pub forcing: f64,
    zero_term: usize,
    zero_index: usize,
    k0: ProfileCholesky,
}

/// Coefficients u_{i, alpha} of a Galerkin approximation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GalerkinSolution {
    pub index_set: IndexSet,
    pub n_x: usize,
    pub level: u32,
    pub element: ElementKind,
    /// block-major: entry i + k n_x holds u_{i, alpha_k}
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    /// ||b - A u|| / ||b|| recomputed from the final iterate
    pub residual: f64,
}

impl GalerkinSolution {
    pub fn block(&self, k: usize) -> &[f64] {
        &self.coefficients[k * self.n_x..(k + 1) * self.n_x]
    }

    pub fn node_major(&self) -> Vec<f64> {
        to_node_major(&self.coefficients, self.n_x, self.index_set.len())
    }

    /// Node-major coefficients on all nodes of `space` (zero on the boundary).
    pub fn full_node_major(&self, space: &FESpace) -> Vec<f64> {
        let p = self.index_set.len();
        let mut out = vec![0.0; space.num_nodes() * p];
        for (i, &node) in space.free_nodes().iter().enumerate() {
            for k in 0..p {
                out[node as usize * p + k] = self.coefficients[i + k * self.n_x];
            }
        }
        out
    }
}

/// Removes terms whose stiffness matrix is identically zero (t_gamma = 0 at
/// every quadrature point, as for parameter-free fields).
fn drop_vanishing(terms: SpectralTerms, k: TermMatrices) -> (SpectralTerms, TermMatrices) {
    let nt = k.nterms;
    let keep: Vec<usize> = (0..nt)
        .filter(|&t| terms.gammas.get(t).is_zero() || k.values.iter().skip(t).step_by(nt).any(|&v| v != 0.0))
        .collect();
    if keep.len() == nt {
        return (terms, k);
    }
    let nnz = k.pattern.nnz();
    let mut values = Vec::with_capacity(nnz * keep.len());
    for e in 0..nnz {
        values.extend(keep.iter().map(|&t| k.values[e * nt + t]));
    }
    let dim = terms.gammas.dim();
    let gammas = IndexSet::from_indices(dim, keep.iter().map(|&t| terms.gammas.get(t).clone()));
    let mats = keep.iter().map(|&t| terms.mats[t].clone()).collect();
    (
        SpectralTerms { gammas, mats },
        TermMatrices {
            pattern: k.pattern,
            nterms: keep.len(),
            values,
        },
    )
}

impl KroneckerSystem {
    /// Assembles the system for T from `model` on the space of `assembler`
    /// and the index set `p`, with constant forcing f.
    pub fn assemble(
        model: Arc<CoefficientModel>,
        assembler: Arc<Assembler>,
        p: &IndexSet,
        forcing: f64,
    ) -> Result<Self> {
        let zero_index = p
            .members()
            .iter()
            .position(|a| a.is_zero())
            .ok_or(SgfemError::MissingZeroIndex)?;
        if p.dim() != model.dim() {
            return Err(SgfemError::DimensionMismatch(format!(
                "index set has {} parameters, model has {}",
                p.dim(),
                model.dim()
            )));
        }
        let table = triple_table(&model.basis, 2 * p.max_entry())?;
        let support = model.support();
        let terms = SpectralTerms::build(p, p, &table, support.as_ref());
        let ev = model.evaluator(terms.gammas.members())?;
        let stiffness = assembler.stiffness_terms(&ev);
        let (terms, stiffness) = drop_vanishing(terms, stiffness);
        let zero_term = terms
            .gammas
            .members()
            .iter()
            .position(|g| g.is_zero())
            .ok_or(SgfemError::MissingZeroIndex)?;
        let k0 = ProfileCholesky::factor(&stiffness.term(zero_term))?;
        let load = assembler.load(|_| forcing);
        log::debug!(
            "assembled system: {} spatial dofs, {} indices, {} terms",
            assembler.num_free(),
            p.len(),
            terms.len()
        );
        Ok(KroneckerSystem {
            model,
            assembler,
            index_set: p.clone(),
            gammas: terms.gammas,
            operator: KroneckerOperator::new(terms.mats, stiffness),
            load,
            forcing,
            zero_term,
            zero_index,
            k0,
        })
    }

    pub fn n_x(&self) -> usize {
        self.assembler.num_free()
    }

    pub fn num_terms(&self) -> usize {
        self.gammas.len()
    }

    pub fn len(&self) -> usize {
        self.n_x() * self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of gamma = 0 among the terms.
    pub fn zero_term(&self) -> usize {
        self.zero_term
    }

    /// Cholesky factor of K_0 (the mean-based preconditioner block).
    pub fn k0_factor(&self) -> &ProfileCholesky {
        &self.k0
    }

    /// Right-hand side g (x) f, node-major.
    pub fn rhs_node_major(&self) -> Vec<f64> {
        let p = self.index_set.len();
        let mut b = vec![0.0; self.len()];
        for (i, f) in self.load.iter().enumerate() {
            b[i * p + self.zero_index] = *f;
        }
        b
    }

    pub fn rhs(&self) -> Vec<f64> {
        to_block_major(&self.rhs_node_major(), self.n_x(), self.index_set.len())
    }

    /// A x for block-major x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (n, p) = (self.n_x(), self.index_set.len());
        let xn = to_node_major(x, n, p);
        let mut y = vec![0.0; xn.len()];
        self.operator.apply(&xn, &mut y);
        to_block_major(&y, n, p)
    }

    pub fn solve(&self, rel_tol: f64, max_iter: usize) -> Result<GalerkinSolution> {
        let (n, p) = (self.n_x(), self.index_set.len());
        let b = self.rhs_node_major();
        let (x, stats) = pcg(
            |x, y| self.operator.apply(x, y),
            |z| self.k0.solve_multi(z, p),
            &b,
            rel_tol,
            max_iter,
        )?;
        let mut ax = vec![0.0; x.len()];
        self.operator.apply(&x, &mut ax);
        let bn = norm2(&b);
        let residual = if bn == 0.0 {
            0.0
        } else {
            let r: Vec<f64> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
            norm2(&r) / bn
        };
        let PcgStats { iterations, .. } = stats;
        log::debug!("pcg: {iterations} iterations, relative residual {residual:e}");
        Ok(GalerkinSolution {
            index_set: self.index_set.clone(),
            n_x: n,
            level: self.assembler.space.grid.level,
            element: self.assembler.space.kind,
            coefficients: to_block_major(&x, n, p),
            iterations,
            residual,
        })
    }

    /// u^T A u.
    pub fn energy_norm_sq(&self, u: &GalerkinSolution) -> Result<f64> {
        if u.coefficients.len() != self.len() || u.index_set != self.index_set {
            return Err(SgfemError::DimensionMismatch(
                "solution does not belong to this system".into(),
            ));
        }
        let un = u.node_major();
        let mut au = vec![0.0; un.len()];
        self.operator.apply(&un, &mut au);
        Ok(dot(&un, &au))
    }
}
