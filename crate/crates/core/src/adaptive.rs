//! Adaptive loop: SOLVE, ESTIMATE (form B0), MARK by Doerfler, then refine
//! either the grid or the index set.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SgfemError};
use crate::estimator::{detail_index_set, estimate_with, AuxForm, SpatialOptions};
use crate::fem::{Assembler, ElementKind, FESpace, UniformGrid};
use crate::galerkin::KroneckerSystem;
use crate::polychaos::{IndexSet, MultiIndex};
use crate::randfield::CoefficientModel;

/// Smallest set of indices whose contributions reach theta times the total.
///
/// Contributions are sorted in decreasing order, ties broken by the index
/// order, and the shortest prefix meeting the bound is returned.
pub fn doerfler_mark(contributions: &[(MultiIndex, f64)], theta: f64) -> Vec<MultiIndex> {
    let total: f64 = contributions.iter().map(|c| c.1).sum();
    let mut order: Vec<&(MultiIndex, f64)> = contributions.iter().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let target = theta * total;
    let mut acc = 0.0;
    let mut out = Vec::new();
    for (m, v) in order {
        if acc >= target && !out.is_empty() {
            break;
        }
        if total == 0.0 {
            break;
        }
        out.push(m.clone());
        acc += v;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Spatial,
    Parametric,
    Stop,
}

#[derive(Clone, Debug)]
pub struct AdaptConfig {
    pub model: Arc<CoefficientModel>,
    pub initial_level: u32,
    pub initial_set: IndexSet,
    pub theta: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub forcing: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub spatial: SpatialOptions,
}

impl AdaptConfig {
    fn check(&self) -> Result<()> {
        let m = self.model.dim();
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(SgfemError::Config(format!(
                "theta must lie in (0, 1], got {}",
                self.theta
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(SgfemError::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !IndexSet::complete(m, 1).is_subset(&self.initial_set) {
            return Err(SgfemError::Config(
                "initial index set must contain the complete degree-one set".into(),
            ));
        }
        Ok(())
    }
}

/// One pass of the loop.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub level: u32,
    pub h: f64,
    pub index_set: IndexSet,
    pub detail_set: IndexSet,
    pub eta: f64,
    /// sum over elements of ||e_YP|_K||^2
    pub spatial_sq: f64,
    /// sum over the detail set of ||e^(mu)||^2
    pub parametric_sq: f64,
    /// per-index contributions, in the order of `detail_set`
    pub parametric: Vec<f64>,
    pub marked: Vec<MultiIndex>,
    pub marked_sq: f64,
    pub decision: Decision,
    /// total nodes times #P
    pub n_dofs: usize,
    pub n_free: usize,
    /// ||u^(k)||_B^2
    pub energy_sq: f64,
    pub solver_iterations: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdaptTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl AdaptTrace {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Checks the recorded decisions against the recorded sums and the nesting of spaces.
    pub fn audit(&self) -> std::result::Result<(), String> {
        for (i, r) in self.records.iter().enumerate() {
            let stop = r.eta < f64::INFINITY && r.decision == Decision::Stop;
            let expect = if stop {
                Decision::Stop
            } else if r.spatial_sq >= r.marked_sq {
                Decision::Spatial
            } else {
                Decision::Parametric
            };
            if r.decision != expect {
                return Err(format!("iteration {i}: decision {:?} does not match sums", r.decision));
            }
            if let Some(next) = self.records.get(i + 1) {
                if r.decision == Decision::Stop {
                    return Err(format!("iteration {i}: records continue after stop"));
                }
                if next.level < r.level || !r.index_set.is_subset(&next.index_set) {
                    return Err(format!("iteration {i}: spaces are not nested"));
                }
                let (sp, par) = (next.level == r.level + 1, next.index_set.len() > r.index_set.len());
                match r.decision {
                    Decision::Spatial if !(sp && !par) => return Err(format!("iteration {i}: expected h/2")),
                    Decision::Parametric if !(par && !sp) => {
                        return Err(format!("iteration {i}: expected index enrichment"))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn assembler_for(model: &CoefficientModel, level: u32, kind: ElementKind) -> Result<Arc<Assembler>> {
    let grid = UniformGrid::new(model.field.domain, level)?;
    Ok(Arc::new(Assembler::new(Arc::new(FESpace::new(grid, kind)))))
}

pub fn adapt_loop(cfg: &AdaptConfig) -> Result<AdaptTrace> {
    cfg.check()?;
    let model = &cfg.model;
    let mut level = cfg.initial_level;
    let mut p = cfg.initial_set.clone();
    let mut records = Vec::new();
    let mut assemblers: HashMap<u32, Arc<Assembler>> = HashMap::new();
    for k in 0..cfg.max_iterations {
        let t0 = Instant::now();
        let asm = match assemblers.get(&level) {
            Some(a) => a.clone(),
            None => {
                let a = assembler_for(model, level, ElementKind::Q1)?;
                assemblers.insert(level, a.clone());
                a
            }
        };
        let sys = KroneckerSystem::assemble(model.clone(), asm.clone(), &p, cfg.forcing)?;
        let u = sys.solve(cfg.rel_tol, cfg.max_iter)?;
        let energy_sq = sys.energy_norm_sq(&u)?;
        let q = detail_index_set(&p, model);
        let rep = estimate_with(&sys, &u, &q, AuxForm::B0, &cfg.spatial)?;
        let grid = &asm.space.grid;
        let (decision, marked, marked_sq) = if rep.eta < cfg.epsilon {
            (Decision::Stop, Vec::new(), 0.0)
        } else {
            let contrib: Vec<(MultiIndex, f64)> = q.iter().cloned().zip(rep.parametric.iter().copied()).collect();
            let marked = doerfler_mark(&contrib, cfg.theta);
            let marked_sq: f64 = marked.iter().map(|m| rep.parametric[q.position(m).unwrap()]).sum();
            let d = if rep.spatial_sq >= marked_sq {
                Decision::Spatial
            } else {
                Decision::Parametric
            };
            (d, marked, marked_sq)
        };
        log::info!(
            "k = {k}: h = {:e}, #P = {}, #Q = {}, eta = {:.4e} ({:?})",
            grid.h(),
            p.len(),
            q.len(),
            rep.eta,
            decision
        );
        let rec = IterationRecord {
            k,
            level,
            h: grid.h(),
            index_set: p.clone(),
            detail_set: q,
            eta: rep.eta,
            spatial_sq: rep.spatial_sq,
            parametric_sq: rep.parametric_sq,
            parametric: rep.parametric,
            marked: marked.clone(),
            marked_sq,
            decision,
            n_dofs: grid.num_vertices() * p.len(),
            n_free: sys.len(),
            energy_sq,
            solver_iterations: u.iterations,
            seconds: t0.elapsed().as_secs_f64(),
        };
        records.push(rec);
        match decision {
            Decision::Stop => {
                return Ok(AdaptTrace {
                    records,
                    converged: true,
                })
            }
            Decision::Spatial => level += 1,
            Decision::Parametric => p = p.union(&IndexSet::from_indices(p.dim(), marked)),
        }
    }
    Ok(AdaptTrace {
        records,
        converged: false,
    })
}
