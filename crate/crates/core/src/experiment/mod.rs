//! Experiment drivers: effectivity sweeps, single solves and adaptive runs
//! described by a [`RunConfig`], with JSON and CSV output.

mod config;

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{
    apply_override, preset_names, preset_source, AdaptiveConfig, AdaptiveReference, DiscretizationConfig, DomainKind,
    EstimatorConfig, ExperimentKind, FieldKind, ModelConfig, ReferenceConfig, RunConfig, SolverConfig, SweepConfig,
    BASIS_CAPACITY, MAX_TABLE_DEGREE,
};

use crate::adaptive::{adapt_loop, assembler_for, AdaptConfig, AdaptTrace};
use crate::error::{Result, SgfemError};
use crate::estimator::{
    detail_index_set, effectivity, parametric_estimator_b0, parametric_estimator_b1, spatial_estimator, total_estimate,
    AuxForm, EstimateReport,
};
use crate::fem::ElementKind;
use crate::galerkin::KroneckerSystem;
use crate::polychaos::{IndexSet, MultiIndex, UnivariateBasis};
use crate::randfield::{cosine_field, kl_field, CoefficientModel};

pub fn build_model(md: &ModelConfig) -> Result<Arc<CoefficientModel>> {
    let basis = Arc::new(UnivariateBasis::new(md.sigma0, BASIS_CAPACITY)?);
    let field = match md.field {
        FieldKind::Kl => kl_field(md.sigma, md.ell1, md.ell2, md.m, md.domain().rect())?,
        FieldKind::Cosine => cosine_field(md.alpha_bar, md.sigma_tilde, md.m)?,
    };
    Ok(Arc::new(CoefficientModel::new(md.coefficient, field, basis)?))
}

/// Energy ||u_ref||_B^2 of a Q2 solution on the given level and index set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReferenceSolve {
    pub level: u32,
    pub h: f64,
    pub index_set: IndexSet,
    pub n_free: usize,
    pub energy_sq: f64,
    pub iterations: usize,
    pub seconds: f64,
}

pub fn reference_solve(
    model: &Arc<CoefficientModel>,
    level: u32,
    p: &IndexSet,
    forcing: f64,
    solver: &SolverConfig,
) -> Result<ReferenceSolve> {
    let t0 = Instant::now();
    let asm = assembler_for(model, level, ElementKind::Q2)?;
    let sys = KroneckerSystem::assemble(model.clone(), asm.clone(), p, forcing)?;
    let u = sys.solve(solver.rel_tol, solver.max_iter)?;
    let energy_sq = sys.energy_norm_sq(&u)?;
    log::info!(
        "reference: Q2 level {level}, #P = {}, {} unknowns, energy {energy_sq:.10e}",
        p.len(),
        sys.len()
    );
    Ok(ReferenceSolve {
        level,
        h: asm.space.grid.h(),
        index_set: p.clone(),
        n_free: sys.len(),
        energy_sq,
        iterations: u.iterations,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Estimates under one auxiliary form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormResult {
    pub form: AuxForm,
    pub spatial_sq: f64,
    pub parametric_sq: f64,
    pub eta: f64,
    pub theta: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub level: u32,
    pub h: f64,
    /// None when the model's default detail set was used
    pub detail_degree: Option<u32>,
    pub n_free: usize,
    pub num_indices: usize,
    pub num_detail: usize,
    pub energy_sq: f64,
    pub reference_energy_sq: Option<f64>,
    pub solver_iterations: usize,
    pub solver_residual: f64,
    pub results: Vec<FormResult>,
}

impl SweepRow {
    pub fn form(&self, f: AuxForm) -> Option<&FormResult> {
        self.results.iter().find(|r| r.form == f)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub references: Vec<ReferenceSolve>,
    /// full estimator output, kept for single solves only
    pub reports: Vec<EstimateReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdaptiveResult {
    pub amplitude: f64,
    pub trace: AdaptTrace,
    pub reference: Option<ReferenceSolve>,
    /// Theta_0 per iteration, when a reference was computed
    pub effectivities: Vec<f64>,
}

impl AdaptiveResult {
    /// Number of iterations ending in an index enrichment.
    pub fn parametric_refinements(&self) -> usize {
        self.trace
            .records
            .iter()
            .filter(|r| r.decision == crate::adaptive::Decision::Parametric)
            .count()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunResult {
    Sweep(SweepResult),
    Adaptive(AdaptiveResult),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagnostic {
    pub amplitude: f64,
    /// sampled minimum and maximum of T (grid times parameter vertices)
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub name: String,
    pub version: String,
    pub config: RunConfig,
    pub diagnostics: Vec<Diagnostic>,
    pub result: RunResult,
    pub seconds: f64,
}

fn index_set_of(cfg: &RunConfig) -> Result<IndexSet> {
    let m = cfg.model.m;
    match &cfg.discretization.indices {
        Some(list) => {
            let set = IndexSet::from_indices(m, list.iter().map(|v| MultiIndex::new(v.clone())));
            if set.len() != list.len() {
                return Err(SgfemError::Config("discretization.indices has duplicates".into()));
            }
            Ok(set)
        }
        None => Ok(IndexSet::complete(m, cfg.discretization.degree)),
    }
}

fn check(cfg: &RunConfig) -> Result<()> {
    let v = cfg.validate();
    if v.is_empty() {
        Ok(())
    } else {
        Err(SgfemError::Config(v.join("; ")))
    }
}

/// Runs the configured experiment.
pub fn run(cfg: &RunConfig) -> Result<RunRecord> {
    check(cfg)?;
    let t0 = Instant::now();
    let mut diagnostics = Vec::new();
    for a in cfg.amplitudes() {
        let model = build_model(&cfg.model.with_amplitude(a))?;
        let (t_min, t_max) = model.sample_bounds();
        diagnostics.push(Diagnostic {
            amplitude: a,
            t_min,
            t_max,
        });
    }
    let result = match cfg.experiment {
        ExperimentKind::EffectivitySweep | ExperimentKind::SingleSolve => RunResult::Sweep(run_sweep(cfg)?),
        ExperimentKind::Adaptive => RunResult::Adaptive(run_adaptive(cfg)?),
    };
    Ok(RunRecord {
        name: cfg.name.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        diagnostics,
        result,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

pub fn run_sweep(cfg: &RunConfig) -> Result<SweepResult> {
    check(cfg)?;
    let p = index_set_of(cfg)?;
    let single = cfg.experiment == ExperimentKind::SingleSolve;
    let m = cfg.model.m;
    let mut rows = Vec::new();
    let mut references = Vec::new();
    let mut reports = Vec::new();
    let mut levels = cfg.discretization.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let finest = *levels.last().unwrap();
    for amp in cfg.amplitudes() {
        let model = build_model(&cfg.model.with_amplitude(amp))?;
        let forcing = cfg.model.forcing;
        let opts = cfg.estimator.spatial_options();
        let reference = if cfg.reference.enabled {
            let level = cfg.reference.level.unwrap_or(finest + 1);
            let degree = cfg.reference.degree.unwrap_or(p.max_degree() + 2);
            let r = reference_solve(&model, level, &IndexSet::complete(m, degree), forcing, &cfg.solver)?;
            references.push(r.clone());
            Some(r)
        } else {
            None
        };
        let details: Vec<(Option<u32>, IndexSet)> = if cfg.estimator.detail_degrees.is_empty() {
            vec![(None, detail_index_set(&p, &model))]
        } else {
            cfg.estimator
                .detail_degrees
                .iter()
                .map(|&d| (Some(d), IndexSet::complete(m, d).difference(&p)))
                .collect()
        };
        for &level in &levels {
            let asm = assembler_for(&model, level, ElementKind::Q1)?;
            let sys = KroneckerSystem::assemble(model.clone(), asm.clone(), &p, forcing)?;
            let u = sys.solve(cfg.solver.rel_tol, cfg.solver.max_iter)?;
            let energy_sq = sys.energy_norm_sq(&u)?;
            let spatial: Vec<(AuxForm, Vec<f64>)> = cfg
                .estimator
                .forms
                .iter()
                .map(|&f| spatial_estimator(&sys, &u, f, &opts).map(|s| (f, s)))
                .collect::<Result<_>>()?;
            for (dd, q) in &details {
                let mut results = Vec::new();
                for (form, sp) in &spatial {
                    let spatial_sq: f64 = sp.iter().sum();
                    let (per_index, parametric_sq) = match form {
                        AuxForm::B0 => {
                            let c = parametric_estimator_b0(&sys, &u, q)?;
                            let s = c.iter().sum();
                            (c, s)
                        }
                        AuxForm::B1 => (Vec::new(), parametric_estimator_b1(&sys, &u, q, opts.coupling)?),
                    };
                    let eta = total_estimate(spatial_sq, parametric_sq);
                    let theta = match &reference {
                        Some(r) => Some(effectivity(eta, energy_sq, r.energy_sq)?),
                        None => None,
                    };
                    log::info!(
                        "amplitude {amp}, level {level}, d~ {dd:?}, {form:?}: eta = {eta:.6e}, theta = {theta:?}"
                    );
                    if single {
                        reports.push(EstimateReport {
                            form: *form,
                            spatial: sp.clone(),
                            detail_set: q.clone(),
                            parametric: per_index,
                            parametric_sq,
                            spatial_sq,
                            eta,
                        });
                    }
                    results.push(FormResult {
                        form: *form,
                        spatial_sq,
                        parametric_sq,
                        eta,
                        theta,
                    });
                }
                rows.push(SweepRow {
                    amplitude: amp,
                    level,
                    h: asm.space.grid.h(),
                    detail_degree: *dd,
                    n_free: sys.n_x(),
                    num_indices: p.len(),
                    num_detail: q.len(),
                    energy_sq,
                    reference_energy_sq: reference.as_ref().map(|r| r.energy_sq),
                    solver_iterations: u.iterations,
                    solver_residual: u.residual,
                    results,
                });
            }
        }
    }
    Ok(SweepResult {
        rows,
        references,
        reports,
    })
}

pub fn run_adaptive(cfg: &RunConfig) -> Result<AdaptiveResult> {
    check(cfg)?;
    let a = &cfg.adaptive;
    let m = cfg.model.m;
    let model = build_model(&cfg.model)?;
    let ac = AdaptConfig {
        model: model.clone(),
        initial_level: a.initial_level,
        initial_set: IndexSet::complete(m, a.initial_degree),
        theta: a.theta,
        epsilon: a.epsilon,
        max_iterations: a.max_iterations,
        forcing: cfg.model.forcing,
        rel_tol: cfg.solver.rel_tol,
        max_iter: cfg.solver.max_iter,
        spatial: cfg.estimator.spatial_options(),
    };
    let trace = adapt_loop(&ac)?;
    let (reference, effectivities) = if cfg.reference.enabled {
        let last = trace.last().expect("at least one iteration");
        let (level, set) = match cfg.reference.adaptive {
            AdaptiveReference::Refined => (last.level + 1, IndexSet::complete(m, last.index_set.max_degree() + 1)),
            AdaptiveReference::Detail => (last.level, last.index_set.union(&last.detail_set)),
        };
        let r = reference_solve(&model, level, &set, cfg.model.forcing, &cfg.solver)?;
        let th = trace
            .records
            .iter()
            .map(|rec| effectivity(rec.eta, rec.energy_sq, r.energy_sq))
            .collect::<Result<Vec<f64>>>()?;
        (Some(r), th)
    } else {
        (None, Vec::new())
    };
    Ok(AdaptiveResult {
        amplitude: cfg.model.amplitude(),
        trace,
        reference,
        effectivities,
    })
}

/// Six significant digits in positional notation.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        format!("{:.*}", (5 - mag) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn opt(x: Option<f64>, f: fn(f64) -> String) -> String {
    x.map(f).unwrap_or_default()
}

fn sci(x: f64) -> String {
    format!("{x:.6e}")
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

fn join_indices<'a>(it: impl IntoIterator<Item = &'a MultiIndex>) -> String {
    it.into_iter().map(|m| m.to_string()).collect::<Vec<_>>().join(";")
}

impl RunRecord {
    /// Main results table: one row per (amplitude, level, detail set) for
    /// sweeps, a one-row summary for adaptive runs.
    pub fn table_csv(&self) -> String {
        match &self.result {
            RunResult::Sweep(s) => {
                let header = [
                    "amplitude",
                    "level",
                    "h",
                    "detail_degree",
                    "n_free",
                    "num_indices",
                    "num_detail",
                    "eta0",
                    "theta0",
                    "eta1",
                    "theta1",
                ];
                let rows = s
                    .rows
                    .iter()
                    .map(|r| {
                        let f0 = r.form(AuxForm::B0);
                        let f1 = r.form(AuxForm::B1);
                        vec![
                            r.amplitude.to_string(),
                            r.level.to_string(),
                            r.h.to_string(),
                            r.detail_degree.map(|d| d.to_string()).unwrap_or_default(),
                            r.n_free.to_string(),
                            r.num_indices.to_string(),
                            r.num_detail.to_string(),
                            opt(f0.map(|f| f.eta), sci),
                            opt(f0.and_then(|f| f.theta), sig6),
                            opt(f1.map(|f| f.eta), sci),
                            opt(f1.and_then(|f| f.theta), sig6),
                        ]
                    })
                    .collect();
                csv_string(&header, rows)
            }
            RunResult::Adaptive(a) => {
                let header = [
                    "amplitude",
                    "converged",
                    "K",
                    "h_K",
                    "level_K",
                    "num_indices",
                    "eta_K",
                    "N_K",
                    "parametric_refinements",
                    "final_index_set",
                ];
                let rows = a
                    .trace
                    .last()
                    .map(|l| {
                        vec![vec![
                            a.amplitude.to_string(),
                            a.trace.converged.to_string(),
                            l.k.to_string(),
                            l.h.to_string(),
                            l.level.to_string(),
                            l.index_set.len().to_string(),
                            sci(l.eta),
                            l.n_dofs.to_string(),
                            a.parametric_refinements().to_string(),
                            join_indices(l.index_set.iter()),
                        ]]
                    })
                    .unwrap_or_default();
                csv_string(&header, rows)
            }
        }
    }

    /// Per-iteration trace of an adaptive run.
    pub fn trace_csv(&self) -> Option<String> {
        let RunResult::Adaptive(a) = &self.result else {
            return None;
        };
        let header = [
            "k",
            "level",
            "h",
            "num_indices",
            "num_detail",
            "spatial_estimate",
            "parametric_estimate",
            "eta",
            "decision",
            "N",
            "marked",
            "theta0",
        ];
        let rows = a
            .trace
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                vec![
                    r.k.to_string(),
                    r.level.to_string(),
                    r.h.to_string(),
                    r.index_set.len().to_string(),
                    r.detail_set.len().to_string(),
                    sci(r.spatial_sq.sqrt()),
                    sci(r.parametric_sq.sqrt()),
                    sci(r.eta),
                    format!("{:?}", r.decision).to_lowercase(),
                    r.n_dofs.to_string(),
                    join_indices(&r.marked),
                    opt(a.effectivities.get(i).copied(), sig6),
                ]
            })
            .collect();
        Some(csv_string(&header, rows))
    }
}
