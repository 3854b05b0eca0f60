//! Hierarchical a posteriori error estimates: spatial element residual
//! problems on the bubble space and parametric detail-index problems, under
//! the auxiliary forms B0 (mean coefficient) and B1 (fitted Kronecker form).

mod parametric;
mod spatial;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgfemError};
use crate::fem::Assembler;
use crate::galerkin::{GalerkinSolution, KroneckerSystem};
use crate::polychaos::{IndexSet, MultiIndex, SpectralMatrix};
use crate::randfield::CoefficientModel;

pub use parametric::{parametric_estimator_b0, parametric_estimator_b1, parametric_rhs};
pub use spatial::{local_problems, spatial_estimator, LocalProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuxForm {
    B0,
    B1,
}

/// How the fitted form B1 couples the parametric blocks of a detail error:
/// through the inverse of sum_gamma C_gamma G_gamma (the form itself), or
/// through the matrix directly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    #[default]
    Inverse,
    Direct,
}

/// Options of the element residual problems.
///
/// `volume_weight` multiplies the term grad(T).grad(u) of the element
/// residual; 1 gives the residual of the discrete problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpatialOptions {
    pub volume_weight: f64,
    pub coupling: Coupling,
}

impl Default for SpatialOptions {
    fn default() -> Self {
        SpatialOptions {
            volume_weight: 1.0,
            coupling: Coupling::Inverse,
        }
    }
}

/// Detail index set: N(P, supp t)\P for T = a^2, N(P, N(P, P))\P for T = exp(a).
pub fn detail_index_set(p: &IndexSet, model: &CoefficientModel) -> IndexSet {
    let reach = match model.support() {
        Some(s) => p.neighborhood(&s),
        None => p.neighborhood(&p.neighborhood(p)),
    };
    reach.difference(p)
}

/// C_gamma = (t_gamma, t_0) / ||t_0||^2 in L2(D), by the element Gauss rule.
pub fn b1_coefficients(model: &CoefficientModel, asm: &Assembler, gammas: &IndexSet) -> Result<Vec<f64>> {
    let mut list: Vec<MultiIndex> = vec![MultiIndex::zero(model.dim())];
    list.extend(gammas.iter().cloned());
    let ev = model.evaluator(&list)?;
    let mut s = ev.scratch();
    let mut tv = vec![0.0; list.len()];
    let mut acc = vec![0.0; list.len()];
    for e in 0..asm.space.grid.num_elements() {
        for (q, x) in asm.element_points(e).enumerate() {
            ev.eval(x, &mut s, &mut tv, None);
            let w = asm.rule.weights[q] * tv[0];
            for (a, t) in acc.iter_mut().zip(&tv) {
                *a += w * t;
            }
        }
    }
    Ok(gammas
        .iter()
        .enumerate()
        .map(|(k, g)| if g.is_zero() { 1.0 } else { acc[k + 1] / acc[0] })
        .collect())
}

/// sum_gamma C_gamma G_gamma as a dense matrix.
pub(crate) fn b1_matrix(
    model: &CoefficientModel,
    asm: &Assembler,
    gammas: &IndexSet,
    mats: &[SpectralMatrix],
) -> Result<DMatrix<f64>> {
    let c = b1_coefficients(model, asm, gammas)?;
    let n = mats.first().map_or(0, |m| m.rows);
    let mut g = DMatrix::zeros(n, n);
    for (cv, m) in c.iter().zip(mats) {
        for &(i, j, v) in &m.entries {
            g[(i as usize, j as usize)] += cv * v;
        }
    }
    Ok(g)
}

/// Estimator output for one Galerkin approximation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateReport {
    pub form: AuxForm,
    /// ||e_YP|_K||^2 per element
    pub spatial: Vec<f64>,
    pub detail_set: IndexSet,
    /// ||e^(mu)_XQ||^2 per detail index (B0 only)
    pub parametric: Vec<f64>,
    /// ||e_XQ||^2 (the coupled value under B1, the sum under B0)
    pub parametric_sq: f64,
    pub spatial_sq: f64,
    pub eta: f64,
}

impl EstimateReport {
    /// Recomputes eta from the stored contributions.
    pub fn recompute_eta(&self) -> f64 {
        let s: f64 = self.spatial.iter().sum();
        let p: f64 = match self.form {
            AuxForm::B0 => self.parametric.iter().sum(),
            AuxForm::B1 => self.parametric_sq,
        };
        (s + p).sqrt()
    }
}

/// eta = sqrt(spatial + parametric).
pub fn total_estimate(spatial_sq: f64, parametric_sq: f64) -> f64 {
    (spatial_sq + parametric_sq).sqrt()
}

pub fn estimate(sys: &KroneckerSystem, u: &GalerkinSolution, q: &IndexSet, form: AuxForm) -> Result<EstimateReport> {
    estimate_with(sys, u, q, form, &SpatialOptions::default())
}

pub fn estimate_with(
    sys: &KroneckerSystem,
    u: &GalerkinSolution,
    q: &IndexSet,
    form: AuxForm,
    opts: &SpatialOptions,
) -> Result<EstimateReport> {
    let spatial = spatial_estimator(sys, u, form, opts)?;
    let spatial_sq: f64 = spatial.iter().sum();
    let (parametric, parametric_sq) = match form {
        AuxForm::B0 => {
            let c = parametric_estimator_b0(sys, u, q)?;
            let s = c.iter().sum();
            (c, s)
        }
        AuxForm::B1 => (Vec::new(), parametric_estimator_b1(sys, u, q, opts.coupling)?),
    };
    Ok(EstimateReport {
        form,
        spatial,
        detail_set: q.clone(),
        parametric,
        parametric_sq,
        spatial_sq,
        eta: total_estimate(spatial_sq, parametric_sq),
    })
}

/// Theta = eta / sqrt(||u_ref||_B^2 - ||u||_B^2).
pub fn effectivity(eta: f64, energy_sq: f64, reference_energy_sq: f64) -> Result<f64> {
    let d = reference_energy_sq - energy_sq;
    if !(d > 0.0) {
        return Err(SgfemError::NonPositiveDenominator(d));
    }
    Ok(eta / d.sqrt())
}

#[cfg(test)]
mod tests;
