//! Run configuration: a TOML document with dotted sections, optionally
//! started from a bundled preset and patched with `key=value` overrides.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SgfemError};
use crate::estimator::{AuxForm, Coupling, SpatialOptions};
use crate::randfield::{CoefficientKind, Rect};

/// Basis capacity used for every run.
pub const BASIS_CAPACITY: usize = 30;
/// Largest polynomial degree a triple-product table may be asked for.
pub const MAX_TABLE_DEGREE: u32 = 19;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EffectivitySweep,
    Adaptive,
    SingleSolve,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Kl,
    Cosine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    /// (-1, 1)^2
    BiUnit,
    /// (0, 1)^2
    Unit,
}

impl DomainKind {
    pub fn rect(self) -> Rect {
        match self {
            DomainKind::BiUnit => Rect::bi_unit(),
            DomainKind::Unit => Rect::unit(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub coefficient: CoefficientKind,
    pub field: FieldKind,
    /// defaults to (-1,1)^2 for the KL field and (0,1)^2 for the cosine field
    pub domain: Option<DomainKind>,
    pub sigma: f64,
    pub ell1: f64,
    pub ell2: f64,
    pub alpha_bar: f64,
    pub sigma_tilde: f64,
    pub m: usize,
    pub sigma0: f64,
    pub forcing: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            coefficient: CoefficientKind::Exp,
            field: FieldKind::Kl,
            domain: None,
            sigma: 0.2,
            ell1: 1.0,
            ell2: 1.0,
            alpha_bar: 0.4,
            sigma_tilde: 2.0,
            m: 3,
            sigma0: 1.0,
            forcing: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn domain(&self) -> DomainKind {
        self.domain.unwrap_or(match self.field {
            FieldKind::Kl => DomainKind::BiUnit,
            FieldKind::Cosine => DomainKind::Unit,
        })
    }

    /// sigma for the KL field, alpha_bar for the cosine field.
    pub fn amplitude(&self) -> f64 {
        match self.field {
            FieldKind::Kl => self.sigma,
            FieldKind::Cosine => self.alpha_bar,
        }
    }

    pub fn with_amplitude(&self, a: f64) -> ModelConfig {
        let mut m = self.clone();
        match m.field {
            FieldKind::Kl => m.sigma = a,
            FieldKind::Cosine => m.alpha_bar = a,
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationConfig {
    /// grid levels; level L has 2^L elements per side
    pub levels: Vec<u32>,
    /// total degree d of the complete set P_{M,d}
    pub degree: u32,
    /// explicit index set, replacing P_{M,d} when given
    pub indices: Option<Vec<Vec<u32>>>,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig {
            levels: vec![2],
            degree: 2,
            indices: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    pub forms: Vec<AuxForm>,
    /// Q = P_{M,d~} \ P for each listed d~; empty selects the model's default detail set
    pub detail_degrees: Vec<u32>,
    /// weight of grad(T).grad(u) in the element residual
    pub volume_weight: f64,
    pub coupling: Coupling,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            forms: vec![AuxForm::B0, AuxForm::B1],
            detail_degrees: Vec::new(),
            volume_weight: 1.0,
            coupling: Coupling::Inverse,
        }
    }
}

impl EstimatorConfig {
    pub fn spatial_options(&self) -> SpatialOptions {
        SpatialOptions {
            volume_weight: self.volume_weight,
            coupling: self.coupling,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// sigma (KL) or alpha_bar (cosine) values; empty uses the model value
    pub amplitudes: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaptiveReference {
    /// Q2 on h_K / 2 with P_{M, d_K + 1}
    Refined,
    /// Q2 on h_K with P_K united with the final detail set
    Detail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub enabled: bool,
    /// Q2 reference level (sweeps); default one level above the finest run level
    pub level: Option<u32>,
    /// reference index set P_{M,degree} (sweeps); default d + 2
    pub degree: Option<u32>,
    /// reference for effectivities along an adaptive run
    pub adaptive: AdaptiveReference,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            enabled: true,
            level: None,
            degree: None,
            adaptive: AdaptiveReference::Detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptiveConfig {
    pub initial_level: u32,
    /// P_0 = P_{M, initial_degree}
    pub initial_degree: u32,
    pub theta: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            initial_level: 1,
            initial_degree: 1,
            theta: 0.9,
            epsilon: 2e-2,
            max_iterations: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: crate::galerkin::DEFAULT_REL_TOL,
            max_iter: crate::galerkin::DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub name: String,
    pub experiment: ExperimentKind,
    pub model: ModelConfig,
    pub discretization: DiscretizationConfig,
    pub estimator: EstimatorConfig,
    pub sweep: SweepConfig,
    pub reference: ReferenceConfig,
    pub adaptive: AdaptiveConfig,
    pub solver: SolverConfig,
    /// only used by sampled diagnostics; the method is deterministic
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            name: "default".into(),
            experiment: ExperimentKind::SingleSolve,
            model: ModelConfig::default(),
            discretization: DiscretizationConfig::default(),
            estimator: EstimatorConfig::default(),
            sweep: SweepConfig::default(),
            reference: ReferenceConfig::default(),
            adaptive: AdaptiveConfig::default(),
            solver: SolverConfig::default(),
            seed: 0,
        }
    }
}

const PRESETS: &[(&str, &str)] = &[
    ("default", include_str!("../../../../presets/default.toml")),
    ("table1", include_str!("../../../../presets/table1.toml")),
    ("table2", include_str!("../../../../presets/table2.toml")),
    ("table3", include_str!("../../../../presets/table3.toml")),
    ("table4", include_str!("../../../../presets/table4.toml")),
    (
        "table5-sigma0.4",
        include_str!("../../../../presets/table5-sigma0.4.toml"),
    ),
    (
        "table5-sigma0.8",
        include_str!("../../../../presets/table5-sigma0.8.toml"),
    ),
    ("table5-sigma1", include_str!("../../../../presets/table5-sigma1.toml")),
    (
        "table6-alpha0.4",
        include_str!("../../../../presets/table6-alpha0.4.toml"),
    ),
    (
        "table6-alpha0.6",
        include_str!("../../../../presets/table6-alpha0.6.toml"),
    ),
    (
        "table6-alpha0.8",
        include_str!("../../../../presets/table6-alpha0.8.toml"),
    ),
    ("table6-alpha1", include_str!("../../../../presets/table6-alpha1.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.0).collect()
}

pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `a.b.c=value` to a TOML table; the value is parsed as TOML,
/// falling back to a bare string.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| SgfemError::Config(format!("override '{assignment}' is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(SgfemError::Config(format!("bad override key '{key}'")));
    }
    let mut table = doc;
    for part in &path[..path.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| SgfemError::Config(format!("override '{key}': '{part}' is not a section")))?;
    }
    table.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    pub fn from_toml(src: &str, overrides: &[String]) -> Result<RunConfig> {
        let mut doc: toml::Table = toml::from_str(src).map_err(|e| SgfemError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| SgfemError::Config(e.to_string()))
    }

    pub fn from_preset(name: &str, overrides: &[String]) -> Result<RunConfig> {
        let src = preset_source(name).ok_or_else(|| {
            SgfemError::Config(format!(
                "unknown preset '{name}' (available: {})",
                preset_names().join(", ")
            ))
        })?;
        RunConfig::from_toml(src, overrides)
    }

    /// Fully expanded configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        if self.sweep.amplitudes.is_empty() {
            vec![self.model.amplitude()]
        } else {
            self.sweep.amplitudes.clone()
        }
    }

    /// Every violated constraint; empty iff the configuration can run.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let md = &self.model;
        let pos = |v: &mut Vec<String>, name: &str, x: f64| {
            if !(x > 0.0 && x.is_finite()) {
                v.push(format!("model.{name} must be positive and finite, got {x}"));
            }
        };
        if md.m == 0 {
            v.push("model.m must be at least 1".into());
        }
        pos(&mut v, "sigma0", md.sigma0);
        if !md.forcing.is_finite() {
            v.push("model.forcing must be finite".into());
        }
        match md.field {
            FieldKind::Kl => {
                pos(&mut v, "ell1", md.ell1);
                pos(&mut v, "ell2", md.ell2);
            }
            FieldKind::Cosine => {
                if !(md.sigma_tilde > 1.0) {
                    v.push(format!("model.sigma_tilde must exceed 1, got {}", md.sigma_tilde));
                }
                if md.domain() != DomainKind::Unit {
                    v.push("the cosine field is defined on the unit square only".into());
                }
            }
        }
        for a in self.amplitudes() {
            if !(a > 0.0 && a.is_finite()) {
                v.push(format!("field amplitude must be positive, got {a}"));
            }
        }
        let dz = &self.discretization;
        let run_degree = match &dz.indices {
            Some(list) => {
                if !list.iter().any(|a| a.iter().all(|&e| e == 0)) {
                    v.push("discretization.indices must contain the zero index".into());
                }
                if list.iter().any(|a| a.len() != md.m) {
                    v.push(format!(
                        "discretization.indices entries must have length model.m = {}",
                        md.m
                    ));
                }
                list.iter().map(|a| a.iter().sum::<u32>()).max().unwrap_or(0)
            }
            None => dz.degree,
        };
        let run_entry = match &dz.indices {
            Some(list) => list.iter().flatten().copied().max().unwrap_or(0),
            None => dz.degree,
        };
        let sol = &self.solver;
        if !(sol.rel_tol > 0.0 && sol.rel_tol < 1.0) {
            v.push(format!("solver.rel_tol must lie in (0, 1), got {}", sol.rel_tol));
        }
        if sol.max_iter == 0 {
            v.push("solver.max_iter must be at least 1".into());
        }
        if self.estimator.forms.is_empty() {
            v.push("estimator.forms must not be empty".into());
        }
        if !self.estimator.volume_weight.is_finite() {
            v.push("estimator.volume_weight must be finite".into());
        }
        match self.experiment {
            ExperimentKind::EffectivitySweep | ExperimentKind::SingleSolve => {
                if dz.levels.is_empty() {
                    v.push("discretization.levels must not be empty".into());
                }
                if dz.levels.iter().any(|&l| l == 0 || l > 12) {
                    v.push("discretization.levels must lie in 1..=12".into());
                }
                for &d in &self.estimator.detail_degrees {
                    if d <= run_degree {
                        v.push(format!(
                            "estimator.detail_degrees entry {d} must exceed the run degree {run_degree}"
                        ));
                    }
                    if 2 * d > MAX_TABLE_DEGREE {
                        v.push(format!(
                            "estimator.detail_degrees entry {d} exceeds the supported degree"
                        ));
                    }
                }
                if self.estimator.detail_degrees.is_empty() && 4 * run_entry > MAX_TABLE_DEGREE {
                    v.push("run degree too high for the default detail set".into());
                }
                if self.reference.enabled {
                    let finest = dz.levels.iter().copied().max().unwrap_or(0);
                    if let Some(l) = self.reference.level {
                        if l < finest {
                            v.push(format!(
                                "reference.level {l} is coarser than the finest run level {finest}"
                            ));
                        }
                        if l > 12 {
                            v.push("reference.level must be at most 12".into());
                        }
                    }
                    let rd = self.reference.degree.unwrap_or(run_degree + 2);
                    if rd <= run_degree {
                        v.push(format!("reference.degree {rd} must exceed the run degree {run_degree}"));
                    }
                    if 2 * rd > MAX_TABLE_DEGREE {
                        v.push(format!("reference.degree {rd} exceeds the supported degree"));
                    }
                }
            }
            ExperimentKind::Adaptive => {
                let a = &self.adaptive;
                if !(a.theta > 0.0 && a.theta <= 1.0) {
                    v.push(format!("adaptive.theta must lie in (0, 1], got {}", a.theta));
                }
                if !(a.epsilon > 0.0) {
                    v.push(format!("adaptive.epsilon must be positive, got {}", a.epsilon));
                }
                if a.initial_degree < 1 {
                    v.push("adaptive.initial_degree must be at least 1".into());
                }
                if a.initial_level == 0 || a.initial_level > 12 {
                    v.push("adaptive.initial_level must lie in 1..=12".into());
                }
                if a.max_iterations == 0 {
                    v.push("adaptive.max_iterations must be at least 1".into());
                }
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for name in preset_names() {
            let c = RunConfig::from_preset(name, &[]).unwrap();
            assert!(c.validate().is_empty(), "{name}: {:?}", c.validate());
            // expanded form round-trips
            let back = RunConfig::from_toml(&c.to_toml(), &[]).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn overrides_and_violations() {
        let c = RunConfig::from_preset("default", &["model.m=0".into()]).unwrap();
        assert_eq!(c.validate().len(), 1);
        let c = RunConfig::from_preset(
            "table6-alpha0.4",
            &["model.sigma_tilde=0.5".into(), "adaptive.theta=0".into()],
        )
        .unwrap();
        let v = c.validate();
        assert_eq!(v.len(), 2, "{v:?}");
        assert!(v.iter().any(|s| s.contains("sigma_tilde")));
        assert!(v.iter().any(|s| s.contains("theta")));
        let c = RunConfig::from_preset("table1", &["sweep.amplitudes=[0.3]".into(), "name=x".into()]).unwrap();
        assert_eq!(c.amplitudes(), vec![0.3]);
        assert_eq!(c.name, "x");
        assert!(RunConfig::from_preset("default", &["model.bogus=1".into()]).is_err());
        assert!(RunConfig::from_preset("default", &["novalue".into()]).is_err());
        assert!(RunConfig::from_preset("nope", &[]).is_err());
    }
}
