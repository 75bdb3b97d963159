//! Declarative experiment configs (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{make_conical_disc, DiscFamily, ScanGrid};
use crate::models::{
    make_circle_dirac, make_commuting_loop, make_fullturn_loop, make_halfturn_loop, make_odd_multiplicity_base,
    make_planar_loop, make_spin_loop_with_turns, CircleDiracModel, OperatorFamily, SymmetricOperator,
};
use crate::spectral::{eigenvalues, SpectralWindow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    Track,
    Holonomy,
    LassoScan,
    Properties,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Track => "track",
            Self::Holonomy => "holonomy",
            Self::LassoScan => "lasso-scan",
            Self::Properties => "properties",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must agree with the requested experiment.
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    pub model: ModelSpec,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub disc: DiscSpec,
    #[serde(default)]
    pub properties: PropertiesSpec,
    #[serde(default)]
    pub expect: Expectations,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    HalfTurn { base: BaseSpec },
    FullTurn { base: BaseSpec },
    Planar { base: BaseSpec, half_turns: u32 },
    Spin {
        m: usize,
        base: BaseSpec,
        #[serde(default = "one")]
        turns: u32,
    },
    Commuting { diagonal: Vec<f64>, amplitude: f64 },
    CircleDirac { truncation: usize, delta: f64 },
    Conical,
    Constant { base: BaseSpec },
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    Diagonal(Vec<f64>),
    Rows(Vec<Vec<f64>>),
    Clusters {
        /// `[value, multiplicity]` pairs.
        values: Vec<(f64, usize)>,
        epsilon: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

/// Either an explicit `(lower, upper, k)` or `lowest: k`, the window around
/// the `k` lowest eigenvalues at the basepoint.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lowest: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Uniform parameter samples (spectra) and initial transport samples.
    pub samples: usize,
    pub rings: usize,
    pub angles: usize,
    pub max_candidates: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { samples: 64, rings: 32, angles: 64, max_candidates: 8 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSpec {
    pub refine: f64,
    /// Multiplicity clustering in window membership checks.
    pub cluster: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self { refine: 1e-8, cluster: 1e-8 }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CenterSpec {
    #[default]
    BoundaryMean,
    Basepoint,
    Operator(BaseSpec),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscSpec {
    pub center: CenterSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropertiesSpec {
    /// Manifold dimension, decides whether symmetry about zero is checked.
    pub m: usize,
    /// Defaults to `N − 1` for circle models, `∞` otherwise.
    pub cutoff: Option<f64>,
}

impl Default for PropertiesSpec {
    fn default() -> Self {
        Self { m: 1, cutoff: None }
    }
}

/// Checks applied to the results; each unset field is skipped.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Expectations {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign_matches_prediction: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_isospectral_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_valid: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_found: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_scan_gap_above: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub has_zero: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_exponent: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_oracle_error: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

fn config_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { field: field.into(), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<root>".to_string() } else { path };
            config_err(field, e.into_inner().to_string())
        })?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Replaces every base seed by `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        let set = |b: &mut BaseSpec| {
            if let BaseSpec::Clusters { seed: s, .. } = b {
                *s = Some(seed);
            }
        };
        match &mut self.model {
            ModelSpec::HalfTurn { base }
            | ModelSpec::FullTurn { base }
            | ModelSpec::Planar { base, .. }
            | ModelSpec::Spin { base, .. }
            | ModelSpec::Constant { base } => set(base),
            _ => {}
        }
        if let CenterSpec::Operator(b) = &mut self.disc.center {
            set(b);
        }
    }

    /// Checks everything that can be checked without building operators.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(config_err("kind", format!("config is for `{}`, not `{}`", k.name(), kind.name())));
            }
        }
        match &self.model {
            ModelSpec::HalfTurn { base }
            | ModelSpec::FullTurn { base }
            | ModelSpec::Planar { base, .. }
            | ModelSpec::Spin { base, .. }
            | ModelSpec::Constant { base } => validate_base(base, "model.base")?,
            ModelSpec::Commuting { diagonal, amplitude } => {
                if diagonal.is_empty() {
                    return Err(config_err("model.diagonal", "must not be empty"));
                }
                if !amplitude.is_finite() {
                    return Err(config_err("model.amplitude", "must be finite"));
                }
            }
            ModelSpec::CircleDirac { truncation, delta } => {
                if *truncation == 0 {
                    return Err(config_err("model.truncation", "must be positive"));
                }
                if *delta != 0.0 && *delta != 0.5 {
                    return Err(config_err("model.delta", "must be 0 or 0.5"));
                }
            }
            ModelSpec::Conical => {}
        }
        if let CenterSpec::Operator(b) = &self.disc.center {
            validate_base(b, "disc.center.operator")?;
        }
        if let Some(w) = &self.window {
            w.check()?;
        }
        let needs_window = matches!(kind, ExperimentKind::Track | ExperimentKind::Holonomy | ExperimentKind::LassoScan);
        if needs_window && self.window.is_none() {
            return Err(config_err("window", format!("required for `{}`", kind.name())));
        }
        let g = &self.grid;
        if g.samples == 0 {
            return Err(config_err("grid.samples", "must be positive"));
        }
        if kind == ExperimentKind::LassoScan {
            if g.rings == 0 {
                return Err(config_err("grid.rings", "must be positive"));
            }
            if g.angles == 0 {
                return Err(config_err("grid.angles", "must be positive"));
            }
        }
        if !(self.tolerances.refine > 0.0) {
            return Err(config_err("tolerances.refine", "must be positive"));
        }
        if !(self.tolerances.cluster > 0.0) {
            return Err(config_err("tolerances.cluster", "must be positive"));
        }
        if let Some((lo, hi)) = self.expect.growth_exponent {
            if !(lo <= hi) {
                return Err(config_err("expect.growth_exponent", "expected [low, high] with low <= high"));
            }
        }
        if let Some(s) = self.expect.sign {
            if s != 1 && s != -1 {
                return Err(config_err("expect.sign", "must be 1 or -1"));
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<BuiltModel> {
        build_model(&self.model)
    }

    pub fn resolve_window(&self, basepoint: &SymmetricOperator) -> Result<Option<SpectralWindow>> {
        self.window.as_ref().map(|w| w.resolve(basepoint)).transpose()
    }

    pub fn scan_grid(&self) -> ScanGrid {
        ScanGrid { rings: self.grid.rings, angles: self.grid.angles }
    }

    pub fn build_disc(&self, model: &BuiltModel) -> Result<DiscFamily> {
        if let BuiltModel::Conical(d) = model {
            return Ok(d.clone());
        }
        let boundary = model.family();
        if boundary.domain() != crate::models::Domain::Circle {
            return Err(config_err("model", "a disc needs a loop model"));
        }
        match &self.disc.center {
            CenterSpec::BoundaryMean => DiscFamily::with_boundary_mean(boundary, 4 * self.grid.samples),
            CenterSpec::Basepoint => DiscFamily::with_basepoint_center(boundary),
            CenterSpec::Operator(b) => DiscFamily::new(build_base(b, "disc.center.operator")?, boundary),
        }
    }
}

fn validate_base(base: &BaseSpec, field: &str) -> Result<()> {
    match base {
        BaseSpec::Diagonal(d) if d.is_empty() => Err(config_err(format!("{field}.diagonal"), "must not be empty")),
        BaseSpec::Rows(r) if r.is_empty() => Err(config_err(format!("{field}.rows"), "must not be empty")),
        BaseSpec::Clusters { values, epsilon, seed } => {
            if values.is_empty() {
                return Err(config_err(format!("{field}.clusters.values"), "must not be empty"));
            }
            if !(*epsilon >= 0.0) {
                return Err(config_err(format!("{field}.clusters.epsilon"), "must be non-negative"));
            }
            if *epsilon > 0.0 && seed.is_none() {
                return Err(config_err(
                    format!("{field}.clusters.seed"),
                    "required for a randomized base (or pass --seed)",
                ));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn build_base(base: &BaseSpec, field: &str) -> Result<SymmetricOperator> {
    validate_base(base, field)?;
    let wrap = |e: Error| config_err(field, e.to_string());
    match base {
        BaseSpec::Diagonal(d) => Ok(SymmetricOperator::from_diagonal(d)),
        BaseSpec::Rows(r) => SymmetricOperator::from_rows(r).map_err(wrap),
        BaseSpec::Clusters { values, epsilon, seed } => {
            make_odd_multiplicity_base(values, *epsilon, seed.unwrap_or(0)).map_err(wrap)
        }
    }
}

impl WindowSpec {
    fn check(&self) -> Result<()> {
        match (self.lower, self.upper, self.k, self.lowest) {
            (Some(lower), Some(upper), Some(k), None) => {
                SpectralWindow::new(lower, upper, k)
                    .map_err(|_| config_err("window", format!("need lower < upper, got lower = {lower}, upper = {upper}")))?;
                Ok(())
            }
            (None, None, None, Some(0)) => Err(config_err("window.lowest", "must be positive")),
            (None, None, None, Some(_)) => Ok(()),
            _ => Err(config_err("window", "give either `lower`, `upper` and `k`, or `lowest`")),
        }
    }

    pub fn resolve(&self, basepoint: &SymmetricOperator) -> Result<SpectralWindow> {
        self.check()?;
        if let Some(k) = self.lowest {
            let values = eigenvalues(basepoint)?;
            return lowest_window(&values, k).ok_or_else(|| {
                config_err("window.lowest", format!("{k} exceeds the dimension {}", values.len()))
            });
        }
        SpectralWindow::new(self.lower.unwrap_or_default(), self.upper.unwrap_or_default(), self.k.unwrap_or_default())
    }
}

/// Window from below the spectrum to the midpoint of `λ_k` and `λ_{k+1}`
/// (or one unit above the top when `k` is the dimension).
pub fn lowest_window(values: &[f64], k: usize) -> Option<SpectralWindow> {
    if k == 0 || k > values.len() {
        return None;
    }
    let lower = values[0] - 1.0;
    let upper = match values.get(k) {
        Some(next) => 0.5 * (values[k - 1] + next),
        None => values[k - 1] + 1.0,
    };
    SpectralWindow::new(lower, upper, k).ok()
}

/// Operators built from a [`ModelSpec`].
#[derive(Clone, Debug)]
pub enum BuiltModel {
    Family(OperatorFamily),
    Circle(CircleDiracModel),
    Conical(DiscFamily),
}

impl BuiltModel {
    pub fn family(&self) -> OperatorFamily {
        match self {
            Self::Family(f) => f.clone(),
            Self::Circle(c) => c.family(),
            Self::Conical(d) => d.boundary().clone(),
        }
    }

    /// True when the model is a single operator rather than a path or loop.
    pub fn is_static(&self) -> bool {
        matches!(self, Self::Circle(_))
    }
}

pub fn build_model(spec: &ModelSpec) -> Result<BuiltModel> {
    let wrap = |e: Error| config_err("model", e.to_string());
    Ok(match spec {
        ModelSpec::HalfTurn { base } => {
            BuiltModel::Family(make_halfturn_loop(build_base(base, "model.base")?).map_err(wrap)?.family())
        }
        ModelSpec::FullTurn { base } => {
            BuiltModel::Family(make_fullturn_loop(build_base(base, "model.base")?).map_err(wrap)?.family())
        }
        ModelSpec::Planar { base, half_turns } => BuiltModel::Family(
            make_planar_loop(build_base(base, "model.base")?, *half_turns).map_err(wrap)?.family(),
        ),
        ModelSpec::Spin { m, base, turns } => BuiltModel::Family(
            make_spin_loop_with_turns(*m, build_base(base, "model.base")?, *turns).map_err(wrap)?.family(),
        ),
        ModelSpec::Commuting { diagonal, amplitude } => BuiltModel::Family(make_commuting_loop(diagonal, *amplitude)),
        ModelSpec::CircleDirac { truncation, delta } => {
            BuiltModel::Circle(make_circle_dirac(*truncation, *delta).map_err(wrap)?)
        }
        ModelSpec::Conical => BuiltModel::Conical(make_conical_disc()),
        ModelSpec::Constant { base } => {
            BuiltModel::Family(OperatorFamily::constant(build_base(base, "model.base")?))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(text)
    }

    #[test]
    fn minimal_holonomy_config() {
        let c = parse(
            r#"{"model": {"type": "half_turn", "base": {"diagonal": [1, 2]}},
                "window": {"lower": 0.5, "upper": 1.5, "k": 1},
                "expect": {"sign": -1}}"#,
        )
        .unwrap();
        c.validate(ExperimentKind::Holonomy).unwrap();
        assert_eq!(c.grid.samples, 64);
        let model = c.build_model().unwrap();
        let w = c.resolve_window(&model.family().sample(0.0)).unwrap().unwrap();
        assert_eq!((w.lower(), w.upper(), w.k()), (0.5, 1.5, 1));
    }

    #[test]
    fn malformed_window_names_field() {
        let c = parse(
            r#"{"model": {"type": "conical"}, "window": {"lower": 2.0, "upper": 1.0, "k": 1}}"#,
        )
        .unwrap();
        let err = c.validate(ExperimentKind::LassoScan).unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "window"), "{err}");
    }

    #[test]
    fn schema_errors_carry_paths() {
        let err = parse(r#"{"model": {"type": "conical"}, "grid": {"samples": "x"}}"#).unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "grid.samples"),
            other => panic!("{other}"),
        }
        // tagged model variants are buffered, so the path stops at the tag
        let err = parse(r#"{"model": {"type": "half_turn", "base": {"diagonal": "x"}}}"#).unwrap_err();
        match err {
            Error::Config { field, message } => {
                assert_eq!(field, "model");
                assert!(message.contains("invalid type"), "{message}");
            }
            other => panic!("{other}"),
        }
        let err = parse(r#"{"model": {"type": "conical"}, "bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn randomized_base_needs_seed() {
        let text = r#"{"model": {"type": "half_turn",
                       "base": {"clusters": {"values": [[1, 2], [2, 2]], "epsilon": 0.1}}}}"#;
        let mut c = parse(text).unwrap();
        let err = c.validate(ExperimentKind::Spectrum).unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "model.base.clusters.seed"), "{err}");
        c.override_seed(3);
        c.validate(ExperimentKind::Spectrum).unwrap();
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let c = parse(r#"{"kind": "holonomy", "model": {"type": "conical"}, "window": {"lowest": 1}}"#).unwrap();
        assert!(c.validate(ExperimentKind::Holonomy).is_ok());
        assert!(matches!(c.validate(ExperimentKind::Spectrum), Err(Error::Config { .. })));
    }

    #[test]
    fn lowest_window_brackets_bottom_eigenvalues() {
        let w = lowest_window(&[1.0, 2.0, 4.0], 2).unwrap();
        assert_eq!((w.lower(), w.upper(), w.k()), (0.0, 3.0, 2));
        let top = lowest_window(&[1.0, 2.0], 2).unwrap();
        assert_eq!(top.upper(), 3.0);
        assert!(lowest_window(&[1.0], 2).is_none());
    }

    #[test]
    fn missing_window_for_lasso() {
        let c = parse(r#"{"model": {"type": "conical"}}"#).unwrap();
        let err = c.validate(ExperimentKind::LassoScan).unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "window"));
    }
}
