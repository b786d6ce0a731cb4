//! Scenario configuration: parsing, validation and construction of the
//! library objects each scenario needs.

use std::path::{Path, PathBuf};

use infocap::fisher::AxisSelection;
use infocap::fourier::{MassSource, PhysicalConstants};
use infocap::grid::{Boundary, GridSpec, Stencil};
use infocap::kinematic::{AmplitudeField, ComponentSpec};
use infocap::metric::{MetricKind, MetricSignature};
use infocap::statmodel::{ExpectationMethod, ParameterVector, ParametricModel};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A rejected configuration, reported with exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    fn at(field: &str, e: impl std::fmt::Display) -> Self {
        ConfigError(format!("{field}: {e}"))
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioConfig {
    Fisher(FisherScenario),
    Kinematic(KinematicScenario),
    Fourier(FourierScenario),
    Maxwell(MaxwellScenario),
    Consistency(ConsistencyScenario),
    Sweep(SweepScenario),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    /// Number of channels `N`.
    pub channels: usize,
    /// Dimension `k` of each channel.
    pub dim: usize,
    /// Shared `k × k` covariance, row by row.
    pub covariance: Vec<Vec<f64>>,
    /// Per-channel parameters; zeros when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<Vec<f64>>>,
}

impl ModelConfig {
    fn covariance_matrix(&self) -> Result<DMatrix<f64>> {
        let k = self.dim;
        if k == 0 {
            return Err(ConfigError::at("model.dim", "must be at least 1"));
        }
        if self.covariance.len() != k || self.covariance.iter().any(|r| r.len() != k) {
            return Err(ConfigError::at(
                "model.covariance",
                format!("expected a {k}x{k} matrix"),
            ));
        }
        Ok(DMatrix::from_fn(k, k, |r, c| self.covariance[r][c]))
    }

    /// Parameters for `n` channels; given rows are reused cyclically.
    pub fn theta_for(&self, n: usize) -> Result<ParameterVector> {
        let k = self.dim;
        let rows = match &self.theta {
            None => vec![vec![0.0; k]],
            Some(rows) => {
                if rows.is_empty() || rows.iter().any(|r| r.len() != k) {
                    return Err(ConfigError::at(
                        "model.theta",
                        format!("expected rows of length {k}"),
                    ));
                }
                rows.clone()
            }
        };
        let flat = (0..n).flat_map(|i| rows[i % rows.len()].clone()).collect();
        ParameterVector::from_flat(k, flat).map_err(|e| ConfigError::at("model.theta", e))
    }

    pub fn build_with(&self, n: usize) -> Result<(ParametricModel, ParameterVector)> {
        if n == 0 {
            return Err(ConfigError::at("model.channels", "must be at least 1"));
        }
        let model = ParametricModel::gaussian(n, self.covariance_matrix()?)
            .map_err(|e| ConfigError::at("model.covariance", e))?;
        Ok((model, self.theta_for(n)?))
    }

    pub fn build(&self) -> Result<(ParametricModel, ParameterVector)> {
        if let Some(rows) = &self.theta {
            if rows.len() != self.channels {
                return Err(ConfigError::at(
                    "model.theta",
                    format!("{} rows for {} channels", rows.len(), self.channels),
                ));
            }
        }
        self.build_with(self.channels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub kind: MetricKind,
    pub dim: usize,
}

impl MetricConfig {
    pub fn build(&self, expected_dim: usize) -> Result<MetricSignature> {
        if self.dim != expected_dim {
            return Err(ConfigError::at(
                "metric.dim",
                format!(
                    "is {} but the scenario has dimension {expected_dim}",
                    self.dim
                ),
            ));
        }
        MetricSignature::new(self.kind, self.dim).map_err(|e| ConfigError::at("metric", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: Vec<usize>,
    pub boundary: Boundary,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::new(
            self.lo.clone(),
            self.hi.clone(),
            self.points.clone(),
            self.boundary,
        )
        .map_err(|e| ConfigError::at("grid", e))
    }
}

/// A field given either by analytic constructors or by a saved binary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ComponentSpec>,
    /// Binary field file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Rescale to `(1/N) Σ ∫ q² = 1` after construction.
    #[serde(default)]
    pub normalize: bool,
}

impl FieldConfig {
    pub fn build(&self, grid: Option<&GridConfig>, base: &Path) -> Result<AmplitudeField> {
        let field = match (&self.file, self.components.is_empty(), grid) {
            (Some(file), true, None) => infocap::io::load_amplitude(&base.join(file))
                .map_err(|e| ConfigError::at("field.file", e))?,
            (None, false, Some(g)) => AmplitudeField::from_specs(g.build()?, &self.components)
                .map_err(|e| ConfigError::at("field.components", e))?,
            (Some(_), _, _) => {
                return Err(ConfigError::at(
                    "field",
                    "a file source takes neither components nor a [grid] table",
                ))
            }
            (None, true, _) => return Err(ConfigError::at("field", "needs components or a file")),
            (None, false, None) => {
                return Err(ConfigError::at("grid", "required for field constructors"))
            }
        };
        if self.normalize {
            field
                .unit_normalized()
                .map_err(|e| ConfigError::at("field.normalize", e))
        } else {
            Ok(field)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorConfig {
    SampleMean,
    Noisy { noise_sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    pub draws: usize,
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub axes: AxisSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Write field binaries next to the report.
    #[serde(default)]
    pub fields: bool,
    /// Write 1D slices through the grid centre as CSV.
    #[serde(default)]
    pub slices: bool,
}

impl OutputConfig {
    fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

fn default_seed() -> u64 {
    1
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherTolerances {
    #[serde(default = "FisherTolerances::regularity")]
    pub regularity: f64,
}

impl FisherTolerances {
    fn regularity() -> f64 {
        1e-8
    }
}

impl Default for FisherTolerances {
    fn default() -> Self {
        Self {
            regularity: Self::regularity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherScenario {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub model: ModelConfig,
    pub metric: MetricConfig,
    #[serde(default = "ExpectationMethod::quadrature")]
    pub method: ExpectationMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimation: Option<EstimationConfig>,
    #[serde(default)]
    pub tolerances: FisherTolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostConfig {
    pub beta: f64,
    pub axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicTolerances {
    /// Amplitude form against probability form; defaults to 1e-9 for the
    /// spectral stencil and 5e-3 for the central one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forms: Option<f64>,
    #[serde(default = "KinematicTolerances::boost")]
    pub boost: f64,
}

impl KinematicTolerances {
    fn boost() -> f64 {
        1e-2
    }
}

impl Default for KinematicTolerances {
    fn default() -> Self {
        Self {
            forms: None,
            boost: Self::boost(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicScenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    pub field: FieldConfig,
    pub metric: MetricConfig,
    #[serde(default)]
    pub stencil: Stencil,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boost: Option<BoostConfig>,
    #[serde(default)]
    pub tolerances: KinematicTolerances,
    #[serde(default, skip_serializing_if = "OutputConfig::is_default")]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTolerances {
    #[serde(default = "FourierTolerances::parseval")]
    pub parseval: f64,
    #[serde(default = "FourierTolerances::round_trip")]
    pub round_trip: f64,
    /// Relative to `max(|I|, 1)`.
    #[serde(default = "FourierTolerances::k_f")]
    pub k_f: f64,
}

impl FourierTolerances {
    fn parseval() -> f64 {
        1e-10
    }
    fn round_trip() -> f64 {
        1e-12
    }
    fn k_f() -> f64 {
        1e-8
    }
}

impl Default for FourierTolerances {
    fn default() -> Self {
        Self {
            parseval: Self::parseval(),
            round_trip: Self::round_trip(),
            k_f: Self::k_f(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierScenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    pub field: FieldConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub constants: PhysicalConstants,
    #[serde(default = "FourierScenario::self_consistent")]
    pub mass: MassSource,
    #[serde(default)]
    pub tolerances: FourierTolerances,
    #[serde(default, skip_serializing_if = "OutputConfig::is_default")]
    pub output: OutputConfig,
}

impl FourierScenario {
    fn self_consistent() -> MassSource {
        MassSource::SelfConsistent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxwellTolerances {
    /// Relative error against the closed form of the plane gauge mode.
    #[serde(default = "MaxwellTolerances::plane_wave")]
    pub plane_wave: f64,
    /// `‖∂_ν A^ν‖₂` for transverse modes.
    #[serde(default = "MaxwellTolerances::lorentz")]
    pub lorentz: f64,
}

impl MaxwellTolerances {
    fn plane_wave() -> f64 {
        1e-3
    }
    fn lorentz() -> f64 {
        1e-6
    }
}

impl Default for MaxwellTolerances {
    fn default() -> Self {
        Self {
            plane_wave: Self::plane_wave(),
            lorentz: Self::lorentz(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeConfig {
    /// `A_ν = ε_ν cos(Σ k_a x^a)`.
    GaugeMode {
        polarization: [f64; 4],
        modes: [i64; 4],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxwellScenario {
    pub grid: GridConfig,
    pub gauge: GaugeConfig,
    pub a: f64,
    #[serde(default)]
    pub stencil: Stencil,
    #[serde(default)]
    pub tolerances: MaxwellTolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyScenario {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub metric: MetricConfig,
    #[serde(default = "ExpectationMethod::quadrature")]
    pub method: ExpectationMethod,
    #[serde(default)]
    pub stencil: Stencil,
    #[serde(default = "ConsistencyScenario::tolerance")]
    pub tolerance: f64,
}

impl ConsistencyScenario {
    fn tolerance() -> f64 {
        5e-3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepScenario {
    /// `model.channels` is ignored; each row sets its own `N`.
    pub model: ModelConfig,
    pub metric: MetricConfig,
    #[serde(default = "ExpectationMethod::quadrature")]
    pub method: ExpectationMethod,
    pub n_max: usize,
}

impl ScenarioConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioConfig::Fisher(_) => "fisher",
            ScenarioConfig::Kinematic(_) => "kinematic",
            ScenarioConfig::Fourier(_) => "fourier",
            ScenarioConfig::Maxwell(_) => "maxwell",
            ScenarioConfig::Consistency(_) => "consistency",
            ScenarioConfig::Sweep(_) => "sweep",
        }
    }

    /// Parse with line-accurate diagnostics: the scenario body is read
    /// directly from the text after blanking the top-level `kind` line.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        let kind = match table.get("kind") {
            Some(toml::Value::String(k)) => k.clone(),
            Some(_) => return Err(ConfigError::at("kind", "must be a string")),
            None => return Err(ConfigError::at("kind", "missing")),
        };
        let mut in_root = true;
        let body: String = text
            .lines()
            .map(|line| {
                let t = line.trim_start();
                if t.starts_with('[') {
                    in_root = false;
                }
                let is_kind = in_root
                    && t.strip_prefix("kind")
                        .is_some_and(|rest| rest.trim_start().starts_with('='));
                if is_kind {
                    ""
                } else {
                    line
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        fn body_as<T: serde::de::DeserializeOwned>(body: &str) -> Result<T> {
            toml::from_str(body).map_err(|e| ConfigError(e.to_string()))
        }
        Ok(match kind.as_str() {
            "fisher" => ScenarioConfig::Fisher(body_as(&body)?),
            "kinematic" => ScenarioConfig::Kinematic(body_as(&body)?),
            "fourier" => ScenarioConfig::Fourier(body_as(&body)?),
            "maxwell" => ScenarioConfig::Maxwell(body_as(&body)?),
            "consistency" => ScenarioConfig::Consistency(body_as(&body)?),
            "sweep" => ScenarioConfig::Sweep(body_as(&body)?),
            other => {
                return Err(ConfigError::at(
                    "kind",
                    format!(
                        "unknown scenario `{other}`, expected one of fisher, kinematic, \
                         fourier, maxwell, consistency, sweep"
                    ),
                ))
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs serialize to TOML")
    }

    /// Replace the seed wherever the scenario draws random numbers.
    pub fn override_seed(&mut self, seed: u64) {
        match self {
            ScenarioConfig::Fisher(s) => {
                s.seed = seed;
                if let ExpectationMethod::MonteCarlo { seed: ms, .. } = &mut s.method {
                    *ms = seed;
                }
            }
            ScenarioConfig::Consistency(ConsistencyScenario { method, .. })
            | ScenarioConfig::Sweep(SweepScenario { method, .. }) => {
                if let ExpectationMethod::MonteCarlo { seed: ms, .. } = method {
                    *ms = seed;
                }
            }
            _ => {}
        }
    }

    /// The seed reported in provenance, if the scenario uses one.
    pub fn seed(&self) -> Option<u64> {
        let mc = |m: &ExpectationMethod| match m {
            ExpectationMethod::MonteCarlo { seed, .. } => Some(*seed),
            _ => None,
        };
        match self {
            ScenarioConfig::Fisher(s) => Some(s.seed),
            ScenarioConfig::Consistency(s) => mc(&s.method),
            ScenarioConfig::Sweep(s) => mc(&s.method),
            _ => None,
        }
    }

    /// Check everything that can be checked without running the numerics.
    pub fn validate(&self, base: &Path) -> Result<()> {
        match self {
            ScenarioConfig::Fisher(s) => {
                s.model.build()?;
                s.metric.build(s.model.dim)?;
                check_method(&s.method)?;
                if let Some(e) = &s.estimation {
                    if e.draws < 2 {
                        return Err(ConfigError::at("estimation.draws", "must be at least 2"));
                    }
                    if let EstimatorConfig::Noisy { noise_sd } = e.estimator {
                        if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
                            return Err(ConfigError::at(
                                "estimation.estimator.noise_sd",
                                "must be finite and non-negative",
                            ));
                        }
                    }
                }
                positive("tolerances.regularity", s.tolerances.regularity)
            }
            ScenarioConfig::Kinematic(s) => {
                let f = s.field.build(s.grid.as_ref(), base)?;
                s.metric.build(f.grid().dim())?;
                if let Some(b) = &s.boost {
                    if s.metric.kind != MetricKind::Minkowski {
                        return Err(ConfigError::at("boost", "needs a minkowski metric"));
                    }
                    infocap::metric::BoostParameters::new(b.beta, b.axis)
                        .map_err(|e| ConfigError::at("boost", e))?;
                }
                if let Some(t) = s.tolerances.forms {
                    positive("tolerances.forms", t)?;
                }
                positive("tolerances.boost", s.tolerances.boost)
            }
            ScenarioConfig::Fourier(s) => {
                let f = s.field.build(s.grid.as_ref(), base)?;
                if f.grid().boundary() != Boundary::Periodic {
                    return Err(ConfigError::at(
                        "grid.boundary",
                        "fourier scenarios need a periodic grid",
                    ));
                }
                s.constants
                    .validate()
                    .map_err(|e| ConfigError::at("constants", e))?;
                if let MassSource::External { mass } = s.mass {
                    if !(mass >= 0.0 && mass.is_finite()) {
                        return Err(ConfigError::at(
                            "mass.mass",
                            "must be finite and non-negative",
                        ));
                    }
                }
                positive("tolerances.parseval", s.tolerances.parseval)?;
                positive("tolerances.round_trip", s.tolerances.round_trip)?;
                positive("tolerances.k_f", s.tolerances.k_f)
            }
            ScenarioConfig::Maxwell(s) => {
                let g = s.grid.build()?;
                if g.dim() != 4 {
                    return Err(ConfigError::at("grid", "maxwell scenarios need four axes"));
                }
                if !(s.a > 0.0 && s.a.is_finite()) {
                    return Err(ConfigError::at("a", "must be positive"));
                }
                positive("tolerances.plane_wave", s.tolerances.plane_wave)?;
                positive("tolerances.lorentz", s.tolerances.lorentz)
            }
            ScenarioConfig::Consistency(s) => {
                s.model.build()?;
                let g = s.grid.build()?;
                if g.dim() != s.model.dim {
                    return Err(ConfigError::at(
                        "grid",
                        format!(
                            "has {} axes but the model has dimension {}",
                            g.dim(),
                            s.model.dim
                        ),
                    ));
                }
                s.metric.build(s.model.dim)?;
                check_method(&s.method)?;
                positive("tolerance", s.tolerance)
            }
            ScenarioConfig::Sweep(s) => {
                if s.n_max == 0 {
                    return Err(ConfigError::at("n_max", "must be at least 1"));
                }
                s.model.build_with(1)?;
                s.metric.build(s.model.dim)?;
                check_method(&s.method)
            }
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(field, "must be positive and finite"))
    }
}

fn check_method(m: &ExpectationMethod) -> Result<()> {
    match m {
        ExpectationMethod::Quadrature { order } if *order == 0 => {
            Err(ConfigError::at("method.order", "must be at least 1"))
        }
        ExpectationMethod::MonteCarlo { draws, .. } if *draws < 2 => {
            Err(ConfigError::at("method.draws", "must be at least 2"))
        }
        _ => Ok(()),
    }
}
