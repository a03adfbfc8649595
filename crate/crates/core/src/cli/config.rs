//! Declarative TOML experiment files.
//!
//! ```toml
//! seed = 7
//! paths = 1000
//!
//! [grid]
//! horizon = 1.0
//! steps = 1000
//!
//! [[drivers]]
//! kind = "compound_poisson"
//! intensity = 3.0
//! jump_law = "two_point"
//! jump_magnitude = 1.0
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{JumpLaw, LevySpec};
use crate::spde::{Coefficient, PicardOptions, SpdeProblem, SpectralOperator};
use crate::tolerances;
use crate::TimeGrid;

use super::Kind;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: Option<Kind>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_drivers")]
    pub drivers: Vec<DriverConfig>,
    #[serde(default = "default_integrands")]
    pub integrands: Vec<Integrand>,
    /// Paths simulated at once by the streaming experiments.
    #[serde(default)]
    pub chunk_paths: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub converge: Option<ConvergeConfig>,
    #[serde(default)]
    pub spde: Option<SpdeConfig>,
    /// Paths written to full-path dumps (all when absent).
    #[serde(default)]
    pub dump_paths: Option<usize>,
}

fn default_seed() -> u64 {
    1
}

fn default_paths() -> usize {
    1000
}

fn default_drivers() -> Vec<DriverConfig> {
    vec![DriverConfig::brownian(1.0)]
}

fn default_integrands() -> Vec<Integrand> {
    vec![Integrand::One]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub points: Option<Vec<f64>>,
}

fn default_horizon() -> f64 {
    1.0
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            horizon: 1.0,
            steps: Some(1000),
            points: None,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<TimeGrid> {
        match (&self.steps, &self.points) {
            (Some(_), Some(_)) => Err(Error::Config(
                "grid: give either `steps` or `points`, not both".into(),
            )),
            (None, Some(points)) => {
                let grid = TimeGrid::new(points.clone())?;
                if grid.horizon() != self.horizon {
                    return Err(Error::Config(format!(
                        "grid: last point {} differs from horizon {}",
                        grid.horizon(),
                        self.horizon
                    )));
                }
                Ok(grid)
            }
            (Some(steps), None) => TimeGrid::uniform(self.horizon, *steps),
            (None, None) => TimeGrid::uniform(self.horizon, 1000),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverKindName {
    Brownian,
    CompensatedPoisson,
    /// Uncompensated Poisson counting process.
    StandardPoisson,
    CompoundPoisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpLawName {
    TwoPoint,
    Exponential,
    Normal,
}

/// Flat driver description; only the fields of the chosen kind may be set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    pub kind: DriverKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volatility: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_law: Option<JumpLawName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_magnitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_std_dev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compensated: Option<bool>,
    #[serde(default)]
    pub drift: f64,
}

impl DriverConfig {
    pub fn brownian(volatility: f64) -> Self {
        DriverConfig {
            kind: DriverKindName::Brownian,
            volatility: Some(volatility),
            intensity: None,
            jump_law: None,
            jump_magnitude: None,
            jump_rate: None,
            jump_mean: None,
            jump_std_dev: None,
            compensated: None,
            drift: 0.0,
        }
    }

    pub fn with_intensity(kind: DriverKindName, intensity: f64) -> Self {
        DriverConfig {
            kind,
            volatility: None,
            intensity: Some(intensity),
            ..DriverConfig::brownian(0.0)
        }
    }

    pub fn to_spec(&self) -> Result<LevySpec> {
        let stray = |name: &str, set: bool| -> Result<()> {
            if set {
                Err(Error::Config(format!(
                    "driver field `{name}` does not apply to {:?}",
                    self.kind
                )))
            } else {
                Ok(())
            }
        };
        let need = |name: &'static str, v: Option<f64>| -> Result<f64> {
            v.ok_or_else(|| {
                Error::Config(format!(
                    "driver field `{name}` is required for {:?}",
                    self.kind
                ))
            })
        };
        let jump_fields = self.jump_law.is_some()
            || self.jump_magnitude.is_some()
            || self.jump_rate.is_some()
            || self.jump_mean.is_some()
            || self.jump_std_dev.is_some()
            || self.compensated.is_some();
        let spec = match self.kind {
            DriverKindName::Brownian => {
                stray("intensity", self.intensity.is_some())?;
                stray("jump_*", jump_fields)?;
                LevySpec::brownian(need("volatility", self.volatility)?)
            }
            DriverKindName::CompensatedPoisson | DriverKindName::StandardPoisson => {
                stray("volatility", self.volatility.is_some())?;
                stray("jump_*", jump_fields)?;
                let lambda = need("intensity", self.intensity)?;
                if self.kind == DriverKindName::StandardPoisson {
                    LevySpec::standard_poisson(lambda)
                } else {
                    LevySpec::compensated_poisson(lambda)
                }
            }
            DriverKindName::CompoundPoisson => {
                stray("volatility", self.volatility.is_some())?;
                let lambda = need("intensity", self.intensity)?;
                let law = match self.jump_law {
                    Some(JumpLawName::TwoPoint) => JumpLaw::TwoPoint {
                        magnitude: need("jump_magnitude", self.jump_magnitude)?,
                    },
                    Some(JumpLawName::Exponential) => JumpLaw::Exponential {
                        rate: need("jump_rate", self.jump_rate)?,
                    },
                    Some(JumpLawName::Normal) => JumpLaw::Normal {
                        mean: need("jump_mean", self.jump_mean)?,
                        std_dev: need("jump_std_dev", self.jump_std_dev)?,
                    },
                    None => {
                        return Err(Error::Config("driver field `jump_law` is required".into()))
                    }
                };
                let mut spec = LevySpec::compound_poisson(lambda, law);
                if let (Some(false), crate::DriverKind::CompoundPoisson { compensated, .. }) =
                    (self.compensated, &mut spec.kind)
                {
                    *compensated = false;
                }
                spec
            }
        };
        let spec = spec.with_drift(spec.drift + self.drift);
        spec.validate()?;
        Ok(spec)
    }
}

/// Test integrands, all adapted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    /// `Φ ≡ 1`
    One,
    /// `Φ_t = t`
    Time,
    /// `Φ_t = cos(2πt)`
    Cosine,
    /// The driver path itself; its predictable version is the left limit.
    Driver,
}

impl Integrand {
    pub fn name(self) -> &'static str {
        match self {
            Integrand::One => "one",
            Integrand::Time => "time",
            Integrand::Cosine => "cosine",
            Integrand::Driver => "driver",
        }
    }
}

/// Thresholds applied by the checks; every field defaults to the crate-wide
/// value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub exact: f64,
    pub z_sigma: f64,
    pub isometry_z: f64,
    pub discretization: f64,
    pub quadrature: f64,
    pub rate_min: f64,
    pub rate_max: f64,
    pub contraction_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact: tolerances::EXACT,
            z_sigma: tolerances::Z_SIGMA,
            isometry_z: tolerances::ISOMETRY_Z,
            discretization: tolerances::DISCRETIZATION,
            quadrature: tolerances::QUADRATURE,
            rate_min: tolerances::RATE_RANGE.0,
            rate_max: tolerances::RATE_RANGE.1,
            contraction_ratio: tolerances::CONTRACTION_RATIO,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let all = [
            ("exact", self.exact),
            ("z_sigma", self.z_sigma),
            ("isometry_z", self.isometry_z),
            ("discretization", self.discretization),
            ("quadrature", self.quadrature),
            ("rate_min", self.rate_min),
            ("rate_max", self.rate_max),
            ("contraction_ratio", self.contraction_ratio),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "tolerance `{name}` must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.rate_min > self.rate_max {
            return Err(Error::Config(
                "tolerance `rate_min` exceeds `rate_max`".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergeTarget {
    /// Cauchy study of left sums against the finest mesh.
    Riemann,
    /// Distance of `∫W dW` sums to `½(W_T² - T)`.
    ItoFormula,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    #[serde(default = "default_target")]
    pub target: ConvergeTarget,
    /// Meshes `2^-e`; ignored when `meshes` is given.
    #[serde(default = "default_exponents")]
    pub mesh_exponents: Vec<u32>,
    #[serde(default)]
    pub meshes: Option<Vec<f64>>,
}

fn default_target() -> ConvergeTarget {
    ConvergeTarget::Riemann
}

fn default_exponents() -> Vec<u32> {
    (4..=10).collect()
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            target: default_target(),
            mesh_exponents: default_exponents(),
            meshes: None,
        }
    }
}

impl ConvergeConfig {
    pub fn meshes(&self) -> Vec<f64> {
        match &self.meshes {
            Some(m) => m.clone(),
            None => self
                .mesh_exponents
                .iter()
                .map(|&e| 2f64.powi(-(e as i32)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    Zero,
    Constant,
    Linear,
    Sine,
    Cosine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub kind: CoefficientKind,
    /// Amplitude of `sine`/`cosine`, slope of `linear`, level of `constant`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Per-coordinate levels of `constant`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl CoefficientConfig {
    pub fn zero() -> Self {
        CoefficientConfig {
            kind: CoefficientKind::Zero,
            scale: None,
            values: None,
        }
    }

    pub fn scaled(kind: CoefficientKind, scale: f64) -> Self {
        CoefficientConfig {
            kind,
            scale: Some(scale),
            values: None,
        }
    }

    fn build(&self, dim: usize) -> Result<Coefficient> {
        let scale = || {
            self.scale
                .ok_or_else(|| Error::Config(format!("coefficient {:?} needs `scale`", self.kind)))
        };
        Ok(match self.kind {
            CoefficientKind::Zero => Coefficient::Zero,
            CoefficientKind::Constant => match (&self.values, self.scale) {
                (Some(v), None) => Coefficient::Constant(v.clone()),
                (None, Some(s)) => Coefficient::Constant(vec![s; dim]),
                _ => {
                    return Err(Error::Config(
                        "constant coefficient needs exactly one of `scale`, `values`".into(),
                    ))
                }
            },
            CoefficientKind::Linear => Coefficient::Linear(scale()?),
            CoefficientKind::Sine => Coefficient::Sine(scale()?),
            CoefficientKind::Cosine => Coefficient::Cosine(scale()?),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdeConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Explicit spectrum `μ_k`; the heat spectrum `k²` when absent.
    #[serde(default)]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default)]
    pub h0: Option<Vec<f64>>,
    #[serde(default = "CoefficientConfig::zero")]
    pub alpha: CoefficientConfig,
    /// One coefficient per driver (per leading driver for `diagnostics`).
    pub sigma: Vec<CoefficientConfig>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_one")]
    pub record_stride: usize,
    #[serde(default = "default_one")]
    pub blocks: usize,
    /// Oracle check times for the linear additive case.
    #[serde(default)]
    pub oracle_times: Option<Vec<f64>>,
    /// Coarse step count of the refinement diagnostic.
    #[serde(default)]
    pub refine_steps: Option<usize>,
}

fn default_dim() -> usize {
    10
}

fn default_tol() -> f64 {
    1e-4
}

fn default_max_iter() -> usize {
    50
}

fn default_one() -> usize {
    1
}

impl SpdeConfig {
    pub fn heat(sigma: Vec<CoefficientConfig>) -> Self {
        SpdeConfig {
            dim: default_dim(),
            eigenvalues: None,
            h0: None,
            alpha: CoefficientConfig::zero(),
            sigma,
            tol: default_tol(),
            max_iter: default_max_iter(),
            record_stride: 1,
            blocks: 1,
            oracle_times: None,
            refine_steps: None,
        }
    }

    pub fn problem(&self, drivers: &[LevySpec]) -> Result<SpdeProblem> {
        let operator = match &self.eigenvalues {
            Some(mu) => {
                if mu.len() != self.dim {
                    return Err(Error::Config(format!(
                        "spde: {} eigenvalues for dim {}",
                        mu.len(),
                        self.dim
                    )));
                }
                SpectralOperator::new(mu.clone())?
            }
            None => SpectralOperator::heat(self.dim)?,
        };
        let problem = SpdeProblem {
            operator,
            h0: self.h0.clone().unwrap_or_else(|| vec![0.0; self.dim]),
            alpha: self.alpha.build(self.dim)?,
            sigmas: self
                .sigma
                .iter()
                .map(|s| s.build(self.dim))
                .collect::<Result<_>>()?,
            drivers: drivers.to_vec(),
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn options(&self, chunk_paths: Option<usize>) -> PicardOptions {
        PicardOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            chunk_paths,
            record_stride: self.record_stride,
            blocks: self.blocks,
        }
    }
}

/// Everything an experiment needs, validated.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub kind: Kind,
    pub config: ExperimentConfig,
    pub grid: TimeGrid,
    pub drivers: Vec<LevySpec>,
    pub spde: Option<SpdeProblem>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Built-in configuration of each experiment kind.
    pub fn defaults(kind: Kind) -> Self {
        let mut cfg = ExperimentConfig {
            kind: Some(kind),
            seed: default_seed(),
            paths: default_paths(),
            out: None,
            grid: GridConfig::default(),
            drivers: default_drivers(),
            integrands: default_integrands(),
            chunk_paths: None,
            tolerances: Tolerances::default(),
            converge: None,
            spde: None,
            dump_paths: None,
        };
        match kind {
            Kind::Simulate => {}
            Kind::Dump => {
                cfg.paths = 10;
                cfg.grid.steps = Some(100);
            }
            Kind::Integrate => cfg.integrands = vec![Integrand::Time],
            Kind::Isometry => {
                cfg.paths = 100_000;
                cfg.chunk_paths = Some(10_000);
                cfg.drivers = vec![
                    DriverConfig::brownian(1.0),
                    DriverConfig::with_intensity(DriverKindName::CompensatedPoisson, 2.0),
                    DriverConfig {
                        jump_law: Some(JumpLawName::TwoPoint),
                        jump_magnitude: Some(1.0),
                        ..DriverConfig::with_intensity(DriverKindName::CompoundPoisson, 3.0)
                    },
                ];
                cfg.integrands = vec![Integrand::One, Integrand::Time, Integrand::Driver];
            }
            Kind::PoissonIdentity => {
                cfg.drivers = vec![DriverConfig::with_intensity(
                    DriverKindName::StandardPoisson,
                    1.0,
                )];
                cfg.grid.steps = Some(16);
            }
            Kind::Converge => {
                cfg.paths = 10_000;
                cfg.converge = Some(ConvergeConfig::default());
                cfg.integrands = vec![Integrand::Driver];
            }
            Kind::Spde => {
                cfg.paths = 10_000;
                cfg.grid.steps = Some(250);
                cfg.dump_paths = Some(100);
                let mut spde = SpdeConfig::heat(vec![CoefficientConfig::scaled(
                    CoefficientKind::Cosine,
                    0.25,
                )]);
                spde.alpha = CoefficientConfig::scaled(CoefficientKind::Sine, 0.25);
                spde.max_iter = 15;
                spde.record_stride = 25;
                cfg.spde = Some(spde);
            }
            Kind::Diagnostics => {
                cfg.paths = 2000;
                cfg.grid.steps = Some(200);
                cfg.drivers = vec![
                    DriverConfig::brownian(1.0),
                    DriverConfig::with_intensity(DriverKindName::CompensatedPoisson, 2.0),
                ];
                cfg.integrands = vec![
                    Integrand::One,
                    Integrand::Time,
                    Integrand::Cosine,
                    Integrand::Driver,
                ];
                let mut spde = SpdeConfig::heat(vec![CoefficientConfig::scaled(
                    CoefficientKind::Constant,
                    1.0,
                )]);
                spde.refine_steps = Some(100);
                cfg.spde = Some(spde);
            }
        }
        cfg
    }

    /// Re-validates every module precondition the experiment will hit.
    pub fn prepare(self, kind: Kind) -> Result<Prepared> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(Error::Config(format!(
                    "config is for experiment `{}`, invoked as `{}`",
                    k.name(),
                    kind.name()
                )));
            }
        }
        if self.paths == 0 {
            return Err(Error::param("paths", "must be at least 1"));
        }
        if self.chunk_paths == Some(0) {
            return Err(Error::param("chunk_paths", "must be at least 1"));
        }
        if self.drivers.is_empty() {
            return Err(Error::Config("at least one driver is required".into()));
        }
        if self.integrands.is_empty() {
            return Err(Error::Config("at least one integrand is required".into()));
        }
        self.tolerances.validate()?;
        let grid = self.grid.build()?;
        let drivers = self
            .drivers
            .iter()
            .map(DriverConfig::to_spec)
            .collect::<Result<Vec<_>>>()?;

        match kind {
            Kind::Isometry => {
                if let Some(d) = drivers.iter().find(|d| d.decomposition_drift() != 0.0) {
                    return Err(Error::Config(format!(
                        "isometry drivers must be martingales, {:?} has drift {}",
                        d.kind,
                        d.decomposition_drift()
                    )));
                }
            }
            Kind::PoissonIdentity => {
                let ok = matches!(
                    drivers[0].kind,
                    crate::DriverKind::CompensatedPoisson { .. }
                ) && drivers[0].path_drift() == 0.0
                    && drivers.len() == 1;
                if !ok {
                    return Err(Error::Config(
                        "poisson-identity needs exactly one `standard_poisson` driver without extra drift".into(),
                    ));
                }
                if self.grid.points.is_some() {
                    return Err(Error::Config(
                        "poisson-identity uses a uniform base grid (`steps`)".into(),
                    ));
                }
            }
            Kind::Converge => {
                let conv = self.converge.clone().unwrap_or_default();
                let meshes = conv.meshes();
                if meshes.len() < 3 {
                    return Err(Error::Config("converge needs at least 3 meshes".into()));
                }
                if meshes.windows(2).any(|w| w[1] >= w[0]) || meshes.iter().any(|h| !(*h > 0.0)) {
                    return Err(Error::param(
                        "meshes",
                        "must be positive and strictly decreasing",
                    ));
                }
                let finest = meshes[meshes.len() - 1];
                let n = (self.grid.horizon / finest).round();
                if ((self.grid.horizon / finest) - n).abs() > 1e-9 * n.max(1.0) {
                    return Err(Error::param(
                        "meshes",
                        "finest mesh must divide the horizon",
                    ));
                }
                // Sums of a constant integrand telescope to the same value on
                // every mesh, leaving nothing to fit.
                if conv.target == ConvergeTarget::Riemann && self.integrands[0] == Integrand::One {
                    return Err(Error::param(
                        "integrands",
                        "the riemann target needs a non-constant first integrand",
                    ));
                }
                if conv.target == ConvergeTarget::ItoFormula
                    && drivers[0] != LevySpec::brownian(1.0)
                {
                    return Err(Error::Config(
                        "the ito_formula target needs a standard Brownian driver".into(),
                    ));
                }
            }
            _ => {}
        }

        let spde = match (kind, &self.spde) {
            (Kind::Spde, None) => return Err(Error::Config("missing [spde] section".into())),
            (Kind::Spde | Kind::Diagnostics, Some(s)) => {
                // Diagnostics drive the SPDE with the leading drivers only.
                let used = if kind == Kind::Diagnostics {
                    s.sigma.len().min(drivers.len())
                } else {
                    drivers.len()
                };
                if s.sigma.len() != used {
                    return Err(Error::Config(format!(
                        "spde: {} sigma coefficients for {} drivers",
                        s.sigma.len(),
                        drivers.len()
                    )));
                }
                if kind == Kind::Spde && grid.n_intervals() < s.blocks {
                    return Err(Error::param("blocks", "more blocks than grid intervals"));
                }
                let problem = s.problem(&drivers[..used])?;
                if !(s.tol > 0.0) || s.max_iter == 0 || s.record_stride == 0 || s.blocks == 0 {
                    return Err(Error::Config(
                        "spde: tol, max_iter, record_stride and blocks must be positive".into(),
                    ));
                }
                Some(problem)
            }
            _ => None,
        };

        Ok(Prepared {
            kind,
            config: ExperimentConfig {
                kind: Some(kind),
                ..self
            },
            grid,
            drivers,
            spde,
        })
    }
}
