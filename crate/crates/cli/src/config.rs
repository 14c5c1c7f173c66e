//! Run configuration, read from TOML.
//!
//! ```toml
//! command = "gnz"
//! seed = 42
//!
//! [model]
//! kind = "strauss"
//! activity = 2.0
//! c = 0.5
//! range = 0.1
//!
//! [window]
//! lower = [0.0, 0.0]
//! upper = [1.0, 1.0]
//!
//! [mc]
//! samples = 100000
//! ```
//!
//! Unknown keys are rejected. Each command reads its own optional table
//! (`[sample]`, `[partition]`, ...); see the README for the full schema.

use gibbs::diagnostics::LocalFunction;
use gibbs::geometry::{GrainLaw, OverlapPenalty};
use gibbs::{
    BoundaryCondition, CountingMeasure, GibbsError, PairPotential, PapangelouModel, Point,
    ReferenceMeasure, ScalarField, Window,
};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Sample,
    Partition,
    Estimate,
    Gnz,
    Dlr,
    Converge,
    Disagree,
    Percolate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Partition => "partition",
            Command::Estimate => "estimate",
            Command::Gnz => "gnz",
            Command::Dlr => "dlr",
            Command::Converge => "converge",
            Command::Disagree => "disagree",
            Command::Percolate => "percolate",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    /// Points of the boundary condition, outside the window.
    #[serde(default)]
    pub boundary: Vec<Vec<f64>>,
    pub model: ModelSpec,
    pub window: WindowSpec,
    /// Intensity of the reference measure; Lebesgue when absent.
    #[serde(default)]
    pub reference: Option<ScalarField>,
    #[serde(default)]
    pub mc: McSpec,
    #[serde(default)]
    pub sample: SampleSpec,
    #[serde(default)]
    pub partition: PartitionSpec,
    #[serde(default)]
    pub estimate: EstimateSpec,
    #[serde(default)]
    pub gnz: GnzSpec,
    #[serde(default)]
    pub dlr: Option<DlrSpec>,
    #[serde(default)]
    pub converge: Option<ConvergeSpec>,
    #[serde(default)]
    pub disagree: Option<DisagreeSpec>,
    #[serde(default)]
    pub percolate: Option<PercolateSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Poisson {
        activity: f64,
    },
    Strauss {
        activity: f64,
        c: f64,
        range: f64,
    },
    HardSphere {
        activity: f64,
        range: f64,
    },
    PairPotential {
        activity: f64,
        potential: PairPotential,
    },
    ClusterParticle {
        activity: f64,
        beta: f64,
        c: f64,
        grain: GrainLaw,
    },
}

impl ModelSpec {
    pub fn build(&self, dim: usize) -> gibbs::Result<PapangelouModel> {
        let m = match self {
            ModelSpec::Poisson { activity } => PapangelouModel::poisson(*activity)?,
            ModelSpec::Strauss { activity, c, range } => {
                PapangelouModel::strauss(*activity, *c, *range)?
            }
            ModelSpec::HardSphere { activity, range } => {
                PapangelouModel::hard_sphere(*activity, *range)?
            }
            ModelSpec::PairPotential {
                activity,
                potential,
            } => PapangelouModel::pair_potential(*activity, potential.clone())?,
            ModelSpec::ClusterParticle {
                activity,
                beta,
                c,
                grain,
            } => PapangelouModel::cluster_particle(
                *activity,
                *beta,
                OverlapPenalty { c: *c },
                grain.clone(),
                dim,
            )?,
        };
        m.validate(dim)?;
        Ok(m)
    }

    /// Interaction scale used for default test functions.
    pub fn scale(&self) -> f64 {
        match self {
            ModelSpec::Strauss { range, .. } | ModelSpec::HardSphere { range, .. } => *range,
            ModelSpec::PairPotential { potential, .. } => potential.range().unwrap_or(0.1),
            ModelSpec::ClusterParticle { grain, .. } => grain.interaction_range().unwrap_or(0.1),
            ModelSpec::Poisson { .. } => 0.1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl WindowSpec {
    pub fn build(&self) -> gibbs::Result<Window> {
        if self.lower.len() != self.upper.len() {
            return Err(GibbsError::DimensionMismatch {
                expected: self.lower.len(),
                got: self.upper.len(),
            });
        }
        Window::new(self.lower.clone(), self.upper.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Rejection,
    Mcmc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSpec {
    pub samples: usize,
    pub sampler: SamplerKind,
    /// Proposals per MCMC chain; the default burn-in when absent.
    pub steps: Option<usize>,
    pub max_attempts: u64,
    /// Relative truncation tolerance of the partition series.
    pub eps: f64,
    /// Samples per partition-series term.
    pub budget: usize,
}

impl Default for McSpec {
    fn default() -> Self {
        Self {
            samples: 10_000,
            sampler: SamplerKind::Rejection,
            steps: None,
            max_attempts: 10_000_000,
            eps: 1e-9,
            budget: 10_000,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSpec {
    /// Also write each sample's dominating Poisson realization.
    pub with_dominating: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMethodSpec {
    Series,
    PoissonMc,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionSpec {
    pub method: PartitionMethodSpec,
    /// Also report the void probability `1/Z`.
    pub void: bool,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        Self {
            method: PartitionMethodSpec::Both,
            void: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateSpec {
    /// Sub-window for counts; the whole window when absent.
    pub b: Option<WindowSpec>,
    pub max_m: usize,
    /// Evaluation tuple for correlation and Janossy densities.
    pub points: Vec<Vec<f64>>,
}

impl Default for EstimateSpec {
    fn default() -> Self {
        Self {
            b: None,
            max_m: 3,
            points: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnzSpec {
    /// Test-function window; the central half-side box when absent.
    pub b: Option<WindowSpec>,
    /// Interaction scale of the neighbour functions; the model's range when
    /// absent.
    pub r: Option<f64>,
    pub pairs: bool,
    pub rhs_points: usize,
}

impl Default for GnzSpec {
    fn default() -> Self {
        Self {
            b: None,
            r: None,
            pairs: true,
            rhs_points: 4,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DlrSpec {
    pub inner: WindowSpec,
    #[serde(default = "default_dlr_functions")]
    pub functions: Vec<LocalFunction>,
    pub n_outer: usize,
    pub n_inner: usize,
    /// Also check `P(eta(B) = 0) = E[1/Z_B(eta_{B^c})]` by the series.
    #[serde(default)]
    pub void_formula: bool,
}

fn default_dlr_functions() -> Vec<LocalFunction> {
    vec![
        LocalFunction::Void,
        LocalFunction::TruncatedCount { cap: 5 },
    ]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpec {
    /// Window read by the test function.
    pub b: WindowSpec,
    /// Dilation factors applied to the run window.
    pub scales: Vec<f64>,
    pub function: LocalFunction,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisagreeSpec {
    /// Sides of the cubes `C`, centred at the window centre.
    pub sides: Vec<f64>,
    /// Side of the compared sub-window relative to `C`.
    #[serde(default = "default_inner_fraction")]
    pub inner_fraction: f64,
    /// Distance of the alternative boundary ring outside `C`.
    pub ring_offset: f64,
    /// Spacing of ring points along each face.
    pub ring_spacing: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_inner_fraction() -> f64 {
    0.5
}

fn default_horizon() -> f64 {
    10.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercolateSpec {
    pub z_values: Vec<f64>,
    pub sides: Vec<f64>,
    pub grain: GrainLaw,
}

/// Validated, ready-to-run form of a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub model: PapangelouModel,
    pub window: Window,
    pub reference: ReferenceMeasure,
    pub boundary: BoundaryCondition,
    pub dim: usize,
}

/// A validation failure tied, when possible, to a config key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: Some(key.into()),
            message: message.into(),
        }
    }
}

impl From<GibbsError> for ConfigError {
    fn from(e: GibbsError) -> Self {
        let key = match &e {
            GibbsError::InvalidParameter { name, reason } => {
                return Self::new(*name, reason.clone());
            }
            GibbsError::InvalidWindow { .. } => Some("lower".into()),
            GibbsError::BoundaryInsideWindow => Some("boundary".into()),
            _ => None,
        };
        Self {
            key,
            message: e.to_string(),
        }
    }
}

fn points(list: &[Vec<f64>], dim: usize, key: &str) -> Result<Vec<Point>, ConfigError> {
    list.iter()
        .map(|c| {
            if c.len() != dim {
                return Err(ConfigError::new(
                    key,
                    format!("point {c:?} has {} coordinates, expected {dim}", c.len()),
                ));
            }
            Point::new(c).map_err(|e| ConfigError::new(key, e.to_string()))
        })
        .collect()
}

impl RunConfig {
    pub fn resolve(self) -> Result<Resolved, ConfigError> {
        let window = self.window.build()?;
        let dim = window.dim();
        let model = self.model.build(dim)?;
        let reference = match &self.reference {
            Some(field) => {
                field.validate(dim)?;
                ReferenceMeasure::new(field.clone())
            }
            None => ReferenceMeasure::lebesgue(),
        };
        let psi: CountingMeasure = points(&self.boundary, dim, "boundary")?
            .into_iter()
            .collect();
        let boundary = BoundaryCondition::new(psi, &window)?;
        if self.mc.samples == 0 {
            return Err(ConfigError::new("samples", "must be positive"));
        }
        if !(self.mc.eps > 0.0) {
            return Err(ConfigError::new("eps", "must be positive"));
        }
        points(&self.estimate.points, dim, "points")?;
        let sub = |window: &Option<WindowSpec>, key: &str| -> Result<(), ConfigError> {
            if let Some(s) = window {
                let w = s.build()?;
                if w.dim() != dim {
                    return Err(ConfigError::new(
                        key,
                        "sub-window dimension differs from the window",
                    ));
                }
            }
            Ok(())
        };
        sub(&self.estimate.b, "b")?;
        sub(&self.gnz.b, "b")?;
        let need = |present: bool, table: &str| {
            if present {
                Ok(())
            } else {
                Err(ConfigError::new(
                    table,
                    format!("command `{}` needs a [{table}] table", self.command.name()),
                ))
            }
        };
        match self.command {
            Command::Dlr => need(self.dlr.is_some(), "dlr")?,
            Command::Converge => need(self.converge.is_some(), "converge")?,
            Command::Disagree => need(self.disagree.is_some(), "disagree")?,
            Command::Percolate => {
                need(self.percolate.is_some(), "percolate")?;
                let p = self.percolate.as_ref().expect("checked");
                p.grain.validate(dim)?;
            }
            _ => {}
        }
        if let Some(d) = &self.dlr {
            let inner = d.inner.build()?;
            if !window.contains_window(&inner) {
                return Err(ConfigError::new(
                    "inner",
                    "inner window must lie inside the window",
                ));
            }
        }
        Ok(Resolved {
            config: self,
            model,
            window,
            reference,
            boundary,
            dim,
        })
    }
}

/// 1-based line of the first `key = ...` assignment, preferring one inside
/// a `[table]` whose name ends with `table_hint`.
pub fn locate_key(text: &str, key: &str, table_hint: Option<&str>) -> Option<usize> {
    let mut table = String::new();
    let mut first = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            table = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        let is_key = t
            .strip_prefix(key)
            .map(|rest| rest.trim_start().starts_with('='))
            .unwrap_or(false);
        if is_key {
            if table_hint.is_some_and(|h| table.ends_with(h)) {
                return Some(i + 1);
            }
            first.get_or_insert(i + 1);
        }
    }
    first
}

/// 1-based line number of a byte offset.
pub fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}
