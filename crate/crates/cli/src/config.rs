//! Experiment configuration files.

use std::path::Path;

use hcpinn::boundary::{Family, GridMode};
use hcpinn::dynamics::Integrator;
use hcpinn::kernels::Path as KernelPath;
use hcpinn::net::Activation;
use hcpinn::train::{GridSpec, Phase};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    KnInvarianceSeed,
    KnInvarianceWidth,
    KnInvarianceDepth,
    KnInvarianceActivation,
    KtSpectrum,
    KrSpectrum,
    KrCorrelation,
    DynamicsSim,
    TrainStudy,
    OptimizerCompare,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::KnInvarianceSeed => "kn-invariance-seed",
            Kind::KnInvarianceWidth => "kn-invariance-width",
            Kind::KnInvarianceDepth => "kn-invariance-depth",
            Kind::KnInvarianceActivation => "kn-invariance-activation",
            Kind::KtSpectrum => "kt-spectrum",
            Kind::KrSpectrum => "kr-spectrum",
            Kind::KrCorrelation => "kr-correlation",
            Kind::DynamicsSim => "dynamics-sim",
            Kind::TrainStudy => "train-study",
            Kind::OptimizerCompare => "optimizer-compare",
        }
    }

    pub fn is_invariance(self) -> bool {
        matches!(
            self,
            Kind::KnInvarianceSeed | Kind::KnInvarianceWidth | Kind::KnInvarianceDepth | Kind::KnInvarianceActivation
        )
    }

    fn needs_benchmark(self) -> bool {
        matches!(
            self,
            Kind::KrSpectrum | Kind::KrCorrelation | Kind::DynamicsSim | Kind::TrainStudy | Kind::OptimizerCompare
        )
    }
}

fn default_width() -> usize {
    500
}

fn default_depth() -> usize {
    2
}

fn default_activation() -> Activation {
    Activation::Tanh
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            width: default_width(),
            depth: default_depth(),
            activation: default_activation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySweep {
    pub family: Family,
    /// One parameter vector per sweep point.
    pub params: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub name: String,
    pub phases: Vec<Phase>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub widths: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub depths: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub activations: Vec<Activation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<FamilySweep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedules: Vec<Schedule>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    #[serde(default)]
    pub phases: Vec<Phase>,
    #[serde(default)]
    pub test_grid: Option<GridSpec>,
    #[serde(default)]
    pub snapshot_epochs: Vec<usize>,
    /// Write per-epoch loss CSVs and parameter files.
    #[serde(default)]
    pub write_runs: bool,
}

fn default_eta() -> f64 {
    1e-3
}

fn default_dt_fraction() -> f64 {
    0.1
}

fn default_max_steps() -> usize {
    200_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Horizon as a multiple of `t_conv`.
    #[serde(default)]
    pub t_conv_fraction: Option<f64>,
    /// Horizon as a multiple of the fastest-mode time `N_r / (2 eta lambda_max)`.
    #[serde(default)]
    pub fast_multiple: Option<f64>,
    /// Step as a fraction of the fastest-mode time.
    #[serde(default = "default_dt_fraction")]
    pub dt_fraction: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub integrator: Integrator,
    /// Plain gradient steps for the lazy-regime comparison; skipped when absent.
    #[serde(default)]
    pub lazy_steps: Option<usize>,
    #[serde(default)]
    pub write_trajectories: bool,
}

impl Default for DynamicsSpec {
    fn default() -> Self {
        DynamicsSpec {
            eta: default_eta(),
            t_conv_fraction: None,
            fast_multiple: None,
            dt_fraction: default_dt_fraction(),
            max_steps: default_max_steps(),
            integrator: Integrator::default(),
            lazy_steps: None,
            write_trajectories: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateSpec {
    pub features: Vec<String>,
    pub targets: Vec<String>,
    /// Column whose values define the strata, usually `family`.
    #[serde(default)]
    pub stratify: Option<String>,
}

/// Threshold on a summary metric, or an ordering over several.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    #[serde(default)]
    pub metric: Option<String>,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decreasing: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub increasing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub id: String,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub benchmark: Option<String>,
    /// Input dimension for kernel-only studies without a benchmark.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub network: NetworkSpec,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub kernel_path: KernelPath,
    #[serde(default)]
    pub persist_kernels: bool,
    pub sweep: Sweep,
    #[serde(default)]
    pub train: Option<TrainSpec>,
    #[serde(default)]
    pub dynamics: Option<DynamicsSpec>,
    #[serde(default)]
    pub correlate: Option<CorrelateSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The config as TOML, used for provenance headers.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sweep.seeds = vec![seed];
        self
    }

    pub fn dim(&self) -> Result<usize, CliError> {
        if let Some(b) = &self.benchmark {
            return Ok(hcpinn::pde::benchmark(b)?.dim);
        }
        if let Some(d) = self.dim {
            return Ok(d);
        }
        Ok(self.sweep.families.first().map(|f| f.family.dim()).unwrap_or(1))
    }

    pub fn grid_spec(&self, dim: usize) -> GridSpec {
        self.grid.unwrap_or(GridSpec {
            points_per_axis: hcpinn::train::default_train_points(dim),
            mode: GridMode::Open,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Schema(format!(
                "config schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return bad(format!("experiment id {:?} must be a non-empty file name", self.id));
        }
        let s = &self.sweep;
        if s.seeds.is_empty() {
            return bad("sweep.seeds must not be empty".into());
        }
        let need = |ok: bool, what: &str| if ok { Ok(()) } else { bad(format!("{} needs a nonempty sweep.{what}", self.kind.name())) };
        match self.kind {
            Kind::KnInvarianceWidth => need(!s.widths.is_empty(), "widths")?,
            Kind::KnInvarianceDepth => need(!s.depths.is_empty(), "depths")?,
            Kind::KnInvarianceActivation => need(!s.activations.is_empty(), "activations")?,
            Kind::KnInvarianceSeed => {}
            Kind::OptimizerCompare => {
                need(!s.schedules.is_empty(), "schedules")?;
                need(!s.families.is_empty(), "families")?;
            }
            _ => need(!s.families.is_empty(), "families")?,
        }
        if self.network.width == 0 || self.network.depth == 0 || s.widths.contains(&0) || s.depths.contains(&0) {
            return bad("network widths and depths must be positive".into());
        }
        for f in &s.families {
            if f.params.is_empty() {
                return bad(format!("family {} has an empty parameter list", f.family));
            }
            for p in &f.params {
                hcpinn::boundary::make_pair(f.family, p, f.family.dim())?;
            }
        }
        if self.kind.needs_benchmark() && self.benchmark.is_none() {
            return bad(format!("{} needs a benchmark", self.kind.name()));
        }
        if let Some(b) = &self.benchmark {
            let dim = hcpinn::pde::benchmark(b)?.dim;
            if let Some(f) = s.families.iter().find(|f| f.family.dim() != dim) {
                return bad(format!("family {} does not match the {dim}-dimensional benchmark {b}", f.family));
            }
        }
        if let Some(d) = self.dim {
            if !(1..=3).contains(&d) {
                return bad(format!("dim must be 1, 2 or 3, got {d}"));
            }
        }
        if matches!(self.kind, Kind::TrainStudy) && self.train.as_ref().is_none_or(|t| t.phases.is_empty()) {
            return bad("train-study needs train.phases".into());
        }
        if let Some(t) = &self.train {
            check_phases(&t.phases)?;
        }
        for sch in &s.schedules {
            check_phases(&sch.phases)?;
        }
        if let Some(d) = &self.dynamics {
            if !(d.eta > 0.0) || !(d.dt_fraction > 0.0) || d.max_steps == 0 {
                return bad("dynamics.eta, dt_fraction and max_steps must be positive".into());
            }
            if d.t_conv_fraction.is_some() && d.fast_multiple.is_some() {
                return bad("set at most one of dynamics.t_conv_fraction and dynamics.fast_multiple".into());
            }
        }
        if let Some(c) = &self.correlate {
            if c.features.is_empty() || c.targets.is_empty() {
                return bad("correlate.features and correlate.targets must not be empty".into());
            }
        }
        for c in &self.checks {
            let has_bound = c.metric.is_some() && (c.min.is_some() || c.max.is_some());
            if !has_bound && c.decreasing.len() < 2 && c.increasing.len() < 2 {
                return bad(format!("check {:?} needs a metric with a bound or an ordering of two or more metrics", c.name));
            }
        }
        Ok(())
    }
}

fn check_phases(phases: &[Phase]) -> Result<(), CliError> {
    for (i, p) in phases.iter().enumerate() {
        if p.steps == 0 || !(p.lr() > 0.0) || !p.lr().is_finite() {
            return Err(CliError::Config(format!("phase {i} needs positive steps and learning rate")));
        }
    }
    Ok(())
}
