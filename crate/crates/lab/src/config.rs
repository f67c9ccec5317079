//! TOML experiment configuration.
//!
//! ```toml
//! [grid]
//! dim = 1
//! extents = [1.0]
//! n_cells = [64]
//!
//! [params]
//! m = 1.0
//! p = 2.0
//! sigma = 0.0
//! alpha = 3.5
//! beta = 0.1
//! gamma = 4.0
//! # lambda1p = 9.87   # computed from the grid when absent
//!
//! [source]
//! kind = "power"      # or "tabulated" with `u = [...]`, `f = [...]`
//! k = 1.0
//! q = 3.0
//!
//! [initial]
//! family = "sine"     # "sine" | "eigen" | "bump"
//! amplitude = 1.0
//! bump_index = 1      # which random bump profile, for family = "bump"
//!
//! [stepper]           # every key optional
//! dt_init = 1e-4
//! dt_min = 1e-12
//! dt_max = 1e-2
//! t_end = 1.0
//! blowup_norm_threshold = 1e8
//! eps_reg = 1e-8      # default 1e-8 / diameter
//! scheme = "semi_implicit"   # or "explicit"
//! picard_tol = 1e-10
//! picard_max = 60
//! max_steps = 5000000
//!
//! [experiment]
//! kind = "single_run" # "energy_sweep" | "well_profile" | "eigen_only" | "dichotomy_table"
//! seed = 0
//! out = "out"
//! ```
//!
//! The remaining `[experiment]` keys are optional and listed on
//! [`ExperimentSection`]. Unknown keys anywhere are errors.

use std::path::{Path, PathBuf};

use pmwell_core::variational::{first_eigen_p, start_field};
use pmwell_core::{Field, Grid, ProblemParams, Scheme, SourceSpec, StepperConfig};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub extents: Vec<f64>,
    pub n_cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub m: f64,
    pub p: f64,
    #[serde(default)]
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default)]
    pub lambda1p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSection {
    Power { k: f64, q: f64 },
    Tabulated { u: Vec<f64>, f: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialFamily {
    /// First Dirichlet eigenfunction of the p-Laplacian, max-normalized.
    Eigen,
    /// Product of `sin(pi x_i / L_i)`.
    Sine,
    /// Random positive bumps under a sine envelope, max-normalized.
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub family: InitialFamily,
    pub amplitude: f64,
    #[serde(default = "one")]
    pub bump_index: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    SemiImplicit,
    Explicit,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSection {
    pub dt_init: Option<f64>,
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
    pub t_end: Option<f64>,
    pub blowup_norm_threshold: Option<f64>,
    pub eps_reg: Option<f64>,
    pub scheme: Option<SchemeName>,
    pub picard_tol: Option<f64>,
    pub picard_max: Option<usize>,
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SingleRun,
    EnergySweep,
    WellProfile,
    EigenOnly,
    DichotomyTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// `delta` of the well depth `d(delta)` used by classification and tuning.
    #[serde(default = "unit")]
    pub delta: f64,
    /// Multi-start count of the well-depth descent.
    #[serde(default = "four")]
    pub starts: usize,
    #[serde(default = "depth_tol")]
    pub depth_tol: f64,
    #[serde(default = "depth_iter")]
    pub depth_max_iter: usize,
    #[serde(default = "profile_points")]
    pub profile_points: usize,
    #[serde(default = "eigen_tol")]
    pub eigen_tol: f64,
    #[serde(default = "eigen_iter")]
    pub eigen_max_iter: usize,
    /// Critical targeting accepts `|J - d| <= critical_tol * d`.
    #[serde(default = "critical_tol")]
    pub critical_tol: f64,
    /// `J(u0) = fraction * d` for the subcritical table rows.
    #[serde(default = "half")]
    pub subcritical_fraction: f64,
    /// `J(u0) = d + fraction (J_max - d)` for the exploratory rows.
    #[serde(default = "half")]
    pub supercritical_fraction: f64,
    /// Sweep axis and values for `energy_sweep`.
    #[serde(default)]
    pub axis: Option<String>,
    #[serde(default)]
    pub values: Vec<f64>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn unit() -> f64 {
    1.0
}
fn four() -> usize {
    4
}
fn depth_tol() -> f64 {
    1e-10
}
fn depth_iter() -> usize {
    4000
}
fn profile_points() -> usize {
    25
}
fn eigen_tol() -> f64 {
    1e-12
}
fn eigen_iter() -> usize {
    5000
}
fn critical_tol() -> f64 {
    1e-3
}
fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub params: ParamsSection,
    pub source: SourceSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub stepper: StepperSection,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Serialize(e.to_string()))
    }

    /// Checks that need no numerics.
    fn check(&self) -> Result<()> {
        if !(self.initial.amplitude > 0.0) {
            return Err(LabError::Config(format!(
                "initial.amplitude must be positive, got {}",
                self.initial.amplitude
            )));
        }
        if self.initial.family == InitialFamily::Bump && self.initial.bump_index == 0 {
            return Err(LabError::Config("initial.bump_index starts at 1".into()));
        }
        if !(self.experiment.delta > 0.0) {
            return Err(LabError::Config("experiment.delta must be positive".into()));
        }
        if self.experiment.starts == 0 || self.experiment.profile_points == 0 {
            return Err(LabError::Config("experiment.starts and profile_points must be positive".into()));
        }
        if !(self.experiment.critical_tol > 0.0) {
            return Err(LabError::Config("experiment.critical_tol must be positive".into()));
        }
        for (name, f) in [
            ("subcritical_fraction", self.experiment.subcritical_fraction),
            ("supercritical_fraction", self.experiment.supercritical_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(LabError::Config(format!("experiment.{name} must lie in (0, 1), got {f}")));
            }
        }
        self.grid()?;
        self.source_spec()?;
        self.stepper()?;
        // Structural (H) checks; the lambda1p bound waits for `resolve`.
        self.raw_params()?
            .validate()
            .map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        if g.extents.len() != g.dim || g.n_cells.len() != g.dim {
            return Err(LabError::Config(format!(
                "grid: extents and n_cells need {} entries each",
                g.dim
            )));
        }
        Grid::new(g.dim, &g.extents, &g.n_cells).map_err(|e| LabError::Config(format!("grid: {e}")))
    }

    pub fn source_spec(&self) -> Result<SourceSpec> {
        let s = match &self.source {
            SourceSection::Power { k, q } => SourceSpec::power(*k, *q),
            SourceSection::Tabulated { u, f } => SourceSpec::tabulated(u.clone(), f.clone()),
        };
        s.map_err(|e| LabError::Config(format!("source: {e}")))
    }

    fn raw_params(&self) -> Result<ProblemParams> {
        let p = &self.params;
        Ok(ProblemParams {
            m: p.m,
            p: p.p,
            sigma: p.sigma,
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            lambda1p: p.lambda1p,
            source: self.source_spec()?,
        })
    }

    pub fn stepper(&self) -> Result<StepperConfig> {
        let s = &self.stepper;
        let d = StepperConfig::default();
        let cfg = StepperConfig {
            dt_init: s.dt_init.unwrap_or(d.dt_init),
            dt_min: s.dt_min.unwrap_or(d.dt_min),
            dt_max: s.dt_max.unwrap_or(d.dt_max),
            t_end: s.t_end.unwrap_or(d.t_end),
            blowup_norm_threshold: s.blowup_norm_threshold.unwrap_or(d.blowup_norm_threshold),
            eps_reg: s.eps_reg.or(d.eps_reg),
            scheme: match s.scheme {
                Some(SchemeName::Explicit) => Scheme::Explicit,
                _ => Scheme::SemiImplicit,
            },
            picard_tol: s.picard_tol.unwrap_or(d.picard_tol),
            picard_max: s.picard_max.unwrap_or(d.picard_max),
            max_steps: s.max_steps.unwrap_or(d.max_steps),
        };
        cfg.validate().map_err(|e| LabError::Config(format!("stepper: {e}")))?;
        Ok(cfg)
    }

    /// Grid and fully validated parameters. `lambda1p` is computed on the
    /// grid when the file leaves it out; a violated bound on `beta` is a
    /// configuration error naming the clause.
    pub fn resolve(&self) -> Result<(Grid, ProblemParams)> {
        let grid = self.grid()?;
        let mut params = self.raw_params()?;
        if params.lambda1p.is_none() {
            let e = first_eigen_p(&grid, params.p, self.experiment.eigen_tol, self.experiment.eigen_max_iter)?;
            params.lambda1p = Some(e.lambda1p);
        }
        params.validate().map_err(|e| LabError::Config(e.to_string()))?;
        Ok((grid, params))
    }

    /// Unit-amplitude base profile of the configured family.
    pub fn base_profile(&self, grid: &Grid, p: f64) -> Result<Field> {
        let f = match self.initial.family {
            InitialFamily::Sine => start_field(grid, self.experiment.seed, 0),
            InitialFamily::Eigen => {
                first_eigen_p(grid, p, self.experiment.eigen_tol, self.experiment.eigen_max_iter)?.eigenfield
            }
            InitialFamily::Bump => start_field(grid, self.experiment.seed, self.initial.bump_index),
        };
        let top = f.max_abs();
        Ok(if top > 0.0 { f.scaled(1.0 / top) } else { f })
    }

    pub fn initial_field(&self, grid: &Grid, p: f64) -> Result<Field> {
        Ok(self.base_profile(grid, p)?.scaled(self.initial.amplitude))
    }
}
