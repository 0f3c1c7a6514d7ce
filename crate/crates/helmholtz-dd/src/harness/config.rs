//! TOML experiment configuration.
//!
//! A config file holds one or more `[[experiment]]` tables:
//!
//! ```toml
//! [[experiment]]
//! name = "strips"
//! k = [20.0, 30.0, 40.0]
//! decomposition = { type = "strip", n = 2 }
//! delta = 0.025
//! kappa = 0.025
//! wave_speed = "uniform"
//! diffusion = "identity"
//! absorber = { type = "pml_cubic", alpha = 5000.0 }
//! method = { type = "ras_fixed_point" }
//! tol = 1e-6
//! max_iters = 60
//! ```

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Wavenumber grids: `desk` is sized for a laptop-scale direct solver, the
/// original study grid is available behind `paper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    pub fn k_list(&self) -> Vec<f64> {
        match self {
            Profile::Desk => vec![15.0, 20.0, 30.0, 40.0],
            Profile::Paper => vec![100.0, 150.0, 200.0, 250.0, 300.0, 350.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default)]
    pub experiment: Vec<ExperimentConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DecompositionSpec {
    Strip { n: usize },
    Checkerboard { dims: [usize; 2] },
}

impl DecompositionSpec {
    pub fn dims(&self) -> (usize, usize) {
        match *self {
            DecompositionSpec::Strip { n } => (n, 1),
            DecompositionSpec::Checkerboard { dims } => (dims[0], dims[1]),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            DecompositionSpec::Strip { n } => format!("strip{n}"),
            DecompositionSpec::Checkerboard { dims } => format!("{}x{}", dims[0], dims[1]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WaveSpeedSpec {
    #[default]
    Uniform,
    Focusing,
    Defocusing,
}

impl WaveSpeedSpec {
    pub fn label(&self) -> &'static str {
        match self {
            WaveSpeedSpec::Uniform => "uniform",
            WaveSpeedSpec::Focusing => "focusing",
            WaveSpeedSpec::Defocusing => "defocusing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionSpec {
    #[default]
    Identity,
    CrossBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AbsorberSpec {
    PmlCubic {
        alpha: f64,
    },
    /// Scaling with constant slope beyond `kappa_lin_fraction * kappa`.
    PmlSmooth {
        kappa_lin_fraction: f64,
        slope: f64,
    },
    Cap {
        amplitude: f64,
        #[serde(default = "default_ramp_order")]
        ramp_order: u32,
    },
}

fn default_ramp_order() -> u32 {
    2
}

impl Default for AbsorberSpec {
    fn default() -> Self {
        AbsorberSpec::PmlCubic { alpha: 5000.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleSpec {
    #[default]
    ForwardBackward,
    Lex,
    Snake,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MethodSpec {
    /// Parallel method as a fixed-point iteration.
    #[default]
    RasFixedPoint,
    /// Parallel method as a fixed-point iteration plus GMRES acceleration
    /// of the same preconditioned system (both iteration counts reported).
    RasGmres,
    /// Sequential sweeping under the given schedule.
    Rms {
        #[serde(default)]
        schedule: ScheduleSpec,
    },
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self {
            MethodSpec::RasFixedPoint => "ras_fixed_point".into(),
            MethodSpec::RasGmres => "ras_gmres".into(),
            MethodSpec::Rms { schedule } => match schedule {
                ScheduleSpec::ForwardBackward => "rms_fb".into(),
                ScheduleSpec::Lex => "rms_lex".into(),
                ScheduleSpec::Snake => "rms_snake".into(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    /// Wavenumbers; when empty, filled from the profile.
    #[serde(default)]
    pub k: Vec<f64>,
    pub decomposition: DecompositionSpec,
    #[serde(default = "default_fortieth")]
    pub delta: f64,
    #[serde(default = "default_fortieth")]
    pub kappa: f64,
    /// Interior layer width; defaults to `kappa`.
    #[serde(default)]
    pub kappa0: Option<f64>,
    #[serde(default)]
    pub wave_speed: WaveSpeedSpec,
    #[serde(default)]
    pub diffusion: DiffusionSpec,
    #[serde(default)]
    pub absorber: AbsorberSpec,
    #[serde(default)]
    pub method: MethodSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Iteration cap (parallel applications or sweep rounds).
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Source location of the radial Bessel load.
    #[serde(default = "default_source")]
    pub source: [f64; 2],
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Explicit `1/h` override (must resolve all breakpoints).
    #[serde(default)]
    pub h_denominator: Option<u64>,
    #[serde(default = "default_budget_mb")]
    pub memory_budget_mb: usize,
    /// Shrink fraction of the partition-of-unity bump supports.
    #[serde(default = "default_pou_shrink")]
    pub pou_shrink: f64,
    /// Override for the one-sided boundary bump scale.
    #[serde(default)]
    pub pou_boundary_scale: Option<f64>,
}

fn default_fortieth() -> f64 {
    0.025
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iters() -> usize {
    60
}

fn default_source() -> [f64; 2] {
    [0.5, 0.5]
}

fn default_degree() -> usize {
    2
}

fn default_budget_mb() -> usize {
    4096
}

fn default_pou_shrink() -> f64 {
    0.3
}

impl ExperimentConfig {
    /// Minimal config for one decomposition at the given wavenumbers.
    pub fn new(decomposition: DecompositionSpec, k: Vec<f64>) -> Self {
        ExperimentConfig {
            name: String::new(),
            k,
            decomposition,
            delta: default_fortieth(),
            kappa: default_fortieth(),
            kappa0: None,
            wave_speed: WaveSpeedSpec::default(),
            diffusion: DiffusionSpec::default(),
            absorber: AbsorberSpec::default(),
            method: MethodSpec::default(),
            tol: default_tol(),
            max_iters: default_max_iters(),
            source: default_source(),
            seed: 0,
            degree: default_degree(),
            h_denominator: None,
            memory_budget_mb: default_budget_mb(),
            pou_shrink: default_pou_shrink(),
            pou_boundary_scale: None,
        }
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0.unwrap_or(self.kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k.is_empty() {
            return Err(Error::InvalidConfig(
                "no wavenumbers: set k or a profile".into(),
            ));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be in (0, 1), got {}",
                self.tol
            )));
        }
        if self.kappa <= 0.0 || self.kappa0() <= 0.0 || self.delta <= 0.0 {
            return Err(Error::InvalidConfig(
                "layer widths and overlap must be positive".into(),
            ));
        }
        if let AbsorberSpec::PmlSmooth {
            kappa_lin_fraction, ..
        } = self.absorber
        {
            if !(0.0 < kappa_lin_fraction && kappa_lin_fraction < 1.0) {
                return Err(Error::InvalidConfig(
                    "kappa_lin_fraction must be in (0, 1)".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Parses an experiment file, applying the profile's k list to
/// experiments that leave `k` empty.
pub fn parse_experiments(text: &str, profile: Option<Profile>) -> Result<Vec<ExperimentConfig>> {
    let file: ExperimentFile =
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config parse: {e}")))?;
    let mut experiments = file.experiment;
    if experiments.is_empty() {
        return Err(Error::InvalidConfig(
            "config contains no [[experiment] ] tables".into(),
        ));
    }
    for exp in &mut experiments {
        if exp.k.is_empty() {
            exp.k = profile.unwrap_or(Profile::Desk).k_list();
        }
        exp.validate()?;
    }
    Ok(experiments)
}
