//! Experiment configuration: a single TOML file with a strict schema.
//! Unknown keys anywhere are rejected.

use serde::Deserialize;
use warplab::profile::CurvatureProfile;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config invalid: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config invalid: {0}")]
    Semantic(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Model,
    Spectrum,
    Weyl,
    Mesh,
    Explore,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Model => "model",
            Task::Spectrum => "spectrum",
            Task::Weyl => "weyl",
            Task::Mesh => "mesh",
            Task::Explore => "explore",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub name: String,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub r_max: f64,
    pub nodes_per_unit: Option<usize>,
    pub substeps: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default = "default_s_min")]
    pub s_min: f64,
    pub s_max: f64,
    #[serde(default = "default_eigen_count")]
    pub eigen_count: usize,
    #[serde(default = "default_method")]
    pub method: String,
    /// Truncation radii for bottom-of-spectrum estimates.
    pub radii: Option<Vec<f64>>,
}

fn default_s_min() -> f64 {
    0.01
}

fn default_eigen_count() -> usize {
    3
}

fn default_method() -> String {
    "matrix".to_string()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylSection {
    pub lambda: f64,
    pub t_grid: Vec<f64>,
    pub l_grid: Vec<f64>,
    #[serde(default = "default_s_gap")]
    pub s_gap: f64,
    #[serde(default = "default_t0")]
    pub t0: f64,
}

fn default_s_gap() -> f64 {
    1.0
}

fn default_t0() -> f64 {
    warplab::weyl::DEFAULT_T0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub nr: usize,
    pub ntheta: usize,
    pub r_max: f64,
    pub delta: f64,
    #[serde(default = "default_mode_m")]
    pub mode_m: usize,
    pub support: Option<[f64; 2]>,
    #[serde(default = "default_envelope")]
    pub envelope: f64,
    pub exhaustion: Vec<f64>,
    /// Band [b_lo, b_hi] for the identity report.
    pub band: [f64; 2],
}

fn default_mode_m() -> usize {
    3
}

fn default_envelope() -> f64 {
    1.6
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExploreSection {
    pub lambdas: Vec<f64>,
    pub scan_max: f64,
    #[serde(default = "default_s_min")]
    pub s_min: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    pub profile: ProfileSpec,
    pub model: ModelSection,
    pub spectrum: Option<SpectrumSection>,
    pub weyl: Option<WeylSection>,
    pub mesh: Option<MeshSection>,
    pub explore: Option<ExploreSection>,
    pub output: Option<OutputSection>,
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if !(2..=16).contains(&self.dimension) {
            return Err(ConfigError::Semantic(format!(
                "dimension must be in 2..=16, got {}",
                self.dimension
            )));
        }
        if !(self.model.r_max > 0.0) {
            return Err(ConfigError::Semantic("model.r_max must be positive".into()));
        }
        let section = |present: bool, name: &str| -> Result<(), ConfigError> {
            if !present {
                Err(ConfigError::Semantic(format!(
                    "task = \"{}\" needs a [{}] section",
                    self.task.as_str(),
                    name
                )))
            } else {
                Ok(())
            }
        };
        match self.task {
            Task::Model => Ok(()),
            Task::Spectrum => section(self.spectrum.is_some(), "spectrum"),
            Task::Weyl => section(self.weyl.is_some(), "weyl"),
            Task::Mesh => section(self.mesh.is_some(), "mesh"),
            Task::Explore => section(self.explore.is_some(), "explore"),
        }
    }

    pub fn build_profile(&self) -> Result<CurvatureProfile, ConfigError> {
        let p = &self.profile;
        let need = |count: usize| -> Result<(), ConfigError> {
            if p.params.len() != count {
                Err(ConfigError::Semantic(format!(
                    "profile \"{}\" takes {count} parameter(s), got {}",
                    p.name,
                    p.params.len()
                )))
            } else {
                Ok(())
            }
        };
        let built = match p.name.as_str() {
            "constant" => {
                need(1)?;
                CurvatureProfile::constant(p.params[0])
            }
            "exp_decay" => {
                need(2)?;
                CurvatureProfile::exp_decay(p.params[0], p.params[1])
            }
            "power_decay" => {
                need(2)?;
                CurvatureProfile::power_decay(p.params[0], p.params[1])
            }
            "wigner" => {
                need(2)?;
                CurvatureProfile::wigner(p.params[0], p.params[1])
            }
            other => {
                return Err(ConfigError::Semantic(format!(
                    "unknown profile name \"{other}\" (expected constant, exp_decay, power_decay or wigner)"
                )))
            }
        };
        built.map_err(|e| ConfigError::Semantic(e.to_string()))
    }
}

/// FNV-1a over the raw config text; stamped into every report.
pub fn config_hash(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in text.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
