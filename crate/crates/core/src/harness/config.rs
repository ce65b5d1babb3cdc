use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cognitive_map::DEFAULT_OBSERVATION_DEPTH;
use crate::memory_stream::MemoryStreamConfig;
use crate::metrics::DistanceMode;
use crate::perception::DescriberMode;
use crate::planner::{DEFAULT_PROMPT_CAP, DEFAULT_STEP_BUDGET};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// How one language role is served.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    /// Deterministic rules; the planner follows the geodesic oracle hint.
    #[default]
    Scripted,
    /// Scripted, with planner replies corrupted at `noise_rate`.
    Noisy,
    /// Remote chat-completion endpoint from the environment.
    Live,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendModes {
    pub splitter: BackendMode,
    pub rationalizer: BackendMode,
    pub planner: BackendMode,
    pub describer: BackendMode,
    pub reflector: BackendMode,
}

impl BackendModes {
    pub fn all(mode: BackendMode) -> Self {
        Self {
            splitter: mode,
            rationalizer: mode,
            planner: mode,
            describer: mode,
            reflector: mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Candidate waypoints per step.
    pub k: usize,
    pub delta: f64,
    pub forget_fraction: f64,
    pub retrieval_k: usize,
    pub step_budget: u32,
    pub prompt_cap: usize,
    pub observation_depth: usize,
    pub describer_mode: DescriberMode,
    pub backends: BackendModes,
    pub noise_rate: f64,
    /// Seeds the noisy planner.
    pub seed: u64,
    pub no_reflection: bool,
    pub no_rationalization: bool,
    pub no_cognitive_map: bool,
    pub fresh_memory_per_episode: bool,
    pub distance_mode: DistanceMode,
    pub episodes: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let memory = MemoryStreamConfig::default();
        Self {
            k: 7,
            delta: memory.delta,
            forget_fraction: memory.forget_fraction,
            retrieval_k: memory.retrieval_k,
            step_budget: DEFAULT_STEP_BUDGET,
            prompt_cap: DEFAULT_PROMPT_CAP,
            observation_depth: DEFAULT_OBSERVATION_DEPTH,
            describer_mode: DescriberMode::Oracle,
            backends: BackendModes::default(),
            noise_rate: 0.3,
            seed: 0,
            no_reflection: false,
            no_rationalization: false,
            no_cognitive_map: false,
            fresh_memory_per_episode: false,
            distance_mode: DistanceMode::Geodesic,
            episodes: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if !(1..=120).contains(&self.k) {
            return bad("k must be in 1..=120");
        }
        if self.delta.is_nan() || self.delta <= 0.0 {
            return bad("delta must be positive");
        }
        if !(0.0..1.0).contains(&self.forget_fraction) {
            return bad("forget_fraction must be in [0, 1)");
        }
        if self.step_budget == 0 {
            return bad("step_budget must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return bad("noise_rate must be in [0, 1]");
        }
        if self.observation_depth == 0 {
            return bad("observation_depth must be at least 1");
        }
        Ok(())
    }

    pub fn memory_config(&self) -> MemoryStreamConfig {
        MemoryStreamConfig {
            delta: self.delta,
            forget_fraction: self.forget_fraction,
            retrieval_k: self.retrieval_k,
        }
    }

    /// Whether planner prompts carry the geodesic `best=` hint.
    pub fn oracle_hints(&self) -> bool {
        self.backends.planner != BackendMode::Live
    }
}
