use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;
use crate::eval::{CorpusMode, GeneratorSpec, DEFAULT_BUDGET};
use crate::genome::BinningConfig;
use crate::islands::{MigrationConfig, SelectionConfig};
use crate::mutation::meta_prompt::DEFAULT_STRIP_PATTERNS;
use crate::mutation::{ModelSpec, DEFAULT_GOAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationProvider {
    LlmEnsemble,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    pub provider: MutationProvider,
    pub models: Vec<ModelSpec>,
    pub goal_text: String,
    /// Top elites of the island shown to the mutator alongside the parent.
    pub inspirations: usize,
    pub strip_patterns: Vec<String>,
}

impl Default for MutationConfig {
    fn default() -> Self {
        Self {
            provider: MutationProvider::Synthetic,
            models: Vec::new(),
            goal_text: DEFAULT_GOAL.to_string(),
            inspirations: 3,
            strip_patterns: DEFAULT_STRIP_PATTERNS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Fully resolved settings of one evolution run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub master_seed: u64,
    pub max_iterations: u64,
    pub islands: usize,
    pub budget: usize,
    pub population_size: usize,
    pub archive_capacity: usize,
    pub checkpoint_interval: u64,
    pub binning: BinningConfig,
    pub selection: SelectionConfig,
    pub migration: MigrationConfig,
    pub mutation: MutationConfig,
    pub generator: GeneratorSpec,
    pub corpus_path: PathBuf,
    pub corpus_mode: CorpusMode,
}

impl EvolutionConfig {
    /// Defaults for everything except the data sources.
    pub fn new(corpus_path: impl Into<PathBuf>, generator: GeneratorSpec) -> Self {
        Self {
            master_seed: 42,
            max_iterations: 100,
            islands: 3,
            budget: DEFAULT_BUDGET,
            population_size: 100,
            archive_capacity: 20,
            checkpoint_interval: 10,
            binning: BinningConfig::default(),
            selection: SelectionConfig::default(),
            migration: MigrationConfig::default(),
            mutation: MutationConfig::default(),
            generator,
            corpus_path: corpus_path.into(),
            corpus_mode: CorpusMode::Unique,
        }
    }

    /// SHA-256 of the canonical JSON encoding. Field order is fixed by the
    /// struct, so the digest does not depend on how a config file was laid out.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("max_iterations", self.max_iterations as usize),
            ("islands", self.islands),
            ("budget", self.budget),
            ("population_size", self.population_size),
            ("archive_size", self.archive_capacity),
            ("checkpoint_interval", self.checkpoint_interval as usize),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(ConfigError::invalid(key, "must be at least 1"));
            }
        }
        if self.corpus_path.as_os_str().is_empty() {
            return Err(ConfigError::missing("corpus_path"));
        }
        self.binning.validate()?;
        self.selection.validate()?;
        self.migration.validate()?;
        if self.mutation.provider == MutationProvider::LlmEnsemble && self.mutation.models.is_empty() {
            return Err(ConfigError::missing("models"));
        }
        self.mutation.models.iter().try_for_each(ModelSpec::validate)?;
        match &self.generator {
            GeneratorSpec::Surrogate { training_path, top_list_size } => {
                if training_path.as_os_str().is_empty() {
                    return Err(ConfigError::missing("training_path"));
                }
                if *top_list_size == 0 {
                    return Err(ConfigError::invalid("top_list_size", "must be at least 1"));
                }
            }
            GeneratorSpec::ExternalCommand { command, timeout_secs } => {
                if command.is_empty() {
                    return Err(ConfigError::missing("command"));
                }
                if *timeout_secs == 0 {
                    return Err(ConfigError::invalid("timeout_secs", "must be at least 1"));
                }
            }
        }
        Ok(())
    }
}
