//! TOML run configuration. Top-level keys follow the hyperparameter names
//! used in the experiment tables; relative paths resolve against the
//! directory holding the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use promptevo_core::engine::{EvolutionConfig, MutationConfig, MutationProvider};
use promptevo_core::eval::{CorpusMode, GeneratorSpec};
use promptevo_core::genome::{AxisBinning, BinningConfig, FeatureDim};
use promptevo_core::islands::{MigrationConfig, SelectionConfig};
use promptevo_core::mutation::{ModelSpec, DEFAULT_MAX_RETRIES, DEFAULT_TIMEOUT_SECS};
use promptevo_core::ConfigError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub random_seed: Option<u64>,
    pub max_iterations: Option<u64>,
    pub islands: Option<usize>,
    pub population_size: Option<usize>,
    pub archive_size: Option<usize>,
    pub migration_interval: Option<u64>,
    pub migration_rate: Option<f64>,
    pub feature_dimensions: Option<Vec<String>>,
    pub feature_bins: Option<usize>,
    /// Elite, exploration and exploitation ratios.
    pub ratios: Option<Vec<f64>>,
    pub elite_pool_size: Option<usize>,
    pub budget: Option<usize>,
    pub checkpoint_interval: Option<u64>,
    pub corpus_path: Option<PathBuf>,
    pub corpus_mode: Option<CorpusMode>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub feature_ranges: BTreeMap<String, [u64; 2]>,
    pub generator: Option<GeneratorSection>,
    pub mutation: Option<MutationSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSection {
    Surrogate { training_path: Option<PathBuf>, top_list_size: Option<usize> },
    ExternalCommand { command: Vec<String>, timeout_secs: Option<u64> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutationSection {
    pub provider: Option<MutationProvider>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
    pub goal: Option<String>,
    pub inspirations: Option<usize>,
    pub strip_patterns: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub endpoint_url: String,
    pub model_id: String,
    pub weight: f64,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
}

const DEFAULT_TOP_LIST: usize = 256;
const DEFAULT_EXTERNAL_TIMEOUT_SECS: u64 = 600;

/// Reads and resolves a config file.
pub fn load(path: &Path) -> Result<EvolutionConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::invalid("config", format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base)
}

pub fn parse(text: &str, base: &Path) -> Result<EvolutionConfig, ConfigError> {
    let file: FileConfig = toml::from_str(text).map_err(|e| {
        ConfigError::invalid("config", e.message().to_string())
    })?;
    file.resolve(base)
}

fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl FileConfig {
    pub fn resolve(self, base: &Path) -> Result<EvolutionConfig, ConfigError> {
        let corpus_path = self.corpus_path.as_deref().ok_or_else(|| ConfigError::missing("corpus_path"))?;
        let generator = match self.generator.clone().ok_or_else(|| ConfigError::missing("generator"))? {
            GeneratorSection::Surrogate { training_path, top_list_size } => GeneratorSpec::Surrogate {
                training_path: resolve_path(
                    base,
                    &training_path.ok_or_else(|| ConfigError::missing("generator.training_path"))?,
                ),
                top_list_size: top_list_size.unwrap_or(DEFAULT_TOP_LIST),
            },
            GeneratorSection::ExternalCommand { command, timeout_secs } => GeneratorSpec::ExternalCommand {
                command,
                timeout_secs: timeout_secs.unwrap_or(DEFAULT_EXTERNAL_TIMEOUT_SECS),
            },
        };
        let mut c = EvolutionConfig::new(resolve_path(base, corpus_path), generator);
        if let Some(v) = self.random_seed {
            c.master_seed = v;
        }
        if let Some(v) = self.max_iterations {
            c.max_iterations = v;
        }
        if let Some(v) = self.islands {
            c.islands = v;
        }
        if let Some(v) = self.population_size {
            c.population_size = v;
        }
        if let Some(v) = self.archive_size {
            c.archive_capacity = v;
        }
        if let Some(v) = self.budget {
            c.budget = v;
        }
        if let Some(v) = self.checkpoint_interval {
            c.checkpoint_interval = v;
        }
        if let Some(v) = self.corpus_mode {
            c.corpus_mode = v;
        }
        c.migration = MigrationConfig {
            interval: self.migration_interval.unwrap_or(c.migration.interval),
            rate: self.migration_rate.unwrap_or(c.migration.rate),
        };
        c.binning = binning(&self)?;
        c.selection = selection(&self)?;
        c.mutation = mutation(self.mutation.unwrap_or_default())?;
        c.validate()?;
        Ok(c)
    }

    /// Inverse of [`FileConfig::resolve`]: every key spelled out.
    pub fn from_resolved(c: &EvolutionConfig) -> Self {
        let generator = match &c.generator {
            GeneratorSpec::Surrogate { training_path, top_list_size } => GeneratorSection::Surrogate {
                training_path: Some(training_path.clone()),
                top_list_size: Some(*top_list_size),
            },
            GeneratorSpec::ExternalCommand { command, timeout_secs } => {
                GeneratorSection::ExternalCommand { command: command.clone(), timeout_secs: Some(*timeout_secs) }
            }
        };
        let models = c
            .mutation
            .models
            .iter()
            .map(|m| ModelSection {
                endpoint_url: m.endpoint_url.clone(),
                model_id: m.model_id.clone(),
                weight: m.weight,
                temperature: Some(m.temperature),
                max_tokens: Some(m.max_tokens),
                timeout_secs: Some(m.timeout_secs),
                max_retries: Some(m.max_retries),
            })
            .collect();
        let s = &c.selection;
        Self {
            random_seed: Some(c.master_seed),
            max_iterations: Some(c.max_iterations),
            islands: Some(c.islands),
            population_size: Some(c.population_size),
            archive_size: Some(c.archive_capacity),
            migration_interval: Some(c.migration.interval),
            migration_rate: Some(c.migration.rate),
            feature_dimensions: Some(c.binning.dims().iter().map(|d| d.name().to_string()).collect()),
            feature_bins: Some(c.binning.bins_per_dim()),
            ratios: Some(vec![s.elite_ratio, s.explore_ratio, s.exploit_ratio]),
            elite_pool_size: Some(s.elite_pool_size),
            budget: Some(c.budget),
            checkpoint_interval: Some(c.checkpoint_interval),
            corpus_path: Some(c.corpus_path.clone()),
            corpus_mode: Some(c.corpus_mode),
            feature_ranges: c.binning.axes.iter().map(|a| (a.dim.name().to_string(), [a.lo, a.hi])).collect(),
            generator: Some(generator),
            mutation: Some(MutationSection {
                provider: Some(c.mutation.provider),
                temperature: None,
                max_tokens: None,
                timeout_secs: None,
                max_retries: None,
                goal: Some(c.mutation.goal_text.clone()),
                inspirations: Some(c.mutation.inspirations),
                strip_patterns: Some(c.mutation.strip_patterns.clone()),
                models,
            }),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }
}

fn binning(f: &FileConfig) -> Result<BinningConfig, ConfigError> {
    let bins = f.feature_bins.unwrap_or(10);
    let dims = match &f.feature_dimensions {
        None => BinningConfig::default().dims(),
        Some(names) => {
            let parsed: Vec<FeatureDim> = names
                .iter()
                .map(|n| {
                    FeatureDim::parse(n).ok_or_else(|| {
                        ConfigError::invalid(
                            "feature_dimensions",
                            format!("unknown dimension {n:?}; expected complexity, diversity or prompt_length"),
                        )
                    })
                })
                .collect::<Result<_, _>>()?;
            <[FeatureDim; 2]>::try_from(parsed).map_err(|v| {
                ConfigError::invalid("feature_dimensions", format!("exactly two dimensions required, got {}", v.len()))
            })?
        }
    };
    for name in f.feature_ranges.keys() {
        if !dims.iter().any(|d| d.name() == name) {
            return Err(ConfigError::invalid(
                format!("feature_ranges.{name}"),
                "range given for an inactive dimension",
            ));
        }
    }
    let axes = dims.map(|d| match f.feature_ranges.get(d.name()) {
        Some([lo, hi]) => AxisBinning { dim: d, lo: *lo, hi: *hi, bins },
        None => AxisBinning::with_default_range(d, bins),
    });
    let b = BinningConfig { axes };
    b.validate()?;
    Ok(b)
}

fn selection(f: &FileConfig) -> Result<SelectionConfig, ConfigError> {
    let mut s = SelectionConfig::default();
    if let Some(r) = &f.ratios {
        let [elite, explore, exploit] = <[f64; 3]>::try_from(r.as_slice())
            .map_err(|_| ConfigError::invalid("ratios", "expected [elite, exploration, exploitation]"))?;
        s.elite_ratio = elite;
        s.explore_ratio = explore;
        s.exploit_ratio = exploit;
    }
    if let Some(v) = f.elite_pool_size {
        s.elite_pool_size = v;
    }
    Ok(s)
}

fn mutation(m: MutationSection) -> Result<MutationConfig, ConfigError> {
    let mut out = MutationConfig::default();
    if let Some(p) = m.provider {
        out.provider = p;
    }
    if let Some(g) = m.goal {
        out.goal_text = g;
    }
    if let Some(n) = m.inspirations {
        out.inspirations = n;
    }
    if let Some(p) = m.strip_patterns {
        out.strip_patterns = p;
    }
    out.models = m
        .models
        .into_iter()
        .map(|s| {
            let mut spec = ModelSpec::new(s.endpoint_url, s.model_id, s.weight);
            if let Some(t) = s.temperature.or(m.temperature) {
                spec.temperature = t;
            }
            if let Some(t) = s.max_tokens.or(m.max_tokens) {
                spec.max_tokens = t;
            }
            spec.timeout_secs = s.timeout_secs.or(m.timeout_secs).unwrap_or(DEFAULT_TIMEOUT_SECS);
            spec.max_retries = s.max_retries.or(m.max_retries).unwrap_or(DEFAULT_MAX_RETRIES);
            spec
        })
        .collect();
    Ok(out)
}
