//! Prompt genomes and their feature descriptors.
//!
//! A prompt is described by three integer features (whitespace token count,
//! edit distance to the reference prompt, character count). Two of them are
//! active per run and get binned into archive coordinates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// The baseline instruction used when no initial prompt is supplied.
pub const BASELINE_PROMPT: &str =
    "As a trawling password guessing model, your task is to generate passwords. {password}.";

/// How a prompt came into existence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Initial,
    LlmMutation,
    SyntheticMutation,
    Migration,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("prompt text is empty after trimming whitespace")]
    EmptyText,
    #[error("prompt lineage is inconsistent: {0}")]
    Lineage(&'static str),
}

/// An evolving prompt together with its lineage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub id: String,
    pub text: String,
    pub parent_id: Option<String>,
    pub island_id: usize,
    pub iteration_created: u64,
    pub origin: Origin,
}

impl Prompt {
    /// The seed prompt of a run. It has no parent and lives at iteration 0.
    pub fn initial(id: impl Into<String>, text: impl Into<String>) -> Result<Self, PromptError> {
        let text = text.into();
        check_text(&text)?;
        Ok(Self {
            id: id.into(),
            text,
            parent_id: None,
            island_id: 0,
            iteration_created: 0,
            origin: Origin::Initial,
        })
    }

    /// A descendant of `parent_id` created at `iteration` (which must be ≥ 1).
    pub fn derived(
        id: impl Into<String>,
        text: impl Into<String>,
        parent_id: impl Into<String>,
        island_id: usize,
        iteration: u64,
        origin: Origin,
    ) -> Result<Self, PromptError> {
        let text = text.into();
        check_text(&text)?;
        if origin == Origin::Initial {
            return Err(PromptError::Lineage("derived prompt cannot have origin Initial"));
        }
        if iteration == 0 {
            return Err(PromptError::Lineage("derived prompt must be created after iteration 0"));
        }
        Ok(Self {
            id: id.into(),
            text,
            parent_id: Some(parent_id.into()),
            island_id,
            iteration_created: iteration,
            origin,
        })
    }

    /// Checks the lineage and text invariants on an already-built value
    /// (used after deserialization).
    pub fn validate(&self) -> Result<(), PromptError> {
        check_text(&self.text)?;
        let initial = self.origin == Origin::Initial;
        if initial != self.parent_id.is_none() {
            return Err(PromptError::Lineage("parent_id must be absent iff origin is Initial"));
        }
        if initial != (self.iteration_created == 0) {
            return Err(PromptError::Lineage("iteration_created must be 0 iff origin is Initial"));
        }
        Ok(())
    }
}

fn check_text(text: &str) -> Result<(), PromptError> {
    if text.trim().is_empty() {
        Err(PromptError::EmptyText)
    } else {
        Ok(())
    }
}

/// Raw feature values of a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    pub complexity: u64,
    pub diversity: u64,
    pub length: u64,
}

/// One of the three descriptor axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureDim {
    Complexity,
    Diversity,
    PromptLength,
}

impl FeatureDim {
    pub fn name(self) -> &'static str {
        match self {
            FeatureDim::Complexity => "complexity",
            FeatureDim::Diversity => "diversity",
            FeatureDim::PromptLength => "prompt_length",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "complexity" => Some(FeatureDim::Complexity),
            "diversity" => Some(FeatureDim::Diversity),
            "prompt_length" => Some(FeatureDim::PromptLength),
            _ => None,
        }
    }

    fn value(self, fv: &FeatureVector) -> u64 {
        match self {
            FeatureDim::Complexity => fv.complexity,
            FeatureDim::Diversity => fv.diversity,
            FeatureDim::PromptLength => fv.length,
        }
    }

    /// Default value range used for binning along this axis.
    pub fn default_range(self) -> (u64, u64) {
        match self {
            FeatureDim::Complexity => (0, 200),
            FeatureDim::Diversity => (0, 500),
            FeatureDim::PromptLength => (0, 2000),
        }
    }
}

impl fmt::Display for FeatureDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Range and bin count for one active axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisBinning {
    pub dim: FeatureDim,
    pub lo: u64,
    pub hi: u64,
    pub bins: usize,
}

impl AxisBinning {
    pub fn with_default_range(dim: FeatureDim, bins: usize) -> Self {
        let (lo, hi) = dim.default_range();
        Self { dim, lo, hi, bins }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.lo >= self.hi {
            return Err(ConfigError::invalid(
                format!("feature_ranges.{}", self.dim),
                format!("lower bound {} must be below upper bound {}", self.lo, self.hi),
            ));
        }
        if self.bins == 0 {
            return Err(ConfigError::invalid("feature_bins", "bin count must be at least 1"));
        }
        Ok(())
    }

    /// Bin index of a raw value; out-of-range values clamp into the edge bins.
    pub fn index(&self, value: u64) -> usize {
        let v = value.clamp(self.lo, self.hi);
        let frac = (v - self.lo) as f64 / (self.hi - self.lo) as f64;
        let idx = (frac * self.bins as f64).floor() as usize;
        idx.min(self.bins - 1)
    }
}

/// The two active axes of a run, in grid order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningConfig {
    pub axes: [AxisBinning; 2],
}

impl BinningConfig {
    /// Both axes with their default ranges and the same bin count.
    pub fn new(dims: [FeatureDim; 2], bins: usize) -> Self {
        Self {
            axes: dims.map(|d| AxisBinning::with_default_range(d, bins)),
        }
    }

    pub fn dims(&self) -> [FeatureDim; 2] {
        [self.axes[0].dim, self.axes[1].dim]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.axes[0].dim == self.axes[1].dim {
            return Err(ConfigError::invalid(
                "feature_dimensions",
                "the two feature dimensions must differ",
            ));
        }
        if self.axes[0].bins != self.axes[1].bins {
            return Err(ConfigError::invalid(
                "feature_bins",
                "both dimensions must use the same bin count",
            ));
        }
        self.axes.iter().try_for_each(AxisBinning::validate)
    }

    pub fn bins_per_dim(&self) -> usize {
        self.axes[0].bins
    }
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self::new([FeatureDim::Diversity, FeatureDim::Complexity], 10)
    }
}

/// Grid coordinates of a prompt in an island archive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinnedCoordinates {
    pub dims: [usize; 2],
    pub dimension_names: [FeatureDim; 2],
}

/// Number of maximal whitespace-delimited segments.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Character-level edit distance (insertions, deletions, substitutions).
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            curr[j + 1] = substitution.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

pub fn extract_features(prompt: &Prompt, reference: &Prompt) -> FeatureVector {
    features_of_text(&prompt.text, &reference.text)
}

pub fn features_of_text(text: &str, reference: &str) -> FeatureVector {
    FeatureVector {
        complexity: token_count(text) as u64,
        diversity: levenshtein(text, reference) as u64,
        length: text.chars().count() as u64,
    }
}

pub fn bin_features(
    fv: &FeatureVector,
    config: &BinningConfig,
) -> Result<BinnedCoordinates, ConfigError> {
    config.validate()?;
    let [x, y] = &config.axes;
    Ok(BinnedCoordinates {
        dims: [x.index(x.dim.value(fv)), y.index(y.dim.value(fv))],
        dimension_names: config.dims(),
    })
}
