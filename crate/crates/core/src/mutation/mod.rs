//! Child-prompt production: LLM ensemble mutation and an offline synthetic
//! mutator.

pub mod llm;
pub mod meta_prompt;
pub mod synthetic;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::genome::Prompt;

pub use llm::{ChatMessage, ChatTransport, HttpTransport, LlmMutation, LlmMutator, RetryPolicy, TransportError};
pub use meta_prompt::{build_meta_prompt, parse_candidate, ReplyParser};
pub use synthetic::{mutate_synthetic, EditKind};

pub const DEFAULT_TEMPERATURE: f64 = 0.4;
pub const DEFAULT_MAX_TOKENS: u32 = 16_000;
pub const DEFAULT_TIMEOUT_SECS: u64 = 120;
pub const DEFAULT_MAX_RETRIES: u32 = 3;

pub const DEFAULT_GOAL: &str = "Find an instruction prompt that makes the password generator emit \
candidates matching as many real user passwords as possible within a fixed guess budget.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub endpoint_url: String,
    pub model_id: String,
    pub weight: f64,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub max_retries: u32,
}

impl ModelSpec {
    pub fn new(endpoint_url: impl Into<String>, model_id: impl Into<String>, weight: f64) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            model_id: model_id.into(),
            weight,
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            timeout_secs: DEFAULT_TIMEOUT_SECS,
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(ConfigError::invalid("models.weight", format!("{} must be positive", self.model_id)));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(ConfigError::invalid("temperature", "must be non-negative"));
        }
        if self.max_tokens == 0 {
            return Err(ConfigError::invalid("max_tokens", "must be at least 1"));
        }
        if self.endpoint_url.trim().is_empty() {
            return Err(ConfigError::missing("models.endpoint_url"));
        }
        Ok(())
    }
}

/// Everything a mutation operator sees. Inspirations are ordered by fitness,
/// highest first.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationRequest {
    pub parent: Prompt,
    pub inspirations: Vec<(Prompt, f64)>,
    pub goal_text: String,
}

/// Identity and placement of the child being produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChildSlot {
    pub id: String,
    pub island_id: usize,
    pub iteration: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MutationError {
    #[error("mutation transport failed after {attempts} attempt(s): {last}")]
    Transport { attempts: u32, last: String },
    #[error("could not parse a candidate prompt: {0}")]
    Parse(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Picks the model whose normalized cumulative-weight interval holds `u`.
pub fn choose_model(ensemble: &[ModelSpec], u: f64) -> Result<&ModelSpec, ConfigError> {
    if ensemble.is_empty() {
        return Err(ConfigError::missing("models"));
    }
    let total: f64 = ensemble.iter().map(|m| m.weight).sum();
    let mut upper = 0.0;
    for model in ensemble {
        upper += model.weight / total;
        if u < upper {
            return Ok(model);
        }
    }
    Ok(ensemble.last().expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ensemble(weights: &[f64]) -> Vec<ModelSpec> {
        weights
            .iter()
            .enumerate()
            .map(|(i, w)| ModelSpec::new("http://localhost", format!("m{i}"), *w))
            .collect()
    }

    #[test]
    fn cumulative_partition() {
        let e = ensemble(&[0.5, 0.5]);
        assert_eq!(choose_model(&e, 0.3).unwrap().model_id, "m0");
        assert_eq!(choose_model(&e, 0.7).unwrap().model_id, "m1");
        let e = ensemble(&[1.0, 1.0, 2.0]);
        assert_eq!(choose_model(&e, 0.6).unwrap().model_id, "m2");
        assert_eq!(choose_model(&e, 0.25).unwrap().model_id, "m1");
        assert_eq!(choose_model(&e, 0.2499).unwrap().model_id, "m0");
        assert_eq!(choose_model(&e, 0.999_999_999).unwrap().model_id, "m2");
    }

    #[test]
    fn empty_ensemble_is_config_error() {
        assert!(matches!(choose_model(&[], 0.1), Err(ConfigError::Missing { .. })));
    }

    #[test]
    fn selection_frequencies_follow_weights() {
        let e = ensemble(&[1.0, 3.0, 6.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            let m = choose_model(&e, rng.gen()).unwrap();
            counts[m.model_id[1..].parse::<usize>().unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip([0.1, 0.3, 0.6]) {
            assert!((*c as f64 / 10_000.0 - p).abs() <= 0.02, "{counts:?}");
        }
    }

    #[test]
    fn model_defaults_and_validation() {
        let m = ModelSpec::new("http://x", "y", 0.5);
        assert_eq!((m.temperature, m.max_tokens, m.timeout_secs, m.max_retries), (0.4, 16_000, 120, 3));
        assert!(m.validate().is_ok());
        assert!(ModelSpec { weight: 0.0, ..m.clone() }.validate().is_err());
        assert!(ModelSpec { temperature: -1.0, ..m.clone() }.validate().is_err());
        assert!(ModelSpec { max_tokens: 0, ..m }.validate().is_err());
    }
}
