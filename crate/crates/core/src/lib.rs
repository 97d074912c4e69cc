//! Island-model quality-diversity search over password-generator prompts.

pub mod archive;
pub mod engine;
pub mod error;
pub mod eval;
pub mod genome;
pub mod islands;
pub mod metrics;
pub mod mutation;
pub mod synth;

pub use error::ConfigError;
