#![allow(dead_code)]

use std::fs;
use std::path::Path;

use promptevo_core::engine::{Engine, EvolutionConfig, Runtime};
use promptevo_core::eval::GeneratorSpec;
use promptevo_core::genome::{Prompt, BASELINE_PROMPT};
use promptevo_core::synth::{SynthSpec, SyntheticCorpus};

/// Writes the default synthetic train/test split into `dir`.
pub fn write_corpus(dir: &Path, spec: &SynthSpec) {
    let corpus = SyntheticCorpus::generate(spec);
    fs::write(dir.join("train.txt"), corpus.train.join("\n") + "\n").unwrap();
    fs::write(dir.join("test.txt"), corpus.test.join("\n") + "\n").unwrap();
}

pub fn config(dir: &Path, iterations: u64, budget: usize) -> EvolutionConfig {
    let generator = GeneratorSpec::Surrogate { training_path: dir.join("train.txt"), top_list_size: 256 };
    let mut c = EvolutionConfig::new(dir.join("test.txt"), generator);
    c.max_iterations = iterations;
    c.budget = budget;
    c
}

pub fn engine(config: EvolutionConfig) -> Engine {
    let runtime = Runtime::from_config(&config).unwrap();
    Engine::initialize(config, Prompt::initial("p0", BASELINE_PROMPT).unwrap(), runtime).unwrap()
}
