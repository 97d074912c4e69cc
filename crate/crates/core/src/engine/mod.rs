//! The evolution loop: islands evolve in parallel between barriers where
//! migration and checkpointing happen.

pub mod checkpoint;
pub mod config;

use std::sync::Arc;
use std::thread;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::archive::{Archive, ArchiveError, InsertOutcome};
use crate::error::ConfigError;
use crate::eval::{cracked_rate, CorpusError, Generator, GenerationError, SetupError, TestCorpus};
use crate::genome::{bin_features, extract_features, BinnedCoordinates, FeatureVector, Prompt};
use crate::islands::{migrate, Island, MigrationError, MigrationReport, SelectionError};
use crate::mutation::{
    mutate_synthetic, ChildSlot, HttpTransport, LlmMutator, MutationRequest, ReplyParser, RetryPolicy,
};

pub use checkpoint::{load_checkpoint, parse_checkpoint, save_checkpoint, CheckpointError, CHECKPOINT_SCHEMA_VERSION};
pub use config::{EvolutionConfig, MutationConfig, MutationProvider};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error("initial prompt evaluation failed: {0}")]
    InitialEvaluation(#[from] GenerationError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Migration(#[from] MigrationError),
    #[error("island worker panicked")]
    WorkerPanic,
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

impl From<CorpusError> for EngineError {
    fn from(e: CorpusError) -> Self {
        EngineError::Setup(SetupError::Corpus(e))
    }
}

/// One evaluated (or failed) prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub island_id: usize,
    pub prompt_id: String,
    pub parent_id: Option<String>,
    /// Absent when mutation or generation failed.
    pub fitness: Option<f64>,
    pub features: Option<FeatureVector>,
    pub coords: Option<BinnedCoordinates>,
    pub insert_outcome: Option<InsertOutcome>,
    pub candidates: usize,
    /// Best fitness over all island archives once the iteration's inserts
    /// are done.
    pub archive_best_global: f64,
    pub failure: Option<String>,
}

/// Everything needed to continue a run; this is what checkpoints store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    pub config: EvolutionConfig,
    pub iteration: u64,
    pub islands: Vec<Island>,
    pub history: Vec<IterationRecord>,
    pub migrations: Vec<MigrationReport>,
    pub reference_prompt: Prompt,
}

impl EngineState {
    /// Highest-fitness prompt over all archives; ties go to the earliest
    /// created, then the lexicographically smallest id.
    pub fn best(&self) -> Option<(&Prompt, f64)> {
        self.islands
            .iter()
            .flat_map(|i| i.archive.cells())
            .min_by(|a, b| {
                b.fitness
                    .total_cmp(&a.fitness)
                    .then(a.elite.iteration_created.cmp(&b.elite.iteration_created))
                    .then_with(|| a.elite.id.cmp(&b.elite.id))
            })
            .map(|c| (&c.elite, c.fitness))
    }

    pub fn global_best_fitness(&self) -> f64 {
        self.islands.iter().filter_map(|i| i.archive.best_fitness()).fold(0.0, f64::max)
    }

    pub fn baseline_fitness(&self) -> Option<f64> {
        self.history.iter().find(|r| r.iteration == 0).and_then(|r| r.fitness)
    }

    /// SHA-256 over the serialized history.
    pub fn history_digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.history).expect("history serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Mutation operator in use for a run.
#[derive(Debug, Clone)]
pub enum Mutator {
    Synthetic,
    Llm(LlmMutator),
}

/// Immutable resources shared by all island workers.
#[derive(Debug, Clone)]
pub struct Runtime {
    pub corpus: Arc<TestCorpus>,
    pub generator: Generator,
    pub mutator: Mutator,
}

impl Runtime {
    /// Loads the corpus and generator and wires the mutation provider. LLM
    /// providers use the HTTP transport with the token from the environment.
    pub fn from_config(config: &EvolutionConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let corpus = TestCorpus::load(&config.corpus_path, config.corpus_mode)?;
        let generator = Generator::from_spec(&config.generator, config.master_seed)?;
        let mutator = match config.mutation.provider {
            MutationProvider::Synthetic => Mutator::Synthetic,
            MutationProvider::LlmEnsemble => {
                let parser = ReplyParser::new(&config.mutation.strip_patterns)
                    .map_err(|e| ConfigError::invalid("strip_patterns", e.to_string()))?;
                Mutator::Llm(LlmMutator::new(
                    config.mutation.models.clone(),
                    Arc::new(HttpTransport::from_env()),
                    RetryPolicy::default(),
                    parser,
                )?)
            }
        };
        Ok(Self { corpus: Arc::new(corpus), generator, mutator })
    }

    fn evaluate(&self, text: &str, budget: usize) -> Result<(f64, usize), GenerationError> {
        let candidates = self.generator.generate(text, budget)?;
        Ok((cracked_rate(&candidates, &self.corpus), candidates.len()))
    }
}

pub struct Engine {
    state: EngineState,
    runtime: Runtime,
}

struct IslandResult {
    record: IterationRecord,
}

impl Engine {
    /// Scores the initial prompt once and seeds every island with it.
    pub fn initialize(
        config: EvolutionConfig,
        initial_prompt: Prompt,
        runtime: Runtime,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        let (fitness, candidates) = runtime.evaluate(&initial_prompt.text, config.budget)?;
        let features = extract_features(&initial_prompt, &initial_prompt);
        let coords = bin_features(&features, &config.binning)?;
        let mut islands = Vec::with_capacity(config.islands);
        for k in 0..config.islands {
            let archive = Archive::new(config.binning.bins_per_dim(), config.archive_capacity);
            let mut island = Island::new(k, archive, config.population_size, config.master_seed);
            island.archive.insert(initial_prompt.clone(), fitness, coords)?;
            island.push_member(initial_prompt.clone(), fitness);
            islands.push(island);
        }
        let record = IterationRecord {
            iteration: 0,
            island_id: 0,
            prompt_id: initial_prompt.id.clone(),
            parent_id: None,
            fitness: Some(fitness),
            features: Some(features),
            coords: Some(coords),
            insert_outcome: Some(InsertOutcome::Inserted),
            candidates,
            archive_best_global: fitness,
            failure: None,
        };
        let state = EngineState {
            config,
            iteration: 0,
            islands,
            history: vec![record],
            migrations: Vec::new(),
            reference_prompt: initial_prompt,
        };
        Ok(Self { state, runtime })
    }

    /// Continues from a saved state.
    pub fn resume(state: EngineState, runtime: Runtime) -> Self {
        Self { state, runtime }
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn into_state(self) -> EngineState {
        self.state
    }

    pub fn is_finished(&self) -> bool {
        self.state.iteration >= self.state.config.max_iterations
    }

    /// One iteration across all islands, followed by migration when due.
    pub fn step(&mut self) -> Result<Vec<IterationRecord>, EngineError> {
        let iteration = self.state.iteration + 1;
        let config = &self.state.config;
        let reference = &self.state.reference_prompt;
        let runtime = &self.runtime;
        let results: Vec<Result<IslandResult, EngineError>> = thread::scope(|scope| {
            let handles: Vec<_> = self
                .state
                .islands
                .iter_mut()
                .map(|island| scope.spawn(move || evolve_island(island, config, runtime, reference, iteration)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or(Err(EngineError::WorkerPanic)))
                .collect()
        });
        let best = self.state.global_best_fitness();
        let mut records = Vec::with_capacity(results.len());
        for r in results {
            let mut record = r?.record;
            record.archive_best_global = best;
            records.push(record);
        }
        self.state.history.extend(records.iter().cloned());
        if self.state.config.migration.is_due(iteration) {
            let report = migrate(&mut self.state.islands, &self.state.config.migration, iteration)?;
            self.state.migrations.push(report);
        }
        self.state.iteration = iteration;
        Ok(records)
    }

    /// Steps until the configured iteration count, calling `on_checkpoint`
    /// every `checkpoint_interval` iterations and once at the end.
    pub fn run<F>(&mut self, mut on_checkpoint: F) -> Result<(), EngineError>
    where
        F: FnMut(&EngineState) -> Result<(), EngineError>,
    {
        self.run_until(self.state.config.max_iterations, &mut on_checkpoint)
    }

    pub fn run_until<F>(&mut self, target: u64, on_checkpoint: &mut F) -> Result<(), EngineError>
    where
        F: FnMut(&EngineState) -> Result<(), EngineError>,
    {
        let target = target.min(self.state.config.max_iterations);
        while self.state.iteration < target {
            self.step()?;
            if self.state.iteration.is_multiple_of(self.state.config.checkpoint_interval) && self.state.iteration < target {
                on_checkpoint(&self.state)?;
            }
        }
        on_checkpoint(&self.state)
    }
}

/// Final answer of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub best: Prompt,
    pub fitness: f64,
    pub history: Vec<IterationRecord>,
}

impl RunOutcome {
    pub fn from_state(state: &EngineState) -> Self {
        let (best, fitness) = state.best().expect("every island holds the initial prompt");
        Self { best: best.clone(), fitness, history: state.history.clone() }
    }
}

/// Initializes and runs to completion without checkpointing.
pub fn run(config: EvolutionConfig, initial_prompt: Prompt) -> Result<RunOutcome, EngineError> {
    let runtime = Runtime::from_config(&config)?;
    let mut engine = Engine::initialize(config, initial_prompt, runtime)?;
    engine.run(|_| Ok(()))?;
    Ok(RunOutcome::from_state(engine.state()))
}

fn evolve_island(
    island: &mut Island,
    config: &EvolutionConfig,
    runtime: &Runtime,
    reference: &Prompt,
    iteration: u64,
) -> Result<IslandResult, EngineError> {
    let selection = island.select_parent(&config.selection)?;
    let parent = selection.parent;
    let inspirations: Vec<(Prompt, f64)> = island
        .archive
        .elites_top(config.mutation.inspirations + 1)
        .into_iter()
        .filter(|(p, _)| p.id != parent.id)
        .take(config.mutation.inspirations)
        .map(|(p, f)| (p.clone(), f))
        .collect();
    let slot = ChildSlot { id: format!("t{iteration}-k{}", island.id), island_id: island.id, iteration };
    let mut record = IterationRecord {
        iteration,
        island_id: island.id,
        prompt_id: slot.id.clone(),
        parent_id: Some(parent.id.clone()),
        fitness: None,
        features: None,
        coords: None,
        insert_outcome: None,
        candidates: 0,
        archive_best_global: 0.0,
        failure: None,
    };
    let request = MutationRequest { parent, inspirations, goal_text: config.mutation.goal_text.clone() };
    let child = match &runtime.mutator {
        Mutator::Synthetic => mutate_synthetic(&request, island.rng(), &slot).map(|(_, c)| c).map_err(|e| e.to_string()),
        Mutator::Llm(llm) => llm.mutate(&request, island.rng(), &slot).map(|m| m.child).map_err(|e| e.to_string()),
    };
    let child = match child {
        Ok(c) => c,
        Err(e) => {
            record.failure = Some(format!("mutation: {e}"));
            return Ok(IslandResult { record });
        }
    };
    let features = extract_features(&child, reference);
    let coords = bin_features(&features, &config.binning)?;
    record.features = Some(features);
    record.coords = Some(coords);
    let (fitness, candidates) = match runtime.evaluate(&child.text, config.budget) {
        Ok(v) => v,
        Err(e) => {
            record.failure = Some(format!("generation: {e}"));
            return Ok(IslandResult { record });
        }
    };
    record.fitness = Some(fitness);
    record.candidates = candidates;
    record.insert_outcome = Some(island.archive.insert(child.clone(), fitness, coords)?.outcome);
    island.push_member(child, fitness);
    Ok(IslandResult { record })
}
