use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use promptevo_core::engine::{
    load_checkpoint, save_checkpoint, CheckpointError, Engine, EngineError, EngineState, Runtime,
};
use promptevo_core::eval::corpus::read_password_lines;
use promptevo_core::eval::cracked_rate;
use promptevo_core::genome::{bin_features, features_of_text, Prompt, BASELINE_PROMPT};
use promptevo_core::metrics::{default_tau_grid, fscore_curve, symbol_frequencies};
use promptevo_core::synth::{SynthSpec, SyntheticCorpus};
use serde::{Deserialize, Serialize};

use crate::config;
use crate::history::{self, HistoryError};

/// A command failure with its process exit code class.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or input document (exit 2).
    Config(String),
    /// Corpus or generator could not be set up (exit 3).
    Setup(String),
    /// Anything else (exit 1).
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Setup(_) => 3,
            Failure::Internal(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Setup(m) | Failure::Internal(m) => f.write_str(m),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(_) => Failure::Config(e.to_string()),
            EngineError::Setup(_) | EngineError::InitialEvaluation(_) => Failure::Setup(e.to_string()),
            EngineError::Checkpoint(c) => c.into(),
            other => Failure::Internal(other.to_string()),
        }
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::Io { .. } => Failure::Setup(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<HistoryError> for Failure {
    fn from(e: HistoryError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn internal(context: &str) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Internal(format!("{context}: {e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub history: PathBuf,
    pub checkpoint: PathBuf,
    pub best_prompt: PathBuf,
    pub events: PathBuf,
    pub resolved_config: PathBuf,
}

impl Outputs {
    fn in_dir(dir: &Path) -> Self {
        Self {
            history: dir.join("history.csv"),
            checkpoint: dir.join("checkpoint.json"),
            best_prompt: dir.join("best_prompt.txt"),
            events: dir.join("events.csv"),
            resolved_config: dir.join("config.resolved.toml"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_digest: String,
    pub started_at: String,
    pub finished_at: String,
    pub iterations: u64,
    pub best_prompt_id: String,
    pub best_fitness: f64,
    pub outputs: Outputs,
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<promptevo_core::engine::EvolutionConfig, Failure> {
    let path = path.ok_or_else(|| Failure::Config("missing configuration key `config`: pass --config".into()))?;
    let mut c = config::load(path).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(s) = seed {
        c.master_seed = s;
    }
    Ok(c)
}

fn read_prompt(path: &Path) -> Result<Prompt, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Prompt::initial("p0", text.trim()).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

pub fn evolve(
    config_path: Option<&Path>,
    seed: Option<u64>,
    prompt_path: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let config = load_config(config_path, seed)?;
    let initial = match prompt_path {
        Some(p) => read_prompt(p)?,
        None => Prompt::initial("p0", BASELINE_PROMPT).expect("baseline prompt is valid"),
    };
    let dir = out.unwrap_or(Path::new("out"));
    fs::create_dir_all(dir).map_err(internal("creating output directory"))?;
    let started_at = Utc::now().to_rfc3339();
    let run_id = format!("{}-{}", Utc::now().format("%Y%m%dT%H%M%SZ"), &config.digest()[..8]);
    let runtime = Runtime::from_config(&config)?;
    let engine = Engine::initialize(config, initial, runtime)?;
    finish_run(engine, dir, run_id, started_at)
}

pub fn resume(checkpoint: Option<&Path>, max_iterations: Option<u64>, out: Option<&Path>) -> Result<(), Failure> {
    let default_path;
    let checkpoint = match (checkpoint, out) {
        (Some(c), _) => c,
        (None, Some(o)) => {
            default_path = o.join("checkpoint.json");
            &default_path
        }
        (None, None) => return Err(Failure::Config("missing configuration key `checkpoint`: pass --checkpoint or --out".into())),
    };
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| {
        checkpoint.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf()
    });
    let mut state = load_checkpoint(checkpoint)?;
    if let Some(t) = max_iterations {
        if t < state.iteration {
            return Err(Failure::Config(format!(
                "invalid configuration key `max_iterations`: checkpoint is already at iteration {}",
                state.iteration
            )));
        }
        state.config.max_iterations = t;
    }
    let previous: Option<RunManifest> =
        fs::read_to_string(dir.join("manifest.json")).ok().and_then(|t| serde_json::from_str(&t).ok());
    let (run_id, started_at) = match previous {
        Some(m) if m.config_digest == state.config.digest() => (m.run_id, m.started_at),
        _ => (
            format!("{}-{}", Utc::now().format("%Y%m%dT%H%M%SZ"), &state.config.digest()[..8]),
            Utc::now().to_rfc3339(),
        ),
    };
    let runtime = Runtime::from_config(&state.config)?;
    fs::create_dir_all(&dir).map_err(internal("creating output directory"))?;
    finish_run(Engine::resume(state, runtime), &dir, run_id, started_at)
}

fn finish_run(mut engine: Engine, dir: &Path, run_id: String, started_at: String) -> Result<(), Failure> {
    let outputs = Outputs::in_dir(dir);
    let checkpoint = outputs.checkpoint.clone();
    engine.run(|state| {
        save_checkpoint(&checkpoint, state)?;
        eprintln!(
            "iteration {}/{}: archive best {:.6}",
            state.iteration,
            state.config.max_iterations,
            state.global_best_fitness()
        );
        Ok(())
    })?;
    let state = engine.state();
    write_outputs(state, &outputs)?;
    let (best, fitness) = state.best().expect("archives hold the initial prompt");
    let manifest = RunManifest {
        run_id,
        config_digest: state.config.digest(),
        started_at,
        finished_at: Utc::now().to_rfc3339(),
        iterations: state.iteration,
        best_prompt_id: best.id.clone(),
        best_fitness: fitness,
        outputs: outputs.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(dir.join("manifest.json"), json + "\n").map_err(internal("writing manifest"))?;
    println!("best prompt {} cracked rate {:.6}", best.id, fitness);
    // The summary is computed from the written CSV so `report` reproduces it.
    let rows = history::read_history(&outputs.history)?;
    print!("{}", history::render_report(&rows, history::baseline_of(&rows))?);
    Ok(())
}

fn write_outputs(state: &EngineState, outputs: &Outputs) -> Result<(), Failure> {
    history::write_history(&outputs.history, &state.history).map_err(internal("writing history"))?;
    history::write_events(&outputs.events, &state.migrations).map_err(internal("writing events"))?;
    let resolved = config::FileConfig::from_resolved(&state.config).to_toml();
    fs::write(&outputs.resolved_config, resolved).map_err(internal("writing resolved config"))?;
    let (best, _) = state.best().expect("archives hold the initial prompt");
    fs::write(&outputs.best_prompt, format!("{}\n", best.text)).map_err(internal("writing best prompt"))
}

pub fn eval(config_path: Option<&Path>, seed: Option<u64>, prompt_path: &Path) -> Result<(), Failure> {
    let config = load_config(config_path, seed)?;
    let prompt = read_prompt(prompt_path)?;
    let runtime = Runtime::from_config(&config)?;
    let candidates = runtime
        .generator
        .generate(&prompt.text, config.budget)
        .map_err(|e| Failure::Setup(format!("generation failed: {e}")))?;
    let rate = cracked_rate(&candidates, &runtime.corpus);
    let features = features_of_text(&prompt.text, BASELINE_PROMPT);
    let coords = bin_features(&features, &config.binning).map_err(|e| Failure::Config(e.to_string()))?;
    println!("cracked_rate {rate:.4}");
    println!("candidates {}", candidates.len());
    println!(
        "features complexity={} diversity={} prompt_length={}",
        features.complexity, features.diversity, features.length
    );
    println!(
        "cell {}={} {}={}",
        coords.dimension_names[0], coords.dims[0], coords.dimension_names[1], coords.dims[1]
    );
    Ok(())
}

pub fn metrics(generated: &Path, real: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let load = |p: &Path| {
        let lines = read_password_lines(p).map_err(|e| Failure::Setup(e.to_string()))?;
        symbol_frequencies(&lines).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
    };
    let gen = load(generated)?;
    let real = load(real)?;
    let curve = fscore_curve(&gen, &real, &default_tau_grid()).expect("default grid is valid");
    let out = out.unwrap_or(Path::new("fscore_curve.csv"));
    fs::write(out, curve.to_csv()).map_err(internal("writing curve"))?;
    let peak = curve.peak();
    println!("peak_f {:.6}", peak.f);
    println!("opt_tau {:.2}", peak.tau);
    println!("auc {:.6}", curve.auc);
    Ok(())
}

pub fn report(history_path: &Path, baseline: Option<f64>) -> Result<(), Failure> {
    if let Some(b) = baseline {
        if !(0.0..=1.0).contains(&b) {
            return Err(Failure::Config(format!("baseline {b} is not a fraction in [0, 1]")));
        }
    }
    let rows = history::read_history(history_path)?;
    let baseline = baseline.or_else(|| history::baseline_of(&rows));
    print!("{}", history::render_report(&rows, baseline)?);
    Ok(())
}

pub fn synth(seed: Option<u64>, train: usize, test: usize, out: Option<&Path>) -> Result<(), Failure> {
    let spec = SynthSpec { seed: seed.unwrap_or(42), train_size: train, test_size: test, ..SynthSpec::default() };
    let corpus = SyntheticCorpus::generate(&spec);
    let dir = out.unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(internal("creating output directory"))?;
    for (name, lines) in [("train.txt", &corpus.train), ("test.txt", &corpus.test)] {
        let mut text = lines.join("\n");
        text.push('\n');
        fs::write(dir.join(name), text).map_err(internal("writing corpus"))?;
    }
    println!("wrote {} training and {} test passwords to {}", corpus.train.len(), corpus.test.len(), dir.display());
    Ok(())
}
