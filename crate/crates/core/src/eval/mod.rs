//! Fitness evaluation: prompt → candidate passwords → cracked rate.

pub mod corpus;
pub mod directives;
pub mod external;
pub mod surrogate;

use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use corpus::{CorpusError, CorpusMode, TestCorpus};
pub use directives::{extract_directives, Directive, DirectiveSet, Lexicon};
pub use external::{ExternalCommand, GenerationError};
pub use surrogate::SurrogateModel;

/// Default attempt budget per evaluation.
pub const DEFAULT_BUDGET: usize = 20_000;

/// Distinct candidate passwords in generation order, capped at a budget.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateSet {
    candidates: Vec<String>,
    seen: HashSet<String>,
    budget: usize,
}

impl CandidateSet {
    pub fn with_budget(budget: usize) -> Self {
        Self { candidates: Vec::new(), seen: HashSet::new(), budget }
    }

    /// Keeps the first occurrence of each string until `budget` are held.
    pub fn from_iter_capped<I: IntoIterator<Item = String>>(items: I, budget: usize) -> Self {
        let mut set = Self::with_budget(budget);
        for s in items {
            if set.is_full() {
                break;
            }
            set.push(s);
        }
        set
    }

    /// Returns whether the string was new and fit within the budget.
    pub fn push(&mut self, s: String) -> bool {
        if self.is_full() || self.seen.contains(&s) {
            return false;
        }
        self.seen.insert(s.clone());
        self.candidates.push(s);
        true
    }

    pub fn is_full(&self) -> bool {
        self.candidates.len() >= self.budget
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.candidates.len()
    }

    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    pub fn contains(&self, s: &str) -> bool {
        self.seen.contains(s)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Attempts consumed, which equals the number of distinct candidates.
    pub fn budget_used(&self) -> usize {
        self.candidates.len()
    }
}

/// Fraction of the corpus matched exactly (case-sensitive) by the candidates.
/// In unique mode each distinct password counts once; in multiset mode every
/// corpus line counts.
pub fn cracked_rate(candidates: &CandidateSet, corpus: &TestCorpus) -> f64 {
    let hits = corpus.entries().iter().filter(|e| candidates.contains(e)).count();
    hits as f64 / corpus.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Surrogate {
        training_path: PathBuf,
        top_list_size: usize,
    },
    ExternalCommand {
        command: Vec<String>,
        timeout_secs: u64,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum SetupError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
}

/// A ready-to-use candidate generator built from a [`GeneratorSpec`].
#[derive(Debug, Clone)]
pub enum Generator {
    Surrogate { model: Arc<SurrogateModel>, seed: u64 },
    External(ExternalCommand),
}

impl Generator {
    pub fn from_spec(spec: &GeneratorSpec, seed: u64) -> Result<Self, SetupError> {
        match spec {
            GeneratorSpec::Surrogate { training_path, top_list_size } => {
                let training = corpus::read_password_lines(training_path)?;
                if training.is_empty() {
                    return Err(CorpusError::Empty(training_path.clone()).into());
                }
                let model = SurrogateModel::train(&training, *top_list_size);
                Ok(Generator::Surrogate { model: Arc::new(model), seed })
            }
            GeneratorSpec::ExternalCommand { command, timeout_secs } => Ok(Generator::External(
                ExternalCommand::from_argv(command, Duration::from_secs(*timeout_secs))?,
            )),
        }
    }

    /// The surrogate is seeded from `(seed, prompt text)`, so a prompt always
    /// receives the same candidates within a run.
    pub fn generate(&self, prompt_text: &str, budget: usize) -> Result<CandidateSet, GenerationError> {
        match self {
            Generator::Surrogate { model, seed } => {
                let directives = extract_directives(prompt_text);
                let mut rng = ChaCha8Rng::seed_from_u64(prompt_seed(*seed, prompt_text));
                Ok(model.generate(&directives, budget, &mut rng))
            }
            Generator::External(cmd) => cmd.generate(prompt_text, budget),
        }
    }
}

/// Stable 64-bit seed derived from a master seed and a prompt.
pub fn prompt_seed(seed: u64, prompt_text: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(prompt_text.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus(entries: &[&str], mode: CorpusMode) -> TestCorpus {
        TestCorpus::from_entries(entries.iter().map(|s| s.to_string()).collect(), mode, "mem").unwrap()
    }

    fn cands(items: &[&str]) -> CandidateSet {
        CandidateSet::from_iter_capped(items.iter().map(|s| s.to_string()), usize::MAX)
    }

    /// Nested-loop counting, independent of the hash-set path.
    fn brute_force_rate(candidates: &[String], entries: &[String], mode: CorpusMode) -> f64 {
        let universe: Vec<&String> = match mode {
            CorpusMode::Multiset => entries.iter().collect(),
            CorpusMode::Unique => {
                let mut u: Vec<&String> = Vec::new();
                for e in entries {
                    if !u.contains(&e) {
                        u.push(e);
                    }
                }
                u
            }
        };
        let hits = universe.iter().filter(|e| candidates.iter().any(|c| c == **e)).count();
        hits as f64 / universe.len() as f64
    }

    #[test]
    fn cracked_rate_examples() {
        let t = corpus(&["abc", "123", "pass"], CorpusMode::Unique);
        assert_eq!(cracked_rate(&cands(&["abc", "xyz"]), &t), 1.0 / 3.0);
        assert_eq!(cracked_rate(&cands(&[]), &t), 0.0);
        let m = corpus(&["abc", "abc", "123", "zzz"], CorpusMode::Multiset);
        assert_eq!(cracked_rate(&cands(&["abc"]), &m), 0.5);
        let u = corpus(&["abc", "abc", "123", "zzz"], CorpusMode::Unique);
        assert_eq!(cracked_rate(&cands(&["abc"]), &u), 1.0 / 3.0);
    }

    #[test]
    fn matching_is_case_sensitive() {
        let t = corpus(&["Password"], CorpusMode::Unique);
        assert_eq!(cracked_rate(&cands(&["password"]), &t), 0.0);
    }

    #[test]
    fn candidate_set_caps_and_dedups() {
        let c = CandidateSet::from_iter_capped(["a", "a", "b", "c"].map(String::from), 2);
        assert_eq!(c.candidates(), ["a", "b"]);
        assert_eq!(c.budget_used(), 2);
        let mut c = CandidateSet::with_budget(1);
        assert!(c.push("x".into()));
        assert!(!c.push("y".into()));
    }

    #[test]
    fn surrogate_dispatch_composes_operations() {
        let model = Arc::new(SurrogateModel::train(&["alpha", "beta", "alpha", "gamma1"], 5));
        let g = Generator::Surrogate { model: model.clone(), seed: 9 };
        let text = "Capitalize words and append digits";
        let via_dispatch = g.generate(text, 40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(prompt_seed(9, text));
        let direct = model.generate(&extract_directives(text), 40, &mut rng);
        assert_eq!(via_dispatch, direct);
    }

    #[test]
    fn surrogate_spec_requires_training_file() {
        let spec = GeneratorSpec::Surrogate { training_path: "/nonexistent/train.txt".into(), top_list_size: 10 };
        assert!(matches!(Generator::from_spec(&spec, 1), Err(SetupError::Corpus(_))));
    }

    #[test]
    fn year_directive_helps_on_year_corpus() {
        let synthetic = crate::synth::SyntheticCorpus::generate(&crate::synth::SynthSpec {
            train_size: 6000,
            test_size: 3000,
            ..Default::default()
        });
        let model = Arc::new(SurrogateModel::train(&synthetic.train, 256));
        let test = TestCorpus::from_entries(synthetic.test.clone(), CorpusMode::Unique, "mem").unwrap();
        let g = Generator::Surrogate { model, seed: 42 };
        let rate = |p: &str| cracked_rate(&g.generate(p, 2000).unwrap(), &test);
        let plain = rate("Start from common words people love.");
        let with_year = rate("Start from common words people love. End some passwords with a birth year.");
        assert!(with_year >= plain, "{with_year} < {plain}");
    }

    proptest! {
        #[test]
        fn cracked_rate_matches_brute_force(
            cand in proptest::collection::vec("[a-c]{1,2}", 0..30),
            entries in proptest::collection::vec("[a-c]{1,2}", 1..30),
        ) {
            let set = CandidateSet::from_iter_capped(cand.clone(), usize::MAX);
            for mode in [CorpusMode::Unique, CorpusMode::Multiset] {
                let t = TestCorpus::from_entries(entries.clone(), mode, "mem").unwrap();
                let r = cracked_rate(&set, &t);
                prop_assert_eq!(r, brute_force_rate(&cand, &entries, mode));
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn cracked_rate_monotone(
            cand in proptest::collection::vec("[a-c]{1,2}", 0..20),
            extra in proptest::collection::vec("[a-c]{1,2}", 0..20),
            entries in proptest::collection::vec("[a-c]{1,2}", 1..20),
        ) {
            let small = CandidateSet::from_iter_capped(cand.clone(), usize::MAX);
            let large = CandidateSet::from_iter_capped(cand.into_iter().chain(extra), usize::MAX);
            for mode in [CorpusMode::Unique, CorpusMode::Multiset] {
                let t = TestCorpus::from_entries(entries.clone(), mode, "mem").unwrap();
                prop_assert!(cracked_rate(&large, &t) >= cracked_rate(&small, &t));
            }
        }

        #[test]
        fn modes_agree_without_duplicates(
            cand in proptest::collection::vec("[a-d]{1,3}", 0..20),
            entries in proptest::collection::btree_set("[a-d]{1,3}", 1..20),
        ) {
            let entries: Vec<String> = entries.into_iter().collect();
            let set = CandidateSet::from_iter_capped(cand, usize::MAX);
            let u = TestCorpus::from_entries(entries.clone(), CorpusMode::Unique, "mem").unwrap();
            let m = TestCorpus::from_entries(entries, CorpusMode::Multiset, "mem").unwrap();
            prop_assert_eq!(cracked_rate(&set, &u), cracked_rate(&set, &m));
        }

        #[test]
        fn full_coverage_iff_rate_one(entries in proptest::collection::vec("[a-b]{1,2}", 1..10), drop in 0usize..10) {
            let mut cand = entries.clone();
            let all = CandidateSet::from_iter_capped(cand.clone(), usize::MAX);
            let t = TestCorpus::from_entries(entries.clone(), CorpusMode::Multiset, "mem").unwrap();
            prop_assert_eq!(cracked_rate(&all, &t), 1.0);
            let victim = entries[drop % entries.len()].clone();
            cand.retain(|c| *c != victim);
            let partial = CandidateSet::from_iter_capped(cand, usize::MAX);
            prop_assert!(cracked_rate(&partial, &t) < 1.0);
        }
    }
}
