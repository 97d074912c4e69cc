//! Synthetic password corpora with planted conventions.
//!
//! Passwords are drawn from a Zipf-distributed vocabulary and decorated with
//! year and digit suffixes, capitalization, leet substitutions and keyboard
//! walks at fixed rates. Training and test splits are independent draws
//! from the same distribution.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eval::surrogate::{capitalize_first, leet, DIGIT_SUFFIXES, KEYBOARD_WALKS, YEAR_SUFFIXES};

const COMMON_WORDS: [&str; 60] = [
    "password", "iloveyou", "princess", "monkey", "dragon", "sunshine", "shadow", "football",
    "baseball", "master", "michael", "jessica", "ashley", "superman", "batman", "charlie",
    "flower", "soccer", "hunter", "buster", "tigger", "jordan", "hannah", "pepper", "ginger",
    "summer", "cookie", "chicken", "angel", "lovely", "whatever", "freedom", "starwars", "maggie",
    "daniel", "andrew", "jennifer", "thomas", "matrix", "purple", "orange", "banana", "eagle",
    "rabbit", "silver", "golden", "small", "secret", "killer", "music", "butterfly", "naruto",
    "pokemon", "family", "friends", "love", "happy", "lucky", "blessed", "cheese",
];

const SYLLABLES: [&str; 24] = [
    "ka", "ri", "to", "mo", "la", "ne", "su", "vi", "an", "el", "or", "da", "bo", "chi", "ly",
    "ra", "ze", "mi", "po", "ta", "jo", "ne", "se", "ku",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    /// Total vocabulary: the built-in common words plus generated pseudo-words.
    pub vocabulary_size: usize,
    pub zipf_exponent: f64,
    pub year_rate: f64,
    pub digits_rate: f64,
    pub capitalize_rate: f64,
    pub leet_rate: f64,
    pub keyboard_rate: f64,
    pub noise_rate: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 42,
            train_size: 20_000,
            test_size: 5_000,
            vocabulary_size: 1_500,
            zipf_exponent: 1.0,
            year_rate: 0.30,
            digits_rate: 0.25,
            capitalize_rate: 0.15,
            leet_rate: 0.08,
            keyboard_rate: 0.05,
            noise_rate: 0.07,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticCorpus {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

struct Zipf {
    cumulative: Vec<f64>,
}

impl Zipf {
    fn new(n: usize, exponent: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = (1..=n)
            .map(|r| {
                acc += 1.0 / (r as f64).powf(exponent);
                acc
            })
            .collect();
        Self { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty distribution");
        let x = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|c| *c <= x).min(self.cumulative.len() - 1)
    }
}

fn vocabulary<R: Rng>(size: usize, rng: &mut R) -> Vec<String> {
    let mut words: Vec<String> = COMMON_WORDS.iter().take(size).map(|w| w.to_string()).collect();
    let mut seen: std::collections::HashSet<String> = words.iter().cloned().collect();
    while words.len() < size {
        let n = rng.gen_range(2..=4);
        let w: String = (0..n).map(|_| SYLLABLES[rng.gen_range(0..SYLLABLES.len())]).collect();
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

impl SyntheticCorpus {
    pub fn generate(spec: &SynthSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let words = vocabulary(spec.vocabulary_size.max(1), &mut rng);
        let word_dist = Zipf::new(words.len(), spec.zipf_exponent);
        let year_dist = Zipf::new(YEAR_SUFFIXES.len(), 0.7);
        let digit_dist = Zipf::new(DIGIT_SUFFIXES.len(), 1.0);
        let walk_dist = Zipf::new(KEYBOARD_WALKS.len(), 1.0);
        let draw = |rng: &mut ChaCha8Rng| -> String {
            let roll: f64 = rng.gen();
            if roll < spec.keyboard_rate {
                return KEYBOARD_WALKS[walk_dist.sample(rng)].to_string();
            }
            if roll < spec.keyboard_rate + spec.noise_rate {
                let len = rng.gen_range(6..=12);
                const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
                return (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char).collect();
            }
            let mut pw = words[word_dist.sample(rng)].clone();
            if rng.gen::<f64>() < spec.leet_rate {
                pw = leet(&pw);
            }
            if rng.gen::<f64>() < spec.capitalize_rate {
                pw = capitalize_first(&pw);
            }
            let suffix_roll: f64 = rng.gen();
            if suffix_roll < spec.year_rate {
                pw.push_str(&YEAR_SUFFIXES[year_dist.sample(rng)].to_string());
            } else if suffix_roll < spec.year_rate + spec.digits_rate {
                pw.push_str(DIGIT_SUFFIXES[digit_dist.sample(rng)]);
            }
            pw
        };
        let train = (0..spec.train_size).map(|_| draw(&mut rng)).collect();
        let test = (0..spec.test_size).map(|_| draw(&mut rng)).collect();
        Self { train, test }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_determinism() {
        let spec = SynthSpec { train_size: 500, test_size: 100, ..Default::default() };
        let a = SyntheticCorpus::generate(&spec);
        assert_eq!((a.train.len(), a.test.len()), (500, 100));
        assert_eq!(a, SyntheticCorpus::generate(&spec));
        let b = SyntheticCorpus::generate(&SynthSpec { seed: 7, ..spec });
        assert_ne!(a.train, b.train);
    }

    #[test]
    fn conventions_are_planted() {
        let c = SyntheticCorpus::generate(&SynthSpec { train_size: 4000, test_size: 0, ..Default::default() });
        let n = c.train.len() as f64;
        let years = c
            .train
            .iter()
            .filter(|p| p.len() > 4 && p[p.len() - 4..].parse::<u16>().is_ok_and(|y| (1980..=2025).contains(&y)))
            .count() as f64;
        assert!((years / n - 0.30 * 0.88).abs() < 0.04, "year share {}", years / n);
        assert!(c.train.iter().all(|p| !p.is_empty() && p.len() <= 64));
    }

    #[test]
    fn zipf_prefers_low_ranks() {
        let z = Zipf::new(100, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = vec![0usize; 100];
        for _ in 0..20_000 {
            counts[z.sample(&mut rng)] += 1;
        }
        assert!(counts[0] > counts[9] && counts[9] > counts[99]);
    }
}
