//! Deterministic, directive-sensitive stand-in for a fine-tuned password model.
//!
//! Candidates come in phases: keyboard walks, raw frequent passwords, the
//! frequent passwords rewritten by the active directives, and finally
//! character-bigram samples until the budget is spent.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::directives::{Directive, DirectiveSet};
use super::CandidateSet;

const START: char = '\u{2}';
const END: char = '\u{3}';

/// Digit suffixes in emission order.
pub const DIGIT_SUFFIXES: [&str; 28] = [
    "1", "12", "123", "2", "7", "11", "13", "1234", "69", "22", "21", "0", "23", "01", "99", "00",
    "3", "4", "5", "10", "123456", "14", "15", "88", "77", "666", "777", "12345",
];

/// Years 1980–2025, most common first.
pub const YEAR_SUFFIXES: [u16; 46] = [
    2000, 1990, 1991, 1989, 1992, 1988, 1993, 1987, 1994, 1995, 1986, 1996, 1985, 1997, 2001, 1998,
    1984, 1999, 2002, 1983, 2003, 1982, 2004, 1981, 2005, 1980, 2006, 2007, 2008, 2009, 2010, 2011,
    2012, 2013, 2014, 2015, 2016, 2017, 2018, 2019, 2020, 2021, 2022, 2023, 2024, 2025,
];

pub const KEYBOARD_WALKS: [&str; 20] = [
    "qwerty", "qwertyuiop", "asdfgh", "asdfghjkl", "zxcvbnm", "1qaz2wsx", "qazwsx", "123qwe",
    "qwe123", "asdf", "zxcvbn", "1q2w3e4r", "1q2w3e", "qwer1234", "poiuytrewq", "!qaz2wsx",
    "q1w2e3r4", "asdfjkl;", "zaq12wsx", "mnbvcxz",
];

/// Bigram-sampling attempts allowed per unit of remaining budget.
const SAMPLE_ATTEMPTS_PER_SLOT: usize = 8;

pub fn leet(word: &str) -> String {
    word.chars()
        .map(|c| match c {
            'a' => '@',
            'e' => '3',
            'i' => '1',
            'o' => '0',
            's' => '$',
            other => other,
        })
        .collect()
}

pub fn capitalize_first(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    /// Successor counts per character, with start and end markers.
    transitions: BTreeMap<char, BTreeMap<char, u64>>,
    length_histogram: BTreeMap<usize, u64>,
    top_list: Vec<String>,
}

impl SurrogateModel {
    /// Learns bigram and length statistics and keeps the `top_list_size` most
    /// frequent passwords (ties lexicographic).
    pub fn train<S: AsRef<str>>(passwords: &[S], top_list_size: usize) -> Self {
        let mut transitions: BTreeMap<char, BTreeMap<char, u64>> = BTreeMap::new();
        let mut length_histogram = BTreeMap::new();
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for pw in passwords.iter().map(AsRef::as_ref).filter(|p| !p.is_empty()) {
            *freq.entry(pw).or_default() += 1;
            *length_histogram.entry(pw.chars().count()).or_default() += 1;
            let mut prev = START;
            for c in pw.chars().chain(std::iter::once(END)) {
                *transitions.entry(prev).or_default().entry(c).or_default() += 1;
                prev = c;
            }
        }
        let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let top_list = ranked.into_iter().take(top_list_size).map(|(p, _)| p.to_string()).collect();
        Self { transitions, length_histogram, top_list }
    }

    pub fn top_list(&self) -> &[String] {
        &self.top_list
    }

    pub fn length_histogram(&self) -> &BTreeMap<usize, u64> {
        &self.length_histogram
    }

    /// Normalized successor distribution of `from` (end marker included).
    pub fn row_probabilities(&self, from: char) -> Vec<(char, f64)> {
        let Some(row) = self.transitions.get(&from) else { return Vec::new() };
        let total: u64 = row.values().sum();
        row.iter().map(|(c, n)| (*c, *n as f64 / total as f64)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = char> + '_ {
        self.transitions.keys().copied()
    }

    pub fn generate<R: Rng>(&self, directives: &DirectiveSet, budget: usize, rng: &mut R) -> CandidateSet {
        let mut out = CandidateSet::with_budget(budget);
        if budget == 0 {
            return out;
        }
        let offer = |out: &mut CandidateSet, s: String| {
            if directives.accepts_length(s.chars().count()) {
                out.push(s);
            }
            out.is_full()
        };

        if directives.has(Directive::KeyboardWalks) {
            for walk in KEYBOARD_WALKS {
                if offer(&mut out, walk.to_string()) {
                    return out;
                }
            }
        }
        if directives.has(Directive::CommonWords) {
            for pw in &self.top_list {
                if offer(&mut out, pw.clone()) {
                    return out;
                }
            }
        }
        let bases: Vec<String> = self
            .top_list
            .iter()
            .map(|pw| {
                let mut w = pw.clone();
                if directives.has(Directive::LeetSubstitution) {
                    w = leet(&w);
                }
                if directives.has(Directive::CapitalizeFirst) {
                    w = capitalize_first(&w);
                }
                w
            })
            .collect();
        for suffix in suffix_schedule(directives) {
            for base in &bases {
                if offer(&mut out, format!("{base}{suffix}")) {
                    return out;
                }
            }
        }
        self.fill_with_samples(directives, &mut out, rng);
        out
    }

    fn fill_with_samples<R: Rng>(&self, directives: &DirectiveSet, out: &mut CandidateSet, rng: &mut R) {
        let lengths: Vec<(usize, u64)> = self
            .length_histogram
            .iter()
            .filter(|(len, _)| directives.accepts_length(**len))
            .map(|(l, n)| (*l, *n))
            .collect();
        let total: u64 = lengths.iter().map(|(_, n)| n).sum();
        if total == 0 {
            return;
        }
        let mut attempts = out.remaining() * SAMPLE_ATTEMPTS_PER_SLOT;
        while !out.is_full() && attempts > 0 {
            attempts -= 1;
            let len = pick_weighted(&lengths, rng.gen_range(0..total));
            if let Some(s) = self.sample_chain(len, rng) {
                out.push(s);
            }
        }
    }

    /// A chain of exactly `len` characters, never taking the end marker early.
    fn sample_chain<R: Rng>(&self, len: usize, rng: &mut R) -> Option<String> {
        let mut s = String::new();
        let mut prev = START;
        for _ in 0..len {
            let row: Vec<(char, u64)> = self
                .transitions
                .get(&prev)?
                .iter()
                .filter(|(c, _)| **c != END)
                .map(|(c, n)| (*c, *n))
                .collect();
            let total: u64 = row.iter().map(|(_, n)| n).sum();
            if total == 0 {
                return None;
            }
            prev = pick_weighted(&row, rng.gen_range(0..total));
            s.push(prev);
        }
        Some(s)
    }
}

fn pick_weighted<T: Copy>(items: &[(T, u64)], mut ticket: u64) -> T {
    for (item, weight) in items {
        if ticket < *weight {
            return *item;
        }
        ticket -= weight;
    }
    items[items.len() - 1].0
}

/// Suffixes applied to each frequent password. Digits and years interleave
/// when both are active; with neither, the bare word is the only entry.
pub fn suffix_schedule(directives: &DirectiveSet) -> Vec<String> {
    let digits: Vec<String> = if directives.has(Directive::DigitsSuffix) {
        DIGIT_SUFFIXES.iter().map(|s| s.to_string()).collect()
    } else {
        Vec::new()
    };
    let years: Vec<String> = if directives.has(Directive::YearSuffix) {
        YEAR_SUFFIXES.iter().map(|y| y.to_string()).collect()
    } else {
        Vec::new()
    };
    if digits.is_empty() && years.is_empty() {
        return vec![String::new()];
    }
    let mut out = Vec::with_capacity(digits.len() + years.len());
    for i in 0..digits.len().max(years.len()) {
        out.extend(digits.get(i).cloned());
        out.extend(years.get(i).cloned());
    }
    out
}
