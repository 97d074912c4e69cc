//! Keyword directives recognised by the surrogate generator.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

const LEXICON_SOURCE: &str = include_str!("../../assets/directive_lexicon.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Directive {
    DigitsSuffix,
    YearSuffix,
    CapitalizeFirst,
    LeetSubstitution,
    CommonWords,
    KeyboardWalks,
}

impl Directive {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "DIGITS_SUFFIX" => Directive::DigitsSuffix,
            "YEAR_SUFFIX" => Directive::YearSuffix,
            "CAPITALIZE_FIRST" => Directive::CapitalizeFirst,
            "LEET_SUBSTITUTION" => Directive::LeetSubstitution,
            "COMMON_WORDS" => Directive::CommonWords,
            "KEYBOARD_WALKS" => Directive::KeyboardWalks,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectiveSet {
    pub flags: BTreeSet<Directive>,
    pub length_hint: Option<(usize, usize)>,
}

impl DirectiveSet {
    pub fn has(&self, d: Directive) -> bool {
        self.flags.contains(&d)
    }

    pub fn accepts_length(&self, len: usize) -> bool {
        self.length_hint.is_none_or(|(lo, hi)| (lo..=hi).contains(&len))
    }
}

/// Keyword table and mutation phrase catalog, parsed from the bundled asset.
#[derive(Debug)]
pub struct Lexicon {
    pub keywords: Vec<(String, Directive)>,
    pub phrases: Vec<String>,
}

impl Lexicon {
    pub fn bundled() -> &'static Lexicon {
        static LEXICON: OnceLock<Lexicon> = OnceLock::new();
        LEXICON.get_or_init(|| Lexicon::parse(LEXICON_SOURCE).expect("bundled lexicon is well-formed"))
    }

    pub fn parse(source: &str) -> Result<Self, String> {
        let mut keywords = Vec::new();
        let mut phrases = Vec::new();
        let mut section = "";
        for (n, raw) in source.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = match line {
                    "[keywords]" => "keywords",
                    "[phrases]" => "phrases",
                    other => return Err(format!("line {}: unknown section {other}", n + 1)),
                };
                continue;
            }
            match section {
                "keywords" => {
                    let (kw, flag) = line
                        .split_once('=')
                        .ok_or_else(|| format!("line {}: expected `keyword = FLAG`", n + 1))?;
                    let flag = Directive::parse(flag.trim())
                        .ok_or_else(|| format!("line {}: unknown directive {}", n + 1, flag.trim()))?;
                    keywords.push((kw.trim().to_ascii_lowercase(), flag));
                }
                "phrases" => phrases.push(line.to_string()),
                _ => return Err(format!("line {}: entry outside a section", n + 1)),
            }
        }
        Ok(Self { keywords, phrases })
    }

    /// Catalog phrases present in `text`, compared ASCII case-insensitively.
    pub fn phrases_in(&self, text: &str) -> Vec<&str> {
        let lower = text.to_ascii_lowercase();
        self.phrases
            .iter()
            .filter(|p| lower.contains(&p.to_ascii_lowercase()))
            .map(String::as_str)
            .collect()
    }
}

fn length_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)between\s+(\d+)\s+and\s+(\d+)\s+characters").unwrap())
}

pub fn extract_directives(prompt_text: &str) -> DirectiveSet {
    let lexicon = Lexicon::bundled();
    let lower = prompt_text.to_lowercase();
    let flags = lexicon
        .keywords
        .iter()
        .filter(|(kw, _)| lower.contains(kw.as_str()))
        .map(|(_, d)| *d)
        .collect();
    let length_hint = length_pattern().captures_iter(prompt_text).find_map(|c| {
        let lo: usize = c[1].parse().ok()?;
        let hi: usize = c[2].parse().ok()?;
        (1 <= lo && lo <= hi && hi <= 64).then_some((lo, hi))
    });
    DirectiveSet { flags, length_hint }
}
