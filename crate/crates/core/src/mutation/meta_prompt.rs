//! Meta-prompt rendering and reply parsing.
//!
//! Prompts are embedded verbatim inside backtick fences. A fence is always
//! one backtick longer than the longest backtick run in the embedded text
//! (minimum three), so the closing fence is unambiguous for any content.

use std::sync::OnceLock;

use regex::Regex;

use super::{MutationError, MutationRequest};

pub const META_PROMPT_TEMPLATE: &str = include_str!("../../assets/meta_prompt.txt");
pub const META_PROMPT_VERSION: &str = "1";

/// Default chain-of-thought segment patterns removed before parsing.
pub const DEFAULT_STRIP_PATTERNS: [&str; 1] = [r"(?s)<think>.*?</think>"];

fn longest_backtick_run(text: &str) -> usize {
    let mut best = 0;
    let mut run = 0;
    for c in text.chars() {
        if c == '`' {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Wraps `text` in a fence long enough that no interior line can close it.
pub fn fence(text: &str) -> String {
    let ticks = "`".repeat((longest_backtick_run(text) + 1).max(3));
    format!("{ticks}\n{text}\n{ticks}")
}

/// Content of the first fenced block, if one is opened and closed.
/// The opening line may carry an info string; the closing line must be a
/// backtick run at least as long as the opener.
pub fn first_fenced_block(text: &str) -> Option<String> {
    let lines: Vec<&str> = text.split('\n').collect();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim_end_matches('\r');
        let trimmed = line.trim_start();
        let open = trimmed.chars().take_while(|c| *c == '`').count();
        if open >= 3 {
            let body_start = i + 1;
            for (j, candidate) in lines.iter().enumerate().skip(body_start) {
                let c = candidate.trim_end_matches('\r').trim();
                if c.len() >= open && c.chars().all(|ch| ch == '`') {
                    return Some(lines[body_start..j].join("\n"));
                }
            }
            return None;
        }
        i += 1;
    }
    None
}

fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let hit = after
            .find('}')
            .and_then(|end| vars.iter().find(|(k, _)| *k == &after[..end]).map(|(_, v)| (end, *v)));
        match hit {
            Some((end, value)) => {
                out.push_str(value);
                rest = &after[end + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn build_meta_prompt(request: &MutationRequest) -> String {
    let mut inspirations = String::new();
    if !request.inspirations.is_empty() {
        inspirations.push_str("\nHigh-scoring prompts for inspiration:\n");
        for (i, (prompt, fitness)) in request.inspirations.iter().enumerate() {
            inspirations.push_str(&format!(
                "\nInspiration {} (cracked rate {:.2}%):\n{}\n",
                i + 1,
                fitness * 100.0,
                fence(&prompt.text)
            ));
        }
    }
    render(
        META_PROMPT_TEMPLATE,
        &[
            ("goal", request.goal_text.as_str()),
            ("parent", &fence(&request.parent.text)),
            ("inspirations", &inspirations),
        ],
    )
}

/// Compiled chain-of-thought patterns.
#[derive(Debug, Clone)]
pub struct ReplyParser {
    strip: Vec<Regex>,
}

impl Default for ReplyParser {
    fn default() -> Self {
        Self::new(&DEFAULT_STRIP_PATTERNS).expect("default patterns compile")
    }
}

impl ReplyParser {
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<Self, regex::Error> {
        let strip = patterns.iter().map(|p| Regex::new(p.as_ref())).collect::<Result<_, _>>()?;
        Ok(Self { strip })
    }

    pub fn parse(&self, raw: &str) -> Result<String, MutationError> {
        let mut text = raw.to_string();
        for re in &self.strip {
            text = re.replace_all(&text, "").into_owned();
        }
        let candidate = first_fenced_block(&text).unwrap_or(text);
        let candidate = candidate.trim();
        if candidate.is_empty() {
            Err(MutationError::Parse("reply is empty after stripping".into()))
        } else {
            Ok(candidate.to_string())
        }
    }
}

/// Parses with the default chain-of-thought patterns.
pub fn parse_candidate(raw: &str) -> Result<String, MutationError> {
    static PARSER: OnceLock<ReplyParser> = OnceLock::new();
    PARSER.get_or_init(ReplyParser::default).parse(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{Origin, Prompt};
    use proptest::prelude::*;

    fn request(parent: &str, inspirations: &[(&str, f64)]) -> MutationRequest {
        MutationRequest {
            parent: Prompt::initial("p0", parent).unwrap(),
            inspirations: inspirations
                .iter()
                .enumerate()
                .map(|(i, (t, f))| {
                    (Prompt::derived(format!("e{i}"), *t, "p0", 0, 1, Origin::SyntheticMutation).unwrap(), *f)
                })
                .collect(),
            goal_text: "Maximize the cracked rate.".into(),
        }
    }

    /// Text of the parent block: the first fenced block after the marker line.
    fn parent_block(meta: &str) -> String {
        let at = meta.find("Current prompt:").unwrap();
        first_fenced_block(&meta[at..]).unwrap()
    }

    #[test]
    fn without_inspirations() {
        let meta = build_meta_prompt(&request("generate passwords", &[]));
        let goal = meta.find("Maximize the cracked rate.").unwrap();
        let parent = meta.find("```\ngenerate passwords\n```").unwrap();
        let instruction = meta.find("Output exactly one improved prompt").unwrap();
        assert!(goal < parent && parent < instruction);
        assert!(!meta.contains("Inspiration"));
    }

    #[test]
    fn inspirations_in_order_with_percentages() {
        let meta = build_meta_prompt(&request("base", &[("best one", 0.08), ("second", 0.05)]));
        let a = meta.find("8.00%").unwrap();
        let b = meta.find("5.00%").unwrap();
        assert!(a < b);
        assert!(meta.find("best one").unwrap() < meta.find("second").unwrap());
    }

    #[test]
    fn fence_in_parent_is_escaped() {
        let text = "use ```code``` and\n```\nmore";
        let meta = build_meta_prompt(&request(text, &[]));
        assert!(meta.contains("````\nuse ```code```"));
        assert_eq!(parent_block(&meta), text);
    }

    #[test]
    fn placeholders_inside_values_are_not_expanded() {
        let meta = build_meta_prompt(&request("say {goal} and {password}", &[]));
        assert_eq!(parent_block(&meta), "say {goal} and {password}");
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_candidate("```\nTry common years.\n```").unwrap(), "Try common years.");
        assert_eq!(
            parse_candidate("Here is my prompt: generate variants").unwrap(),
            "Here is my prompt: generate variants"
        );
        assert!(matches!(parse_candidate("<think>reasoning</think>"), Err(MutationError::Parse(_))));
        assert!(matches!(parse_candidate("   \n"), Err(MutationError::Parse(_))));
        assert_eq!(
            parse_candidate("<think>```\nwrong\n```</think>\nSure:\n```text\nright one\n```\nbye").unwrap(),
            "right one"
        );
        assert_eq!(parse_candidate("<think>a\nb</think>  plain  ").unwrap(), "plain");
    }

    #[test]
    fn custom_strip_patterns() {
        let parser = ReplyParser::new(&[r"(?s)<reasoning>.*?</reasoning>"]).unwrap();
        assert_eq!(parser.parse("<reasoning>x</reasoning>keep").unwrap(), "keep");
        assert!(ReplyParser::new(&["("]).is_err());
    }

    #[test]
    fn unclosed_fence_falls_back_to_whole_text() {
        assert_eq!(parse_candidate("```\nhalf").unwrap(), "```\nhalf");
    }

    proptest! {
        #[test]
        fn parent_recoverable_from_meta_prompt(text in "[a-z`{}\n ]{1,40}") {
            prop_assume!(!text.trim().is_empty());
            let meta = build_meta_prompt(&request(&text, &[("x", 0.1)]));
            prop_assert_eq!(parent_block(&meta), text);
        }
    }
}
