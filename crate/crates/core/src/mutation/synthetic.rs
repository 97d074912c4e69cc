//! Deterministic offline mutator: one catalog edit per call.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ChildSlot, MutationRequest};
use crate::eval::directives::Lexicon;
use crate::genome::{Origin, Prompt, PromptError};

/// Catalog edits, in fallback order: when the drawn edit does not apply,
/// the next one in this order is tried, wrapping around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditKind {
    AppendDirective,
    RemoveDirective,
    SwapSentences,
    DuplicateSentence,
}

pub const EDIT_ORDER: [EditKind; 4] = [
    EditKind::AppendDirective,
    EditKind::RemoveDirective,
    EditKind::SwapSentences,
    EditKind::DuplicateSentence,
];

const VARIATION_PREFIXES: [&str; 4] = ["Also,", "Remember:", "Above all,", "Again,"];

fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        let ends = matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace());
        if ends {
            let s = current.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            current.clear();
        }
    }
    let s = current.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Applies `kind` to `text`, or returns `None` when the edit has no target.
pub fn apply_edit<R: Rng>(text: &str, kind: EditKind, rng: &mut R) -> Option<String> {
    let lexicon = Lexicon::bundled();
    let out = match kind {
        EditKind::AppendDirective => {
            let present = lexicon.phrases_in(text);
            let absent: Vec<&String> =
                lexicon.phrases.iter().filter(|p| !present.contains(&p.as_str())).collect();
            if absent.is_empty() {
                return None;
            }
            let phrase = absent[rng.gen_range(0..absent.len())];
            format!("{} {}", text.trim_end(), phrase)
        }
        EditKind::RemoveDirective => {
            let present = lexicon.phrases_in(text);
            if present.is_empty() {
                return None;
            }
            let phrase = present[rng.gen_range(0..present.len())];
            let at = text.to_ascii_lowercase().find(&phrase.to_ascii_lowercase())?;
            let stripped = format!("{}{}", &text[..at], &text[at + phrase.len()..]);
            let stripped = collapse_whitespace(&stripped);
            if stripped.is_empty() {
                return None;
            }
            stripped
        }
        EditKind::SwapSentences => {
            let mut sentences = split_sentences(text);
            let pairs: Vec<(usize, usize)> = (0..sentences.len())
                .flat_map(|i| (i + 1..sentences.len()).map(move |j| (i, j)))
                .filter(|(i, j)| sentences[*i] != sentences[*j])
                .collect();
            if pairs.is_empty() {
                return None;
            }
            let (i, j) = pairs[rng.gen_range(0..pairs.len())];
            sentences.swap(i, j);
            sentences.join(" ")
        }
        EditKind::DuplicateSentence => {
            let mut sentences = split_sentences(text);
            if sentences.is_empty() {
                return None;
            }
            let i = rng.gen_range(0..sentences.len());
            let prefix = VARIATION_PREFIXES[rng.gen_range(0..VARIATION_PREFIXES.len())];
            let variant = format!("{prefix} {}", sentences[i]);
            sentences.insert(i + 1, variant);
            sentences.join(" ")
        }
    };
    (out != text && !out.trim().is_empty()).then_some(out)
}

/// Applies `first`, falling through the catalog order until an edit applies.
pub fn edit_with_fallback<R: Rng>(text: &str, first: EditKind, rng: &mut R) -> (EditKind, String) {
    let start = EDIT_ORDER.iter().position(|k| *k == first).expect("kind is in the catalog");
    for offset in 0..EDIT_ORDER.len() {
        let kind = EDIT_ORDER[(start + offset) % EDIT_ORDER.len()];
        if let Some(out) = apply_edit(text, kind, rng) {
            return (kind, out);
        }
    }
    // Duplication applies to any non-empty text, so this is reached only for
    // blank input, which the prompt invariant rules out.
    unreachable!("no catalog edit applies to {text:?}")
}

pub fn mutate_synthetic<R: Rng>(
    request: &MutationRequest,
    rng: &mut R,
    slot: &ChildSlot,
) -> Result<(EditKind, Prompt), PromptError> {
    let first = EDIT_ORDER[rng.gen_range(0..EDIT_ORDER.len())];
    let (kind, text) = edit_with_fallback(&request.parent.text, first, rng);
    let child = Prompt::derived(
        slot.id.clone(),
        text,
        request.parent.id.clone(),
        slot.island_id,
        slot.iteration,
        Origin::SyntheticMutation,
    )?;
    Ok((kind, child))
}
