//! Deterministic offline stance classifier.
//!
//! The keyword is the main subject when at most two tokens (ignoring
//! articles and titles) precede its first occurrence. The stance is set by
//! the cue word nearest to the keyword, preferring a cue after it on a tie;
//! a negator in the two tokens before the cue flips it. No cue means
//! NEUTRAL.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{ClassifierError, StanceClassifier, StancePrompt, VerdictSource, NEGATORS};

pub const POSITIVE_CUES: &[&str] = &[
    "fantastic",
    "excellent",
    "brilliant",
    "wonderful",
    "great",
    "best",
    "hero",
    "successful",
    "praise",
    "strong",
    "effective",
    "honest",
];

pub const NEGATIVE_CUES: &[&str] = &[
    "terrible",
    "disastrous",
    "awful",
    "horrible",
    "failure",
    "failures",
    "worst",
    "fraudulent",
    "corrupt",
    "failed",
    "weak",
    "incompetent",
];

const SKIPPABLE: &[&str] = &[
    "the",
    "a",
    "an",
    "president",
    "senator",
    "sen",
    "governor",
    "gov",
    "mr",
    "mrs",
    "ms",
    "dr",
    "speaker",
    "secretary",
    "former",
];

const MAX_LEADING_TOKENS: usize = 2;

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|t| !t.is_empty())
        .map(|t| {
            let lower = t.to_lowercase();
            lower.strip_suffix("'s").map(str::to_string).unwrap_or(lower)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MockClassifier;

impl MockClassifier {
    pub fn new() -> Self {
        MockClassifier
    }

    pub fn verdict_text(sentence: &str, keyword: &str) -> &'static str {
        let words = tokens(sentence);
        let key = tokens(keyword);
        if key.is_empty() {
            return "NO";
        }
        let Some(pos) = (0..words.len().saturating_sub(key.len() - 1)).find(|&i| words[i..i + key.len()] == key[..])
        else {
            return "NO";
        };
        let leading = words[..pos].iter().filter(|w| !SKIPPABLE.contains(&w.as_str())).count();
        if leading > MAX_LEADING_TOKENS {
            return "NO";
        }
        let key_end = pos + key.len() - 1;
        let mut best: Option<(usize, bool, i32)> = None;
        for (i, w) in words.iter().enumerate() {
            let polarity = if POSITIVE_CUES.contains(&w.as_str()) {
                1
            } else if NEGATIVE_CUES.contains(&w.as_str()) {
                -1
            } else {
                continue;
            };
            let (distance, before) = if i > key_end {
                (i - key_end, false)
            } else {
                (pos.saturating_sub(i), true)
            };
            let negated = words[i.saturating_sub(2)..i]
                .iter()
                .any(|w| NEGATORS.contains(&w.as_str()) || w.ends_with("n't"));
            let polarity = if negated { -polarity } else { polarity };
            let candidate = (distance, before, polarity);
            if best.is_none_or(|b| (candidate.0, candidate.1) < (b.0, b.1)) {
                best = Some(candidate);
            }
        }
        match best.map(|b| b.2) {
            Some(1) => "POSITIVE",
            Some(_) => "NEGATIVE",
            None => "NEUTRAL",
        }
    }
}

impl StanceClassifier for MockClassifier {
    fn classifier_id(&self) -> String {
        "mock-v1".to_string()
    }

    fn source(&self) -> VerdictSource {
        VerdictSource::Mock
    }

    fn respond(&self, prompt: &StancePrompt<'_>) -> Result<String, ClassifierError> {
        Ok(Self::verdict_text(prompt.sentence, prompt.keyword).to_string())
    }
}
