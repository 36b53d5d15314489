//! Target-agnostic valence scoring.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

/// Smoothing constant of the normalized valence sum `s / sqrt(s^2 + 15)`.
pub const VALENCE_NORMALIZER: f64 = 15.0;

/// Tokens that flip the sign of the next lexicon token.
pub const NEGATORS: &[&str] = &["not", "never", "no"];

const BUNDLED: &[(&str, f64)] = &[
    ("fantastic", 0.7),
    ("excellent", 0.7),
    ("brilliant", 0.7),
    ("wonderful", 0.7),
    ("great", 0.6),
    ("best", 0.6),
    ("hero", 0.6),
    ("successful", 0.5),
    ("success", 0.5),
    ("praise", 0.5),
    ("win", 0.5),
    ("good", 0.4),
    ("strong", 0.4),
    ("effective", 0.4),
    ("honest", 0.4),
    ("helpful", 0.3),
    ("hope", 0.3),
    ("support", 0.3),
    ("terrible", -0.7),
    ("disastrous", -0.7),
    ("awful", -0.7),
    ("horrible", -0.7),
    ("failure", -0.6),
    ("failures", -0.6),
    ("worst", -0.6),
    ("fraudulent", -0.6),
    ("corrupt", -0.6),
    ("failed", -0.5),
    ("dangerous", -0.5),
    ("lies", -0.5),
    ("bad", -0.4),
    ("weak", -0.4),
    ("incompetent", -0.5),
    ("crisis", -0.3),
    ("blame", -0.3),
    ("attack", -0.3),
];

/// Lowercase token to valence in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lexicon(BTreeMap<String, f64>);

impl Lexicon {
    pub fn new(entries: BTreeMap<String, f64>) -> Self {
        Lexicon(
            entries
                .into_iter()
                .map(|(k, v)| (k.to_lowercase(), v.clamp(-1.0, 1.0)))
                .collect(),
        )
    }

    /// The small built-in valence list. It contains every mock-classifier
    /// cue word, with opposing cues of equal magnitude.
    pub fn bundled() -> Self {
        Lexicon(BUNDLED.iter().map(|&(k, v)| (k.to_string(), v)).collect())
    }

    pub fn valence(&self, token: &str) -> Option<f64> {
        self.0.get(token).copied()
    }
}

/// Normalized valence sum of a sentence, clamped to `[-1, 1]`. A negator
/// flips the sign of the next lexicon token.
pub fn lexicon_sentiment(sentence: &str, lexicon: &Lexicon) -> f64 {
    let mut sum = 0.0;
    let mut negate = false;
    for token in sentence
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|t| !t.is_empty())
    {
        let lower = token.to_lowercase();
        if NEGATORS.contains(&lower.as_str()) {
            negate = true;
            continue;
        }
        if let Some(v) = lexicon.valence(&lower) {
            sum += if negate { -v } else { v };
            negate = false;
        }
    }
    (sum / libm::sqrt(sum * sum + VALENCE_NORMALIZER)).clamp(-1.0, 1.0)
}
