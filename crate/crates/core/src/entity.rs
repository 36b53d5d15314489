//! Named-entity mentions and per-transcript keyword selection.
//!
//! A keyword is an entity that ranks among the five most frequently
//! mentioned in its transcript and appears in at least three distinct
//! sentences. Ranking happens first, then the sentence filter, so a
//! transcript can end up with fewer than five keywords.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::ingest::Transcript;

pub mod exclusion;
pub mod heuristic;

pub use exclusion::ExclusionFilter;
pub use heuristic::HeuristicRecognizer;

/// Maximum number of keywords kept per transcript.
pub const MAX_KEYWORDS: usize = 5;
/// Minimum number of distinct sentences a keyword must appear in.
pub const MIN_KEYWORD_SENTENCES: usize = 3;

/// `(statement_index, sentence_index)` within a transcript.
pub type SentenceRef = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityLabel {
    Person,
    Org,
    Place,
    Other,
    Excluded,
}

impl EntityLabel {
    /// Maps a tagger label (spaCy/OntoNotes style or our own names).
    pub fn from_tag(tag: &str) -> Self {
        match tag.trim().to_uppercase().as_str() {
            "PERSON" | "PER" => EntityLabel::Person,
            "ORG" | "NORP" => EntityLabel::Org,
            "PLACE" | "GPE" | "LOC" | "FAC" => EntityLabel::Place,
            "EXCLUDED" | "DATE" | "TIME" | "PERCENT" | "MONEY" | "QUANTITY" | "ORDINAL" | "CARDINAL" => {
                EntityLabel::Excluded
            }
            _ => EntityLabel::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityLabel::Person => "PERSON",
            EntityLabel::Org => "ORG",
            EntityLabel::Place => "PLACE",
            EntityLabel::Other => "OTHER",
            EntityLabel::Excluded => "EXCLUDED",
        }
    }
}

/// An entity found by a recognizer inside one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSpan {
    pub text: String,
    pub label: EntityLabel,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecognizerError {
    #[error("entity recognizer unavailable: {0}")]
    Unavailable(String),
}

/// Transcript-wide evidence available to recognizers while they tag a
/// single sentence.
#[derive(Debug, Clone, Default)]
pub struct DocumentContext {
    mid_sentence_capitalized: BTreeSet<String>,
}

impl DocumentContext {
    pub fn from_transcript(transcript: &Transcript) -> Self {
        let mut ctx = DocumentContext::default();
        for (_, sentence) in transcript.sentences() {
            ctx.observe(sentence);
        }
        ctx
    }

    pub fn observe(&mut self, sentence: &str) {
        self.mid_sentence_capitalized
            .extend(HeuristicRecognizer::mid_sentence_capitalized(sentence));
    }

    pub fn is_mid_sentence_capitalized(&self, word: &str) -> bool {
        self.mid_sentence_capitalized.contains(word)
    }
}

/// Anything that can find entities in a sentence: the bundled heuristic or
/// an adapter around an external tagger.
pub trait EntityRecognizer {
    fn tag_sentence(&self, sentence: &str, context: &DocumentContext) -> Result<Vec<TaggedSpan>, RecognizerError>;
}

impl<R: EntityRecognizer + ?Sized> EntityRecognizer for &R {
    fn tag_sentence(&self, sentence: &str, context: &DocumentContext) -> Result<Vec<TaggedSpan>, RecognizerError> {
        (**self).tag_sentence(sentence, context)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityMention {
    pub surface: String,
    pub canonical: String,
    pub label: EntityLabel,
    pub transcript_id: String,
    pub statement_index: usize,
    pub sentence_index: usize,
}

const ARTICLES: &[&str] = &["the", "a", "an"];
const NAME_PARTICLES: &[&str] = &["of", "for", "and", "the", "de", "van", "von"];

fn title_case(word: &str, lower_rest: bool) -> String {
    let mut out = String::with_capacity(word.len());
    let mut at_start = true;
    for c in word.chars() {
        if at_start {
            out.extend(c.to_uppercase());
        } else if lower_rest {
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
        at_start = c == '-';
    }
    out
}

/// Normalizes an entity surface form: whitespace collapsed, leading article
/// and possessive suffix removed, multiword names title-cased (all-caps
/// names are lowered first, mixed-case words such as "McConnell" or "FBI"
/// inside a mixed-case name keep their casing).
pub fn canonicalize(surface: &str) -> String {
    let mut words: Vec<&str> = surface
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| matches!(c, ',' | ';' | ':' | '!' | '?' | '"' | '(' | ')' | '[' | ']')))
        .filter(|w| !w.is_empty())
        .collect();
    while words.len() > 1 && ARTICLES.contains(&words[0].to_lowercase().as_str()) {
        words.remove(0);
    }
    if let Some(last) = words.last_mut() {
        let stripped = last
            .strip_suffix("'s")
            .or_else(|| last.strip_suffix("\u{2019}s"))
            .or_else(|| last.strip_suffix("s'").map(|_| &last[..last.len() - 1]))
            .unwrap_or(last);
        if !stripped.is_empty() {
            *last = stripped;
        }
    }
    let all_caps = words
        .iter()
        .flat_map(|w| w.chars())
        .filter(|c| c.is_alphabetic())
        .all(char::is_uppercase);
    let multiword = words.iter().filter(|w| w.chars().any(char::is_alphabetic)).count() > 1;
    let parts: Vec<String> = words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let lower = w.to_lowercase();
            if !multiword {
                w.to_string()
            } else if i > 0 && NAME_PARTICLES.contains(&lower.as_str()) {
                lower
            } else {
                title_case(w, all_caps)
            }
        })
        .collect();
    parts.join(" ")
}

/// Optional surface-to-canonical alias table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasMap(BTreeMap<String, String>);

impl AliasMap {
    pub fn new(map: BTreeMap<String, String>) -> Self {
        AliasMap(map)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Looks up the raw surface first, then its canonical form.
    pub fn resolve(&self, surface: &str, canonical: String) -> String {
        self.0
            .get(surface.trim())
            .or_else(|| self.0.get(&canonical))
            .cloned()
            .unwrap_or(canonical)
    }
}

/// Runs a recognizer over a transcript and applies exclusion classes,
/// canonicalization and aliases.
#[derive(Debug, Clone, Default)]
pub struct EntityExtractor {
    exclusions: ExclusionFilter,
    aliases: AliasMap,
}

impl EntityExtractor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_aliases(aliases: AliasMap) -> Self {
        EntityExtractor {
            exclusions: ExclusionFilter::new(),
            aliases,
        }
    }

    pub fn exclusions(&self) -> &ExclusionFilter {
        &self.exclusions
    }

    pub fn recognize_entities<R: EntityRecognizer + ?Sized>(
        &self,
        transcript: &Transcript,
        recognizer: &R,
    ) -> Result<Vec<EntityMention>, RecognizerError> {
        let context = DocumentContext::from_transcript(transcript);
        let mut mentions = Vec::new();
        for ((statement_index, sentence_index), sentence) in transcript.sentences() {
            for span in recognizer.tag_sentence(sentence, &context)? {
                let canonical = canonicalize(&span.text);
                if canonical.is_empty() {
                    continue;
                }
                let label = if span.label == EntityLabel::Excluded || self.exclusions.is_excluded(&canonical) {
                    EntityLabel::Excluded
                } else {
                    span.label
                };
                let canonical = self.aliases.resolve(&span.text, canonical);
                mentions.push(EntityMention {
                    surface: span.text,
                    canonical,
                    label,
                    transcript_id: transcript.id().to_string(),
                    statement_index,
                    sentence_index,
                });
            }
        }
        Ok(mentions)
    }
}

/// Convenience wrapper using the default extractor (no aliases).
pub fn recognize_entities<R: EntityRecognizer + ?Sized>(
    transcript: &Transcript,
    recognizer: &R,
) -> Result<Vec<EntityMention>, RecognizerError> {
    EntityExtractor::new().recognize_entities(transcript, recognizer)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keyword {
    pub canonical: String,
    pub mention_count: usize,
    /// Distinct, ascending.
    pub sentence_refs: Vec<SentenceRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeywordInvariantError {
    #[error("{0} keywords exceed the limit of {MAX_KEYWORDS}")]
    TooManyKeywords(usize),
    #[error("keyword {0:?} appears in fewer than {MIN_KEYWORD_SENTENCES} distinct sentences")]
    TooFewSentences(String),
    #[error("keywords are not ordered by count descending then text")]
    Unordered,
    #[error("keyword {0:?} has unsorted or duplicate sentence references")]
    BadSentenceRefs(String),
}

/// The keywords chosen for one transcript. Construction enforces the
/// selection invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordAssignment {
    transcript_id: String,
    keywords: Vec<Keyword>,
}

impl KeywordAssignment {
    pub fn new(transcript_id: String, keywords: Vec<Keyword>) -> Result<Self, KeywordInvariantError> {
        if keywords.len() > MAX_KEYWORDS {
            return Err(KeywordInvariantError::TooManyKeywords(keywords.len()));
        }
        for k in &keywords {
            if !k.sentence_refs.windows(2).all(|w| w[0] < w[1]) {
                return Err(KeywordInvariantError::BadSentenceRefs(k.canonical.clone()));
            }
            if k.sentence_refs.len() < MIN_KEYWORD_SENTENCES {
                return Err(KeywordInvariantError::TooFewSentences(k.canonical.clone()));
            }
        }
        let ordered = keywords.windows(2).all(|w| {
            (core::cmp::Reverse(w[0].mention_count), &w[0].canonical)
                < (core::cmp::Reverse(w[1].mention_count), &w[1].canonical)
        });
        if !ordered {
            return Err(KeywordInvariantError::Unordered);
        }
        Ok(KeywordAssignment {
            transcript_id,
            keywords,
        })
    }

    pub fn transcript_id(&self) -> &str {
        &self.transcript_id
    }

    pub fn keywords(&self) -> &[Keyword] {
        &self.keywords
    }

    pub fn keyword_texts(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(|k| k.canonical.as_str())
    }
}

/// Ranks non-excluded entities by mention count (ties by text), keeps the
/// top five, then drops those seen in fewer than three distinct sentences.
pub fn select_keywords(transcript_id: &str, mentions: &[EntityMention]) -> KeywordAssignment {
    let mut tally: BTreeMap<&str, (usize, BTreeSet<SentenceRef>)> = BTreeMap::new();
    for m in mentions.iter().filter(|m| m.label != EntityLabel::Excluded) {
        let entry = tally.entry(m.canonical.as_str()).or_default();
        entry.0 += 1;
        entry.1.insert((m.statement_index, m.sentence_index));
    }
    let mut ranked: Vec<Keyword> = tally
        .into_iter()
        .map(|(canonical, (mention_count, refs))| Keyword {
            canonical: canonical.to_string(),
            mention_count,
            sentence_refs: refs.into_iter().collect(),
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.mention_count
            .cmp(&a.mention_count)
            .then_with(|| a.canonical.cmp(&b.canonical))
    });
    ranked.truncate(MAX_KEYWORDS);
    ranked.retain(|k| k.sentence_refs.len() >= MIN_KEYWORD_SENTENCES);
    KeywordAssignment::new(transcript_id.to_string(), ranked).expect("selection satisfies keyword invariants")
}
