//! Canonical transcript format, speaker/statement parsing, sentence
//! segmentation and monthly bucketing.
//!
//! A transcript file is a block of `KEY: value` header lines (at least
//! `PROGRAM`, `NETWORK` and `DATE`), a blank line, and a body where each
//! statement starts with an all-caps speaker tag:
//!
//! ```text
//! PROGRAM: Tucker Carlson Tonight
//! NETWORK: FOX
//! DATE: 2020-04-15
//!
//! TUCKER CARLSON: Good evening. Welcome to the show.
//! a lowercase line continues the previous statement.
//! ```

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use crate::program::{MonthKey, ProgramId};

mod segment;

pub use segment::{is_abbreviation, segment_sentences, ABBREVIATIONS};

/// Maximum number of whitespace-separated tokens in a speaker tag.
pub const MAX_SPEAKER_TOKENS: usize = 6;

/// Speaker assigned to body text that precedes the first speaker tag.
pub const UNKNOWN_SPEAKER: &str = "UNKNOWN";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IngestError {
    #[error("missing header field {0}")]
    MissingHeaderField(&'static str),
    #[error("unparsable date {0:?}")]
    UnparsableDate(String),
    #[error("transcript body has no statement lines")]
    EmptyBody,
    #[error("network {0:?} is not in the configured network set")]
    UnknownNetwork(String),
    #[error("malformed header line {0:?}")]
    MalformedHeader(String),
    #[error("invalid sentence {0:?}: sentences must be non-empty and trimmed")]
    InvalidSentence(String),
}

/// The set of network labels a corpus may use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSet(BTreeSet<String>);

impl NetworkSet {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        NetworkSet(
            labels
                .into_iter()
                .map(|s| s.as_ref().trim().to_uppercase())
                .filter(|s| !s.is_empty())
                .collect(),
        )
    }

    /// Returns the canonical label if `label` is a member (case-insensitive).
    pub fn canonical(&self, label: &str) -> Option<&str> {
        let wanted = label.trim().to_uppercase();
        self.0.get(&wanted).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl Default for NetworkSet {
    fn default() -> Self {
        NetworkSet::new(["CNN", "FOX", "MSNBC"])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptHeader {
    pub program_name: String,
    pub network: String,
    pub air_date: NaiveDate,
}

impl TranscriptHeader {
    pub fn program_id(&self) -> ProgramId {
        ProgramId::new(self.network.clone(), self.program_name.clone())
    }
}

/// One speaker turn. `text` is whitespace-normalized so that the sentences
/// joined by single spaces reproduce it exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    speaker: String,
    text: String,
    sentence_spans: Vec<(usize, usize)>,
}

impl Statement {
    /// Builds a statement from raw utterance text. Returns `None` when the
    /// text is blank.
    pub fn new(speaker: &str, text: &str) -> Option<Self> {
        let text = normalize_whitespace(text);
        if text.is_empty() {
            return None;
        }
        let sentence_spans = segment_sentences(&text);
        Some(Statement {
            speaker: normalize_speaker(speaker),
            text,
            sentence_spans,
        })
    }

    /// Rebuilds a statement from already segmented sentences, as stored in
    /// `transcripts.jsonl`.
    pub fn from_sentences<S: AsRef<str>>(speaker: &str, sentences: &[S]) -> Result<Self, IngestError> {
        let mut text = String::new();
        let mut spans = Vec::with_capacity(sentences.len());
        for sentence in sentences {
            let sentence = sentence.as_ref();
            if sentence.is_empty() || sentence.trim() != sentence {
                return Err(IngestError::InvalidSentence(sentence.to_string()));
            }
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(sentence);
            spans.push((start, text.len()));
        }
        if spans.is_empty() {
            return Err(IngestError::EmptyBody);
        }
        Ok(Statement {
            speaker: normalize_speaker(speaker),
            text,
            sentence_spans: spans,
        })
    }

    pub fn speaker(&self) -> &str {
        &self.speaker
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn sentence_spans(&self) -> &[(usize, usize)] {
        &self.sentence_spans
    }

    pub fn sentence(&self, index: usize) -> Option<&str> {
        self.sentence_spans.get(index).map(|&(s, e)| &self.text[s..e])
    }

    pub fn sentences(&self) -> impl Iterator<Item = &str> + '_ {
        self.sentence_spans.iter().map(|&(s, e)| &self.text[s..e])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    id: String,
    header: TranscriptHeader,
    statements: Vec<Statement>,
    month_key: MonthKey,
}

impl Transcript {
    pub fn new(id: String, header: TranscriptHeader, statements: Vec<Statement>) -> Result<Self, IngestError> {
        if header.program_name.trim().is_empty() {
            return Err(IngestError::MissingHeaderField("PROGRAM"));
        }
        if statements.is_empty() {
            return Err(IngestError::EmptyBody);
        }
        let month_key = MonthKey::from_date(header.air_date);
        Ok(Transcript {
            id,
            header,
            statements,
            month_key,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn header(&self) -> &TranscriptHeader {
        &self.header
    }

    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }

    pub fn month_key(&self) -> &MonthKey {
        &self.month_key
    }

    pub fn program_id(&self) -> ProgramId {
        self.header.program_id()
    }

    /// Sentence at `(statement_index, sentence_index)`.
    pub fn sentence(&self, statement: usize, sentence: usize) -> Option<&str> {
        self.statements.get(statement)?.sentence(sentence)
    }

    /// All sentences in document order with their positions.
    pub fn sentences(&self) -> impl Iterator<Item = ((usize, usize), &str)> + '_ {
        self.statements
            .iter()
            .enumerate()
            .flat_map(|(si, st)| st.sentences().enumerate().map(move |(j, s)| ((si, j), s)))
    }
}

/// Stable transcript id: the first 16 hex digits of SHA-256 over the source
/// path and the header fields.
pub fn transcript_id(source: &str, header: &TranscriptHeader) -> String {
    let mut hasher = Sha256::new();
    hasher.update(source.as_bytes());
    for part in [
        header.program_name.as_str(),
        header.network.as_str(),
        &header.air_date.to_string(),
    ] {
        hasher.update(b"\n");
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    hex::encode(&digest[..8])
}

fn normalize_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn normalize_speaker(s: &str) -> String {
    normalize_whitespace(s).to_uppercase()
}

/// Returns the speaker tag and the remaining utterance when `line` opens a
/// new statement.
pub fn split_speaker_line(line: &str) -> Option<(&str, &str)> {
    let (prefix, rest) = line.split_once(':')?;
    let tag = prefix.trim();
    if tag.is_empty() || tag.split_whitespace().count() > MAX_SPEAKER_TOKENS {
        return None;
    }
    let mut has_letter = false;
    for c in tag.chars() {
        if c.is_alphabetic() {
            if !c.is_uppercase() {
                return None;
            }
            has_letter = true;
        } else if !(c == ' ' || c == '.' || c == '-' || c == '\'') {
            return None;
        }
    }
    has_letter.then_some((tag, rest.trim()))
}

fn parse_date(value: &str) -> Result<NaiveDate, IngestError> {
    let bad = || IngestError::UnparsableDate(value.to_string());
    let mut parts = value.split('-');
    let (Some(y), Some(m), Some(d), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
        return Err(bad());
    };
    if y.len() != 4 || m.len() != 2 || d.len() != 2 {
        return Err(bad());
    }
    let y: i32 = y.parse().map_err(|_| bad())?;
    let m: u32 = m.parse().map_err(|_| bad())?;
    let d: u32 = d.parse().map_err(|_| bad())?;
    NaiveDate::from_ymd_opt(y, m, d).ok_or_else(bad)
}

/// Parses one canonical transcript. `source` (usually the file path) feeds
/// the transcript id.
pub fn parse_transcript(raw: &str, source: &str, networks: &NetworkSet) -> Result<Transcript, IngestError> {
    let mut lines = raw.lines().skip_while(|l| l.trim().is_empty());

    let mut fields: BTreeMap<String, String> = BTreeMap::new();
    for line in lines.by_ref() {
        if line.trim().is_empty() {
            break;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| IngestError::MalformedHeader(line.to_string()))?;
        fields
            .entry(key.trim().to_uppercase())
            .or_insert_with(|| value.trim().to_string());
    }

    let field = |name: &'static str| {
        fields
            .get(name)
            .filter(|v| !v.is_empty())
            .ok_or(IngestError::MissingHeaderField(name))
    };
    let program_name = normalize_whitespace(field("PROGRAM")?);
    let network_raw = field("NETWORK")?;
    let date_raw = field("DATE")?;
    let network = networks
        .canonical(network_raw)
        .ok_or_else(|| IngestError::UnknownNetwork(network_raw.clone()))?
        .to_string();
    let air_date = parse_date(date_raw)?;
    let header = TranscriptHeader {
        program_name,
        network,
        air_date,
    };

    let mut statements: Vec<Statement> = Vec::new();
    let mut current: Option<(String, String)> = None;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        if let Some((speaker, utterance)) = split_speaker_line(line) {
            if let Some((sp, text)) = current.take() {
                statements.extend(Statement::new(&sp, &text));
            }
            current = Some((speaker.to_string(), utterance.to_string()));
        } else {
            match current.as_mut() {
                Some((_, text)) => {
                    text.push(' ');
                    text.push_str(line.trim());
                }
                None => current = Some((UNKNOWN_SPEAKER.to_string(), line.trim().to_string())),
            }
        }
    }
    if let Some((sp, text)) = current.take() {
        statements.extend(Statement::new(&sp, &text));
    }

    let id = transcript_id(source, &header);
    Transcript::new(id, header, statements)
}

/// Renders a transcript back into the canonical text format.
pub fn to_canonical_text(transcript: &Transcript) -> String {
    let h = transcript.header();
    let mut out = String::new();
    // Writing into a String cannot fail.
    let _ = write!(
        out,
        "PROGRAM: {}\nNETWORK: {}\nDATE: {}\n\n",
        h.program_name, h.network, h.air_date
    );
    for st in transcript.statements() {
        let _ = writeln!(out, "{}: {}", st.speaker(), st.text());
    }
    out
}

/// Partitions transcripts by calendar month, each bucket ordered by
/// `(air_date, id)`.
pub fn bucket_by_month(transcripts: Vec<Transcript>) -> BTreeMap<MonthKey, Vec<Transcript>> {
    let mut buckets: BTreeMap<MonthKey, Vec<Transcript>> = BTreeMap::new();
    for t in transcripts {
        buckets.entry(t.month_key().clone()).or_default().push(t);
    }
    for bucket in buckets.values_mut() {
        bucket.sort_by(|a, b| (a.header.air_date, a.id.as_str()).cmp(&(b.header.air_date, b.id.as_str())));
    }
    buckets
}
