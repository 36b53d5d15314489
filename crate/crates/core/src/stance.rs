//! Target-directed stance classification and its lexicon sentiment
//! baseline.
//!
//! For every (sentence, keyword) pair a classifier is asked whether the
//! keyword is the main subject of the sentence and, if so, whether the
//! sentence is positive, neutral or negative toward it. Verdicts map to
//! +1 / 0 / -1 and a transcript's stance toward a keyword is the mean over
//! the sentences where the keyword is the main subject.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::entity::{Keyword, KeywordAssignment, SentenceRef};
use crate::ingest::Transcript;

mod lexicon;
mod mock;

pub use lexicon::{lexicon_sentiment, Lexicon, NEGATORS, VALENCE_NORMALIZER};
pub use mock::{MockClassifier, NEGATIVE_CUES, POSITIVE_CUES};

/// Bumped whenever the prompt wording changes; part of every cache key.
pub const PROMPT_TEMPLATE_VERSION: &str = "stance-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    NotMainSubject,
    Positive,
    Neutral,
    Negative,
}

impl Verdict {
    /// +1 / 0 / -1, or `None` when the keyword is not the main subject.
    pub fn score(self) -> Option<i32> {
        match self {
            Verdict::NotMainSubject => None,
            Verdict::Positive => Some(1),
            Verdict::Neutral => Some(0),
            Verdict::Negative => Some(-1),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NotMainSubject => "NO",
            Verdict::Positive => "POSITIVE",
            Verdict::Neutral => "NEUTRAL",
            Verdict::Negative => "NEGATIVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VerdictSource {
    Remote,
    Mock,
    Cache,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceVerdict {
    pub transcript_id: String,
    pub keyword: String,
    pub statement_index: usize,
    pub sentence_index: usize,
    pub verdict: Verdict,
    pub source: VerdictSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StanceRecord {
    pub transcript_id: String,
    pub keyword: String,
    pub stance: f64,
    pub n_subject_sentences: usize,
}

/// Reads the first verdict token of a classifier reply, ignoring case and
/// punctuation.
pub fn parse_verdict(response: &str) -> Option<Verdict> {
    response
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .find_map(|token| match token.to_uppercase().as_str() {
            "NO" => Some(Verdict::NotMainSubject),
            "POSITIVE" => Some(Verdict::Positive),
            "NEUTRAL" => Some(Verdict::Neutral),
            "NEGATIVE" => Some(Verdict::Negative),
            _ => None,
        })
}

/// One request to a stance classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StancePrompt<'a> {
    pub sentence: &'a str,
    pub keyword: &'a str,
    /// 0 for the first ask, 1 for the reprompt after a malformed reply.
    pub attempt: u32,
}

impl StancePrompt<'_> {
    pub fn render(&self) -> String {
        let mut prompt = format!(
            "You will be given a sentence from a cable news transcript and a keyword.\n\
             If \"{kw}\" is not the main subject in the sentence, respond NO.\n\
             Otherwise, return whether the statements are POSITIVE, NEUTRAL, or NEGATIVE towards \"{kw}\".\n\
             Answer with exactly one word.\n\n\
             Keyword: {kw}\nSentence: {s}",
            kw = self.keyword,
            s = self.sentence
        );
        if self.attempt > 0 {
            prompt.push_str(
                "\n\nYour previous answer could not be read. Reply with only one of: NO, POSITIVE, NEUTRAL, NEGATIVE.",
            );
        }
        prompt
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifierError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("classifier configuration error: {0}")]
    Config(String),
}

/// The adapter boundary: one `(sentence, keyword)` prompt in, raw reply out.
pub trait StanceClassifier {
    /// Stable identifier (model name, mock version); part of cache keys.
    fn classifier_id(&self) -> String;
    fn source(&self) -> VerdictSource;
    fn respond(&self, prompt: &StancePrompt<'_>) -> Result<String, ClassifierError>;
}

impl<C: StanceClassifier + ?Sized> StanceClassifier for &C {
    fn classifier_id(&self) -> String {
        (**self).classifier_id()
    }
    fn source(&self) -> VerdictSource {
        (**self).source()
    }
    fn respond(&self, prompt: &StancePrompt<'_>) -> Result<String, ClassifierError> {
        (**self).respond(prompt)
    }
}

/// Outcome of classifying one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub verdict: Verdict,
    pub source: VerdictSource,
    /// Both the first reply and the reprompt were unreadable.
    pub malformed: bool,
    /// Number of `respond` calls made (0 when the keyword is absent).
    pub calls: u32,
}

/// Case-insensitive whole-word search for `keyword` in `sentence`.
pub fn keyword_in_sentence(sentence: &str, keyword: &str) -> bool {
    let hay = sentence.to_lowercase();
    let needle = keyword.trim().to_lowercase();
    if needle.is_empty() {
        return false;
    }
    let mut from = 0;
    while let Some(pos) = hay[from..].find(&needle) {
        let start = from + pos;
        let end = start + needle.len();
        let before_ok = hay[..start].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        let after_ok = hay[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if before_ok && after_ok {
            return true;
        }
        from = start + hay[start..].chars().next().map_or(1, char::len_utf8);
    }
    false
}

/// Classifies one sentence. A sentence that does not contain the keyword
/// is `NotMainSubject` without any call. An unreadable reply is retried
/// once with a stricter prompt, then recorded as `NotMainSubject` with
/// `malformed` set.
pub fn classify_sentence<C: StanceClassifier + ?Sized>(
    sentence: &str,
    keyword: &str,
    classifier: &C,
) -> Result<Classification, ClassifierError> {
    if !keyword_in_sentence(sentence, keyword) {
        return Ok(Classification {
            verdict: Verdict::NotMainSubject,
            source: classifier.source(),
            malformed: false,
            calls: 0,
        });
    }
    for attempt in 0..2 {
        let reply = classifier.respond(&StancePrompt {
            sentence,
            keyword,
            attempt,
        })?;
        if let Some(verdict) = parse_verdict(&reply) {
            return Ok(Classification {
                verdict,
                source: classifier.source(),
                malformed: false,
                calls: attempt + 1,
            });
        }
    }
    Ok(Classification {
        verdict: Verdict::NotMainSubject,
        source: classifier.source(),
        malformed: true,
        calls: 2,
    })
}

/// Averages verdicts for one (transcript, keyword). Returns `None` when no
/// sentence had the keyword as its main subject.
pub fn aggregate_stance<I>(transcript_id: &str, keyword: &str, verdicts: I) -> Option<StanceRecord>
where
    I: IntoIterator<Item = Verdict>,
{
    let (sum, n) = verdicts
        .into_iter()
        .filter_map(Verdict::score)
        .fold((0i64, 0usize), |(s, n), v| (s + i64::from(v), n + 1));
    (n > 0).then(|| StanceRecord {
        transcript_id: transcript_id.to_string(),
        keyword: keyword.to_string(),
        stance: sum as f64 / n as f64,
        n_subject_sentences: n,
    })
}

/// Sentences eligible for a keyword: those the keyword was recognized in
/// plus any sentence containing its canonical text.
pub fn eligible_sentences(transcript: &Transcript, keyword: &Keyword) -> Vec<SentenceRef> {
    let mut refs: BTreeSet<SentenceRef> = keyword.sentence_refs.iter().copied().collect();
    for (r, sentence) in transcript.sentences() {
        if keyword_in_sentence(sentence, &keyword.canonical) {
            refs.insert(r);
        }
    }
    refs.into_iter()
        .filter(|&(st, se)| transcript.sentence(st, se).is_some())
        .collect()
}

/// One (sentence, keyword) classification to perform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StanceJob {
    pub transcript_id: String,
    pub keyword: String,
    pub keyword_rank: usize,
    pub statement_index: usize,
    pub sentence_index: usize,
    pub sentence: String,
}

impl StanceJob {
    fn order_key(&self) -> (&str, usize, usize, usize) {
        (
            &self.transcript_id,
            self.keyword_rank,
            self.statement_index,
            self.sentence_index,
        )
    }
}

/// All jobs for one transcript, in keyword-rank then sentence order.
pub fn transcript_jobs(transcript: &Transcript, assignment: &KeywordAssignment) -> Vec<StanceJob> {
    let mut jobs = Vec::new();
    for (rank, keyword) in assignment.keywords().iter().enumerate() {
        for (st, se) in eligible_sentences(transcript, keyword) {
            let sentence = transcript.sentence(st, se).unwrap_or_default();
            jobs.push(StanceJob {
                transcript_id: transcript.id().to_string(),
                keyword: keyword.canonical.clone(),
                keyword_rank: rank,
                statement_index: st,
                sentence_index: se,
                sentence: sentence.to_string(),
            });
        }
    }
    jobs
}

/// Caps on classification work. `None` means unlimited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Budget {
    pub max_calls: Option<usize>,
    pub max_calls_per_transcript: Option<usize>,
}

/// Jobs dropped by the budget, per transcript.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Truncation {
    pub dropped: BTreeMap<String, usize>,
}

impl Truncation {
    pub fn total(&self) -> usize {
        self.dropped.values().sum()
    }
}

/// Orders jobs by (transcript id, keyword rank, sentence order) and keeps
/// the prefix allowed by the per-transcript and global caps.
pub fn apply_budget(mut jobs: Vec<StanceJob>, budget: Budget) -> (Vec<StanceJob>, Truncation) {
    jobs.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
    let mut per_transcript: BTreeMap<String, usize> = BTreeMap::new();
    let mut truncation = Truncation::default();
    let mut kept = Vec::with_capacity(jobs.len());
    for job in jobs {
        let used = per_transcript.entry(job.transcript_id.clone()).or_insert(0);
        let over_transcript = budget.max_calls_per_transcript.is_some_and(|cap| *used >= cap);
        let over_global = budget.max_calls.is_some_and(|cap| kept.len() >= cap);
        if over_transcript || over_global {
            *truncation.dropped.entry(job.transcript_id).or_insert(0) += 1;
        } else {
            *used += 1;
            kept.push(job);
        }
    }
    (kept, truncation)
}

/// Folds classified jobs into stance records, independent of input order.
/// Records come out sorted by (transcript id, keyword).
pub fn aggregate_jobs<'a, I>(classified: I) -> Vec<StanceRecord>
where
    I: IntoIterator<Item = (&'a StanceJob, Verdict)>,
{
    let mut groups: BTreeMap<(&str, &str), Vec<Verdict>> = BTreeMap::new();
    for (job, verdict) in classified {
        groups
            .entry((job.transcript_id.as_str(), job.keyword.as_str()))
            .or_default()
            .push(verdict);
    }
    groups
        .into_iter()
        .filter_map(|((t, k), verdicts)| aggregate_stance(t, k, verdicts))
        .collect()
}

/// A keyword whose classification failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordFailure {
    pub transcript_id: String,
    pub keyword: String,
    pub error: ClassifierError,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TranscriptStances {
    pub records: Vec<StanceRecord>,
    pub failures: Vec<KeywordFailure>,
    pub malformed: usize,
    pub calls: u64,
}

/// Sequentially classifies every eligible sentence of every keyword of one
/// transcript. A failing keyword is reported and skipped; the rest still
/// produce records.
pub fn score_transcript<C: StanceClassifier + ?Sized>(
    transcript: &Transcript,
    assignment: &KeywordAssignment,
    classifier: &C,
) -> TranscriptStances {
    let jobs = transcript_jobs(transcript, assignment);
    let mut out = TranscriptStances::default();
    let mut classified: Vec<(&StanceJob, Verdict)> = Vec::with_capacity(jobs.len());
    let mut failed: BTreeSet<&str> = BTreeSet::new();
    for job in &jobs {
        if failed.contains(job.keyword.as_str()) {
            continue;
        }
        match classify_sentence(&job.sentence, &job.keyword, classifier) {
            Ok(c) => {
                out.calls += u64::from(c.calls);
                out.malformed += usize::from(c.malformed);
                classified.push((job, c.verdict));
            }
            Err(error) => {
                failed.insert(job.keyword.as_str());
                out.failures.push(KeywordFailure {
                    transcript_id: job.transcript_id.clone(),
                    keyword: job.keyword.clone(),
                    error,
                });
            }
        }
    }
    classified.retain(|(job, _)| !failed.contains(job.keyword.as_str()));
    out.records = aggregate_jobs(classified);
    out
}

/// Mean lexicon sentiment of the sentences mentioning a keyword; the
/// target-agnostic baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentRecord {
    pub transcript_id: String,
    pub keyword: String,
    pub sentiment: f64,
    pub n_sentences: usize,
}

pub fn sentiment_records(
    transcript: &Transcript,
    assignment: &KeywordAssignment,
    lexicon: &Lexicon,
) -> Vec<SentimentRecord> {
    let mut out = Vec::new();
    for keyword in assignment.keywords() {
        let refs = eligible_sentences(transcript, keyword);
        if refs.is_empty() {
            continue;
        }
        let sum: f64 = refs
            .iter()
            .filter_map(|&(st, se)| transcript.sentence(st, se))
            .map(|s| lexicon_sentiment(s, lexicon))
            .sum();
        out.push(SentimentRecord {
            transcript_id: transcript.id().to_string(),
            keyword: keyword.canonical.clone(),
            sentiment: sum / refs.len() as f64,
            n_sentences: refs.len(),
        });
    }
    out.sort_by(|a, b| a.keyword.cmp(&b.keyword));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::{recognize_entities, select_keywords, HeuristicRecognizer};
    use crate::ingest::{parse_transcript, NetworkSet};
    use alloc::vec;
    use core::cell::Cell;

    #[test]
    fn verdict_mapping() {
        assert_eq!(Verdict::Positive.score(), Some(1));
        assert_eq!(Verdict::Neutral.score(), Some(0));
        assert_eq!(Verdict::Negative.score(), Some(-1));
        assert_eq!(Verdict::NotMainSubject.score(), None);
    }

    #[test]
    fn parse_is_case_insensitive_first_token() {
        assert_eq!(parse_verdict("no"), Some(Verdict::NotMainSubject));
        assert_eq!(parse_verdict("  Positive."), Some(Verdict::Positive));
        assert_eq!(parse_verdict("The answer: NEGATIVE"), Some(Verdict::Negative));
        assert_eq!(parse_verdict("neutral, not negative"), Some(Verdict::Neutral));
        assert_eq!(parse_verdict("I cannot tell"), None);
        assert_eq!(parse_verdict("nonpositive"), None);
    }

    #[test]
    fn prompt_carries_instruction_fragments() {
        let p = StancePrompt {
            sentence: "S.",
            keyword: "Trump",
            attempt: 0,
        }
        .render();
        assert!(p.contains("respond NO"));
        assert!(p.contains("the main subject in the sentence"));
        assert!(p.contains("POSITIVE, NEUTRAL, or NEGATIVE towards"));
        let retry = StancePrompt {
            sentence: "S.",
            keyword: "Trump",
            attempt: 1,
        }
        .render();
        assert_ne!(p, retry);
    }

    #[test]
    fn keyword_matching_uses_word_boundaries() {
        assert!(keyword_in_sentence("Trump's team spoke.", "Trump"));
        assert!(keyword_in_sentence("the WHITE HOUSE said", "White House"));
        assert!(!keyword_in_sentence("Trumpet players", "Trump"));
        assert!(!keyword_in_sentence("anything", ""));
    }

    #[test]
    fn mock_positive_example() {
        let c = classify_sentence("Trump is doing a fantastic job.", "Trump", &MockClassifier::new()).unwrap();
        assert_eq!(c.verdict, Verdict::Positive);
        assert_eq!(c.source, VerdictSource::Mock);
    }

    struct Scripted {
        replies: Vec<&'static str>,
        calls: Cell<usize>,
    }

    impl StanceClassifier for Scripted {
        fn classifier_id(&self) -> String {
            "scripted".into()
        }
        fn source(&self) -> VerdictSource {
            VerdictSource::Remote
        }
        fn respond(&self, _: &StancePrompt<'_>) -> Result<String, ClassifierError> {
            let i = self.calls.get();
            self.calls.set(i + 1);
            match self.replies.get(i) {
                Some(&"ERR") => Err(ClassifierError::Transport("down".into())),
                Some(r) => Ok(r.to_string()),
                None => Ok("???".into()),
            }
        }
    }

    fn scripted(replies: Vec<&'static str>) -> Scripted {
        Scripted {
            replies,
            calls: Cell::new(0),
        }
    }

    #[test]
    fn absent_keyword_short_circuits() {
        let c = scripted(vec!["POSITIVE"]);
        let got = classify_sentence("Nothing here.", "Trump", &c).unwrap();
        assert_eq!(got.verdict, Verdict::NotMainSubject);
        assert_eq!(c.calls.get(), 0);
    }

    #[test]
    fn lowercase_no_is_not_main_subject() {
        let got = classify_sentence("Trump spoke.", "Trump", &scripted(vec!["no"])).unwrap();
        assert_eq!(got.verdict, Verdict::NotMainSubject);
        assert!(!got.malformed);
    }

    #[test]
    fn malformed_reply_retries_once_then_omits() {
        let c = scripted(vec!["maybe?", "NEGATIVE"]);
        let got = classify_sentence("Trump spoke.", "Trump", &c).unwrap();
        assert_eq!((got.verdict, got.calls, got.malformed), (Verdict::Negative, 2, false));

        let c = scripted(vec!["maybe?", "dunno"]);
        let got = classify_sentence("Trump spoke.", "Trump", &c).unwrap();
        assert_eq!(
            (got.verdict, got.calls, got.malformed),
            (Verdict::NotMainSubject, 2, true)
        );
    }

    #[test]
    fn aggregation_examples() {
        use Verdict::*;
        let r = aggregate_stance("t", "k", [Positive, Positive, Negative, NotMainSubject]).unwrap();
        assert_eq!(r.stance, 1.0 / 3.0);
        assert_eq!(r.n_subject_sentences, 3);
        assert!(aggregate_stance("t", "k", [NotMainSubject, NotMainSubject]).is_none());
        let r = aggregate_stance("t", "k", [Neutral, Neutral]).unwrap();
        assert_eq!((r.stance, r.n_subject_sentences), (0.0, 2));
    }

    fn job(t: &str, rank: usize, st: usize, se: usize) -> StanceJob {
        StanceJob {
            transcript_id: t.into(),
            keyword: format!("k{rank}"),
            keyword_rank: rank,
            statement_index: st,
            sentence_index: se,
            sentence: String::new(),
        }
    }

    #[test]
    fn budget_truncates_in_canonical_order() {
        let jobs = vec![
            job("b", 0, 0, 0),
            job("a", 1, 0, 0),
            job("a", 0, 1, 0),
            job("a", 0, 0, 2),
            job("b", 1, 0, 0),
        ];
        let (kept, trunc) = apply_budget(
            jobs.clone(),
            Budget {
                max_calls: None,
                max_calls_per_transcript: Some(2),
            },
        );
        let keys: Vec<(String, usize, usize)> = kept
            .iter()
            .map(|j| (j.transcript_id.clone(), j.keyword_rank, j.statement_index))
            .collect();
        assert_eq!(
            keys,
            vec![
                ("a".into(), 0, 0),
                ("a".into(), 0, 1),
                ("b".into(), 0, 0),
                ("b".into(), 1, 0)
            ]
        );
        assert_eq!(trunc.dropped.get("a"), Some(&1));

        let (kept, trunc) = apply_budget(
            jobs,
            Budget {
                max_calls: Some(1),
                max_calls_per_transcript: None,
            },
        );
        assert_eq!(kept.len(), 1);
        assert_eq!(trunc.total(), 4);
    }

    fn transcript(body: &str) -> Transcript {
        let raw = format!("PROGRAM: Show\nNETWORK: FOX\nDATE: 2020-04-01\n\n{body}");
        parse_transcript(&raw, "x", &NetworkSet::default()).unwrap()
    }

    #[test]
    fn score_transcript_with_mock() {
        let t = transcript(
            "HOST: Harmon is doing a fantastic job. Harmon gave a brilliant speech. \
             we talked with Harmon tonight. Harmon made a terrible call.",
        );
        let mentions = recognize_entities(&t, &HeuristicRecognizer::new()).unwrap();
        let assignment = select_keywords(t.id(), &mentions);
        assert_eq!(assignment.keyword_texts().collect::<Vec<_>>(), vec!["Harmon"]);
        let out = score_transcript(&t, &assignment, &MockClassifier::new());
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].n_subject_sentences, 3);
        assert_eq!(out.records[0].stance, 1.0 / 3.0);
        assert_eq!(out.calls, 4);
        assert!(out.failures.is_empty());
    }

    #[test]
    fn failing_keyword_is_reported_not_fatal() {
        let t = transcript("HOST: Harmon spoke. we met Harmon. Harmon left.");
        let mentions = recognize_entities(&t, &HeuristicRecognizer::new()).unwrap();
        let assignment = select_keywords(t.id(), &mentions);
        let out = score_transcript(&t, &assignment, &scripted(vec!["ERR"]));
        assert!(out.records.is_empty());
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].keyword, "Harmon");
    }

    #[test]
    fn sentiment_records_average_sentences() {
        let t = transcript("HOST: Harmon is great. we met Harmon. Harmon is not great.");
        let mentions = recognize_entities(&t, &HeuristicRecognizer::new()).unwrap();
        let assignment = select_keywords(t.id(), &mentions);
        let recs = sentiment_records(&t, &assignment, &Lexicon::bundled());
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].n_sentences, 3);
        assert!(recs[0].sentiment.abs() < 1e-15);
    }
}
