//! Monthly program-topic matrices and program-program similarities.
//!
//! `B` counts how often each topic was a keyword of a program's
//! transcripts, `C` averages the per-transcript stance toward each topic.
//! From these come the topic similarity `T` (cosine over TF-IDF rows), the
//! stance similarity `S` and their entrywise product `P`.
//!
//! `C` is sparse: a program that never discussed a topic has no cell for
//! it, which is different from a mean stance of zero.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::DenseMatrix;
use crate::{MonthKey, ProgramId};

/// Tolerance for the symmetry check run on every similarity matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("month {0} has no records")]
    EmptyMonth(MonthKey),
    #[error("program {0} has an all-zero topic row")]
    DegenerateProgram(ProgramId),
    #[error("similarity matrices cover different months or programs")]
    ProgramSetMismatch,
    #[error("record for month {found} passed to month {expected}")]
    MonthMismatch { expected: MonthKey, found: MonthKey },
    #[error("invalid cell value {value} for ({program}, {topic})")]
    InvalidCell {
        program: ProgramId,
        topic: String,
        value: f64,
    },
    #[error("{kind} similarity violates its invariants: {detail}")]
    InvariantViolation { kind: SimilarityKind, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Frequency,
    MeanStance,
}

/// Sparse program × topic matrix for one month.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramTopicMatrix {
    month: MonthKey,
    programs: Vec<ProgramId>,
    topics: Vec<String>,
    cells: BTreeMap<(usize, usize), f64>,
    kind: MatrixKind,
}

impl ProgramTopicMatrix {
    pub fn month(&self) -> &MonthKey {
        &self.month
    }

    pub fn programs(&self) -> &[ProgramId] {
        &self.programs
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn program_index(&self, program: &ProgramId) -> Option<usize> {
        self.programs.binary_search(program).ok()
    }

    pub fn topic_index(&self, topic: &str) -> Option<usize> {
        self.topics.binary_search_by(|t| t.as_str().cmp(topic)).ok()
    }

    /// Cell value, `None` when absent.
    pub fn get(&self, program: usize, topic: usize) -> Option<f64> {
        self.cells.get(&(program, topic)).copied()
    }

    pub fn lookup(&self, program: &ProgramId, topic: &str) -> Option<f64> {
        self.get(self.program_index(program)?, self.topic_index(topic)?)
    }

    /// Present cells as `(program, topic, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (&ProgramId, &str, f64)> + '_ {
        self.cells
            .iter()
            .map(|(&(p, t), &v)| (&self.programs[p], self.topics[t].as_str(), v))
    }

    /// Present cells of one program row.
    pub fn row(&self, program: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.cells
            .range((program, 0)..(program + 1, 0))
            .map(|(&(_, t), &v)| (t, v))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Copy restricted to `keep` (programs outside the matrix are ignored).
    /// Topics left without any cell are dropped.
    pub fn restrict_programs(&self, keep: &BTreeSet<ProgramId>) -> Self {
        let mut cells = BTreeMap::new();
        for (p, t, v) in self.triplets() {
            if keep.contains(p) {
                cells.insert((p.clone(), String::from(t)), v);
            }
        }
        Self::from_named_cells(self.month.clone(), cells, self.kind)
    }

    /// Rebuilds a matrix from named cells, e.g. after reading it back from
    /// disk. Frequency cells must be non-negative integers, stance cells
    /// must lie in `[-1, 1]`.
    pub fn from_cells(
        month: MonthKey,
        kind: MatrixKind,
        cells: BTreeMap<(ProgramId, String), f64>,
    ) -> Result<Self, NetworkError> {
        for ((program, topic), &value) in &cells {
            let ok = match kind {
                MatrixKind::Frequency => value.is_finite() && value >= 0.0 && libm::trunc(value) == value,
                MatrixKind::MeanStance => value.is_finite() && (-1.0..=1.0).contains(&value),
            };
            if !ok {
                return Err(NetworkError::InvalidCell {
                    program: program.clone(),
                    topic: topic.clone(),
                    value,
                });
            }
        }
        Ok(Self::from_named_cells(month, cells, kind))
    }

    fn from_named_cells(month: MonthKey, named: BTreeMap<(ProgramId, String), f64>, kind: MatrixKind) -> Self {
        let programs: Vec<ProgramId> = named
            .keys()
            .map(|(p, _)| p.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let topics: Vec<String> = named
            .keys()
            .map(|(_, t)| t.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut cells = BTreeMap::new();
        for ((p, t), v) in named {
            let pi = programs.binary_search(&p).expect("program collected above");
            let ti = topics.binary_search(&t).expect("topic collected above");
            cells.insert((pi, ti), v);
        }
        ProgramTopicMatrix {
            month,
            programs,
            topics,
            cells,
            kind,
        }
    }
}

/// Keywords selected for one transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptKeywords {
    pub month: MonthKey,
    pub program: ProgramId,
    pub keywords: Vec<String>,
}

/// A transcript-level score toward one topic (a stance, or a lexicon
/// sentiment for the baseline).
#[derive(Debug, Clone, PartialEq)]
pub struct TopicScore {
    pub month: MonthKey,
    pub program: ProgramId,
    pub topic: String,
    pub value: f64,
}

fn check_month(expected: &MonthKey, found: &MonthKey) -> Result<(), NetworkError> {
    if expected == found {
        Ok(())
    } else {
        Err(NetworkError::MonthMismatch {
            expected: expected.clone(),
            found: found.clone(),
        })
    }
}

/// `B[p, t]` = number of `p`'s transcripts in which `t` was a keyword.
pub fn build_frequency_matrix(
    month: &MonthKey,
    records: &[TranscriptKeywords],
) -> Result<ProgramTopicMatrix, NetworkError> {
    let mut named: BTreeMap<(ProgramId, String), f64> = BTreeMap::new();
    for record in records {
        check_month(month, &record.month)?;
        let distinct: BTreeSet<&String> = record.keywords.iter().collect();
        for topic in distinct {
            *named.entry((record.program.clone(), topic.clone())).or_insert(0.0) += 1.0;
        }
    }
    if named.is_empty() {
        return Err(NetworkError::EmptyMonth(month.clone()));
    }
    Ok(ProgramTopicMatrix::from_named_cells(
        month.clone(),
        named,
        MatrixKind::Frequency,
    ))
}

/// `C[p, t]` = mean score over `p`'s transcripts that scored `t`.
pub fn build_stance_matrix(month: &MonthKey, records: &[TopicScore]) -> Result<ProgramTopicMatrix, NetworkError> {
    let mut sums: BTreeMap<(ProgramId, String), (f64, usize)> = BTreeMap::new();
    for record in records {
        check_month(month, &record.month)?;
        if !(record.value.is_finite() && (-1.0..=1.0).contains(&record.value)) {
            return Err(NetworkError::InvalidCell {
                program: record.program.clone(),
                topic: record.topic.clone(),
                value: record.value,
            });
        }
        let slot = sums
            .entry((record.program.clone(), record.topic.clone()))
            .or_insert((0.0, 0));
        slot.0 += record.value;
        slot.1 += 1;
    }
    if sums.is_empty() {
        return Err(NetworkError::EmptyMonth(month.clone()));
    }
    let named = sums
        .into_iter()
        .map(|(key, (sum, n))| (key, (sum / n as f64).clamp(-1.0, 1.0)))
        .collect();
    Ok(ProgramTopicMatrix::from_named_cells(
        month.clone(),
        named,
        MatrixKind::MeanStance,
    ))
}

/// Inverse-document-frequency variant used by [`tfidf_transform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TfIdfVariant {
    /// `ln((1 + N) / (1 + df)) + 1`
    #[default]
    Smooth,
    /// `ln(N / df) + 1`
    Standard,
    /// Raw counts, no idf weighting.
    TermFrequency,
}

impl TfIdfVariant {
    pub fn idf(self, n_programs: usize, df: usize) -> f64 {
        let n = n_programs as f64;
        let df = df as f64;
        match self {
            TfIdfVariant::Smooth => libm::log((1.0 + n) / (1.0 + df)) + 1.0,
            TfIdfVariant::Standard => libm::log(n / df) + 1.0,
            TfIdfVariant::TermFrequency => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TfIdfVariant::Smooth => "smooth",
            TfIdfVariant::Standard => "standard",
            TfIdfVariant::TermFrequency => "tf",
        }
    }
}

impl core::str::FromStr for TfIdfVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "smooth" => Ok(TfIdfVariant::Smooth),
            "standard" => Ok(TfIdfVariant::Standard),
            "tf" => Ok(TfIdfVariant::TermFrequency),
            other => Err(alloc::format!(
                "unknown tf-idf variant `{other}` (expected smooth, standard or tf)"
            )),
        }
    }
}

/// Dense TF-IDF weights with the program and topic orderings of `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMatrix {
    pub month: MonthKey,
    pub programs: Vec<ProgramId>,
    pub topics: Vec<String>,
    pub weights: DenseMatrix,
}

pub fn tfidf_transform(b: &ProgramTopicMatrix, variant: TfIdfVariant) -> WeightedMatrix {
    let n = b.programs().len();
    let mut df = alloc::vec![0usize; b.topics().len()];
    for (&(_, t), &v) in &b.cells {
        if v >= 1.0 {
            df[t] += 1;
        }
    }
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { variant.idf(n, d) })
        .collect();
    let mut weights = DenseMatrix::zeros(n, b.topics().len());
    for (&(p, t), &v) in &b.cells {
        weights[(p, t)] = v * idf[t];
    }
    WeightedMatrix {
        month: b.month().clone(),
        programs: b.programs().to_vec(),
        topics: b.topics().to_vec(),
        weights,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    Topic,
    Stance,
    Combined,
    /// Stance similarity formula applied to lexicon sentiment scores.
    Sentiment,
}

impl SimilarityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SimilarityKind::Topic => "topic",
            SimilarityKind::Stance => "stance",
            SimilarityKind::Combined => "combined",
            SimilarityKind::Sentiment => "sentiment",
        }
    }
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Symmetric program × program similarity with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    month: MonthKey,
    programs: Vec<ProgramId>,
    values: DenseMatrix,
    kind: SimilarityKind,
}

impl SimilarityMatrix {
    /// Validating constructor: square, matching program count, symmetric
    /// within [`SYMMETRY_TOLERANCE`], finite entries in `[0, 1]`.
    pub fn new(
        month: MonthKey,
        programs: Vec<ProgramId>,
        values: DenseMatrix,
        kind: SimilarityKind,
    ) -> Result<Self, NetworkError> {
        let fail = |detail: String| Err(NetworkError::InvariantViolation { kind, detail });
        if !values.is_square() || values.rows() != programs.len() {
            return fail(alloc::format!(
                "{}x{} values for {} programs",
                values.rows(),
                values.cols(),
                programs.len()
            ));
        }
        if let Some(x) = values
            .as_slice()
            .iter()
            .find(|x| !(x.is_finite() && (0.0..=1.0).contains(*x)))
        {
            return fail(alloc::format!("entry {x} outside [0, 1]"));
        }
        let asym = values.max_asymmetry();
        if asym > SYMMETRY_TOLERANCE {
            return fail(alloc::format!("asymmetry {asym:e}"));
        }
        Ok(SimilarityMatrix {
            month,
            programs,
            values,
            kind,
        })
    }

    pub fn month(&self) -> &MonthKey {
        &self.month
    }

    pub fn programs(&self) -> &[ProgramId] {
        &self.programs
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Same matrix with every entry multiplied by `c > 0`, bypassing the
    /// `[0, 1]` bound. Only useful for scale-robustness checks.
    pub fn scaled_values(&self, c: f64) -> DenseMatrix {
        self.values.map(|x| x * c)
    }

    /// Same similarities with programs reordered so that new index `i`
    /// holds old program `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        SimilarityMatrix {
            month: self.month.clone(),
            programs: perm.iter().map(|&i| self.programs[i].clone()).collect(),
            values: self.values.permuted(perm),
            kind: self.kind,
        }
    }
}

/// `T[p1, p2]` = cosine of the two weight rows, diagonal exactly 1.
pub fn topic_similarity(w: &WeightedMatrix) -> Result<SimilarityMatrix, NetworkError> {
    let n = w.programs.len();
    let norms: Vec<f64> = (0..n)
        .map(|i| libm::sqrt(w.weights.row(i).iter().map(|x| x * x).sum()))
        .collect();
    if let Some(i) = norms.iter().position(|&x| x == 0.0) {
        return Err(NetworkError::DegenerateProgram(w.programs[i].clone()));
    }
    let mut values = DenseMatrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dot: f64 = w.weights.row(i).iter().zip(w.weights.row(j)).map(|(a, b)| a * b).sum();
            let cos = (dot / (norms[i] * norms[j])).clamp(0.0, 1.0);
            values[(i, j)] = cos;
            values[(j, i)] = cos;
        }
    }
    SimilarityMatrix::new(w.month.clone(), w.programs.clone(), values, SimilarityKind::Topic)
}

/// Stance similarity together with the pairs that shared no topic.
#[derive(Debug, Clone, PartialEq)]
pub struct StanceSimilarity {
    pub matrix: SimilarityMatrix,
    pub unshared_pairs: Vec<(ProgramId, ProgramId)>,
}

/// Per-topic agreement `(2 - |a - b|) / 2`.
pub fn stance_agreement(a: f64, b: f64) -> f64 {
    (2.0 - libm::fabs(a - b)) / 2.0
}

/// `S` over the programs of `c`.
pub fn stance_similarity(c: &ProgramTopicMatrix) -> StanceSimilarity {
    stance_similarity_over(c, c.programs(), SimilarityKind::Stance)
}

/// `S` over an explicit program ordering; programs missing from `c` share
/// no topic with anyone. `kind` is `Stance` or `Sentiment`.
pub fn stance_similarity_over(
    c: &ProgramTopicMatrix,
    programs: &[ProgramId],
    kind: SimilarityKind,
) -> StanceSimilarity {
    let rows: Vec<BTreeMap<usize, f64>> = programs
        .iter()
        .map(|p| c.program_index(p).map(|i| c.row(i).collect()).unwrap_or_default())
        .collect();
    let n = programs.len();
    let mut values = DenseMatrix::identity(n);
    let mut unshared_pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut sum = 0.0;
            let mut shared = 0usize;
            for (t, a) in &rows[i] {
                if let Some(b) = rows[j].get(t) {
                    sum += stance_agreement(*a, *b);
                    shared += 1;
                }
            }
            let s = if shared == 0 {
                unshared_pairs.push((programs[i].clone(), programs[j].clone()));
                0.0
            } else {
                (sum / shared as f64).clamp(0.0, 1.0)
            };
            values[(i, j)] = s;
            values[(j, i)] = s;
        }
    }
    let matrix = SimilarityMatrix::new(c.month().clone(), programs.to_vec(), values, kind)
        .expect("agreement values are symmetric and lie in [0, 1]");
    StanceSimilarity { matrix, unshared_pairs }
}

/// `P = T ⊙ S`.
pub fn combine(t: &SimilarityMatrix, s: &SimilarityMatrix) -> Result<SimilarityMatrix, NetworkError> {
    if t.month != s.month || t.programs != s.programs {
        return Err(NetworkError::ProgramSetMismatch);
    }
    let n = t.len();
    let values = DenseMatrix::from_fn(n, n, |i, j| t.values[(i, j)] * s.values[(i, j)]);
    SimilarityMatrix::new(t.month.clone(), t.programs.clone(), values, SimilarityKind::Combined)
}

/// Why a program was left out of a month's matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DropReason {
    NoKeywords,
    TooFewTranscripts { found: usize, required: usize },
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::NoKeywords => f.write_str("no keyword-bearing transcripts"),
            DropReason::TooFewTranscripts { found, required } => {
                write!(f, "{found} transcripts, fewer than the minimum {required}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub tfidf: TfIdfVariant,
    pub min_transcripts: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            tfidf: TfIdfVariant::Smooth,
            min_transcripts: 1,
        }
    }
}

/// Everything derived for one month.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthNetworks {
    pub month: MonthKey,
    pub frequency: ProgramTopicMatrix,
    pub stance: Option<ProgramTopicMatrix>,
    pub topic: SimilarityMatrix,
    pub stance_similarity: SimilarityMatrix,
    pub combined: SimilarityMatrix,
    pub sentiment_similarity: Option<SimilarityMatrix>,
    pub dropped: Vec<(ProgramId, DropReason)>,
    pub unshared_pairs: Vec<(ProgramId, ProgramId)>,
}

/// Builds `B`, `C`, `T`, `S`, `P` (and the sentiment baseline when
/// `sentiment` is given) for one month.
///
/// `keywords` must hold one entry per transcript of the month, including
/// transcripts whose keyword list is empty, so that the per-program
/// transcript threshold can be enforced.
pub fn build_month(
    month: &MonthKey,
    keywords: &[TranscriptKeywords],
    stances: &[TopicScore],
    sentiment: Option<&[TopicScore]>,
    config: &NetworkConfig,
) -> Result<MonthNetworks, NetworkError> {
    let mut transcripts: BTreeMap<&ProgramId, (usize, usize)> = BTreeMap::new();
    for record in keywords {
        check_month(month, &record.month)?;
        let slot = transcripts.entry(&record.program).or_insert((0, 0));
        slot.0 += 1;
        if !record.keywords.is_empty() {
            slot.1 += 1;
        }
    }
    let mut dropped = Vec::new();
    let mut keep = BTreeSet::new();
    for (program, (total, with_keywords)) in transcripts {
        if total < config.min_transcripts {
            dropped.push((
                program.clone(),
                DropReason::TooFewTranscripts {
                    found: total,
                    required: config.min_transcripts,
                },
            ));
        } else if with_keywords == 0 {
            dropped.push((program.clone(), DropReason::NoKeywords));
        } else {
            keep.insert(program.clone());
        }
    }
    let kept: Vec<TranscriptKeywords> = keywords.iter().filter(|r| keep.contains(&r.program)).cloned().collect();
    let frequency = build_frequency_matrix(month, &kept)?;
    let weighted = tfidf_transform(&frequency, config.tfidf);
    let topic = topic_similarity(&weighted)?;

    let kept_scores = |scores: &[TopicScore]| -> Vec<TopicScore> {
        scores.iter().filter(|r| keep.contains(&r.program)).cloned().collect()
    };
    let stance = match build_stance_matrix(month, &kept_scores(stances)) {
        Ok(c) => Some(c),
        Err(NetworkError::EmptyMonth(_)) => None,
        Err(e) => return Err(e),
    };
    let empty = ProgramTopicMatrix {
        month: month.clone(),
        programs: Vec::new(),
        topics: Vec::new(),
        cells: BTreeMap::new(),
        kind: MatrixKind::MeanStance,
    };
    let s = stance_similarity_over(
        stance.as_ref().unwrap_or(&empty),
        topic.programs(),
        SimilarityKind::Stance,
    );
    let combined = combine(&topic, &s.matrix)?;

    let sentiment_similarity = match sentiment {
        None => None,
        Some(scores) => {
            let c = match build_stance_matrix(month, &kept_scores(scores)) {
                Ok(c) => c,
                Err(NetworkError::EmptyMonth(_)) => empty.clone(),
                Err(e) => return Err(e),
            };
            Some(stance_similarity_over(&c, topic.programs(), SimilarityKind::Sentiment).matrix)
        }
    };

    Ok(MonthNetworks {
        month: month.clone(),
        frequency,
        stance,
        topic,
        stance_similarity: s.matrix,
        combined,
        sentiment_similarity,
        dropped,
        unshared_pairs: s.unshared_pairs,
    })
}
