//! Stage runners. Each stage reads the previous stage's files from the
//! output directory and writes its own; see [`crate::formats`] for names.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use newsbias_core::cluster::{align_labels, cluster, spectral_embed, RawAssignments};
use newsbias_core::entity::{
    select_keywords, AliasMap, EntityExtractor, EntityRecognizer, HeuristicRecognizer, KeywordAssignment,
};
use newsbias_core::ingest::{parse_transcript, NetworkSet, Transcript};
use newsbias_core::networks::{
    build_month, MatrixKind, MonthNetworks, NetworkConfig, NetworkError, SimilarityKind, TopicScore, TranscriptKeywords,
};
use newsbias_core::stance::{
    aggregate_jobs, apply_budget, classify_sentence, sentiment_records, transcript_jobs, Budget, ClassifierError,
    Lexicon, MockClassifier, StanceClassifier, StanceJob, Verdict,
};
use newsbias_core::{MonthKey, ProgramId};
use rayon::prelude::*;

use crate::cache::{cache_key, CachedVerdict, StanceCache};
use crate::config::{ClassifierKind, PipelineConfig, RecognizerChoice};
use crate::error::{PipelineError, Result};
use crate::external::ExternalRecognizer;
use crate::formats::{self, *};
use crate::remote::RemoteClassifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Stage {
    Ingest,
    Extract,
    Stance,
    Networks,
    Cluster,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Extract,
        Stage::Stance,
        Stage::Networks,
        Stage::Cluster,
        Stage::Report,
    ];
}

pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    match stage {
        Stage::Ingest => ingest(cfg).map(drop),
        Stage::Extract => extract(cfg).map(drop),
        Stage::Stance => stance(cfg).map(drop),
        Stage::Networks => networks(cfg).map(drop),
        Stage::Cluster => cluster_stage(cfg).map(drop),
        Stage::Report => crate::report::report(cfg),
    }
}

/// Runs every stage in order. A remote classifier's key is checked before
/// anything is written.
pub fn run_all(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.classifier.kind == ClassifierKind::Remote {
        cfg.api_key()?;
    }
    for stage in Stage::ALL {
        log::info!("running {stage:?}");
        run_stage(stage, cfg)?;
    }
    Ok(())
}

fn out(cfg: &PipelineConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn parse_month(s: &str) -> Result<MonthKey> {
    s.parse().map_err(|e| PipelineError::Input(format!("{e}")))
}

// -------------------------------------------------------------- ingest

/// `(source label, path)` of every transcript file. Files inside a
/// directory input are labelled by their path relative to it, so ids do
/// not depend on where the corpus lives.
pub fn discover_inputs(inputs: &[PathBuf]) -> Result<Vec<(String, PathBuf)>> {
    fn walk(root: &Path, dir: &Path, found: &mut Vec<(String, PathBuf)>) -> Result<()> {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| PipelineError::io(dir, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| PipelineError::io(dir, err)))
            .collect::<Result<_>>()?;
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(root, &path, found)?;
            } else if path.extension().is_some_and(|e| e == "txt") {
                let rel = path.strip_prefix(root).unwrap_or(&path);
                let label = rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                found.push((label, path));
            }
        }
        Ok(())
    }
    if inputs.is_empty() {
        return Err(PipelineError::Config("no input paths configured".into()));
    }
    let mut found = Vec::new();
    for input in inputs {
        if input.is_dir() {
            walk(input, input, &mut found)?;
        } else if input.is_file() {
            found.push((input.to_string_lossy().into_owned(), input.clone()));
        } else {
            return Err(PipelineError::io(
                input,
                std::io::Error::new(std::io::ErrorKind::NotFound, "input path does not exist"),
            ));
        }
    }
    Ok(found)
}

pub fn ingest(cfg: &PipelineConfig) -> Result<IngestReport> {
    let files = discover_inputs(&cfg.inputs)?;
    let networks = NetworkSet::new(cfg.networks.iter().cloned());
    let parsed: Vec<(String, Result<Transcript>)> = files
        .par_iter()
        .map(|(label, path)| {
            let result = std::fs::read_to_string(path)
                .map_err(|e| PipelineError::io(path, e))
                .and_then(|raw| {
                    parse_transcript(&raw, label, &networks).map_err(|e| PipelineError::input_at(path, None, e))
                });
            (label.clone(), result)
        })
        .collect();

    let mut report = IngestReport::default();
    let mut by_id: BTreeMap<String, Transcript> = BTreeMap::new();
    for (label, result) in parsed {
        match result {
            Ok(t) => {
                if by_id.contains_key(t.id()) {
                    log::warn!("{label}: duplicate transcript id {}, skipped", t.id());
                    report.skipped.push(SkippedFile {
                        path: label,
                        error: "duplicate transcript".into(),
                    });
                } else {
                    by_id.insert(t.id().to_string(), t);
                }
            }
            Err(e) => {
                log::warn!("skipping {label}: {e}");
                report.skipped.push(SkippedFile {
                    path: label,
                    error: e.to_string(),
                });
            }
        }
    }
    if by_id.is_empty() {
        return Err(PipelineError::Input("no transcript could be parsed".into()));
    }
    let mut transcripts: Vec<Transcript> = by_id.into_values().collect();
    transcripts.sort_by(|a, b| (a.header().air_date, a.id()).cmp(&(b.header().air_date, b.id())));
    for t in &transcripts {
        *report.months.entry(t.month_key().to_string()).or_insert(0) += 1;
    }
    report.parsed = transcripts.len();
    let rows: Vec<TranscriptRow> = transcripts.iter().map(TranscriptRow::from_transcript).collect();
    write_jsonl(&out(cfg, TRANSCRIPTS), &rows)?;
    write_json(&out(cfg, INGEST_REPORT), &report)?;
    log::info!(
        "ingested {} transcripts ({} skipped)",
        report.parsed,
        report.skipped.len()
    );
    Ok(report)
}

/// Transcripts of the selected months, in file order.
pub fn load_transcripts(cfg: &PipelineConfig) -> Result<Vec<Transcript>> {
    let path = out(cfg, TRANSCRIPTS);
    let rows: Vec<TranscriptRow> = read_jsonl(&path)?;
    let mut transcripts = Vec::with_capacity(rows.len());
    for row in rows {
        let t = row
            .to_transcript()
            .map_err(|e| PipelineError::input_at(&path, None, format!("transcript {}: {e}", row.id)))?;
        if cfg.month_selected(t.month_key()) {
            transcripts.push(t);
        }
    }
    Ok(transcripts)
}

// ------------------------------------------------------------- extract

fn load_aliases(cfg: &PipelineConfig) -> Result<AliasMap> {
    match &cfg.alias_map {
        None => Ok(AliasMap::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
            let map: BTreeMap<String, String> = serde_json::from_str(&text)
                .map_err(|e| PipelineError::Config(format!("alias map {}: {e}", path.display())))?;
            Ok(AliasMap::new(map))
        }
    }
}

pub fn extract(cfg: &PipelineConfig) -> Result<ExtractReport> {
    let transcripts = load_transcripts(cfg)?;
    let extractor = EntityExtractor::with_aliases(load_aliases(cfg)?);
    let heuristic = HeuristicRecognizer::new();
    let external = match cfg.recognizer_choice()? {
        RecognizerChoice::Heuristic => None,
        RecognizerChoice::External(argv) => match ExternalRecognizer::spawn(&argv) {
            Ok(r) => Some(r),
            Err(e) if cfg.recognizer_fallback => {
                log::warn!("{e}; using the heuristic recognizer");
                None
            }
            Err(e) => return Err(PipelineError::Config(e.to_string())),
        },
    };
    let recognizer_name = match &external {
        Some(r) => format!("external:{}", r.command()),
        None => "heuristic".to_string(),
    };

    let results: Vec<Result<(KeywordAssignment, bool)>> = transcripts
        .par_iter()
        .map(|t| {
            let primary: &dyn EntityRecognizerSync = match &external {
                Some(r) => r,
                None => &heuristic,
            };
            match extractor.recognize_entities(t, primary) {
                Ok(mentions) => Ok((select_keywords(t.id(), &mentions), false)),
                Err(e) if external.is_some() && cfg.recognizer_fallback => {
                    log::warn!("transcript {}: {e}; falling back to the heuristic", t.id());
                    let mentions = extractor
                        .recognize_entities(t, &heuristic)
                        .map_err(|e| PipelineError::Input(e.to_string()))?;
                    Ok((select_keywords(t.id(), &mentions), true))
                }
                Err(e) => Err(PipelineError::Input(format!("transcript {}: {e}", t.id()))),
            }
        })
        .collect();

    let mut report = ExtractReport {
        transcripts: transcripts.len(),
        recognizer: recognizer_name,
        ..ExtractReport::default()
    };
    let mut rows = Vec::with_capacity(transcripts.len());
    for (t, result) in transcripts.iter().zip(results) {
        let (assignment, fell_back) = result?;
        if fell_back {
            report.fallbacks.push(t.id().to_string());
        }
        if assignment.keywords().is_empty() {
            report.without_keywords += 1;
        }
        rows.push(KeywordRow::new(t, &assignment));
    }
    write_jsonl(&out(cfg, KEYWORDS), &rows)?;
    write_json(&out(cfg, EXTRACT_REPORT), &report)?;
    log::info!(
        "extracted keywords for {} transcripts ({} without keywords)",
        report.transcripts,
        report.without_keywords
    );
    Ok(report)
}

/// Object-safe recognizer usable from worker threads.
trait EntityRecognizerSync: EntityRecognizer + Sync {}
impl<T: EntityRecognizer + Sync> EntityRecognizerSync for T {}

// -------------------------------------------------------------- stance

pub fn build_classifier(cfg: &PipelineConfig) -> Result<Box<dyn StanceClassifier + Send + Sync>> {
    Ok(match cfg.classifier.kind {
        ClassifierKind::Mock => Box::new(MockClassifier::new()),
        ClassifierKind::Remote => Box::new(RemoteClassifier::new(&cfg.classifier, cfg.api_key()?)),
    })
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    verdict: Verdict,
    calls: u32,
    malformed: bool,
}

fn classify_uncached(
    sentence: &str,
    keyword: &str,
    key: &str,
    classifier: &(dyn StanceClassifier + Send + Sync),
    cache: &StanceCache,
) -> Result<std::result::Result<Outcome, ClassifierError>> {
    let c = match classify_sentence(sentence, keyword, classifier) {
        Ok(c) => c,
        Err(e) => return Ok(Err(e)),
    };
    if c.calls > 0 {
        cache.insert(
            key,
            CachedVerdict {
                verdict: c.verdict,
                malformed: c.malformed,
            },
        )?;
    }
    Ok(Ok(Outcome {
        verdict: c.verdict,
        calls: c.calls,
        malformed: c.malformed,
    }))
}

/// Classifies with the configured classifier.
pub fn stance(cfg: &PipelineConfig) -> Result<StanceReport> {
    let classifier = build_classifier(cfg)?;
    stance_with(cfg, classifier.as_ref())
}

/// Classifies with the given classifier; used by `stance` and by tests that
/// substitute their own.
pub fn stance_with(cfg: &PipelineConfig, classifier: &(dyn StanceClassifier + Send + Sync)) -> Result<StanceReport> {
    let transcripts = load_transcripts(cfg)?;
    let keyword_path = out(cfg, KEYWORDS);
    let keyword_rows: Vec<KeywordRow> = read_jsonl(&keyword_path)?;
    let by_id: BTreeMap<&str, &Transcript> = transcripts.iter().map(|t| (t.id(), t)).collect();

    let mut assignments: Vec<(&Transcript, KeywordAssignment)> = Vec::new();
    for row in &keyword_rows {
        if !cfg.month_selected(&row.month_key()?) {
            continue;
        }
        let t = by_id.get(row.transcript_id.as_str()).ok_or_else(|| {
            PipelineError::input_at(&keyword_path, None, format!("unknown transcript {}", row.transcript_id))
        })?;
        assignments.push((t, row.assignment()?));
    }

    let jobs: Vec<StanceJob> = assignments.iter().flat_map(|(t, a)| transcript_jobs(t, a)).collect();
    let total_jobs = jobs.len();
    let (jobs, truncation) = apply_budget(
        jobs,
        Budget {
            max_calls: cfg.budget.max_calls,
            max_calls_per_transcript: cfg.budget.max_calls_per_transcript,
        },
    );
    if truncation.total() > 0 {
        log::warn!("budget dropped {} of {total_jobs} classifications", truncation.total());
    }

    let cache = StanceCache::open(&cfg.cache_file())?;
    let classifier_id = classifier.classifier_id();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.classifier.max_in_flight)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    // Identical (sentence, keyword) pairs are classified once, so counts
    // do not depend on thread scheduling.
    let keys: Vec<String> = jobs
        .iter()
        .map(|j| cache_key(&classifier_id, &j.sentence, &j.keyword))
        .collect();
    let mut pending: BTreeMap<&str, &StanceJob> = BTreeMap::new();
    let mut cached: BTreeMap<&str, CachedVerdict> = BTreeMap::new();
    for (key, job) in keys.iter().zip(&jobs) {
        match cache.get(key) {
            Some(hit) => {
                cached.insert(key, hit);
            }
            None => {
                pending.entry(key).or_insert(job);
            }
        }
    }
    let pending: Vec<(&str, &StanceJob)> = pending.into_iter().collect();
    let fresh: Vec<_> = pool.install(|| {
        pending
            .par_iter()
            .map(|&(key, job)| classify_uncached(&job.sentence, &job.keyword, key, classifier, &cache))
            .collect::<Result<Vec<_>>>()
    })?;
    let fresh: BTreeMap<&str, std::result::Result<Outcome, ClassifierError>> =
        pending.iter().map(|&(k, _)| k).zip(fresh).collect();

    let mut report = StanceReport {
        classifier: classifier_id.clone(),
        jobs: jobs.len(),
        truncated_total: truncation.total(),
        truncated: truncation.dropped.clone(),
        ..StanceReport::default()
    };
    for outcome in fresh.values().flatten() {
        report.classifier_calls += u64::from(outcome.calls);
        report.malformed += usize::from(outcome.malformed);
    }
    let mut failed: BTreeMap<(&str, &str), String> = BTreeMap::new();
    let mut classified = Vec::with_capacity(jobs.len());
    for (job, key) in jobs.iter().zip(&keys) {
        if let Some(hit) = cached.get(key.as_str()) {
            report.cache_hits += 1;
            classified.push((job, hit.verdict));
            continue;
        }
        match &fresh[key.as_str()] {
            Ok(o) => classified.push((job, o.verdict)),
            Err(e) => {
                failed
                    .entry((job.transcript_id.as_str(), job.keyword.as_str()))
                    .or_insert_with(|| e.to_string());
            }
        }
    }
    classified.retain(|(job, _)| !failed.contains_key(&(job.transcript_id.as_str(), job.keyword.as_str())));
    report.failures = failed
        .iter()
        .map(|(&(t, k), e)| FailureRow {
            transcript_id: t.to_string(),
            keyword: k.to_string(),
            error: e.clone(),
        })
        .collect();
    for f in &report.failures {
        log::warn!("transcript {} keyword {:?}: {}", f.transcript_id, f.keyword, f.error);
    }

    let rows: Vec<StanceRow> = aggregate_jobs(classified)
        .into_iter()
        .map(|r| {
            let t = by_id[r.transcript_id.as_str()];
            StanceRow {
                program: t.header().program_name.clone(),
                network: t.header().network.clone(),
                month: t.month_key().to_string(),
                transcript_id: r.transcript_id,
                keyword: r.keyword,
                stance: r.stance,
                n_subject_sentences: r.n_subject_sentences,
            }
        })
        .collect();
    write_jsonl(&out(cfg, STANCES), &rows)?;

    if cfg.sentiment_baseline {
        let lexicon = Lexicon::bundled();
        let mut sentiment: Vec<SentimentRow> = Vec::new();
        for (t, a) in &assignments {
            for r in sentiment_records(t, a, &lexicon) {
                sentiment.push(SentimentRow {
                    transcript_id: r.transcript_id,
                    program: t.header().program_name.clone(),
                    network: t.header().network.clone(),
                    month: t.month_key().to_string(),
                    keyword: r.keyword,
                    sentiment: r.sentiment,
                    n_sentences: r.n_sentences,
                });
            }
        }
        sentiment.sort_by(|a, b| (&a.transcript_id, &a.keyword).cmp(&(&b.transcript_id, &b.keyword)));
        write_jsonl(&out(cfg, SENTIMENT), &sentiment)?;
    }

    write_json(&out(cfg, STANCE_REPORT), &report)?;
    if rows.is_empty() && !report.failures.is_empty() {
        return Err(PipelineError::Classifier(format!(
            "every classification failed; first error: {}",
            report.failures[0].error
        )));
    }
    log::info!(
        "{} stance records from {} jobs: {} classifier calls, {} cache hits, {} malformed",
        rows.len(),
        report.jobs,
        report.classifier_calls,
        report.cache_hits,
        report.malformed
    );
    Ok(report)
}

// ------------------------------------------------------------ networks

pub fn networks(cfg: &PipelineConfig) -> Result<MonthsReport> {
    let keyword_rows: Vec<KeywordRow> = read_jsonl(&out(cfg, KEYWORDS))?;
    let stance_rows: Vec<StanceRow> = read_jsonl(&out(cfg, STANCES))?;
    let sentiment_rows: Option<Vec<SentimentRow>> = if cfg.sentiment_baseline {
        Some(read_jsonl(&out(cfg, SENTIMENT))?)
    } else {
        None
    };

    let mut keywords: BTreeMap<MonthKey, Vec<TranscriptKeywords>> = BTreeMap::new();
    for row in &keyword_rows {
        let month = row.month_key()?;
        if cfg.month_selected(&month) {
            keywords.entry(month.clone()).or_default().push(TranscriptKeywords {
                month,
                program: row.program_id(),
                keywords: row.keywords.iter().map(|k| k.text.clone()).collect(),
            });
        }
    }
    let mut stances: BTreeMap<MonthKey, Vec<TopicScore>> = BTreeMap::new();
    for row in &stance_rows {
        let month = parse_month(&row.month)?;
        stances.entry(month.clone()).or_default().push(TopicScore {
            month,
            program: ProgramId::new(row.network.clone(), row.program.clone()),
            topic: row.keyword.clone(),
            value: row.stance,
        });
    }
    let mut sentiment: BTreeMap<MonthKey, Vec<TopicScore>> = BTreeMap::new();
    for row in sentiment_rows.iter().flatten() {
        let month = parse_month(&row.month)?;
        sentiment.entry(month.clone()).or_default().push(TopicScore {
            month,
            program: ProgramId::new(row.network.clone(), row.program.clone()),
            topic: row.keyword.clone(),
            value: row.sentiment,
        });
    }

    let net_cfg = NetworkConfig {
        tfidf: cfg.tfidf,
        min_transcripts: cfg.min_transcripts,
    };
    let built: Vec<(MonthKey, std::result::Result<MonthNetworks, NetworkError>)> = keywords
        .par_iter()
        .map(|(month, kw)| {
            let st = stances.get(month).map_or(&[][..], Vec::as_slice);
            let se = sentiment_rows
                .as_ref()
                .map(|_| sentiment.get(month).map_or(&[][..], Vec::as_slice));
            (month.clone(), build_month(month, kw, st, se, &net_cfg))
        })
        .collect();

    let mut report = MonthsReport::default();
    for (month, result) in built {
        let m = match result {
            Ok(m) => m,
            Err(NetworkError::EmptyMonth(_)) => {
                log::warn!("{month}: no program has keywords, month skipped");
                report.skipped.push(SkippedMonth {
                    month: month.to_string(),
                    reason: "no program has keywords".into(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        write_month(cfg, &m)?;
        report.months.push(MonthSummary {
            month: month.to_string(),
            programs: m.combined.programs().iter().map(ToString::to_string).collect(),
            topics: m.frequency.topics().len(),
            dropped: m
                .dropped
                .iter()
                .map(|(p, r)| DroppedProgram {
                    program: p.to_string(),
                    reason: r.to_string(),
                })
                .collect(),
            unshared_pairs: m
                .unshared_pairs
                .iter()
                .map(|(a, b)| [a.to_string(), b.to_string()])
                .collect(),
            has_sentiment: m.sentiment_similarity.is_some(),
        });
    }
    if report.months.is_empty() {
        return Err(PipelineError::Input("no month has any keyword-bearing program".into()));
    }
    write_json(&cfg.out_dir.join(NETWORKS_DIR).join(MONTHS_REPORT), &report)?;
    log::info!("built networks for {} months", report.months.len());
    Ok(report)
}

fn write_month(cfg: &PipelineConfig, m: &MonthNetworks) -> Result<()> {
    let dir = month_dir(&cfg.out_dir, &m.month);
    write_triplets(&dir.join(matrix_file::B), &m.frequency)?;
    let c_path = dir.join(matrix_file::C);
    match &m.stance {
        Some(c) => write_triplets(&c_path, c)?,
        None => remove_stale(&c_path)?,
    }
    write_similarity(&dir.join(matrix_file::T), &m.topic)?;
    write_similarity(&dir.join(matrix_file::S), &m.stance_similarity)?;
    write_similarity(&dir.join(matrix_file::P), &m.combined)?;
    let s_path = dir.join(matrix_file::S_SENTIMENT);
    match &m.sentiment_similarity {
        Some(s) => write_similarity(&s_path, s)?,
        None => remove_stale(&s_path)?,
    }
    Ok(())
}

fn remove_stale(path: &Path) -> Result<()> {
    match std::fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(PipelineError::io(path, e)),
        _ => Ok(()),
    }
}

/// All matrices of one month as written by the `networks` stage.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedMonth {
    pub frequency: newsbias_core::networks::ProgramTopicMatrix,
    pub stance: Option<newsbias_core::networks::ProgramTopicMatrix>,
    pub topic: newsbias_core::networks::SimilarityMatrix,
    pub stance_similarity: newsbias_core::networks::SimilarityMatrix,
    pub combined: newsbias_core::networks::SimilarityMatrix,
    pub sentiment_similarity: Option<newsbias_core::networks::SimilarityMatrix>,
}

pub fn load_month(out_dir: &Path, month: &MonthKey) -> Result<LoadedMonth> {
    let dir = month_dir(out_dir, month);
    let c = dir.join(matrix_file::C);
    let s = dir.join(matrix_file::S_SENTIMENT);
    Ok(LoadedMonth {
        frequency: read_triplets(&dir.join(matrix_file::B), month, MatrixKind::Frequency)?,
        stance: if c.exists() {
            Some(read_triplets(&c, month, MatrixKind::MeanStance)?)
        } else {
            None
        },
        topic: read_similarity(&dir.join(matrix_file::T), month, SimilarityKind::Topic)?,
        stance_similarity: read_similarity(&dir.join(matrix_file::S), month, SimilarityKind::Stance)?,
        combined: read_similarity(&dir.join(matrix_file::P), month, SimilarityKind::Combined)?,
        sentiment_similarity: if s.exists() {
            Some(read_similarity(&s, month, SimilarityKind::Sentiment)?)
        } else {
            None
        },
    })
}

// ------------------------------------------------------------- cluster

/// Labels for a clustered month, or why it was skipped.
type MonthOutcome = std::result::Result<BTreeMap<ProgramId, usize>, String>;

pub fn cluster_stage(cfg: &PipelineConfig) -> Result<ClustersFile> {
    let months: MonthsReport = read_json(&cfg.out_dir.join(NETWORKS_DIR).join(MONTHS_REPORT))?;
    let selected: Vec<MonthKey> = months
        .months
        .iter()
        .map(|m| parse_month(&m.month))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|m| cfg.month_selected(m))
        .collect();

    let results: Vec<(MonthKey, Result<MonthOutcome>)> = selected
        .par_iter()
        .map(|month| {
            let dir = month_dir(&cfg.out_dir, month);
            let outcome = read_similarity(&dir.join(matrix_file::P), month, SimilarityKind::Combined).map(|p| {
                if p.len() < cfg.k {
                    return Err(format!("{} programs, fewer than k = {}", p.len(), cfg.k));
                }
                spectral_embed(&p, cfg.k)
                    .and_then(|e| cluster(&e, cfg.k, cfg.seed))
                    .map_err(|e| e.to_string())
            });
            (month.clone(), outcome)
        })
        .collect();

    let mut raw: RawAssignments = BTreeMap::new();
    let mut skipped = Vec::new();
    for (month, outcome) in results {
        match outcome? {
            Ok(labels) => {
                raw.insert(month, labels);
            }
            Err(reason) => {
                log::warn!("{month}: not clustered: {reason}");
                skipped.push(SkippedMonth {
                    month: month.to_string(),
                    reason,
                });
            }
        }
    }
    let timeline = align_labels(&raw, cfg.k)?;
    let file = ClustersFile {
        k: cfg.k,
        seed: cfg.seed,
        months: timeline
            .months
            .iter()
            .map(|m| ClusterMonth {
                month: m.to_string(),
                assignments: timeline.assignments[m]
                    .iter()
                    .map(|(p, &l)| (p.to_string(), l))
                    .collect(),
                ari_vs_network: timeline.ari_by_month.get(m).copied(),
            })
            .collect(),
        skipped,
    };
    write_json(&out(cfg, formats::CLUSTERS), &file)?;
    log::info!("clustered {} months", file.months.len());
    Ok(file)
}

/// Rebuilds the aligned timeline from `clusters.json`.
pub fn timeline_from_file(file: &ClustersFile) -> Result<newsbias_core::cluster::ClusterTimeline> {
    let mut months = Vec::new();
    let mut assignments = BTreeMap::new();
    let mut ari_by_month = BTreeMap::new();
    for m in &file.months {
        let key = parse_month(&m.month)?;
        let labels = m
            .assignments
            .iter()
            .map(|(p, &l)| {
                let id: ProgramId = p.parse().map_err(|e| PipelineError::Input(format!("{e}")))?;
                if l >= file.k {
                    return Err(PipelineError::Input(format!(
                        "{}: label {l} not below k = {}",
                        m.month, file.k
                    )));
                }
                Ok((id, l))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        if let Some(a) = m.ari_vs_network {
            ari_by_month.insert(key.clone(), a);
        }
        assignments.insert(key.clone(), labels);
        months.push(key);
    }
    let unique: BTreeSet<&MonthKey> = months.iter().collect();
    if unique.len() != months.len() {
        return Err(PipelineError::Input("clusters.json lists a month twice".into()));
    }
    months.sort();
    Ok(newsbias_core::cluster::ClusterTimeline {
        k: file.k,
        months,
        assignments,
        ari_by_month,
    })
}
