//! On-disk artifacts exchanged between stages and the helpers that read
//! and write them. Every write goes to a temporary file in the target
//! directory and is renamed into place.
//!
//! Reals are written in Rust's shortest round-trip form, so reading an
//! artifact back yields bit-identical values.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use newsbias_core::entity::{Keyword, KeywordAssignment};
use newsbias_core::ingest::{IngestError, Statement, Transcript, TranscriptHeader};
use newsbias_core::linalg::DenseMatrix;
use newsbias_core::networks::{MatrixKind, ProgramTopicMatrix, SimilarityKind, SimilarityMatrix};
use newsbias_core::{MonthKey, ProgramId};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

pub const TRANSCRIPTS: &str = "transcripts.jsonl";
pub const KEYWORDS: &str = "keywords.jsonl";
pub const STANCES: &str = "stances.jsonl";
pub const SENTIMENT: &str = "sentiment.jsonl";
pub const STANCE_REPORT: &str = "stance_report.json";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const EXTRACT_REPORT: &str = "extract_report.json";
pub const NETWORKS_DIR: &str = "networks";
pub const MONTHS_REPORT: &str = "months.json";
pub const CLUSTERS: &str = "clusters.json";
pub const SANKEY: &str = "sankey.json";
pub const PCA: &str = "pca.csv";
pub const VARIANCE_REPORT: &str = "variance_report.json";
pub const ARI_CSV: &str = "ari_table.csv";
pub const ARI_MARKDOWN: &str = "ari_table.md";

/// File names of the per-month matrices.
pub mod matrix_file {
    pub const B: &str = "B.csv";
    pub const C: &str = "C.csv";
    pub const T: &str = "T.csv";
    pub const S: &str = "S.csv";
    pub const P: &str = "P.csv";
    pub const S_SENTIMENT: &str = "S_sentiment.csv";
}

pub fn month_dir(out: &Path, month: &MonthKey) -> PathBuf {
    out.join(NETWORKS_DIR).join(month.as_str())
}

// ---------------------------------------------------------------- rows

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementRow {
    pub speaker: String,
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRow {
    pub id: String,
    pub program: String,
    pub network: String,
    pub date: NaiveDate,
    pub statements: Vec<StatementRow>,
}

impl TranscriptRow {
    pub fn from_transcript(t: &Transcript) -> Self {
        let h = t.header();
        TranscriptRow {
            id: t.id().to_string(),
            program: h.program_name.clone(),
            network: h.network.clone(),
            date: h.air_date,
            statements: t
                .statements()
                .iter()
                .map(|s| StatementRow {
                    speaker: s.speaker().to_string(),
                    sentences: s.sentences().map(str::to_string).collect(),
                })
                .collect(),
        }
    }

    pub fn to_transcript(&self) -> std::result::Result<Transcript, IngestError> {
        let statements = self
            .statements
            .iter()
            .map(|s| Statement::from_sentences(&s.speaker, &s.sentences))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let header = TranscriptHeader {
            program_name: self.program.clone(),
            network: self.network.clone(),
            air_date: self.date,
        };
        Transcript::new(self.id.clone(), header, statements)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub text: String,
    pub count: usize,
    pub sentences: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordRow {
    pub transcript_id: String,
    pub program: String,
    pub network: String,
    pub month: String,
    pub keywords: Vec<KeywordEntry>,
}

impl KeywordRow {
    pub fn new(t: &Transcript, assignment: &KeywordAssignment) -> Self {
        KeywordRow {
            transcript_id: t.id().to_string(),
            program: t.header().program_name.clone(),
            network: t.header().network.clone(),
            month: t.month_key().to_string(),
            keywords: assignment
                .keywords()
                .iter()
                .map(|k| KeywordEntry {
                    text: k.canonical.clone(),
                    count: k.mention_count,
                    sentences: k.sentence_refs.iter().map(|&(a, b)| [a, b]).collect(),
                })
                .collect(),
        }
    }

    pub fn program_id(&self) -> ProgramId {
        ProgramId::new(self.network.clone(), self.program.clone())
    }

    pub fn month_key(&self) -> Result<MonthKey> {
        self.month.parse().map_err(|e| PipelineError::Input(format!("{e}")))
    }

    /// Rebuilds the validated assignment.
    pub fn assignment(&self) -> Result<KeywordAssignment> {
        let keywords = self
            .keywords
            .iter()
            .map(|k| Keyword {
                canonical: k.text.clone(),
                mention_count: k.count,
                sentence_refs: k.sentences.iter().map(|s| (s[0], s[1])).collect(),
            })
            .collect();
        KeywordAssignment::new(self.transcript_id.clone(), keywords)
            .map_err(|e| PipelineError::Input(format!("transcript {}: {e}", self.transcript_id)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceRow {
    pub transcript_id: String,
    pub program: String,
    pub network: String,
    pub month: String,
    pub keyword: String,
    pub stance: f64,
    pub n_subject_sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentRow {
    pub transcript_id: String,
    pub program: String,
    pub network: String,
    pub month: String,
    pub keyword: String,
    pub sentiment: f64,
    pub n_sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct IngestReport {
    pub parsed: usize,
    pub skipped: Vec<SkippedFile>,
    pub months: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ExtractReport {
    pub transcripts: usize,
    pub without_keywords: usize,
    pub recognizer: String,
    /// Transcripts tagged by the heuristic after the external recognizer failed.
    pub fallbacks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRow {
    pub transcript_id: String,
    pub keyword: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct StanceReport {
    pub classifier: String,
    pub jobs: usize,
    pub classifier_calls: u64,
    pub cache_hits: usize,
    pub malformed: usize,
    pub truncated_total: usize,
    pub truncated: BTreeMap<String, usize>,
    pub failures: Vec<FailureRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedProgram {
    pub program: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthSummary {
    pub month: String,
    pub programs: Vec<String>,
    pub topics: usize,
    pub dropped: Vec<DroppedProgram>,
    pub unshared_pairs: Vec<[String; 2]>,
    pub has_sentiment: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct MonthsReport {
    pub months: Vec<MonthSummary>,
    pub skipped: Vec<SkippedMonth>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedMonth {
    pub month: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMonth {
    pub month: String,
    pub assignments: BTreeMap<String, usize>,
    pub ari_vs_network: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustersFile {
    pub k: usize,
    pub seed: u64,
    pub months: Vec<ClusterMonth>,
    #[serde(default)]
    pub skipped: Vec<SkippedMonth>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SankeyRow {
    pub from_month: String,
    pub to_month: String,
    pub from_cluster: usize,
    pub to_cluster: usize,
    pub programs: Vec<String>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaRow {
    pub program: String,
    pub network: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthVariance {
    pub month: String,
    pub programs: usize,
    pub topic: Option<f64>,
    pub stance: Option<f64>,
    pub combined: Option<f64>,
    pub sentiment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct VarianceReport {
    pub months: Vec<MonthVariance>,
    /// Mean over months where the value is defined.
    pub mean_topic: Option<f64>,
    pub mean_stance: Option<f64>,
    pub mean_combined: Option<f64>,
    pub mean_sentiment: Option<f64>,
}

// ------------------------------------------------------------------ io

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| PipelineError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| PipelineError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| PipelineError::io(path, e))?;
    tmp.persist(path).map_err(|e| PipelineError::io(path, e.error))?;
    Ok(())
}

fn require(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(PipelineError::MissingArtifact(path.to_path_buf()))
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Input(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    require(path)?;
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::input_at(path, Some(e.line()), e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, row).map_err(|e| PipelineError::Input(e.to_string()))?;
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    require(path)?;
    let file = fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| PipelineError::input_at(path, Some(i + 1), e))?);
    }
    Ok(rows)
}

fn csv_bytes(records: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.write_record(r).map_err(|e| PipelineError::Input(e.to_string()))?;
    }
    w.into_inner().map_err(|e| PipelineError::Input(e.to_string()))
}

fn read_csv(path: &Path) -> Result<Vec<Vec<String>>> {
    require(path)?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| PipelineError::input_at(path, None, e))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| PipelineError::input_at(path, None, e))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| PipelineError::input_at(path, Some(line), format!("not a number: {s:?}")))
}

fn parse_program(path: &Path, line: usize, s: &str) -> Result<ProgramId> {
    s.parse().map_err(|e| PipelineError::input_at(path, Some(line), e))
}

/// Sparse `program,topic,value` triplets; absent cells are omitted.
pub fn write_triplets(path: &Path, m: &ProgramTopicMatrix) -> Result<()> {
    let mut records = vec![vec!["program".to_string(), "topic".to_string(), "value".to_string()]];
    for (p, t, v) in m.triplets() {
        records.push(vec![p.to_string(), t.to_string(), v.to_string()]);
    }
    write_atomic(path, &csv_bytes(&records)?)
}

pub fn read_triplets(path: &Path, month: &MonthKey, kind: MatrixKind) -> Result<ProgramTopicMatrix> {
    let rows = read_csv(path)?;
    let mut cells = BTreeMap::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        let [p, t, v] = row.as_slice() else {
            return Err(PipelineError::input_at(
                path,
                Some(i + 1),
                "expected program,topic,value",
            ));
        };
        cells.insert((parse_program(path, i + 1, p)?, t.clone()), parse_f64(path, i + 1, v)?);
    }
    ProgramTopicMatrix::from_cells(month.clone(), kind, cells).map_err(|e| PipelineError::input_at(path, None, e))
}

/// Dense matrix with a header row and a leading program column.
pub fn write_similarity(path: &Path, m: &SimilarityMatrix) -> Result<()> {
    let mut header = vec!["program".to_string()];
    header.extend(m.programs().iter().map(ToString::to_string));
    let mut records = vec![header];
    for (i, p) in m.programs().iter().enumerate() {
        let mut row = vec![p.to_string()];
        row.extend((0..m.len()).map(|j| m.get(i, j).to_string()));
        records.push(row);
    }
    write_atomic(path, &csv_bytes(&records)?)
}

pub fn read_similarity(path: &Path, month: &MonthKey, kind: SimilarityKind) -> Result<SimilarityMatrix> {
    let rows = read_csv(path)?;
    let Some((header, body)) = rows.split_first() else {
        return Err(PipelineError::input_at(path, None, "empty matrix file"));
    };
    let programs = header
        .iter()
        .skip(1)
        .map(|s| parse_program(path, 1, s))
        .collect::<Result<Vec<_>>>()?;
    let n = programs.len();
    if body.len() != n {
        return Err(PipelineError::input_at(
            path,
            None,
            format!("{} rows for {n} programs", body.len()),
        ));
    }
    let mut values = DenseMatrix::zeros(n, n);
    for (i, row) in body.iter().enumerate() {
        if row.len() != n + 1 || parse_program(path, i + 2, &row[0])? != programs[i] {
            return Err(PipelineError::input_at(
                path,
                Some(i + 2),
                "row does not match the header",
            ));
        }
        for j in 0..n {
            values[(i, j)] = parse_f64(path, i + 2, &row[j + 1])?;
        }
    }
    SimilarityMatrix::new(month.clone(), programs, values, kind).map_err(|e| PipelineError::input_at(path, None, e))
}

pub fn write_pca(path: &Path, rows: &[PcaRow]) -> Result<()> {
    let mut records = vec![vec!["program".into(), "network".into(), "x".into(), "y".into()]];
    for r in rows {
        records.push(vec![
            r.program.clone(),
            r.network.clone(),
            r.x.to_string(),
            r.y.to_string(),
        ]);
    }
    write_atomic(path, &csv_bytes(&records)?)
}

pub fn read_pca(path: &Path) -> Result<Vec<PcaRow>> {
    let rows = read_csv(path)?;
    rows.iter()
        .enumerate()
        .skip(1)
        .map(|(i, r)| match r.as_slice() {
            [p, n, x, y] => Ok(PcaRow {
                program: p.clone(),
                network: n.clone(),
                x: parse_f64(path, i + 1, x)?,
                y: parse_f64(path, i + 1, y)?,
            }),
            _ => Err(PipelineError::input_at(
                path,
                Some(i + 1),
                "expected program,network,x,y",
            )),
        })
        .collect()
}

/// Month and ARI columns; months without a score are written empty.
pub fn write_ari_csv(path: &Path, rows: &[(String, Option<f64>)]) -> Result<()> {
    let mut records = vec![vec!["month".to_string(), "ari".to_string()]];
    for (m, a) in rows {
        records.push(vec![m.clone(), a.map(|x| x.to_string()).unwrap_or_default()]);
    }
    write_atomic(path, &csv_bytes(&records)?)
}

pub fn read_ari_csv(path: &Path) -> Result<Vec<(String, Option<f64>)>> {
    let rows = read_csv(path)?;
    rows.iter()
        .enumerate()
        .skip(1)
        .map(|(i, r)| match r.as_slice() {
            [m, a] if a.is_empty() => Ok((m.clone(), None)),
            [m, a] => Ok((m.clone(), Some(parse_f64(path, i + 1, a)?))),
            _ => Err(PipelineError::input_at(path, Some(i + 1), "expected month,ari")),
        })
        .collect()
}
