//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test -p newsbias --test acceptance`.

// The oracles index explicitly so they read like the textbook formulas.
#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use common::{config_for, snapshot, synthetic, Workspace};
use nalgebra::{DMatrix, SymmetricEigen};
use newsbias::config::PipelineConfig;
use newsbias::formats::*;
use newsbias::report::{ari_rows, sankey_rows, variance_report};
use newsbias::stages::{self, load_month, stance_with, timeline_from_file, Stage};
use newsbias::synth::SyntheticSpec;
use newsbias::{run_all, run_stage};
use newsbias_core::cluster::{
    adjusted_rand_index, align_labels, ari_fraction, cluster, matrix_stddev, pca_assignments, sankey_flows,
    spectral_embed, spectral_embed_values, ClusterTimeline, RawAssignments,
};
use newsbias_core::entity::{
    canonicalize, recognize_entities, select_keywords, EntityLabel, EntityMention, HeuristicRecognizer,
    KeywordAssignment, MAX_KEYWORDS, MIN_KEYWORD_SENTENCES,
};
use newsbias_core::ingest::{bucket_by_month, parse_transcript, to_canonical_text, NetworkSet, Transcript};
use newsbias_core::linalg::{normalize_sign, symmetric_eigen, DenseMatrix};
use newsbias_core::networks::{
    build_frequency_matrix, build_month, build_stance_matrix, combine, stance_similarity, stance_similarity_over,
    tfidf_transform, topic_similarity, MatrixKind, NetworkConfig, ProgramTopicMatrix, SimilarityKind, SimilarityMatrix,
    TfIdfVariant, TopicScore, TranscriptKeywords, WeightedMatrix,
};
use newsbias_core::stance::{
    aggregate_jobs, aggregate_stance, classify_sentence, lexicon_sentiment, parse_verdict, ClassifierError, Lexicon,
    MockClassifier, StanceClassifier, StanceJob, StancePrompt, Verdict, VerdictSource,
};
use newsbias_core::{MonthKey, ProgramId};
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type IdfOracle = fn(f64, f64) -> f64;
/// Keyword text, mention count and distinct sentence references.
type FlatKeyword = (String, usize, Vec<(usize, usize)>);

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($arg)+));
        }
    };
}

const TOL: f64 = 1e-8;
const INSTANCES: usize = 128;

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence of the math core", math_oracles),
        ("formula spot-checks", spot_checks),
        ("planted-cluster recovery", planted_recovery),
        ("temporal consistency", temporal_consistency),
        ("stance vs sentiment separation", stance_vs_sentiment),
        ("invariance suite", invariances),
        ("keyword-rule conformance", keyword_rule),
        ("format round-trips", round_trips),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| Err(panic_message(p)));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL criterion {}: {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panicked".to_string())
}

fn month() -> MonthKey {
    "2020-06".parse().unwrap()
}

fn program(i: usize) -> ProgramId {
    ProgramId::new("NET", format!("P{i:02}"))
}

fn topic(j: usize) -> String {
    format!("topic {j:02}")
}

fn networks() -> NetworkSet {
    NetworkSet::new(["CNN", "FOX", "MSNBC"])
}

fn sample_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("sample")
}

// ---------------------------------------------------------------------------
// 1. Oracles

fn math_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2020);
    for _ in 0..INSTANCES {
        check_tfidf_and_cosine(&mut rng)?;
        check_stance_similarity(&mut rng)?;
        check_ari(&mut rng)?;
        check_eigen(&mut rng)?;
        check_spectral(&mut rng)?;
        check_pca(&mut rng)?;
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(elapsed < 60.0, "took {elapsed:.1}s, limit 60s");
    Ok(format!(
        "{INSTANCES} random instances each of tf-idf (3 variants), cosine, stance similarity, ARI, eigen, spectral embedding, PCA"
    ))
}

fn check_tfidf_and_cosine(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.random_range(2..=30);
    let m = rng.random_range(1..=50);
    let mut counts = vec![vec![0u32; m]; n];
    for row in counts.iter_mut() {
        for c in row.iter_mut() {
            if rng.random_bool(0.35) {
                *c = rng.random_range(1..=6);
            }
        }
        if row.iter().all(|&c| c == 0) {
            row[rng.random_range(0..m)] = 1;
        }
    }
    let cells: BTreeMap<(ProgramId, String), f64> = counts
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(move |(j, &c)| ((program(i), topic(j)), f64::from(c)))
        })
        .collect();
    let b = ProgramTopicMatrix::from_cells(month(), MatrixKind::Frequency, cells).map_err(|e| e.to_string())?;
    let variants: [(TfIdfVariant, IdfOracle); 3] = [
        (TfIdfVariant::Smooth, |n, df| ((1.0 + n) / (1.0 + df)).ln() + 1.0),
        (TfIdfVariant::Standard, |n, df| (n / df).ln() + 1.0),
        (TfIdfVariant::TermFrequency, |_, _| 1.0),
    ];
    for (variant, idf) in variants {
        let mut expected = vec![vec![0.0; m]; n];
        for j in 0..m {
            let df = counts.iter().filter(|row| row[j] > 0).count();
            for i in 0..n {
                if counts[i][j] > 0 {
                    expected[i][j] = f64::from(counts[i][j]) * idf(n as f64, df as f64);
                }
            }
        }
        let w = tfidf_transform(&b, variant);
        for i in 0..n {
            for j in 0..m {
                let got = b.topic_index(&topic(j)).map_or(0.0, |tj| w.weights[(i, tj)]);
                ensure!(
                    (got - expected[i][j]).abs() <= TOL,
                    "tf-idf {variant:?} ({i},{j}): {got} vs {}",
                    expected[i][j]
                );
            }
        }
        let t = topic_similarity(&w).map_err(|e| e.to_string())?;
        for a in 0..n {
            for c in 0..n {
                let mut dot = 0.0;
                let mut na = 0.0;
                let mut nc = 0.0;
                for j in 0..m {
                    dot += expected[a][j] * expected[c][j];
                    na += expected[a][j] * expected[a][j];
                    nc += expected[c][j] * expected[c][j];
                }
                let cos = dot / (na.sqrt() * nc.sqrt());
                ensure!(
                    (t.get(a, c) - cos).abs() <= TOL,
                    "cosine ({a},{c}): {} vs {cos}",
                    t.get(a, c)
                );
            }
        }
    }
    Ok(())
}

fn check_stance_similarity(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.random_range(2..=30);
    let m = rng.random_range(1..=50);
    let mut dense: Vec<Vec<Option<f64>>> = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| rng.random_bool(0.5).then(|| rng.random_range(-1.0..=1.0)))
                .collect()
        })
        .collect();
    dense[0][0] = Some(0.25);
    let cells = dense
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(j, v)| v.map(|v| ((program(i), topic(j)), v)))
        })
        .collect();
    let c = ProgramTopicMatrix::from_cells(month(), MatrixKind::MeanStance, cells).map_err(|e| e.to_string())?;
    let programs: Vec<ProgramId> = (0..n).map(program).collect();
    let s = stance_similarity_over(&c, &programs, SimilarityKind::Stance);
    let mut unshared = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let mut total = 0.0;
            let mut shared = 0;
            for t in 0..m {
                if let (Some(x), Some(y)) = (dense[a][t], dense[b][t]) {
                    total += (2.0 - (x - y).abs()) / 2.0;
                    shared += 1;
                }
            }
            let want = if a == b {
                1.0
            } else if shared == 0 {
                if a < b {
                    unshared.push((program(a), program(b)));
                }
                0.0
            } else {
                total / shared as f64
            };
            ensure!(
                (s.matrix.get(a, b) - want).abs() <= TOL,
                "S ({a},{b}): {} vs {want}",
                s.matrix.get(a, b)
            );
        }
    }
    ensure!(s.unshared_pairs == unshared, "unshared pairs differ");
    Ok(())
}

/// Pair-counting ARI as a reduced fraction; `None` when undefined.
fn oracle_ari(a: &[u8], b: &[u8]) -> Option<(i128, i128)> {
    let (mut n11, mut n10, mut n01, mut n00) = (0i128, 0i128, 0i128, 0i128);
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1,
                (true, false) => n10 += 1,
                (false, true) => n01 += 1,
                (false, false) => n00 += 1,
            }
        }
    }
    let num = 2 * (n00 * n11 - n01 * n10);
    let den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if den == 0 {
        return None;
    }
    let (mut x, mut y) = (num.abs(), den.abs());
    while y != 0 {
        (x, y) = (y, x % y);
    }
    let sign = den.signum();
    Some((sign * num / x, sign * den / x))
}

fn check_ari(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.random_range(2..=30);
    let (ka, kb) = (rng.random_range(1..=6u8), rng.random_range(1..=6u8));
    let a: Vec<u8> = (0..n).map(|_| rng.random_range(0..ka)).collect();
    let b: Vec<u8> = (0..n).map(|_| rng.random_range(0..kb)).collect();
    let want = oracle_ari(&a, &b);
    let got = ari_fraction(&a, &b).map_err(|e| e.to_string())?;
    ensure!(got == want, "ARI fraction {got:?} vs {want:?} for {a:?} / {b:?}");
    let value = adjusted_rand_index(&a, &b).map_err(|e| e.to_string())?;
    let want_value = want.map_or(1.0, |(p, q)| p as f64 / q as f64);
    ensure!(value.to_bits() == want_value.to_bits(), "ARI {value} vs {want_value}");
    Ok(())
}

/// nalgebra eigenpairs, descending, with the core's sign convention.
fn oracle_eigen(m: &DenseMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.rows();
    let eig = SymmetricEigen::new(DMatrix::from_fn(n, n, |i, j| m[(i, j)]));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            normalize_sign(&mut v);
            v
        })
        .collect();
    (values, vectors)
}

fn min_gap(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[0] - w[1]).abs())
        .fold(f64::INFINITY, f64::min)
}

fn check_eigen(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.random_range(2..=30);
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let ours = symmetric_eigen(&m).map_err(|e| e.to_string())?;
    let (values, vectors) = oracle_eigen(&m);
    for (x, y) in ours.values.iter().zip(&values) {
        ensure!((x - y).abs() <= TOL, "eigenvalue {x} vs {y} (n={n})");
    }
    for j in 0..n {
        let isolated = (j == 0 || values[j - 1] - values[j] > 1e-4) && (j + 1 == n || values[j] - values[j + 1] > 1e-4);
        if isolated {
            for (x, y) in ours.vector(j).iter().zip(&vectors[j]) {
                ensure!((x - y).abs() <= TOL, "eigenvector {j}: {x} vs {y} (n={n})");
            }
        }
    }
    Ok(())
}

fn check_spectral(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.random_range(3..=30);
    let k = rng.random_range(2..=4usize.min(n));
    let mut p = DenseMatrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random_range(0.0..1.0);
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
    let programs: Vec<ProgramId> = (0..n).map(program).collect();
    let sim =
        SimilarityMatrix::new(month(), programs, p.clone(), SimilarityKind::Combined).map_err(|e| e.to_string())?;
    let embedding = spectral_embed(&sim, k).map_err(|e| e.to_string())?;
    let d: Vec<f64> = (0..n).map(|i| (0..n).map(|j| p[(i, j)]).sum()).collect();
    let l = DenseMatrix::from_fn(n, n, |i, j| p[(i, j)] / (d[i] * d[j]).sqrt());
    let (values, vectors) = oracle_eigen(&l);
    for j in 0..k {
        ensure!(
            (embedding.eigenvalues[j] - values[j]).abs() <= TOL,
            "spectral eigenvalue {j}"
        );
    }
    if min_gap(&values[..(k + 1).min(n)]) > 1e-6 {
        for i in 0..n {
            let row: Vec<f64> = (0..k).map(|j| vectors[j][i]).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            for j in 0..k {
                let want = row[j] / norm;
                ensure!(
                    (embedding.coordinates[(i, j)] - want).abs() <= TOL,
                    "embedding ({i},{j})"
                );
            }
        }
    }
    Ok(())
}

fn timeline_from(labels: &[Vec<Option<usize>>], k: usize) -> ClusterTimeline {
    let months = labels[0].len();
    let mut assignments = BTreeMap::new();
    for m in 0..months {
        let key: MonthKey = format!("2020-{:02}", m + 1).parse().unwrap();
        let row = labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l[m].map(|l| (program(i), l)))
            .collect();
        assignments.insert(key, row);
    }
    ClusterTimeline {
        k,
        months: assignments.keys().cloned().collect(),
        assignments,
        ari_by_month: BTreeMap::new(),
    }
}

fn check_pca(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.random_range(2..=30);
    let months = rng.random_range(2..=4);
    let k = rng.random_range(2..=3);
    let mut labels: Vec<Vec<Option<usize>>> = (0..n)
        .map(|_| {
            (0..months)
                .map(|_| (!rng.random_bool(1.0 / 6.0)).then(|| rng.random_range(0..k)))
                .collect()
        })
        .collect();
    labels[0][0] = Some(0);
    labels[1][0] = Some(1);
    let timeline = timeline_from(&labels, k);
    let programs = timeline.programs();
    let projection = pca_assignments(&timeline, 2).map_err(|e| e.to_string())?;
    let rows = programs.len();
    let d = months * k;
    let mut x = DMatrix::<f64>::zeros(rows, d);
    for (r, p) in programs.iter().enumerate() {
        let i = (0..n).find(|&i| program(i) == *p).unwrap();
        for m in 0..months {
            if let Some(l) = labels[i][m] {
                x[(r, m * k + l)] = 1.0;
            }
        }
    }
    let means = x.row_mean();
    for r in 0..rows {
        for c in 0..d {
            x[(r, c)] -= means[c];
        }
    }
    let cov = x.transpose() * &x / (rows as f64 - 1.0);
    let (values, vectors) = oracle_eigen(&DenseMatrix::from_fn(d, d, |i, j| cov[(i, j)]));
    for c in 0..2 {
        ensure!(
            (projection.explained_variance[c] - values[c].max(0.0)).abs() <= TOL,
            "explained variance {c}: {} vs {}",
            projection.explained_variance[c],
            values[c]
        );
    }
    let y = &x * DMatrix::from_fn(d, 2, |r, c| vectors[c][r]);
    let gaps = [values[0] - values[1], values[1] - values[2]];
    if gaps.iter().all(|&g| g > 1e-6) {
        for r in 0..rows {
            for c in 0..2 {
                ensure!(
                    (projection.coordinates[(r, c)] - y[(r, c)]).abs() <= TOL,
                    "PCA coordinate ({r},{c})"
                );
            }
        }
    } else if gaps[1] > 1e-6 {
        // The leading plane is unique even when its basis is not.
        for a in 0..rows {
            for b in 0..rows {
                let ours: f64 = (0..2)
                    .map(|c| projection.coordinates[(a, c)] * projection.coordinates[(b, c)])
                    .sum();
                let theirs: f64 = (0..2).map(|c| y[(a, c)] * y[(b, c)]).sum();
                ensure!((ours - theirs).abs() <= TOL, "PCA Gram ({a},{b})");
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 2. Worked examples

#[derive(Default)]
struct Examples {
    total: usize,
    failed: Vec<String>,
}

impl Examples {
    fn check(&mut self, name: &str, ok: bool) {
        self.total += 1;
        if !ok {
            self.failed.push(name.to_string());
        }
    }

    fn outcome(self) -> Outcome {
        if self.failed.is_empty() {
            Ok(format!("{} worked examples reproduced", self.total))
        } else {
            Err(format!(
                "{} of {} examples failed: {}",
                self.failed.len(),
                self.total,
                self.failed.join("; ")
            ))
        }
    }
}

/// Counts `respond` calls; replies like the mock unless given a fixed reply.
struct Counting {
    calls: AtomicUsize,
    reply: Option<&'static str>,
}

impl Counting {
    fn new(reply: Option<&'static str>) -> Self {
        Counting {
            calls: AtomicUsize::new(0),
            reply,
        }
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl StanceClassifier for Counting {
    fn classifier_id(&self) -> String {
        "counting-mock".to_string()
    }

    fn source(&self) -> VerdictSource {
        VerdictSource::Mock
    }

    fn respond(&self, prompt: &StancePrompt<'_>) -> Result<String, ClassifierError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(self
            .reply
            .unwrap_or_else(|| MockClassifier::verdict_text(prompt.sentence, prompt.keyword))
            .to_string())
    }
}

fn doc(program: &str, network: &str, date: &str, body: &str) -> String {
    format!("PROGRAM: {program}\nNETWORK: {network}\nDATE: {date}\n\n{body}\n")
}

fn parse(source: &str, date: &str, body: &str) -> Transcript {
    parse_transcript(&doc("Tucker Carlson Tonight", "FOX", date, body), source, &networks()).unwrap()
}

fn mention(canonical: &str, stmt: usize, sent: usize) -> EntityMention {
    EntityMention {
        surface: canonical.to_string(),
        canonical: canonical.to_string(),
        label: EntityLabel::Person,
        transcript_id: "t".to_string(),
        statement_index: stmt,
        sentence_index: sent,
    }
}

fn mentions(canonical: &str, count: usize, sentences: usize) -> Vec<EntityMention> {
    (0..count).map(|i| mention(canonical, 0, i % sentences)).collect()
}

fn similarity(values: &[&[f64]], kind: SimilarityKind) -> SimilarityMatrix {
    let n = values.len();
    let rows: Vec<Vec<f64>> = values.iter().map(|r| r.to_vec()).collect();
    SimilarityMatrix::new(
        month(),
        (0..n).map(program).collect(),
        DenseMatrix::from_rows(&rows).unwrap(),
        kind,
    )
    .unwrap()
}

fn stance_cells(cells: &[(usize, usize, f64)]) -> ProgramTopicMatrix {
    let cells = cells.iter().map(|&(p, t, v)| ((program(p), topic(t)), v)).collect();
    ProgramTopicMatrix::from_cells(month(), MatrixKind::MeanStance, cells).unwrap()
}

fn raw_months(months: &[&[usize]]) -> RawAssignments {
    months
        .iter()
        .enumerate()
        .map(|(m, labels)| {
            let key: MonthKey = format!("2020-{:02}", m + 1).parse().unwrap();
            (key, labels.iter().enumerate().map(|(i, &l)| (program(i), l)).collect())
        })
        .collect()
}

fn aligned(timeline: &ClusterTimeline, m: usize) -> Vec<usize> {
    timeline.assignments[&timeline.months[m]].values().copied().collect()
}

fn spot_checks() -> Outcome {
    let mut ex = Examples::default();
    ingest_examples(&mut ex);
    entity_examples(&mut ex);
    stance_examples(&mut ex);
    network_examples(&mut ex);
    cluster_examples(&mut ex);
    pipeline_examples(&mut ex);
    ex.outcome()
}

fn ingest_examples(ex: &mut Examples) {
    let t = parse(
        "a.txt",
        "2020-04-15",
        "TUCKER CARLSON: Good evening. Welcome to the show.",
    );
    ex.check("DATE header gives the month key", t.month_key().as_str() == "2020-04");
    let st = &t.statements()[0];
    let sentences: Vec<&str> = st.sentences().collect();
    ex.check(
        "one statement, speaker tag, two sentence spans",
        t.statements().len() == 1
            && st.speaker() == "TUCKER CARLSON"
            && st.sentence_spans().len() == 2
            && sentences == ["Good evening.", "Welcome to the show."],
    );
    let t = parse(
        "b.txt",
        "2020-04-15",
        "TUCKER CARLSON: Good evening.\nand welcome back to the show.",
    );
    ex.check(
        "lowercase continuation joins the previous statement",
        t.statements().len() == 1 && t.statements()[0].sentence_spans().len() == 2,
    );

    let dated = |src: &str, date: &str| parse(src, date, "TUCKER CARLSON: Hello there.");
    let buckets = bucket_by_month(vec![
        dated("1", "2020-01-05"),
        dated("2", "2020-01-31"),
        dated("3", "2020-02-01"),
    ]);
    let sizes: Vec<(&str, usize)> = buckets.iter().map(|(m, v)| (m.as_str(), v.len())).collect();
    ex.check("calendar buckets", sizes == [("2020-01", 2), ("2020-02", 1)]);
    ex.check("empty input gives no buckets", bucket_by_month(Vec::new()).is_empty());
    let same_day = bucket_by_month(vec![dated("zzz", "2020-03-03"), dated("aaa", "2020-03-03")]);
    let ids: Vec<&str> = same_day.values().next().unwrap().iter().map(|t| t.id()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    ex.check("same-date transcripts ordered by id", ids == sorted && ids.len() == 2);
}

fn entity_examples(ex: &mut Examples) {
    let found = |body: &str| -> BTreeSet<(String, EntityLabel)> {
        let t = parse("e.txt", "2020-04-15", body);
        recognize_entities(&t, &HeuristicRecognizer::new())
            .unwrap()
            .into_iter()
            .map(|m| (m.canonical, m.label))
            .collect()
    };
    let want: BTreeSet<(String, EntityLabel)> = [
        ("Trump", EntityLabel::Person),
        ("9 PM", EntityLabel::Excluded),
        ("50 percent", EntityLabel::Excluded),
    ]
    .into_iter()
    .map(|(s, l)| (s.to_string(), l))
    .collect();
    ex.check(
        "Trump as PERSON, time and percentage excluded",
        found("ANCHOR: President Trump spoke at 9 PM about 50 percent unemployment.") == want,
    );
    ex.check(
        "no capitalized non-initial tokens, no mentions",
        found("ANCHOR: Weather was calm all day.").is_empty(),
    );
    let t = parse(
        "e.txt",
        "2020-04-15",
        "ANCHOR: Officials in New York City said New York City would reopen.",
    );
    let nyc = recognize_entities(&t, &HeuristicRecognizer::new()).unwrap();
    ex.check(
        "repeated surface merges into one entity with two mentions",
        nyc.len() == 2 && nyc.iter().all(|m| m.canonical == "New York City"),
    );

    let mut all = Vec::new();
    all.extend(mentions("Trump", 12, 8));
    all.extend(mentions("Biden", 7, 5));
    all.extend(mentions("CDC", 3, 3));
    all.extend(mentions("House", 2, 2));
    let kw: Vec<String> = select_keywords("t", &all).keyword_texts().map(str::to_string).collect();
    ex.check("Trump, Biden, CDC kept; House cut", kw == ["Trump", "Biden", "CDC"]);
    let six: Vec<EntityMention> = ["A", "B", "C", "D", "E", "F"]
        .iter()
        .enumerate()
        .flat_map(|(i, n)| mentions(n, 9 - i, 3))
        .collect();
    let kw: Vec<String> = select_keywords("t", &six).keyword_texts().map(str::to_string).collect();
    ex.check("six qualifying entities, five kept", kw == ["A", "B", "C", "D", "E"]);
    let sparse: Vec<EntityMention> = ["A", "B"].iter().flat_map(|n| mentions(n, 6, 2)).collect();
    ex.check(
        "entities in two sentences only, no keywords",
        select_keywords("t", &sparse).keywords().is_empty(),
    );

    ex.check("article stripped", canonicalize("the White House") == "White House");
    ex.check("possessive stripped", canonicalize("Trump's") == "Trump");
    ex.check(
        "whitespace and case normalized",
        canonicalize("  JOE   BIDEN ") == "Joe Biden",
    );
}

fn stance_examples(ex: &mut Examples) {
    let mock = MockClassifier::new();
    let c = classify_sentence("Trump is doing a fantastic job.", "Trump", &mock).unwrap();
    ex.check("mock: fantastic job is POSITIVE", c.verdict == Verdict::Positive);
    let counting = Counting::new(None);
    let c = classify_sentence("The senator spoke about the budget.", "Trump", &counting).unwrap();
    ex.check(
        "absent keyword short-circuits without a call",
        c.verdict == Verdict::NotMainSubject && c.calls == 0 && counting.calls() == 0,
    );
    let lower = Counting::new(Some("no"));
    let c = classify_sentence("Trump spoke today.", "Trump", &lower).unwrap();
    ex.check(
        "lowercase no parses as not the main subject",
        parse_verdict("no") == Some(Verdict::NotMainSubject) && c.verdict == Verdict::NotMainSubject && !c.malformed,
    );

    use Verdict::*;
    let r = aggregate_stance("t", "k", [Positive, Positive, Negative, NotMainSubject]).unwrap();
    ex.check(
        "[P, P, N, NO] averages to 1/3",
        r.stance == 1.0 / 3.0 && r.n_subject_sentences == 3,
    );
    ex.check(
        "all NO emits nothing",
        aggregate_stance("t", "k", [NotMainSubject, NotMainSubject]).is_none(),
    );
    let r = aggregate_stance("t", "k", [Neutral, Neutral]).unwrap();
    ex.check(
        "[Neutral, Neutral] is 0 over two sentences",
        r.stance == 0.0 && r.n_subject_sentences == 2,
    );
    ex.check(
        "verdict mapping +1/0/-1",
        Positive.score() == Some(1)
            && Neutral.score() == Some(0)
            && Negative.score() == Some(-1)
            && NotMainSubject.score().is_none(),
    );

    let lex = Lexicon::new([("great".to_string(), 0.6)].into_iter().collect());
    ex.check(
        "no lexicon tokens scores 0",
        lexicon_sentiment("The meeting is on Tuesday.", &lex) == 0.0,
    );
    let triple = lexicon_sentiment("great great great", &lex);
    ex.check("repeated positive stays below 1", triple > 0.0 && triple < 1.0);
    let single = lexicon_sentiment("great", &lex);
    ex.check(
        "negation flips with equal magnitude",
        lexicon_sentiment("not great", &lex) == -single && single > 0.0,
    );
}

fn network_examples(ex: &mut Examples) {
    let p = ProgramId::new("FOX", "Hannity");
    let records: Vec<TranscriptKeywords> = [vec!["Trump"], vec!["Trump", "Biden"], vec!["Trump"], vec!["CDC"]]
        .into_iter()
        .map(|k| TranscriptKeywords {
            month: month(),
            program: p.clone(),
            keywords: k.into_iter().map(str::to_string).collect(),
        })
        .collect();
    let b = build_frequency_matrix(&month(), &records).unwrap();
    ex.check(
        "keyword in 3 of 4 transcripts counts 3",
        b.lookup(&p, "Trump") == Some(3.0),
    );
    ex.check("unselected topic is absent", b.lookup(&p, "Pelosi").is_none());

    let score = |program: &ProgramId, topic: &str, value: f64| TopicScore {
        month: month(),
        program: program.clone(),
        topic: topic.to_string(),
        value,
    };
    let q = ProgramId::new("CNN", "AC360");
    let c = build_stance_matrix(
        &month(),
        &[
            score(&p, "Trump", 1.0),
            score(&p, "Trump", 0.0),
            score(&q, "Trump", -1.0),
        ],
    )
    .unwrap();
    ex.check("C is the mean of +1 and 0", c.lookup(&p, "Trump") == Some(0.5));
    ex.check("single record -1 stays -1", c.lookup(&q, "Trump") == Some(-1.0));
    ex.check("no records leaves the cell absent", c.lookup(&q, "Biden").is_none());

    ex.check("idf at df = N is exactly 1", TfIdfVariant::Smooth.idf(8, 8) == 1.0);
    let rare = TfIdfVariant::Smooth.idf(8, 1);
    ex.check(
        "idf of 1 in 8 is ln(9/2) + 1",
        rare == (9.0f64 / 2.0).ln() + 1.0 && (rare - 2.504).abs() < 5e-4,
    );
    let mut cells: BTreeMap<(ProgramId, String), f64> = BTreeMap::new();
    cells.insert((program(0), topic(0)), 2.0);
    cells.insert((program(1), topic(1)), 1.0);
    let b = ProgramTopicMatrix::from_cells(month(), MatrixKind::Frequency, cells).unwrap();
    let w = tfidf_transform(&b, TfIdfVariant::Smooth);
    ex.check(
        "zero count gives zero weight",
        w.weights[(0, 1)] == 0.0 && w.weights[(1, 0)] == 0.0,
    );

    let cos = |rows: &[&[f64]]| {
        let n = rows.len();
        let weights = DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        let w = WeightedMatrix {
            month: month(),
            programs: (0..n).map(program).collect(),
            topics: (0..rows[0].len()).map(topic).collect(),
            weights,
        };
        topic_similarity(&w).unwrap().get(0, 1)
    };
    ex.check(
        "identical rows have cosine 1",
        (cos(&[&[3.0, 1.0, 2.0], &[3.0, 1.0, 2.0]]) - 1.0).abs() < 1e-12,
    );
    ex.check(
        "disjoint supports have cosine 0",
        cos(&[&[1.0, 0.0], &[0.0, 4.0]]) == 0.0,
    );
    ex.check(
        "(1,2,0) vs (2,1,0) is 0.8",
        (cos(&[&[1.0, 2.0, 0.0], &[2.0, 1.0, 0.0]]) - 0.8).abs() < 1e-12,
    );

    let s = |cells: &[(usize, usize, f64)]| stance_similarity(&stance_cells(cells)).matrix.get(0, 1);
    ex.check(
        "+1 vs -1 on the shared topic gives 0",
        s(&[(0, 0, 1.0), (1, 0, -1.0)]) == 0.0,
    );
    ex.check(
        "equal stances give 1",
        s(&[(0, 0, 0.5), (1, 0, 0.5), (0, 1, -1.0), (1, 1, -1.0)]) == 1.0,
    );
    ex.check(
        "distances {0, 1} give 0.75",
        s(&[(0, 0, 1.0), (1, 0, 1.0), (0, 1, 1.0), (1, 1, 0.0)]) == 0.75,
    );
    ex.check(
        "S formula is (2 - |a - b|) / 2",
        stance_similarity(&stance_cells(&[(0, 0, 0.2), (1, 0, -0.6)]))
            .matrix
            .get(0, 1)
            == (2.0 - 0.8) / 2.0,
    );

    let p_of = |t: f64, s: f64| {
        let tm = similarity(&[&[1.0, t], &[t, 1.0]], SimilarityKind::Topic);
        let sm = similarity(&[&[1.0, s], &[s, 1.0]], SimilarityKind::Stance);
        combine(&tm, &sm).unwrap().get(0, 1)
    };
    ex.check("T = S = 1 gives P = 1", p_of(1.0, 1.0) == 1.0);
    ex.check(
        "a zero factor gives P = 0",
        p_of(0.0, 0.9) == 0.0 && p_of(0.7, 0.0) == 0.0,
    );
    ex.check("0.8 x 0.75 = 0.6", (p_of(0.8, 0.75) - 0.6).abs() < 1e-12);
}

fn block_matrix(blocks: &[usize]) -> SimilarityMatrix {
    let labels: Vec<usize> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();
    let values = DenseMatrix::from_fn(n, n, |i, j| if labels[i] == labels[j] { 1.0 } else { 0.0 });
    SimilarityMatrix::new(month(), (0..n).map(program).collect(), values, SimilarityKind::Combined).unwrap()
}

fn cluster_examples(ex: &mut Examples) {
    let two = block_matrix(&[3, 3]);
    let e = spectral_embed(&two, 2).unwrap();
    let row = |i: usize| e.coordinates.row(i).to_vec();
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9);
    ex.check(
        "two perfect blocks embed to two distinct points",
        close(&row(0), &row(1)) && close(&row(0), &row(2)) && close(&row(3), &row(5)) && !close(&row(0), &row(3)),
    );
    let labels = cluster(&e, 2, 7).unwrap();
    let l: Vec<usize> = labels.values().copied().collect();
    ex.check(
        "the two triples get different labels",
        l[0] == l[1] && l[1] == l[2] && l[3] == l[4] && l[4] == l[5] && l[0] != l[3],
    );
    ex.check(
        "fixed seed gives identical labels",
        cluster(&e, 2, 7).unwrap() == labels,
    );

    let ones = SimilarityMatrix::new(
        month(),
        (0..4).map(program).collect(),
        DenseMatrix::from_fn(4, 4, |_, _| 1.0),
        SimilarityKind::Combined,
    )
    .unwrap();
    let e1 = spectral_embed(&ones, 2).unwrap();
    ex.check(
        "all-ones P embeds every row to one point",
        (1..4).all(|i| close(e1.coordinates.row(0), e1.coordinates.row(i))),
    );

    let distinct = similarity(
        &[
            &[1.0, 0.2, 0.1, 0.05],
            &[0.2, 1.0, 0.3, 0.1],
            &[0.1, 0.3, 1.0, 0.4],
            &[0.05, 0.1, 0.4, 1.0],
        ],
        SimilarityKind::Combined,
    );
    let own = cluster(&spectral_embed(&distinct, 4).unwrap(), 4, 7).unwrap();
    ex.check(
        "k = N gives every program its own cluster",
        own.values().collect::<BTreeSet<_>>().len() == 4,
    );

    let t = align_labels(&raw_months(&[&[0, 0, 1, 1, 2], &[2, 2, 0, 0, 1]]), 3).unwrap();
    ex.check("permuted relabelling is undone", aligned(&t, 0) == aligned(&t, 1));
    let t = align_labels(&raw_months(&[&[0, 0, 1, 1, 2, 2], &[1, 1, 0, 0, 0, 2]]), 3).unwrap();
    let moved: Vec<usize> = (0..6).filter(|&i| aligned(&t, 0)[i] != aligned(&t, 1)[i]).collect();
    ex.check("a single switching program is the only change", moved == [4]);
    let t = align_labels(&raw_months(&[&[0, 1], &[0, 0]]), 2).unwrap();
    ex.check("tied optima take the smallest permutation", aligned(&t, 1) == [0, 0]);

    let a: Vec<u8> = (0..12).map(|i| (i % 3) as u8).collect();
    let relabelled: Vec<u8> = a.iter().map(|&x| (x + 1) % 3).collect();
    ex.check(
        "identical partitions have ARI 1",
        adjusted_rand_index(&a, &a).unwrap() == 1.0,
    );
    ex.check(
        "label-permuted copy has ARI 1",
        adjusted_rand_index(&a, &relabelled).unwrap() == 1.0,
    );
    ex.check(
        "AABB vs ABAB is -0.5",
        adjusted_rand_index(&['A', 'A', 'B', 'B'], &['A', 'B', 'A', 'B']).unwrap() == -0.5,
    );

    let history = timeline_from(
        &[
            vec![Some(0), Some(0), Some(1)],
            vec![Some(0), Some(0), Some(1)],
            vec![Some(1), Some(1), Some(0)],
            vec![Some(1), Some(0), Some(0)],
        ],
        2,
    );
    let pca = pca_assignments(&history, 2).unwrap();
    ex.check(
        "identical histories project to identical points",
        close(pca.point(0), pca.point(1)),
    );
    ex.check(
        "component variances are ordered",
        pca.explained_variance[0] >= pca.explained_variance[1],
    );

    let flat = similarity(
        &[&[1.0, 0.4, 0.4], &[0.4, 1.0, 0.4], &[0.4, 0.4, 1.0]],
        SimilarityKind::Combined,
    );
    ex.check(
        "equal off-diagonal entries have std-dev 0",
        matrix_stddev(&flat).unwrap() == 0.0,
    );
    let half = similarity(
        &[
            &[1.0, 1.0, 1.0, 0.0],
            &[1.0, 1.0, 0.0, 0.0],
            &[1.0, 0.0, 1.0, 1.0],
            &[0.0, 0.0, 1.0, 1.0],
        ],
        SimilarityKind::Combined,
    );
    ex.check(
        "equal numbers of 0 and 1 have std-dev 0.5",
        matrix_stddev(&half).unwrap() == 0.5,
    );

    let stable = timeline_from(&[vec![Some(0), Some(0)], vec![Some(1), Some(1)]], 2);
    ex.check(
        "stable assignments give diagonal flows only",
        sankey_flows(&stable).iter().all(|f| f.from_cluster == f.to_cluster),
    );
    let moving = timeline_from(
        &[vec![Some(0), Some(1)], vec![Some(0), Some(0)], vec![Some(1), Some(1)]],
        2,
    );
    let off: Vec<_> = sankey_flows(&moving)
        .into_iter()
        .filter(|f| f.from_cluster != f.to_cluster)
        .collect();
    ex.check(
        "one move gives one off-diagonal flow of 1",
        off.len() == 1 && off[0].count == 1 && off[0].programs == [program(0)],
    );
    let absent = timeline_from(&[vec![Some(0), Some(0)], vec![Some(1), None]], 2);
    let total: usize = sankey_flows(&absent).iter().map(|f| f.count).sum();
    ex.check("a program missing next month contributes no flow", total == 1);
}

fn pipeline_examples(ex: &mut Examples) {
    let spec = SyntheticSpec {
        months: 2,
        ..SyntheticSpec::default()
    };
    let ws = synthetic(&spec);
    let files = snapshot(&ws.corpus());
    let transcripts = files.keys().filter(|f| f.ends_with(".txt")).count();
    ex.check(
        "3 x 4 x 2 spec writes 48 transcripts plus truth.json",
        transcripts == 3 * 4 * 2 * spec.transcripts_per_program_month && files.contains_key("truth.json"),
    );
    let again = synthetic(&spec);
    ex.check(
        "same seed gives a byte-identical corpus",
        snapshot(&again.corpus()) == files,
    );
    ex.check(
        "noise 0 stance sentences carry an unambiguous cue",
        planted_sentences_match_mock(&ws),
    );

    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig {
        inputs: vec![sample_corpus()],
        out_dir: tmp.path().join("out"),
        ..PipelineConfig::default()
    };
    cfg.classifier.endpoint = "http://127.0.0.1:9/unreachable".to_string();
    cfg.classifier.api_key_env = "NEWSBIAS_UNSET_KEY_FOR_ACCEPTANCE".to_string();
    let report = [Stage::Ingest, Stage::Extract]
        .into_iter()
        .try_for_each(|s| run_stage(s, &cfg))
        .and_then(|_| stages::stance(&cfg));
    ex.check(
        "mock stance on the sample corpus needs no remote endpoint",
        report.is_ok_and(|r| r.classifier == "mock-v1" && r.classifier_calls > 0 && r.failures.is_empty()),
    );
    let twice = run_stage(Stage::Networks, &cfg).and_then(|_| {
        run_stage(Stage::Cluster, &cfg)?;
        let first = std::fs::read(cfg.out_dir.join(CLUSTERS)).unwrap();
        run_stage(Stage::Cluster, &cfg)?;
        Ok(first == std::fs::read(cfg.out_dir.join(CLUSTERS)).unwrap())
    });
    ex.check("cluster twice is byte-identical", twice.unwrap_or(false));

    let empty = PipelineConfig {
        out_dir: tmp.path().join("empty"),
        ..PipelineConfig::default()
    };
    let err = run_stage(Stage::Report, &empty).unwrap_err();
    ex.check(
        "report without clusters.json names the file and exits 3",
        err.exit_code() == 3 && err.to_string().contains(CLUSTERS),
    );
}

fn planted_sentences_match_mock(ws: &Workspace) -> bool {
    let nets = NetworkSet::new(ws.truth.networks.iter().cloned());
    let mut checked = 0;
    for f in &ws.truth.files {
        let t = parse_transcript(&std::fs::read_to_string(ws.corpus().join(f)).unwrap(), f, &nets).unwrap();
        let polarity = &ws.truth.polarity[&t.header().network];
        for (_, sentence) in t.sentences() {
            let Some(name) = ws.truth.topics.iter().find(|name| sentence.contains(name.as_str())) else {
                continue;
            };
            let want = match polarity[name] {
                1 => "POSITIVE",
                -1 => "NEGATIVE",
                _ => "NEUTRAL",
            };
            if MockClassifier::verdict_text(sentence, name) != want {
                return false;
            }
            checked += 1;
        }
    }
    checked > 0
}

// ---------------------------------------------------------------------------
// 3 and 4. Planted recovery

fn planted_run(noise_rate: f64) -> Result<(Workspace, ClustersFile), String> {
    let ws = synthetic(&SyntheticSpec {
        noise_rate,
        ..SyntheticSpec::default()
    });
    let cfg = ws.config();
    run_all(&cfg).map_err(|e| e.to_string())?;
    let clusters: ClustersFile = read_json(&cfg.out_dir.join(CLUSTERS)).map_err(|e| e.to_string())?;
    ensure!(
        clusters.months.len() == ws.truth.months.len(),
        "only {} of {} months clustered",
        clusters.months.len(),
        ws.truth.months.len()
    );
    Ok((ws, clusters))
}

fn ari_values(clusters: &ClustersFile) -> Vec<f64> {
    clusters
        .months
        .iter()
        .map(|m| m.ari_vs_network.unwrap_or(f64::NAN))
        .collect()
}

fn planted_recovery() -> Outcome {
    let start = Instant::now();
    let (_, noisy) = planted_run(0.1)?;
    let noisy_ari = ari_values(&noisy);
    ensure!(
        noisy_ari.iter().all(|&a| a >= 0.9),
        "noise 0.1: ARI by month {noisy_ari:?}"
    );
    let (_, clean) = planted_run(0.0)?;
    let clean_ari = ari_values(&clean);
    ensure!(
        clean_ari.iter().all(|&a| a == 1.0),
        "noise 0: ARI by month {clean_ari:?}"
    );
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(elapsed < 300.0, "took {elapsed:.1}s, limit 300s");
    Ok(format!(
        "ARI by month {noisy_ari:?} at noise 0.1, {clean_ari:?} at noise 0"
    ))
}

fn temporal_consistency() -> Outcome {
    let mut worst = 0;
    for noise in [0.0, 0.1] {
        let (_, clusters) = planted_run(noise)?;
        let timeline = timeline_from_file(&clusters).map_err(|e| e.to_string())?;
        for pair in timeline.months.windows(2) {
            let (a, b) = (&timeline.assignments[&pair[0]], &timeline.assignments[&pair[1]]);
            let changed = a.iter().filter(|(p, l)| b.get(*p).is_some_and(|m| m != *l)).count();
            ensure!(
                changed <= 1,
                "noise {noise}: {changed} programs changed cluster from {} to {}",
                pair[0],
                pair[1]
            );
            worst = worst.max(changed);
        }
    }
    Ok(format!(
        "at most {worst} program changed aligned cluster between consecutive months"
    ))
}

// ---------------------------------------------------------------------------
// 5. Stance vs sentiment

fn stance_vs_sentiment() -> Outcome {
    let ws = synthetic(&SyntheticSpec {
        n_networks: 2,
        programs_per_network: 4,
        n_topics: 6,
        pool_weight: 1.0,
        polarity: Some(vec![vec![1; 6], vec![-1; 6]]),
        matched_valence: true,
        noise_rate: 0.1,
        ..SyntheticSpec::default()
    });
    let cfg = ws.config();
    for stage in [Stage::Ingest, Stage::Extract, Stage::Stance, Stage::Networks] {
        run_stage(stage, &cfg).map_err(|e| e.to_string())?;
    }
    let report = variance_report(&cfg).map_err(|e| e.to_string())?;
    let sentiment = report
        .mean_sentiment
        .ok_or("no sentiment baseline in the variance report")?;
    let stance = report
        .mean_stance
        .ok_or("no stance similarity in the variance report")?;
    ensure!(stance > 0.05, "stance std-dev {stance} shows no separation");
    ensure!(
        stance >= 2.0 * sentiment,
        "stance std-dev {stance} vs sentiment std-dev {sentiment}"
    );
    Ok(format!("mean std-dev stance {stance:.4}, sentiment {sentiment:.4}"))
}

// ---------------------------------------------------------------------------
// 6. Invariances

/// Labels renumbered by first appearance in program order.
fn partition(labels: &BTreeMap<ProgramId, usize>) -> Vec<usize> {
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    labels
        .values()
        .map(|l| {
            let next = seen.len();
            *seen.entry(*l).or_insert(next)
        })
        .collect()
}

fn noisy_blocks(rng: &mut ChaCha8Rng) -> (SimilarityMatrix, usize) {
    let k = rng.random_range(2..=3);
    let n = rng.random_range(2 * k..=30);
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let mut values = DenseMatrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let base = if labels[i] == labels[j] {
                rng.random_range(0.8..0.95)
            } else {
                rng.random_range(0.0..0.2)
            };
            let v: f64 = base + rng.random_range(-0.05..0.05);
            values[(i, j)] = v.clamp(0.0, 1.0);
            values[(j, i)] = values[(i, j)];
        }
    }
    let sim = SimilarityMatrix::new(month(), (0..n).map(program).collect(), values, SimilarityKind::Combined).unwrap();
    (sim, k)
}

fn invariances() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ws = synthetic(&SyntheticSpec {
        noise_rate: 0.1,
        ..SyntheticSpec::default()
    });
    let cfg = ws.config();
    run_all(&cfg).map_err(|e| e.to_string())?;
    let mut matrices: Vec<(SimilarityMatrix, usize)> = Vec::new();
    for m in &ws.truth.months {
        let loaded = load_month(&cfg.out_dir, &m.parse().unwrap()).map_err(|e| e.to_string())?;
        matrices.push((loaded.combined, cfg.k));
    }
    for _ in 0..40 {
        matrices.push(noisy_blocks(&mut rng));
    }

    let mut permutations = 0;
    let mut scalings = 0;
    for (p, k) in &matrices {
        let base =
            cluster(&spectral_embed(p, *k).map_err(|e| e.to_string())?, *k, cfg.seed).map_err(|e| e.to_string())?;
        for _ in 0..5 {
            let mut perm: Vec<usize> = (0..p.len()).collect();
            perm.shuffle(&mut rng);
            let q = p.permuted(&perm);
            let labels = cluster(&spectral_embed(&q, *k).map_err(|e| e.to_string())?, *k, cfg.seed)
                .map_err(|e| e.to_string())?;
            ensure!(
                partition(&labels) == partition(&base),
                "permuted programs changed the partition in {}",
                p.month()
            );
            permutations += 1;
        }
        for c in [1e-3, 0.5, 2.0, 1e3] {
            let e =
                spectral_embed_values(p.month(), p.programs(), &p.scaled_values(c), *k).map_err(|e| e.to_string())?;
            let labels = cluster(&e, *k, cfg.seed).map_err(|e| e.to_string())?;
            ensure!(
                partition(&labels) == partition(&base),
                "scaling by {c} changed the partition in {}",
                p.month()
            );
            scalings += 1;
        }
    }

    let mut orders = 0;
    for _ in 0..50 {
        let jobs: Vec<(StanceJob, Verdict)> = (0..rng.random_range(1..60))
            .map(|i| {
                let job = StanceJob {
                    transcript_id: format!("t{}", rng.random_range(0..6)),
                    keyword: format!("k{}", rng.random_range(0..4)),
                    keyword_rank: 0,
                    statement_index: i,
                    sentence_index: 0,
                    sentence: String::new(),
                };
                let verdict = [
                    Verdict::Positive,
                    Verdict::Neutral,
                    Verdict::Negative,
                    Verdict::NotMainSubject,
                ][rng.random_range(0..4)];
                (job, verdict)
            })
            .collect();
        let want = aggregate_jobs(jobs.iter().map(|(j, v)| (j, *v)));
        for _ in 0..10 {
            let mut shuffled: Vec<&(StanceJob, Verdict)> = jobs.iter().collect();
            shuffled.shuffle(&mut rng);
            ensure!(
                aggregate_jobs(shuffled.into_iter().map(|(j, v)| (j, *v))) == want,
                "job order changed stance records"
            );
            orders += 1;
        }
    }

    let warm = PipelineConfig {
        out_dir: ws.dir.path().join("warm"),
        ..ws.config()
    };
    run_stage(Stage::Ingest, &warm).map_err(|e| e.to_string())?;
    run_stage(Stage::Extract, &warm).map_err(|e| e.to_string())?;
    let cold = Counting::new(None);
    stance_with(&warm, &cold).map_err(|e| e.to_string())?;
    let first = (
        std::fs::read(warm.out_dir.join(STANCES)).unwrap(),
        std::fs::read(warm.out_dir.join(SENTIMENT)).unwrap(),
    );
    let rerun = Counting::new(None);
    let report = stance_with(&warm, &rerun).map_err(|e| e.to_string())?;
    let second = (
        std::fs::read(warm.out_dir.join(STANCES)).unwrap(),
        std::fs::read(warm.out_dir.join(SENTIMENT)).unwrap(),
    );
    ensure!(cold.calls() > 0, "the cold run made no calls");
    ensure!(
        rerun.calls() == 0 && report.classifier_calls == 0,
        "warm rerun made {} calls",
        rerun.calls()
    );
    ensure!(first == second, "warm rerun changed the stance artifacts");

    Ok(format!(
        "{permutations} permutations, {scalings} scalings, {orders} job orders, warm rerun 0 calls after {} cold",
        cold.calls()
    ))
}

// ---------------------------------------------------------------------------
// 7. Keyword rule

fn mention_multiset() -> impl Strategy<Value = Vec<EntityMention>> {
    let one =
        (0usize..10, 0usize..4, 0usize..5, prop::bool::weighted(0.1)).prop_map(|(entity, stmt, sent, excluded)| {
            EntityMention {
                surface: format!("Entity {entity}"),
                canonical: format!("Entity {entity}"),
                label: if excluded {
                    EntityLabel::Excluded
                } else {
                    EntityLabel::Person
                },
                transcript_id: "t".to_string(),
                statement_index: stmt,
                sentence_index: sent,
            }
        });
    prop::collection::vec(one, 0..80)
}

/// Independent statement of the rule: rank by count then text, keep five,
/// then keep those seen in at least three distinct sentences.
fn oracle_keywords(mentions: &[EntityMention]) -> Vec<FlatKeyword> {
    let mut names: Vec<&str> = mentions
        .iter()
        .filter(|m| m.label != EntityLabel::Excluded)
        .map(|m| m.canonical.as_str())
        .collect();
    names.sort();
    names.dedup();
    let mut ranked: Vec<FlatKeyword> = names
        .into_iter()
        .map(|name| {
            let own: Vec<&EntityMention> = mentions
                .iter()
                .filter(|m| m.canonical == name && m.label != EntityLabel::Excluded)
                .collect();
            let mut refs: Vec<(usize, usize)> = own.iter().map(|m| (m.statement_index, m.sentence_index)).collect();
            refs.sort();
            refs.dedup();
            (name.to_string(), own.len(), refs)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(5).filter(|k| k.2.len() >= 3).collect()
}

fn keyword_rule() -> Outcome {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 1000,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let mut cases = 0usize;
    let counter = AtomicUsize::new(0);
    runner
        .run(&mention_multiset(), |mentions| {
            counter.fetch_add(1, Ordering::Relaxed);
            let got = select_keywords("t", &mentions);
            let keywords = got.keywords();
            prop_assert!(keywords.len() <= MAX_KEYWORDS);
            for k in keywords {
                prop_assert!(k.sentence_refs.len() >= MIN_KEYWORD_SENTENCES);
                prop_assert!(k.sentence_refs.windows(2).all(|w| w[0] < w[1]));
            }
            prop_assert!(KeywordAssignment::new("t".to_string(), keywords.to_vec()).is_ok());
            let flat: Vec<FlatKeyword> = keywords
                .iter()
                .map(|k| (k.canonical.clone(), k.mention_count, k.sentence_refs.clone()))
                .collect();
            prop_assert_eq!(flat, oracle_keywords(&mentions));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    cases += counter.load(Ordering::Relaxed);
    ensure!(cases >= 1000, "only {cases} cases ran");
    Ok(format!(
        "{cases} random mention multisets satisfy the top-5 and 3-sentence rules"
    ))
}

// ---------------------------------------------------------------------------
// 8. Round-trips

fn canonical_round_trip(raw: &str, source: &str, nets: &NetworkSet) -> Result<(), String> {
    let first = parse_transcript(raw, source, nets).map_err(|e| format!("{source}: {e}"))?;
    let text = to_canonical_text(&first);
    let second = parse_transcript(&text, source, nets).map_err(|e| format!("{source} reparse: {e}"))?;
    ensure!(second == first, "{source}: reparsed transcript differs");
    ensure!(
        to_canonical_text(&second) == text,
        "{source}: canonical text is not stable"
    );
    Ok(())
}

fn round_trips() -> Outcome {
    let ws = synthetic(&SyntheticSpec {
        noise_rate: 0.1,
        ..SyntheticSpec::default()
    });
    let nets = NetworkSet::new(ws.truth.networks.iter().cloned());
    let mut documents = 0;
    for f in &ws.truth.files {
        canonical_round_trip(&std::fs::read_to_string(ws.corpus().join(f)).unwrap(), f, &nets)?;
        documents += 1;
    }
    for (rel, bytes) in snapshot(&sample_corpus()) {
        canonical_round_trip(std::str::from_utf8(&bytes).unwrap(), &rel, &networks())?;
        documents += 1;
    }
    let awkward = doc(
        "  The   Late Show ",
        "cnn",
        "2020-11-03",
        "Opening remarks before any speaker.\n\
         MR. O'NEIL: Mr. Smith met Dr. Jones in the U.S. capital. Did José agree?\n\
         and then he left! \"Really.\" Yes.\n\n\
         SEN. ANNE-MARIE DUVAL: Thank you.",
    );
    canonical_round_trip(&awkward, "awkward.txt", &networks())?;
    documents += 1;

    artifact_round_trips(&ws)?;
    Ok(format!(
        "{documents} transcripts round-trip through the canonical format; every stage artifact reloads equal"
    ))
}

fn artifact_round_trips(ws: &Workspace) -> Result<(), String> {
    let cfg = config_for(&ws.corpus(), &ws.out(), &ws.truth);
    let err = |e: newsbias::PipelineError| e.to_string();

    let ingest_report = stages::ingest(&cfg).map_err(err)?;
    ensure!(
        read_json::<IngestReport>(&cfg.out_dir.join(INGEST_REPORT)).map_err(err)? == ingest_report,
        "ingest report"
    );
    let nets = NetworkSet::new(ws.truth.networks.iter().cloned());
    let mut parsed: Vec<Transcript> = ws
        .truth
        .files
        .iter()
        .map(|f| parse_transcript(&std::fs::read_to_string(ws.corpus().join(f)).unwrap(), f, &nets).unwrap())
        .collect();
    parsed.sort_by(|a, b| (a.header().air_date, a.id()).cmp(&(b.header().air_date, b.id())));
    ensure!(
        stages::load_transcripts(&cfg).map_err(err)? == parsed,
        "transcripts.jsonl"
    );

    let extract_report = stages::extract(&cfg).map_err(err)?;
    ensure!(
        read_json::<ExtractReport>(&cfg.out_dir.join(EXTRACT_REPORT)).map_err(err)? == extract_report,
        "extract report"
    );
    let rows: Vec<KeywordRow> = read_jsonl(&cfg.out_dir.join(KEYWORDS)).map_err(err)?;
    for (row, t) in rows.iter().zip(&parsed) {
        let mentions = recognize_entities(t, &HeuristicRecognizer::new()).unwrap();
        ensure!(
            row.assignment().map_err(err)? == select_keywords(t.id(), &mentions),
            "keywords of {}",
            t.id()
        );
    }
    ensure!(rows.len() == parsed.len(), "keywords.jsonl has {} rows", rows.len());

    let stance_report = stages::stance(&cfg).map_err(err)?;
    ensure!(
        read_json::<StanceReport>(&cfg.out_dir.join(STANCE_REPORT)).map_err(err)? == stance_report,
        "stance report"
    );
    let stance_rows: Vec<StanceRow> = read_jsonl(&cfg.out_dir.join(STANCES)).map_err(err)?;
    let sentiment_rows: Vec<SentimentRow> = read_jsonl(&cfg.out_dir.join(SENTIMENT)).map_err(err)?;
    let copy = cfg.out_dir.join("copy.jsonl");
    write_jsonl(&copy, &stance_rows).map_err(err)?;
    ensure!(
        read_jsonl::<StanceRow>(&copy).map_err(err)? == stance_rows,
        "stances.jsonl"
    );
    write_jsonl(&copy, &sentiment_rows).map_err(err)?;
    ensure!(
        read_jsonl::<SentimentRow>(&copy).map_err(err)? == sentiment_rows,
        "sentiment.jsonl"
    );

    let months_report = stages::networks(&cfg).map_err(err)?;
    ensure!(
        read_json::<MonthsReport>(&cfg.out_dir.join(NETWORKS_DIR).join(MONTHS_REPORT)).map_err(err)? == months_report,
        "months report"
    );
    for summary in &months_report.months {
        let month: MonthKey = summary.month.parse().unwrap();
        let kw: Vec<TranscriptKeywords> = rows
            .iter()
            .filter(|r| r.month == summary.month)
            .map(|r| TranscriptKeywords {
                month: month.clone(),
                program: r.program_id(),
                keywords: r.keywords.iter().map(|k| k.text.clone()).collect(),
            })
            .collect();
        let score = |network: &str, program: &str, topic: &str, value: f64| TopicScore {
            month: month.clone(),
            program: ProgramId::new(network, program),
            topic: topic.to_string(),
            value,
        };
        let st: Vec<TopicScore> = stance_rows
            .iter()
            .filter(|r| r.month == summary.month)
            .map(|r| score(&r.network, &r.program, &r.keyword, r.stance))
            .collect();
        let se: Vec<TopicScore> = sentiment_rows
            .iter()
            .filter(|r| r.month == summary.month)
            .map(|r| score(&r.network, &r.program, &r.keyword, r.sentiment))
            .collect();
        let m = build_month(&month, &kw, &st, Some(&se), &NetworkConfig::default()).unwrap();
        let back = load_month(&cfg.out_dir, &month).map_err(err)?;
        ensure!(
            back.frequency == m.frequency && back.stance == m.stance,
            "B or C of {month}"
        );
        ensure!(
            back.topic == m.topic && back.stance_similarity == m.stance_similarity,
            "T or S of {month}"
        );
        ensure!(
            back.combined == m.combined && back.sentiment_similarity == m.sentiment_similarity,
            "P or sentiment S of {month}"
        );
    }

    let clusters = stages::cluster_stage(&cfg).map_err(err)?;
    ensure!(
        read_json::<ClustersFile>(&cfg.out_dir.join(CLUSTERS)).map_err(err)? == clusters,
        "clusters.json"
    );
    run_stage(Stage::Report, &cfg).map_err(err)?;
    let timeline = timeline_from_file(&clusters).map_err(err)?;
    ensure!(
        read_json::<Vec<SankeyRow>>(&cfg.out_dir.join(SANKEY)).map_err(err)? == sankey_rows(&timeline),
        "sankey.json"
    );
    ensure!(
        read_ari_csv(&cfg.out_dir.join(ARI_CSV)).map_err(err)? == ari_rows(&timeline),
        "ari_table.csv"
    );
    ensure!(
        read_json::<VarianceReport>(&cfg.out_dir.join(VARIANCE_REPORT)).map_err(err)?
            == variance_report(&cfg).map_err(err)?,
        "variance_report.json"
    );
    let pca = read_pca(&cfg.out_dir.join(PCA)).map_err(err)?;
    let projection = pca_assignments(&timeline, 2).unwrap();
    ensure!(pca.len() == projection.programs.len(), "pca.csv has {} rows", pca.len());
    for (row, (i, p)) in pca.iter().zip(projection.programs.iter().enumerate()) {
        ensure!(
            row.program == p.program && row.x == projection.point(i)[0] && row.y == projection.point(i)[1],
            "pca.csv row {i}"
        );
    }
    Ok(())
}
