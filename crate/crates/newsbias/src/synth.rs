//! Synthetic corpora with planted network structure.
//!
//! Every program belongs to one network. Each network over-samples its own
//! pool of topics and talks about each topic with a fixed polarity, phrased
//! with the mock classifier's cue words so the offline pipeline can recover
//! it. `truth.json` records what was planted.
//!
//! With `matched_valence`, every stance sentence carries one positive and
//! one negative cue, drawn independently from two sets with mirrored
//! lexicon weights. Only the cue nearest the topic decides the stance, so
//! both polarities carry the same valence mass and a target-agnostic
//! sentiment score sees only noise.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Months, NaiveDate};
use newsbias_core::MonthKey;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::formats::{write_atomic, write_json};

pub const TRUTH_FILE: &str = "truth.json";

const NETWORK_LABELS: &[&str] = &["CNN", "FOX", "MSNBC"];

const PROGRAM_NAMES: &[&str] = &[
    "Morning Desk",
    "Evening Report",
    "Prime Time",
    "Late Edition",
    "Weekend Review",
    "Sunday Forum",
];

const NAMES: &[&str] = &[
    "Harlan Voss",
    "Marta Keller",
    "Dale Pruitt",
    "Nora Whitfield",
    "Owen Castillo",
    "Greta Lindqvist",
    "Victor Alvarado",
    "Lena Hargrove",
    "Simon Achebe",
    "Irene Novak",
    "Calvin Brandt",
    "Rosa Delgado",
    "Miles Fairbanks",
    "Tessa Moreau",
    "Ezra Quinlan",
    "Hazel Okafor",
    "Boris Lundgren",
    "Clara Ibsen",
];

/// Opposite cues of equal lexicon weight.
const CUE_PAIRS: &[(&str, &str)] = &[
    ("fantastic", "terrible"),
    ("excellent", "disastrous"),
    ("brilliant", "awful"),
    ("wonderful", "horrible"),
];

/// Mirrored lexicon weights: 0.7, 0.5 and 0.4 on each side.
const MATCHED_POSITIVE: &[&str] = &["fantastic", "successful", "strong"];
const MATCHED_NEGATIVE: &[&str] = &["terrible", "incompetent", "weak"];

const NEUTRAL_ENDINGS: &[&str] = &[
    "spoke with reporters on the campaign trail",
    "met with local officials this week",
    "released a statement about the schedule",
    "answered questions at an event",
];

const FILLERS: &[&str] = &[
    "We will be right back after this short break.",
    "Thanks for joining us tonight.",
    "Let us take a look at the weather across the region.",
    "More on that story later in the hour.",
    "Stay with us for the rest of the program.",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_networks: usize,
    pub programs_per_network: usize,
    /// `YYYY-MM`.
    pub first_month: String,
    pub months: usize,
    pub transcripts_per_program_month: usize,
    /// Topic `j` belongs to the pool of network `j % n_networks`.
    pub n_topics: usize,
    pub topics_per_transcript: usize,
    pub sentences_per_topic: usize,
    /// Sampling weight of a network's own topics; other topics weigh 1.
    pub pool_weight: f64,
    /// `polarity[network][topic]` in {-1, 0, 1}. Absent means
    /// `[1, -1, 0][(network + topic) % 3]`.
    pub polarity: Option<Vec<Vec<i8>>>,
    /// Probability that a stance sentence takes a uniformly drawn polarity.
    pub noise_rate: f64,
    pub matched_valence: bool,
    pub fillers_per_transcript: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_networks: 3,
            programs_per_network: 4,
            first_month: "2020-01".to_string(),
            months: 3,
            transcripts_per_program_month: 2,
            n_topics: 6,
            topics_per_transcript: 4,
            sentences_per_topic: 4,
            pool_weight: 3.0,
            polarity: None,
            noise_rate: 0.0,
            matched_valence: false,
            fillers_per_transcript: 2,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedProgram {
    pub program: String,
    pub network: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub networks: Vec<String>,
    pub programs: Vec<PlantedProgram>,
    pub months: Vec<String>,
    pub topics: Vec<String>,
    /// network -> topic -> planted polarity
    pub polarity: BTreeMap<String, BTreeMap<String, i8>>,
    pub noise_rate: f64,
    pub matched_valence: bool,
    pub files: Vec<String>,
}

fn spec_error(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(format!("synthetic spec: {}", msg.into()))
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_networks == 0 || self.programs_per_network == 0 || self.months == 0 {
            return Err(spec_error("networks, programs and months must be positive"));
        }
        if self.first_month.parse::<MonthKey>().is_err() {
            return Err(spec_error(format!("first_month {:?} is not YYYY-MM", self.first_month)));
        }
        if self.transcripts_per_program_month == 0 {
            return Err(spec_error("transcripts_per_program_month must be positive"));
        }
        if self.n_topics == 0 || self.n_topics > NAMES.len() {
            return Err(spec_error(format!("n_topics must be in 1..={}", NAMES.len())));
        }
        if self.topics_per_transcript == 0 || self.topics_per_transcript > self.n_topics.min(5) {
            return Err(spec_error("topics_per_transcript must be in 1..=min(5, n_topics)"));
        }
        if self.sentences_per_topic < 3 {
            return Err(spec_error("sentences_per_topic must be at least 3"));
        }
        if !(self.pool_weight.is_finite() && self.pool_weight > 0.0) {
            return Err(spec_error("pool_weight must be positive"));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(spec_error("noise_rate must lie in [0, 1]"));
        }
        if let Some(p) = &self.polarity {
            if p.len() != self.n_networks || p.iter().any(|row| row.len() != self.n_topics) {
                return Err(spec_error("polarity must be n_networks x n_topics"));
            }
            if p.iter().flatten().any(|v| !(-1..=1).contains(v)) {
                return Err(spec_error("polarity values must be -1, 0 or 1"));
            }
        }
        Ok(())
    }

    pub fn network_labels(&self) -> Vec<String> {
        (0..self.n_networks)
            .map(|n| {
                NETWORK_LABELS
                    .get(n)
                    .map_or_else(|| format!("NET{}", n + 1), |s| s.to_string())
            })
            .collect()
    }

    pub fn program_name(&self, network: usize, program: usize) -> String {
        let label = &self.network_labels()[network];
        let base = PROGRAM_NAMES[program % PROGRAM_NAMES.len()];
        let round = program / PROGRAM_NAMES.len();
        if round == 0 {
            format!("{label} {base}")
        } else {
            format!("{label} {base} {}", round + 1)
        }
    }

    pub fn topics(&self) -> Vec<String> {
        NAMES[..self.n_topics].iter().map(|s| s.to_string()).collect()
    }

    pub fn planted_polarity(&self, network: usize, topic: usize) -> i8 {
        match &self.polarity {
            Some(p) => p[network][topic],
            None => [1, -1, 0][(network + topic) % 3],
        }
    }

    fn month_start(&self, m: usize) -> NaiveDate {
        let first = self.first_month.as_str();
        let year: i32 = first[..4].parse().expect("month key year");
        let month: u32 = first[5..].parse().expect("month key month");
        NaiveDate::from_ymd_opt(year, month, 1).expect("valid month") + Months::new(m as u32)
    }
}

fn stance_sentence(rng: &mut ChaCha8Rng, name: &str, polarity: i8, matched: bool) -> String {
    if polarity == 0 {
        return format!(
            "Senator {name} {}.",
            NEUTRAL_ENDINGS[rng.random_range(0..NEUTRAL_ENDINGS.len())]
        );
    }
    if matched {
        let pos = MATCHED_POSITIVE[rng.random_range(0..MATCHED_POSITIVE.len())];
        let neg = MATCHED_NEGATIVE[rng.random_range(0..MATCHED_NEGATIVE.len())];
        let (near, far) = if polarity > 0 { (pos, neg) } else { (neg, pos) };
        return format!("Senator {name} has been {near} while critics called the plan {far}.");
    }
    let (pos, neg) = CUE_PAIRS[rng.random_range(0..CUE_PAIRS.len())];
    if polarity > 0 {
        format!("Senator {name} is doing a {pos} job for the voters.")
    } else {
        format!("Senator {name} has been {neg} for the voters.")
    }
}

/// Weighted sampling without replacement.
fn pick_topics(rng: &mut ChaCha8Rng, weights: &[f64], count: usize) -> Vec<usize> {
    let mut available: Vec<usize> = (0..weights.len()).collect();
    let mut chosen = Vec::with_capacity(count);
    for _ in 0..count {
        let total: f64 = available.iter().map(|&t| weights[t]).sum();
        let mut x = rng.random::<f64>() * total;
        let mut slot = available.len() - 1;
        for (i, &t) in available.iter().enumerate() {
            if x < weights[t] {
                slot = i;
                break;
            }
            x -= weights[t];
        }
        chosen.push(available.remove(slot));
    }
    chosen.sort_unstable();
    chosen
}

fn render_transcript(program: &str, network: &str, date: NaiveDate, sentences: &[String]) -> String {
    let mut out = format!("PROGRAM: {program}\nNETWORK: {network}\nDATE: {date}\n\n");
    for (i, chunk) in sentences.chunks(3).enumerate() {
        let speaker = if i % 2 == 0 { "ANCHOR" } else { "GUEST" };
        out.push_str(&format!("{speaker}: {}\n", chunk.join(" ")));
    }
    out
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect()
}

/// Writes the corpus under `dir` and returns what was planted.
pub fn generate_synthetic(spec: &SyntheticSpec, dir: &Path) -> Result<Truth> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let networks = spec.network_labels();
    let topics = spec.topics();
    let mut files: Vec<PathBuf> = Vec::new();
    let mut programs = Vec::new();

    for (n, network) in networks.iter().enumerate() {
        let weights: Vec<f64> = (0..spec.n_topics)
            .map(|t| {
                if t % spec.n_networks == n {
                    spec.pool_weight
                } else {
                    1.0
                }
            })
            .collect();
        for p in 0..spec.programs_per_network {
            let program = spec.program_name(n, p);
            programs.push(PlantedProgram {
                program: program.clone(),
                network: network.clone(),
            });
            for m in 0..spec.months {
                let start = spec.month_start(m);
                for t in 0..spec.transcripts_per_program_month {
                    let day = (t * 7 + p) % start.with_day(28).map_or(28, |d| d.day() as usize);
                    let date = start + chrono::Days::new(day as u64);
                    let mut sentences = Vec::new();
                    for topic in pick_topics(&mut rng, &weights, spec.topics_per_transcript) {
                        let planted = spec.planted_polarity(n, topic);
                        for _ in 0..spec.sentences_per_topic {
                            let polarity = if spec.noise_rate > 0.0 && rng.random::<f64>() < spec.noise_rate {
                                rng.random_range(-1i8..=1)
                            } else {
                                planted
                            };
                            sentences.push(stance_sentence(
                                &mut rng,
                                &topics[topic],
                                polarity,
                                spec.matched_valence,
                            ));
                        }
                    }
                    for _ in 0..spec.fillers_per_transcript {
                        sentences.push(FILLERS[rng.random_range(0..FILLERS.len())].to_string());
                    }
                    sentences.shuffle(&mut rng);
                    let rel = PathBuf::from(network)
                        .join(slug(&program))
                        .join(format!("{date}-{t}.txt"));
                    write_atomic(
                        &dir.join(&rel),
                        render_transcript(&program, network, date, &sentences).as_bytes(),
                    )?;
                    files.push(rel);
                }
            }
        }
    }

    let polarity = networks
        .iter()
        .enumerate()
        .map(|(n, net)| {
            let row = topics
                .iter()
                .enumerate()
                .map(|(t, name)| (name.clone(), spec.planted_polarity(n, t)))
                .collect();
            (net.clone(), row)
        })
        .collect();
    let truth = Truth {
        seed: spec.seed,
        networks,
        programs,
        months: (0..spec.months)
            .map(|m| MonthKey::from_date(spec.month_start(m)).to_string())
            .collect(),
        topics,
        polarity,
        noise_rate: spec.noise_rate,
        matched_valence: spec.matched_valence,
        files: files.iter().map(|f| f.to_string_lossy().replace('\\', "/")).collect(),
    };
    write_json(&dir.join(TRUTH_FILE), &truth)?;
    Ok(truth)
}
