//! Pipeline configuration: a JSON document whose every field has a
//! default, overridable from the command line.

use std::path::{Path, PathBuf};

use newsbias_core::cluster::{DEFAULT_K, DEFAULT_SEED};
use newsbias_core::networks::TfIdfVariant;
use newsbias_core::MonthKey;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    #[default]
    Mock,
    Remote,
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mock" => Ok(ClassifierKind::Mock),
            "remote" => Ok(ClassifierKind::Remote),
            other => Err(format!("unknown classifier `{other}` (expected mock or remote)")),
        }
    }
}

/// Chat-completion classifier settings. The API key is read from the
/// environment variable named by `api_key_env`; it is never stored here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    pub timeout_secs: u64,
    /// Retries after the first attempt for transport failures, 429 and 5xx.
    pub max_retries: u32,
    pub backoff_initial_ms: u64,
    pub backoff_max_ms: u64,
    /// Upper bound on concurrent requests.
    pub max_in_flight: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            kind: ClassifierKind::Mock,
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            model: "gpt-4".to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            timeout_secs: 60,
            max_retries: 4,
            backoff_initial_ms: 500,
            backoff_max_ms: 30_000,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    pub max_calls: Option<usize>,
    pub max_calls_per_transcript: Option<usize>,
}

/// Inclusive month range, written `YYYY-MM..YYYY-MM` or a single month.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MonthRange {
    pub first: MonthKey,
    pub last: MonthKey,
}

impl MonthRange {
    pub fn contains(&self, month: &MonthKey) -> bool {
        &self.first <= month && month <= &self.last
    }
}

impl std::str::FromStr for MonthRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once("..").unwrap_or((s, s));
        let first: MonthKey = a.trim().parse().map_err(|e| format!("{e}"))?;
        let last: MonthKey = b.trim().parse().map_err(|e| format!("{e}"))?;
        if first > last {
            return Err(format!("empty month range {s}"));
        }
        Ok(MonthRange { first, last })
    }
}

impl TryFrom<String> for MonthRange {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<MonthRange> for String {
    fn from(r: MonthRange) -> String {
        if r.first == r.last {
            r.first.to_string()
        } else {
            format!("{}..{}", r.first, r.last)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Transcript files or directories searched recursively for `*.txt`.
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub networks: Vec<String>,
    /// `heuristic` or `external:<command> [args...]`.
    pub recognizer: String,
    /// Use the heuristic recognizer when the external one fails.
    pub recognizer_fallback: bool,
    /// JSON object mapping surface forms to canonical names.
    pub alias_map: Option<PathBuf>,
    pub classifier: ClassifierConfig,
    pub budget: BudgetConfig,
    /// Defaults to `<out_dir>/stance_cache.jsonl`.
    pub cache_path: Option<PathBuf>,
    #[serde(with = "tfidf_serde")]
    pub tfidf: TfIdfVariant,
    pub k: usize,
    pub seed: u64,
    pub min_transcripts: usize,
    pub months: Option<MonthRange>,
    /// Also score the lexicon sentiment baseline.
    pub sentiment_baseline: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            inputs: Vec::new(),
            out_dir: PathBuf::from("out"),
            networks: vec!["CNN".into(), "FOX".into(), "MSNBC".into()],
            recognizer: "heuristic".into(),
            recognizer_fallback: true,
            alias_map: None,
            classifier: ClassifierConfig::default(),
            budget: BudgetConfig::default(),
            cache_path: None,
            tfidf: TfIdfVariant::Smooth,
            k: DEFAULT_K,
            seed: DEFAULT_SEED,
            min_transcripts: 1,
            months: None,
            sentiment_baseline: true,
        }
    }
}

mod tfidf_serde {
    use newsbias_core::networks::TfIdfVariant;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &TfIdfVariant, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(v.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TfIdfVariant, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// How entities are recognized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecognizerChoice {
    Heuristic,
    External(Vec<String>),
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn cache_file(&self) -> PathBuf {
        self.cache_path
            .clone()
            .unwrap_or_else(|| self.out_dir.join("stance_cache.jsonl"))
    }

    pub fn month_selected(&self, month: &MonthKey) -> bool {
        self.months.as_ref().is_none_or(|r| r.contains(month))
    }

    pub fn recognizer_choice(&self) -> Result<RecognizerChoice> {
        let spec = self.recognizer.trim();
        if spec == "heuristic" {
            return Ok(RecognizerChoice::Heuristic);
        }
        match spec.strip_prefix("external:") {
            Some(cmd) => {
                let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
                if argv.is_empty() {
                    Err(PipelineError::Config("external recognizer needs a command".into()))
                } else {
                    Ok(RecognizerChoice::External(argv))
                }
            }
            None => Err(PipelineError::Config(format!(
                "unknown recognizer `{spec}` (expected heuristic or external:<command>)"
            ))),
        }
    }

    /// Checks everything that can be checked before work starts. The remote
    /// classifier's key variable is only required by stages that classify.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if self.networks.is_empty() {
            return fail("at least one network label is required".into());
        }
        if let Some(bad) = self.networks.iter().find(|n| n.trim().is_empty() || n.contains('/')) {
            return fail(format!("invalid network label {bad:?}"));
        }
        if self.k < 2 {
            return fail(format!("k must be at least 2, got {}", self.k));
        }
        if self.min_transcripts == 0 {
            return fail("min_transcripts must be at least 1".into());
        }
        if self.classifier.max_in_flight == 0 {
            return fail("classifier.max_in_flight must be at least 1".into());
        }
        if self.classifier.kind == ClassifierKind::Remote {
            if self.classifier.endpoint.trim().is_empty() || self.classifier.model.trim().is_empty() {
                return fail("remote classifier needs an endpoint and a model".into());
            }
            if self.classifier.api_key_env.trim().is_empty() {
                return fail("classifier.api_key_env must name an environment variable".into());
            }
        }
        self.recognizer_choice()?;
        Ok(())
    }

    /// Reads the remote API key from the configured variable.
    pub fn api_key(&self) -> Result<String> {
        match std::env::var(&self.classifier.api_key_env) {
            Ok(key) if !key.trim().is_empty() => Ok(key),
            _ => Err(PipelineError::Config(format!(
                "remote classifier selected but environment variable {} is not set",
                self.classifier.api_key_env
            ))),
        }
    }
}
