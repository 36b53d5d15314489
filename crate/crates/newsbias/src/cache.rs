//! Append-only verdict cache.
//!
//! One JSON object per line: `{"key": ..., "verdict": ..., "malformed": ...}`.
//! Later lines win. On load the log is compacted (duplicate keys and
//! unreadable lines removed) when needed.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use newsbias_core::stance::{parse_verdict, Verdict, PROMPT_TEMPLATE_VERSION};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};
use crate::formats::write_atomic;

/// Hex SHA-256 of the classifier id, prompt template version, sentence and
/// keyword, NUL separated.
pub fn cache_key(classifier_id: &str, sentence: &str, keyword: &str) -> String {
    let mut h = Sha256::new();
    for part in [classifier_id, PROMPT_TEMPLATE_VERSION, sentence, keyword] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CachedVerdict {
    pub verdict: Verdict,
    pub malformed: bool,
}

#[derive(Serialize, Deserialize)]
struct Line {
    key: String,
    verdict: String,
    #[serde(default)]
    malformed: bool,
}

#[derive(Debug)]
struct State {
    entries: BTreeMap<String, CachedVerdict>,
    log: File,
}

#[derive(Debug)]
pub struct StanceCache {
    path: PathBuf,
    state: Mutex<State>,
}

impl StanceCache {
    pub fn open(path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut lines = 0usize;
        if path.exists() {
            let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| PipelineError::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                lines += 1;
                let Ok(row) = serde_json::from_str::<Line>(&line) else {
                    log::warn!("{}: skipping unreadable cache line", path.display());
                    continue;
                };
                let Some(verdict) = parse_verdict(&row.verdict) else {
                    log::warn!("{}: skipping cache line with verdict {:?}", path.display(), row.verdict);
                    continue;
                };
                entries.insert(
                    row.key,
                    CachedVerdict {
                        verdict,
                        malformed: row.malformed,
                    },
                );
            }
            if lines != entries.len() {
                let mut out = Vec::new();
                for (key, v) in &entries {
                    out.extend(serde_json::to_vec(&line_for(key, *v)).expect("cache line serializes"));
                    out.push(b'\n');
                }
                write_atomic(path, &out)?;
            }
        } else if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        }
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| PipelineError::io(path, e))?;
        Ok(StanceCache {
            path: path.to_path_buf(),
            state: Mutex::new(State { entries, log }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<CachedVerdict> {
        self.state.lock().expect("cache lock").entries.get(key).copied()
    }

    /// Records a verdict and appends it to the log. Re-inserting an
    /// identical entry writes nothing.
    pub fn insert(&self, key: &str, value: CachedVerdict) -> Result<()> {
        let mut state = self.state.lock().expect("cache lock");
        if state.entries.get(key) == Some(&value) {
            return Ok(());
        }
        let mut line = serde_json::to_vec(&line_for(key, value)).expect("cache line serializes");
        line.push(b'\n');
        state
            .log
            .write_all(&line)
            .map_err(|e| PipelineError::io(&self.path, e))?;
        state.log.flush().map_err(|e| PipelineError::io(&self.path, e))?;
        state.entries.insert(key.to_string(), value);
        Ok(())
    }
}

fn line_for(key: &str, v: CachedVerdict) -> Line {
    Line {
        key: key.to_string(),
        verdict: v.verdict.as_str().to_string(),
        malformed: v.malformed,
    }
}
