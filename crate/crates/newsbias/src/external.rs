//! Adapter for an external entity tagger running as a child process.
//!
//! The child reads one JSON object per line on stdin, `{"sentence": "..."}`,
//! and answers each with one line on stdout,
//! `{"entities": [{"text": "...", "label": "PERSON", "start": 0, "end": 5}]}`.
//! `start` and `end` are character offsets into the sentence. Labels use
//! the usual NER tag names (`PERSON`, `ORG`, `GPE`, `NORP`, ...).

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use newsbias_core::entity::{DocumentContext, EntityLabel, EntityRecognizer, RecognizerError, TaggedSpan};
use serde::Deserialize;

#[derive(Deserialize)]
struct Reply {
    entities: Vec<Entity>,
}

#[derive(Deserialize)]
struct Entity {
    text: String,
    label: String,
    start: usize,
    end: usize,
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

pub struct ExternalRecognizer {
    command: String,
    process: Mutex<Option<Process>>,
}

impl std::fmt::Debug for ExternalRecognizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalRecognizer")
            .field("command", &self.command)
            .finish()
    }
}

impl ExternalRecognizer {
    /// Starts `argv[0]` with the remaining arguments.
    pub fn spawn(argv: &[String]) -> Result<Self, RecognizerError> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| RecognizerError::Unavailable("empty recognizer command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| RecognizerError::Unavailable(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalRecognizer {
            command: argv.join(" "),
            process: Mutex::new(Some(Process { child, stdin, stdout })),
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }
}

impl Drop for ExternalRecognizer {
    fn drop(&mut self) {
        if let Ok(mut guard) = self.process.lock() {
            if let Some(mut p) = guard.take() {
                drop(p.stdin);
                if p.child.try_wait().ok().flatten().is_none() {
                    let _ = p.child.kill();
                }
                let _ = p.child.wait();
            }
        }
    }
}

/// Converts a character range to a byte range of `s`.
fn char_range_to_bytes(s: &str, start: usize, end: usize) -> Option<(usize, usize)> {
    if start > end {
        return None;
    }
    let mut offsets = s.char_indices().map(|(b, _)| b).chain(std::iter::once(s.len()));
    let b_start = offsets.nth(start)?;
    let b_end = if end == start {
        b_start
    } else {
        offsets.nth(end - start - 1)?
    };
    Some((b_start, b_end))
}

fn talk(p: &mut Process, sentence: &str) -> Result<String, String> {
    let mut line = serde_json::to_string(&serde_json::json!({ "sentence": sentence })).map_err(|e| e.to_string())?;
    line.push('\n');
    p.stdin.write_all(line.as_bytes()).map_err(|e| e.to_string())?;
    p.stdin.flush().map_err(|e| e.to_string())?;
    let mut reply = String::new();
    let n = p.stdout.read_line(&mut reply).map_err(|e| e.to_string())?;
    if n == 0 {
        return Err("recognizer closed its output".into());
    }
    Ok(reply)
}

impl EntityRecognizer for ExternalRecognizer {
    fn tag_sentence(&self, sentence: &str, _context: &DocumentContext) -> Result<Vec<TaggedSpan>, RecognizerError> {
        let mut guard = self
            .process
            .lock()
            .map_err(|_| RecognizerError::Unavailable("poisoned".into()))?;
        let Some(p) = guard.as_mut() else {
            return Err(RecognizerError::Unavailable(format!("{} is not running", self.command)));
        };
        let reply = match talk(p, sentence) {
            Ok(r) => r,
            Err(e) => {
                // A broken pipe leaves the protocol out of step; stop using it.
                if let Some(mut dead) = guard.take() {
                    let _ = dead.child.kill();
                    let _ = dead.child.wait();
                }
                return Err(RecognizerError::Unavailable(format!("{}: {e}", self.command)));
            }
        };
        let reply: Reply = serde_json::from_str(&reply)
            .map_err(|e| RecognizerError::Unavailable(format!("{}: bad reply: {e}", self.command)))?;
        let mut spans = Vec::with_capacity(reply.entities.len());
        for ent in reply.entities {
            let Some((start, end)) = char_range_to_bytes(sentence, ent.start, ent.end) else {
                log::warn!("{}: entity {:?} lies outside the sentence", self.command, ent.text);
                continue;
            };
            spans.push(TaggedSpan {
                text: ent.text,
                label: EntityLabel::from_tag(&ent.label),
                start,
                end,
            });
        }
        Ok(spans)
    }
}
