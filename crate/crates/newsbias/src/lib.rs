//! File formats, caching, the remote stance classifier and the stage
//! runners behind the `newsbias` command line.
//!
//! Stages communicate only through files in the output directory:
//!
//! | Stage | Reads | Writes |
//! |-------|-------|--------|
//! | ingest | transcript files | `transcripts.jsonl`, `ingest_report.json` |
//! | extract | `transcripts.jsonl` | `keywords.jsonl`, `extract_report.json` |
//! | stance | `transcripts.jsonl`, `keywords.jsonl` | `stances.jsonl`, `sentiment.jsonl`, `stance_report.json` |
//! | networks | `keywords.jsonl`, `stances.jsonl`, `sentiment.jsonl` | `networks/<month>/*.csv`, `networks/months.json` |
//! | cluster | `networks/` | `clusters.json` |
//! | report | `clusters.json`, `networks/` | `ari_table.{csv,md}`, `sankey.json`, `pca.csv`, `variance_report.json` |

pub mod cache;
pub mod config;
pub mod error;
pub mod external;
pub mod formats;
pub mod remote;
pub mod report;
pub mod stages;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{PipelineError, Result};
pub use stages::{run_all, run_stage, Stage};
