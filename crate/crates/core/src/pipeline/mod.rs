//! End-to-end orchestration: ingest, survival, differential expression,
//! enrichment and model training, persisted as a self-verifying report bundle.
//!
//! Every stage writes its outputs before the next begins. `manifest.json` is
//! written last and records the sha256 of each input and output, the echoed
//! configuration and the per-stage seeds. Wall-clock times go to a separate
//! `timestamps.json` so the manifest itself is reproducible byte for byte.

mod bundle;
mod config;
mod run;

pub use bundle::{sha256_file, Manifest, ReportBundle, RunStatus, MANIFEST_FILE, TIMESTAMPS_FILE};
pub use config::{DegSettings, EnrichmentSettings, Inputs, LibraryPath, PipelineConfig};
pub use run::{model_file_name, run_pipeline, RunOutcome};

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Survival,
    Diffexpr,
    Enrichment,
    Train,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Ingest,
        Stage::Survival,
        Stage::Diffexpr,
        Stage::Enrichment,
        Stage::Train,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Survival => "survival",
            Stage::Diffexpr => "diffexpr",
            Stage::Enrichment => "enrichment",
            Stage::Train => "train",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Rejected before any stage ran.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: Stage, message: String },
    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),
    #[error("{path}: {message}")]
    Bundle { path: PathBuf, message: String },
    #[error("digest mismatch for {0}")]
    DigestMismatch(String),
}

impl PipelineError {
    pub(crate) fn bundle(path: impl Into<PathBuf>, message: impl fmt::Display) -> Self {
        PipelineError::Bundle {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
