//! Pipeline orchestration: configuration, the stage DAG with cached
//! artifacts, the run report and the reader-bundle exporter.

pub mod config;
pub mod export;
pub mod report;
pub mod runner;
pub mod stages;

use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub use config::{fixture_config, Overrides, PipelineConfig};
pub use report::{chapter_split, ChapterSplit};
pub use runner::{run, Outcome, Stage, StageRun};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing prerequisite {0}; run the stage that produces it first")]
    MissingPrerequisite(String),
    #[error(transparent)]
    Pipeline(#[from] soundweave::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("artifact {name}: {message}")]
    MalformedArtifact { name: String, message: String },
    #[error("excerpt {in_s:.3}-{out_s:.3} s lies outside track {track_id} ({duration_s:.3} s)")]
    AudioCutOutOfRange {
        track_id: u32,
        in_s: f64,
        out_s: f64,
        duration_s: f64,
    },
    #[error("manifest invariants violated: {}", .0.join("; "))]
    InvariantViolation(Vec<String>),
    #[error(transparent)]
    Synth(#[from] soundweave::synth::SynthError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "Config",
            CliError::MissingPrerequisite(_) => "MissingPrerequisite",
            CliError::Pipeline(e) => e.kind(),
            CliError::Io { .. } => "Io",
            CliError::MalformedArtifact { .. } => "MalformedArtifact",
            CliError::AudioCutOutOfRange { .. } => "AudioCutOutOfRange",
            CliError::InvariantViolation(_) => "InvariantViolation",
            CliError::Synth(_) => "Synth",
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            artifact: Option<&'a str>,
        }
        let artifact = match self {
            CliError::MissingPrerequisite(a) => Some(a.as_str()),
            CliError::MalformedArtifact { name, .. } => Some(name.as_str()),
            _ => None,
        };
        serde_json::to_string(&Report {
            error: self.kind(),
            message: self.to_string(),
            artifact,
        })
        .expect("error report serializes")
    }
}

/// Lifts any core module error.
pub(crate) fn core<E: Into<soundweave::Error>>(e: E) -> CliError {
    CliError::Pipeline(e.into())
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
