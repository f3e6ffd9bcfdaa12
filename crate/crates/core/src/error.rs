use std::path::PathBuf;

use thiserror::Error;

use crate::domain::ArchetypeKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("archetype `{0}` is not a follower archetype")]
    NotAFollower(ArchetypeKind),
    #[error("invalid world parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config schema violation at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("config invariant violated: {0}")]
    Invariant(String),
    #[error("unknown prompt variant `{0}` (expected base, v1 or v2)")]
    UnknownVariant(String),
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend is not configured: {0}")]
    NotConfigured(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed completion envelope: {0}")]
    Envelope(String),
}

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("I/O failure on {path} (day {day}): {source}")]
    Io {
        path: PathBuf,
        day: u32,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint {path} is corrupt: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("checkpoint version `{found}` is not supported (expected `{expected}`)")]
    Version { found: String, expected: String },
    #[error("config digest mismatch: checkpoint has {checkpoint}, current config has {current}")]
    DigestMismatch { checkpoint: String, current: String },
    #[error("log line {line} in {path} is malformed: {message}")]
    MalformedLog { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no observations for group `{0}`")]
    EmptyGroup(String),
    #[error("series has {len} days, but {needed} are required")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("series lengths differ ({baseline} vs {conflict})")]
    LengthMismatch { baseline: usize, conflict: usize },
    #[error("series belong to different groups ({0} vs {1})")]
    GroupMismatch(String, String),
    #[error("agent `{0}` never received a vote")]
    NeverVoted(String),
    #[error("lexicon is empty")]
    EmptyLexicon,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
    #[error("backend failure on day {day}: {source}; resumable checkpoint at {checkpoint}")]
    Backend {
        day: u32,
        checkpoint: PathBuf,
        #[source]
        source: BackendError,
    },
    #[error("backend failure on day {day}: {source}")]
    BackendInMemory {
        day: u32,
        #[source]
        source: BackendError,
    },
    #[error("run `{run_id}` already completed all {days} days")]
    AlreadyComplete { run_id: String, days: u32 },
}
