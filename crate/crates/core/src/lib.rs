//! Deterministic multi-agent simulator of exemplar-driven moral learning.

pub mod analysis;
pub mod cognition;
pub mod domain;
pub mod engine;
pub mod error;
pub mod scenario;
pub mod telemetry;
pub mod world;

pub use cognition::{CognitionBackend, RemoteBackend, RemoteConfig, ScriptedBackend};
pub use domain::{ActionCommand, AgentId, AgentState, ArchetypeKind, BeliefDimension, BeliefSystem, MoralGroup};
pub use engine::{make_backend, run_experiment, RunOptions, RunSummary, Simulation};
pub use error::{AnalysisError, BackendError, ConfigError, DomainError, RunError, TelemetryError};
pub use scenario::{load_config, parse_config, ExperimentConfig, ExperimentId};
pub use telemetry::{read_logs, LogEntry};
pub use world::WorldState;
