//! The phase-typed decision contract between the engine and a cognition backend.
//!
//! A backend turns a [`DecisionRequest`] into raw text. The engine validates that
//! text with [`validate_response`], re-issuing the request with an error addendum a
//! bounded number of times before degrading to a per-phase fallback.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{ActionCommand, AgentId, AgentState, ArchetypeKind, BeliefDimension, Valence};
use crate::error::BackendError;

pub mod profiles;
mod prompt;
mod remote;
mod scripted;
mod validate;

pub use prompt::{build_prompt, PromptContext, PromptVariant};
pub use remote::{RemoteBackend, RemoteConfig, API_KEY_ENV};
pub use scripted::ScriptedBackend;
pub use validate::{render_reflection, render_response, validate_response, Validated, ValidationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    Plan,
    Act,
    Observe,
    Vote,
    Reflect,
}

impl PhaseKind {
    /// Fixed daily order.
    pub const DAILY: [PhaseKind; 5] =
        [PhaseKind::Plan, PhaseKind::Act, PhaseKind::Observe, PhaseKind::Vote, PhaseKind::Reflect];

    pub fn name(self) -> &'static str {
        match self {
            PhaseKind::Plan => "plan",
            PhaseKind::Act => "act",
            PhaseKind::Observe => "observe",
            PhaseKind::Vote => "vote",
            PhaseKind::Reflect => "reflect",
        }
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How strongly the exemplar-comparison part of reflection operates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMode {
    Full,
    /// Exemplar framed as unattainable.
    Halved,
    /// Exemplar succeeds but is not admirable.
    Muted,
    /// Reflection on the exemplar is removed from the prompt.
    Removed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarView {
    pub agent_id: AgentId,
    pub values: BTreeMap<BeliefDimension, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicEvent {
    pub actor: AgentId,
    pub action: ActionCommand,
    pub succeeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub agent_id: AgentId,
    pub kind: ArchetypeKind,
    pub food: i64,
    pub alive: bool,
}

/// Structured view of public information, alongside the rendered prompt.
///
/// Remote backends only see the prompt; the scripted backend reads this directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Situation {
    pub day: u32,
    pub exemplars: Vec<ExemplarView>,
    /// Successful exemplar prosocial outcomes reported before today.
    pub exemplar_prosocial_successes: u32,
    /// Today's publicly reported outcomes (empty before the Observe phase).
    pub todays_events: Vec<PublicEvent>,
    /// The agent's own action today and whether it worked (Reflect only).
    pub own_outcome: Option<PublicEvent>,
    pub collapsed_on: Option<u32>,
    pub chosen_one: Option<AgentId>,
    pub comparison: ComparisonMode,
    pub last_valence: BTreeMap<AgentId, Valence>,
    pub roster: Vec<RosterEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub phase: PhaseKind,
    pub agent: AgentState,
    pub memory_context: String,
    pub todays_digest: Option<String>,
    pub vote_targets: Vec<AgentId>,
    pub scenario_framing: Vec<String>,
    pub prompt: String,
    pub situation: Situation,
    /// Per-request draw from the run generator.
    pub nonce: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionResponse {
    pub agent_id: AgentId,
    pub thinking: String,
    pub long_term_memory: String,
    pub short_term_plan: String,
    pub action: ActionCommand,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReflectionPayload {
    pub causal_reasoning: String,
    pub reflection_on_action: String,
    pub future_inspiration: String,
    pub expectancy_updates: BTreeMap<BeliefDimension, f64>,
    pub value_updates: BTreeMap<BeliefDimension, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub svo_note: Option<f64>,
}

pub trait CognitionBackend {
    fn decide(&mut self, request: &DecisionRequest) -> Result<String, BackendError>;
}

impl<B: CognitionBackend + ?Sized> CognitionBackend for Box<B> {
    fn decide(&mut self, request: &DecisionRequest) -> Result<String, BackendError> {
        (**self).decide(request)
    }
}

/// Result of a validated exchange, including how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Decided {
    pub validated: Validated,
    pub repairs: u32,
    pub fallback: bool,
    pub errors: Vec<String>,
}

/// Per-phase degradation once repairs are exhausted.
pub fn fallback_for(phase: PhaseKind, agent_id: &str, vote_target: Option<&str>) -> Validated {
    let response = |action| {
        Validated::Decision(DecisionResponse {
            agent_id: agent_id.to_string(),
            thinking: String::new(),
            long_term_memory: String::new(),
            short_term_plan: String::new(),
            action,
        })
    };
    match phase {
        PhaseKind::Plan => response(ActionCommand::do_nothing("Finished planning.")),
        PhaseKind::Act => response(ActionCommand::do_nothing("validation fallback")),
        PhaseKind::Observe => response(ActionCommand::do_nothing("Observing.")),
        PhaseKind::Vote => response(ActionCommand::Score {
            target_agent_id: vote_target.unwrap_or_default().to_string(),
            score: 5,
            reason: "neutral fallback".into(),
        }),
        PhaseKind::Reflect => Validated::Reflection(ReflectionPayload::default()),
    }
}

fn repair_addendum(error: &ValidationError) -> String {
    format!(
        "\n\nYour previous reply was rejected ({error}). Reply again with a single JSON object that follows the required format exactly."
    )
}

/// Asks the backend, validating and re-asking up to `max_repairs` times.
///
/// Backend errors propagate; validation failures never do.
pub fn decide_validated<B: CognitionBackend + ?Sized>(
    backend: &mut B,
    request: &DecisionRequest,
    max_repairs: u32,
) -> Result<Decided, BackendError> {
    let vote_target = request.vote_targets.first().map(String::as_str);
    let mut errors = Vec::new();
    let mut attempt = request.clone();
    for repairs in 0..=max_repairs {
        let raw = backend.decide(&attempt)?;
        match validate_response(&raw, request.phase, &request.agent.agent_id, vote_target) {
            Ok(validated) => return Ok(Decided { validated, repairs, fallback: false, errors }),
            Err(e) => {
                attempt.prompt = format!("{}{}", request.prompt, repair_addendum(&e));
                errors.push(e.to_string());
            }
        }
    }
    Ok(Decided {
        validated: fallback_for(request.phase, &request.agent.agent_id, vote_target),
        repairs: max_repairs,
        fallback: true,
        errors,
    })
}
