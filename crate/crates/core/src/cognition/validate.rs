use std::collections::BTreeMap;

use serde_json::{Map, Value};
use thiserror::Error;

use super::{DecisionResponse, PhaseKind, ReflectionPayload};
use crate::domain::{ActionCommand, BeliefDimension};

#[derive(Debug, Clone, PartialEq)]
pub enum Validated {
    Decision(DecisionResponse),
    Reflection(ReflectionPayload),
}

impl Validated {
    pub fn action(&self) -> Option<&ActionCommand> {
        match self {
            Validated::Decision(d) => Some(&d.action),
            Validated::Reflection(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("response is not a JSON object: {0}")]
    NotJson(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("field `{field}` is invalid: {message}")]
    InvalidField { field: &'static str, message: String },
    #[error("response is for agent `{found}`, expected `{expected}`")]
    AgentMismatch { expected: String, found: String },
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("score {0} is out of range 1..=10")]
    ScoreOutOfRange(i64),
    #[error("amount {0} must be positive")]
    NonPositiveAmount(i64),
    #[error("agent cannot target itself")]
    SelfTargeting,
    #[error("action `{action}` is not allowed in the {phase} phase")]
    WrongPhaseAction { phase: PhaseKind, action: String },
    #[error("score targets `{found}`, expected `{expected}`")]
    TargetMismatch { expected: String, found: String },
    #[error("unknown belief dimension `{0}`")]
    UnknownDimension(String),
    #[error("sustainability has no expectancy belief")]
    SustainabilityExpectancy,
}

/// Pulls the outermost JSON object out of a reply, tolerating code fences and prose.
fn extract_object(raw: &str) -> Result<Map<String, Value>, ValidationError> {
    let start = raw.find('{').ok_or_else(|| ValidationError::NotJson("no object found".into()))?;
    let end = raw.rfind('}').ok_or_else(|| ValidationError::NotJson("no object found".into()))?;
    if end < start {
        return Err(ValidationError::NotJson("unbalanced braces".into()));
    }
    match serde_json::from_str::<Value>(&raw[start..=end]) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(ValidationError::NotJson("top level is not an object".into())),
        Err(e) => Err(ValidationError::NotJson(e.to_string())),
    }
}

fn lookup<'a>(map: &'a Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().find_map(|k| map.get(*k))
}

fn text(map: &Map<String, Value>, field: &'static str, aliases: &[&str]) -> Result<String, ValidationError> {
    let mut keys = vec![field];
    keys.extend_from_slice(aliases);
    match lookup(map, &keys) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Null) | None => Err(ValidationError::MissingField(field)),
        Some(other) => Ok(other.to_string()),
    }
}

fn integer(map: &Map<String, Value>, field: &'static str, aliases: &[&str]) -> Result<i64, ValidationError> {
    let mut keys = vec![field];
    keys.extend_from_slice(aliases);
    let value = lookup(map, &keys).ok_or(ValidationError::MissingField(field))?;
    let invalid = |message: &str| ValidationError::InvalidField { field, message: message.to_string() };
    match value {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(i)
            } else {
                let f = n.as_f64().ok_or_else(|| invalid("not a number"))?;
                if f.fract() == 0.0 && f.abs() < 1e15 {
                    Ok(f as i64)
                } else {
                    Err(invalid("expected an integer"))
                }
            }
        }
        Value::String(s) => s.trim().parse::<i64>().map_err(|_| invalid("expected an integer")),
        _ => Err(invalid("expected an integer")),
    }
}

fn normalize_action_name(name: &str) -> String {
    name.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase()
}

fn parse_action(value: &Value) -> Result<ActionCommand, ValidationError> {
    let map = match value {
        Value::Object(m) => m,
        Value::Null => return Err(ValidationError::MissingField("action")),
        _ => return Err(ValidationError::InvalidField { field: "action", message: "expected an object".into() }),
    };
    let name = text(map, "action_type", &["type", "name"])?;
    let target = || text(map, "target_agent_id", &["target", "target_id", "agent_id"]);
    let action = match normalize_action_name(&name).as_str() {
        "gatherfood" | "gather" => ActionCommand::GatherFood,
        "sharefood" | "share" => {
            ActionCommand::ShareFood { target_agent_id: target()?, amount: integer(map, "amount", &["quantity"])? }
        }
        "formalliance" | "alliance" => ActionCommand::FormAlliance { target_agent_id: target()? },
        "rest" => ActionCommand::Rest,
        "exploitresource" | "exploitresources" | "exploit" => ActionCommand::ExploitResource,
        "rob" => ActionCommand::Rob { target_agent_id: target()?, quantity: integer(map, "quantity", &["amount"])? },
        "donothing" | "nothing" => ActionCommand::DoNothing { reason: text(map, "reason", &[]).unwrap_or_default() },
        "score" => ActionCommand::Score {
            target_agent_id: target()?,
            score: integer(map, "score", &[])?,
            reason: text(map, "reason", &[]).unwrap_or_default(),
        },
        _ => return Err(ValidationError::UnknownAction(name)),
    };
    Ok(action)
}

fn check_action(
    action: &ActionCommand,
    phase: PhaseKind,
    agent_id: &str,
    vote_target: Option<&str>,
) -> Result<(), ValidationError> {
    if action.target() == Some(agent_id) {
        return Err(ValidationError::SelfTargeting);
    }
    match action {
        ActionCommand::Score { score, .. } if !(1..=10).contains(score) => {
            return Err(ValidationError::ScoreOutOfRange(*score))
        }
        ActionCommand::ShareFood { amount: n, .. } | ActionCommand::Rob { quantity: n, .. } if *n <= 0 => {
            return Err(ValidationError::NonPositiveAmount(*n))
        }
        _ => {}
    }
    let allowed = match phase {
        PhaseKind::Plan | PhaseKind::Observe => matches!(action, ActionCommand::DoNothing { .. }),
        PhaseKind::Act => !matches!(action, ActionCommand::Score { .. }),
        PhaseKind::Vote => matches!(action, ActionCommand::Score { .. }),
        PhaseKind::Reflect => false,
    };
    if !allowed {
        return Err(ValidationError::WrongPhaseAction { phase, action: action.name().to_string() });
    }
    if let (ActionCommand::Score { target_agent_id, .. }, Some(expected)) = (action, vote_target) {
        if target_agent_id != expected {
            return Err(ValidationError::TargetMismatch {
                expected: expected.to_string(),
                found: target_agent_id.clone(),
            });
        }
    }
    Ok(())
}

fn parse_updates(
    map: &Map<String, Value>,
    field: &'static str,
    expectancy: bool,
) -> Result<BTreeMap<BeliefDimension, f64>, ValidationError> {
    let obj = match map.get(field) {
        None | Some(Value::Null) => return Err(ValidationError::MissingField(field)),
        Some(Value::Object(o)) => o,
        Some(_) => return Err(ValidationError::InvalidField { field, message: "expected an object".into() }),
    };
    let mut out = BTreeMap::new();
    for (key, value) in obj {
        let dim = BeliefDimension::from_name(key).ok_or_else(|| ValidationError::UnknownDimension(key.clone()))?;
        if expectancy && !dim.has_expectancy() {
            return Err(ValidationError::SustainabilityExpectancy);
        }
        let delta = value.as_f64().filter(|d| d.is_finite()).ok_or_else(|| ValidationError::InvalidField {
            field,
            message: format!("`{key}` is not a finite number"),
        })?;
        out.insert(dim, delta);
    }
    Ok(out)
}

/// Parses and checks one backend reply for the given phase.
///
/// `vote_target` must be supplied for the Vote phase; the score must name it.
pub fn validate_response(
    raw: &str,
    phase: PhaseKind,
    agent_id: &str,
    vote_target: Option<&str>,
) -> Result<Validated, ValidationError> {
    let map = extract_object(raw)?;
    if let Some(found) = lookup(&map, &["agent_id", "agent ID", "agentId"]) {
        let found = found.as_str().map(str::to_string).unwrap_or_else(|| found.to_string());
        if found != agent_id {
            return Err(ValidationError::AgentMismatch { expected: agent_id.to_string(), found });
        }
    } else {
        return Err(ValidationError::MissingField("agent_id"));
    }

    if phase == PhaseKind::Reflect {
        let payload = ReflectionPayload {
            causal_reasoning: text(&map, "causal_reasoning", &[])?,
            reflection_on_action: text(&map, "reflection_on_action", &[])?,
            future_inspiration: text(&map, "future_inspiration", &[])?,
            expectancy_updates: parse_updates(&map, "expectancy_updates", true)?,
            value_updates: parse_updates(&map, "value_updates", false)?,
            svo_note: map.get("svo_note").and_then(Value::as_f64),
        };
        return Ok(Validated::Reflection(payload));
    }

    let thinking = text(&map, "thinking", &[])?;
    let long_term_memory = text(&map, "long_term_memory", &[])?;
    let short_term_plan = text(&map, "short_term_plan", &[])?;
    let action = parse_action(map.get("action").ok_or(ValidationError::MissingField("action"))?)?;
    check_action(&action, phase, agent_id, vote_target)?;
    Ok(Validated::Decision(DecisionResponse {
        agent_id: agent_id.to_string(),
        thinking,
        long_term_memory,
        short_term_plan,
        action,
    }))
}

/// Canonical JSON text of a decision, in contract field order.
pub fn render_response(response: &DecisionResponse) -> String {
    serde_json::to_string(response).expect("decision responses always serialize")
}

pub fn render_reflection(agent_id: &str, payload: &ReflectionPayload) -> String {
    let mut value = serde_json::to_value(payload).expect("reflection payloads always serialize");
    if let Value::Object(map) = &mut value {
        map.insert("agent_id".into(), Value::String(agent_id.to_string()));
    }
    value.to_string()
}
