//! Action resolution, end-of-day upkeep and the Tribe Daily digest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{ActionCommand, AgentId, AgentState, EconomyParams, Valence, WorldParams};
use crate::error::DomainError;

/// Publicly observable track record of one agent, built from digests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PublicRecord {
    pub last_valence: Option<Valence>,
    pub prosocial_successes: u32,
    pub prosocial_failures: u32,
    pub antisocial_successes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    /// Last completed day; 0 before the first day has run.
    pub day: u32,
    pub params: WorldParams,
    pub economy: EconomyParams,
    pub agents: BTreeMap<AgentId, AgentState>,
    /// Unordered pairs, stored with the smaller id first.
    pub alliances: BTreeSet<(AgentId, AgentId)>,
    pub sustainability_pool: i64,
    pub pending_announcements: Vec<String>,
    pub rng_seed: u64,
    /// Set by the unsuccessful-exemplar condition: exemplar prosocial actions always fail.
    pub exemplar_prosocial_fails: bool,
    pub chosen_one: Option<AgentId>,
    pub collapsed_on: Option<u32>,
    pub fired_events: BTreeSet<String>,
    pub public_record: BTreeMap<AgentId, PublicRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaField {
    Food,
    Hp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delta {
    pub agent_id: AgentId,
    pub field: DeltaField,
    pub amount: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub actor: AgentId,
    pub action: ActionCommand,
    pub succeeded: bool,
    pub deltas: Vec<Delta>,
    pub pool_delta: i64,
    pub public_line: Option<String>,
}

impl ActionOutcome {
    fn quiet(actor: &str, action: ActionCommand, succeeded: bool) -> Self {
        Self { actor: actor.to_string(), action, succeeded, deltas: Vec::new(), pool_delta: 0, public_line: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyDigest {
    pub day: u32,
    pub lines: Vec<String>,
}

impl DailyDigest {
    /// Single-line form used inside injected memories.
    pub fn summary(&self) -> String {
        if self.lines.is_empty() {
            "No notable events.".to_string()
        } else {
            self.lines.join(" ")
        }
    }
}

impl fmt::Display for DailyDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tribe Daily, Day {}:", self.day)?;
        for line in &self.lines {
            write!(f, "\n- {line}")?;
        }
        Ok(())
    }
}

fn alliance_key(a: &str, b: &str) -> (AgentId, AgentId) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl WorldState {
    pub fn new(params: WorldParams, economy: EconomyParams, agents: Vec<AgentState>, rng_seed: u64) -> Self {
        let public_record = agents.iter().map(|a| (a.agent_id.clone(), PublicRecord::default())).collect();
        Self {
            day: 0,
            sustainability_pool: params.sustainability_pool_init,
            params,
            economy,
            agents: agents.into_iter().map(|a| (a.agent_id.clone(), a)).collect(),
            alliances: BTreeSet::new(),
            pending_announcements: Vec::new(),
            rng_seed,
            exemplar_prosocial_fails: false,
            chosen_one: None,
            collapsed_on: None,
            fired_events: BTreeSet::new(),
            public_record,
        }
    }

    /// Fixed iteration order: role models first, then followers, each sorted by id.
    pub fn agent_order(&self) -> Vec<AgentId> {
        let (mut exemplars, mut followers): (Vec<_>, Vec<_>) = self.agents.values().partition(|a| a.is_exemplar());
        exemplars.sort_by(|a, b| a.agent_id.cmp(&b.agent_id));
        followers.sort_by(|a, b| a.agent_id.cmp(&b.agent_id));
        exemplars.into_iter().chain(followers).map(|a| a.agent_id.clone()).collect()
    }

    pub fn living_order(&self) -> Vec<AgentId> {
        self.agent_order().into_iter().filter(|id| self.agents[id].alive).collect()
    }

    /// Agents followers look up to: role models plus a designated chosen one.
    pub fn exemplar_ids(&self) -> Vec<AgentId> {
        let mut ids: Vec<AgentId> =
            self.agents.values().filter(|a| a.is_exemplar()).map(|a| a.agent_id.clone()).collect();
        if let Some(c) = &self.chosen_one {
            if !ids.contains(c) {
                ids.push(c.clone());
            }
        }
        ids.sort();
        ids
    }

    pub fn exemplar_prosocial_successes(&self) -> u32 {
        self.exemplar_ids().iter().filter_map(|id| self.public_record.get(id)).map(|r| r.prosocial_successes).sum()
    }

    pub fn total_food(&self) -> i64 {
        self.agents.values().map(|a| a.food).sum()
    }

    fn living_target<'a>(&self, target: &'a str) -> Option<&'a str> {
        self.agents.get(target).filter(|a| a.alive).map(|_| target)
    }

    fn add_food(&mut self, id: &str, amount: i64, deltas: &mut Vec<Delta>) {
        if amount == 0 {
            return;
        }
        let agent = self.agents.get_mut(id).expect("delta target exists");
        agent.food += amount;
        deltas.push(Delta { agent_id: id.to_string(), field: DeltaField::Food, amount });
    }

    fn add_hp(&mut self, id: &str, amount: i64, deltas: &mut Vec<Delta>) {
        let agent = self.agents.get_mut(id).expect("delta target exists");
        let before = agent.hp;
        agent.set_hp(before + amount);
        let applied = agent.hp - before;
        if applied != 0 {
            deltas.push(Delta { agent_id: id.to_string(), field: DeltaField::Hp, amount: applied });
        }
    }

    /// Applies one action to the world.
    ///
    /// Unknown or dead targets turn the action into a failed outcome with no deltas.
    pub fn resolve_action(&mut self, actor: &str, action: ActionCommand) -> Result<ActionOutcome, DomainError> {
        match self.agents.get(actor) {
            None => return Err(DomainError::ContractViolation(format!("unknown actor `{actor}`"))),
            Some(a) if !a.alive => {
                return Err(DomainError::ContractViolation(format!("dead actor `{actor}` cannot act")))
            }
            Some(_) => {}
        }
        action.check(actor)?;

        if let Some(target) = action.target() {
            if self.living_target(target).is_none() {
                return Ok(ActionOutcome::quiet(actor, action, false));
            }
        }

        let actor_is_exemplar = self.agents[actor].is_exemplar();
        if self.exemplar_prosocial_fails && actor_is_exemplar && action.valence() == Some(Valence::Prosocial) {
            let target = action.target().unwrap_or_default();
            let line = match &action {
                ActionCommand::ShareFood { .. } => {
                    format!("Failed effort: {actor} tried to share food with {target}, but the effort came to nothing.")
                }
                _ => format!(
                    "Failed effort: {actor} tried to form an alliance with {target}, but the effort came to nothing."
                ),
            };
            let mut outcome = ActionOutcome::quiet(actor, action, false);
            outcome.public_line = Some(line);
            return Ok(outcome);
        }

        let mut deltas = Vec::new();
        let mut pool_delta = 0;
        let (succeeded, public_line) = match &action {
            ActionCommand::GatherFood => {
                let mut amount = self.economy.gather_food;
                if self.sustainability_pool < self.params.sustainability_threshold {
                    amount = (amount / 2).max(1);
                }
                self.add_food(actor, amount, &mut deltas);
                (true, None)
            }
            ActionCommand::ExploitResource => {
                let before = self.sustainability_pool;
                self.sustainability_pool = (before - self.economy.exploit_pool_cost).max(0);
                pool_delta = self.sustainability_pool - before;
                self.add_food(actor, self.economy.exploit_food, &mut deltas);
                (
                    true,
                    Some(format!(
                        "Resource exploitation warning: {actor} extracted resources destructively; the valley's reserve is now {}.",
                        self.sustainability_pool
                    )),
                )
            }
            ActionCommand::Rob { target_agent_id, quantity } => {
                let taken = (*quantity).min(self.agents[target_agent_id].food).max(0);
                self.add_food(target_agent_id, -taken, &mut deltas);
                self.add_food(actor, taken, &mut deltas);
                self.add_hp(target_agent_id, -self.economy.rob_damage, &mut deltas);
                (true, Some(format!("Robbery alert: {actor} robbed {target_agent_id} of {taken} food.")))
            }
            ActionCommand::ShareFood { target_agent_id, amount } => {
                let given = (*amount).min(self.agents[actor].food).max(0);
                if given == 0 {
                    (false, None)
                } else {
                    self.add_food(actor, -given, &mut deltas);
                    self.add_food(target_agent_id, given, &mut deltas);
                    (true, Some(format!("Food sharing: {actor} shared {given} food with {target_agent_id}.")))
                }
            }
            ActionCommand::FormAlliance { target_agent_id } => {
                let fresh = self.alliances.insert(alliance_key(actor, target_agent_id));
                self.agents.get_mut(actor).unwrap().allies.insert(target_agent_id.clone());
                self.agents.get_mut(target_agent_id.as_str()).unwrap().allies.insert(actor.to_string());
                let line = if fresh {
                    format!("Alliance formed: {actor} and {target_agent_id} are now allies.")
                } else {
                    format!("Alliance renewed: {actor} reaffirmed the alliance with {target_agent_id}.")
                };
                (true, Some(line))
            }
            ActionCommand::Rest => {
                self.add_hp(actor, self.economy.rest_hp, &mut deltas);
                (true, None)
            }
            ActionCommand::DoNothing { .. } | ActionCommand::Score { .. } => (true, None),
        };

        Ok(ActionOutcome { actor: actor.to_string(), action, succeeded, deltas, pool_delta, public_line })
    }

    /// Each living agent eats one food, or loses HP when it has none.
    pub fn daily_upkeep(&mut self) {
        let economy = self.economy.clone();
        for agent in self.agents.values_mut().filter(|a| a.alive) {
            if agent.food > 0 {
                agent.food = (agent.food - economy.upkeep_food).max(0);
            } else {
                let hp = agent.hp - economy.starvation_damage;
                agent.set_hp(hp);
            }
        }
    }

    /// Folds a day's outcomes into the public record used by observers and voters.
    pub fn record_public(&mut self, outcomes: &[ActionOutcome]) {
        for o in outcomes.iter().filter(|o| o.public_line.is_some()) {
            let Some(valence) = o.action.valence() else { continue };
            let rec = self.public_record.entry(o.actor.clone()).or_default();
            rec.last_valence = Some(valence);
            match (valence, o.succeeded) {
                (Valence::Prosocial, true) => rec.prosocial_successes += 1,
                (Valence::Prosocial, false) => rec.prosocial_failures += 1,
                (Valence::Antisocial, true) => rec.antisocial_successes += 1,
                _ => {}
            }
        }
    }
}

/// Orders announcements first, then public event lines in resolution order.
pub fn compose_digest(day: u32, outcomes: &[ActionOutcome], announcements: &[String]) -> DailyDigest {
    let lines = announcements.iter().cloned().chain(outcomes.iter().filter_map(|o| o.public_line.clone())).collect();
    DailyDigest { day, lines }
}

/// Renders the most recent `obs_mem_lines` memories, oldest first.
pub fn inject_memory(agent: &AgentState, obs_mem_lines: usize) -> String {
    let start = agent.memory_log.len().saturating_sub(obs_mem_lines);
    agent.memory_log[start..]
        .iter()
        .map(|m| {
            format!(
                "On Day {}, the Tribe Daily reported: '{}'. My reflection was: {}. My final state was: HP {}.",
                m.day, m.digest_text, m.future_inspiration, m.end_hp
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}
