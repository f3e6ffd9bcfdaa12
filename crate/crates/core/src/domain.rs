//! Shared domain types: beliefs, archetypes, agents, actions and the SVO score.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

pub type AgentId = String;

/// Global world parameters. Economy constants are carried alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldParams {
    pub max_hp: i64,
    pub init_hp_follower: i64,
    pub low_hp: i64,
    pub init_food: i64,
    pub max_days: u32,
    pub obs_mem_lines: usize,
    pub collapse_day: u32,
    pub sustainability_pool_init: i64,
    pub sustainability_threshold: i64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            max_hp: 400,
            init_hp_follower: 24,
            low_hp: 8,
            init_food: 6,
            max_days: 30,
            obs_mem_lines: 6,
            collapse_day: 15,
            sustainability_pool_init: 200,
            sustainability_threshold: 100,
        }
    }
}

impl WorldParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        let positives = [
            ("max_hp", self.max_hp),
            ("init_hp_follower", self.init_hp_follower),
            ("low_hp", self.low_hp),
            ("init_food", self.init_food),
            ("max_days", self.max_days as i64),
            ("obs_mem_lines", self.obs_mem_lines as i64),
            ("collapse_day", self.collapse_day as i64),
            ("sustainability_pool_init", self.sustainability_pool_init),
            ("sustainability_threshold", self.sustainability_threshold),
        ];
        for (name, v) in positives {
            if v <= 0 {
                return Err(DomainError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.collapse_day >= self.max_days {
            return Err(DomainError::InvalidParams(format!(
                "collapse_day ({}) must be before max_days ({})",
                self.collapse_day, self.max_days
            )));
        }
        if !(self.low_hp < self.init_hp_follower && self.init_hp_follower <= self.max_hp) {
            return Err(DomainError::InvalidParams("expected low_hp < init_hp_follower <= max_hp".into()));
        }
        Ok(())
    }
}

/// Integer economy applied by the world engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconomyParams {
    pub gather_food: i64,
    pub exploit_food: i64,
    pub exploit_pool_cost: i64,
    pub rob_damage: i64,
    pub rest_hp: i64,
    pub upkeep_food: i64,
    pub starvation_damage: i64,
}

impl Default for EconomyParams {
    fn default() -> Self {
        Self {
            gather_food: 2,
            exploit_food: 4,
            exploit_pool_cost: 4,
            rob_damage: 1,
            rest_hp: 2,
            upkeep_food: 1,
            starvation_damage: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchetypeKind {
    Universal,
    Reciprocal,
    Kin,
    ReproductiveSelfish,
    RoleModelProsocial,
    WarlordCompetitor,
}

impl ArchetypeKind {
    pub const FOLLOWERS: [ArchetypeKind; 4] =
        [ArchetypeKind::Universal, ArchetypeKind::Reciprocal, ArchetypeKind::Kin, ArchetypeKind::ReproductiveSelfish];

    pub fn is_follower(self) -> bool {
        !self.is_exemplar()
    }

    pub fn is_exemplar(self) -> bool {
        matches!(self, ArchetypeKind::RoleModelProsocial | ArchetypeKind::WarlordCompetitor)
    }

    /// Label used in logs (`aspirant_type`) and config files.
    pub fn label(self) -> &'static str {
        match self {
            ArchetypeKind::Universal => "universal",
            ArchetypeKind::Reciprocal => "reciprocal",
            ArchetypeKind::Kin => "kin",
            ArchetypeKind::ReproductiveSelfish => "reproductive_selfish",
            ArchetypeKind::RoleModelProsocial => "role_model_prosocial",
            ArchetypeKind::WarlordCompetitor => "warlord_competitor",
        }
    }

    /// Prefix of generated follower ids, e.g. `reproductive_1`.
    pub fn id_prefix(self) -> &'static str {
        match self {
            ArchetypeKind::ReproductiveSelfish => "reproductive",
            other => other.label(),
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        [
            ArchetypeKind::Universal,
            ArchetypeKind::Reciprocal,
            ArchetypeKind::Kin,
            ArchetypeKind::ReproductiveSelfish,
            ArchetypeKind::RoleModelProsocial,
            ArchetypeKind::WarlordCompetitor,
        ]
        .into_iter()
        .find(|k| k.label() == label)
    }
}

impl fmt::Display for ArchetypeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// An archetype together with the system prompt that instantiates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoralArchetype {
    pub kind: ArchetypeKind,
    pub profile_text: String,
}

impl MoralArchetype {
    pub fn new(kind: ArchetypeKind, profile_text: impl Into<String>) -> Result<Self, DomainError> {
        let profile_text = profile_text.into();
        if profile_text.trim().is_empty() {
            return Err(DomainError::ContractViolation(format!("archetype {kind} has an empty profile")));
        }
        Ok(Self { kind, profile_text })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefDimension {
    Cooperation,
    Sharing,
    Exploitation,
    Robbery,
    Sustainability,
}

impl BeliefDimension {
    pub const ALL: [BeliefDimension; 5] = [
        BeliefDimension::Cooperation,
        BeliefDimension::Sharing,
        BeliefDimension::Exploitation,
        BeliefDimension::Robbery,
        BeliefDimension::Sustainability,
    ];

    /// Dimensions that carry an expectancy belief.
    pub const EXPECTANCY: [BeliefDimension; 4] = [
        BeliefDimension::Cooperation,
        BeliefDimension::Sharing,
        BeliefDimension::Exploitation,
        BeliefDimension::Robbery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BeliefDimension::Cooperation => "cooperation",
            BeliefDimension::Sharing => "sharing",
            BeliefDimension::Exploitation => "exploitation",
            BeliefDimension::Robbery => "robbery",
            BeliefDimension::Sustainability => "sustainability",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let lowered = name.trim().to_ascii_lowercase();
        Self::ALL.into_iter().find(|d| d.name() == lowered)
    }

    pub fn has_expectancy(self) -> bool {
        self != BeliefDimension::Sustainability
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefKind {
    Expectancy,
    Value,
}

/// Clamps a belief into its legal range: `[0, 1]` for expectancies, `[-1, 1]` for values.
pub fn clamp_belief(kind: BeliefKind, x: f64) -> Result<f64, DomainError> {
    if !x.is_finite() {
        return Err(DomainError::ContractViolation(format!("belief must be finite, got {x}")));
    }
    Ok(match kind {
        BeliefKind::Expectancy => x.clamp(0.0, 1.0),
        BeliefKind::Value => x.clamp(-1.0, 1.0),
    })
}

/// Social value orientation: `(V_coop + V_share) - (V_expl + V_rob)`, in `[-4, 4]`.
///
/// The sustainability value does not enter the score.
pub fn svo_score(values: &BTreeMap<BeliefDimension, f64>) -> Result<f64, DomainError> {
    let get = |d: BeliefDimension| {
        values
            .get(&d)
            .copied()
            .ok_or_else(|| DomainError::ContractViolation(format!("value belief `{}` is missing", d.name())))
    };
    let cooperation = get(BeliefDimension::Cooperation)?;
    let sharing = get(BeliefDimension::Sharing)?;
    let exploitation = get(BeliefDimension::Exploitation)?;
    let robbery = get(BeliefDimension::Robbery)?;
    Ok((cooperation + sharing) - (exploitation + robbery))
}

/// Expectancy/value belief maps with enforced key sets and ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBeliefs")]
pub struct BeliefSystem {
    expectancy: BTreeMap<BeliefDimension, f64>,
    value: BTreeMap<BeliefDimension, f64>,
}

#[derive(Deserialize)]
struct RawBeliefs {
    expectancy: BTreeMap<BeliefDimension, f64>,
    value: BTreeMap<BeliefDimension, f64>,
}

impl TryFrom<RawBeliefs> for BeliefSystem {
    type Error = DomainError;

    fn try_from(raw: RawBeliefs) -> Result<Self, Self::Error> {
        BeliefSystem::new(raw.expectancy, raw.value)
    }
}

impl BeliefSystem {
    pub fn new(
        expectancy: BTreeMap<BeliefDimension, f64>,
        value: BTreeMap<BeliefDimension, f64>,
    ) -> Result<Self, DomainError> {
        if expectancy.contains_key(&BeliefDimension::Sustainability) {
            return Err(DomainError::ContractViolation("sustainability carries no expectancy belief".into()));
        }
        for d in BeliefDimension::EXPECTANCY {
            match expectancy.get(&d) {
                Some(x) if x.is_finite() && (0.0..=1.0).contains(x) => {}
                Some(x) => {
                    return Err(DomainError::ContractViolation(format!(
                        "expectancy `{}` = {x} is outside [0, 1]",
                        d.name()
                    )))
                }
                None => return Err(DomainError::ContractViolation(format!("expectancy `{}` is missing", d.name()))),
            }
        }
        for d in BeliefDimension::ALL {
            match value.get(&d) {
                Some(x) if x.is_finite() && (-1.0..=1.0).contains(x) => {}
                Some(x) => {
                    return Err(DomainError::ContractViolation(format!(
                        "value `{}` = {x} is outside [-1, 1]",
                        d.name()
                    )))
                }
                None => return Err(DomainError::ContractViolation(format!("value `{}` is missing", d.name()))),
            }
        }
        Ok(Self { expectancy, value })
    }

    /// Builds beliefs from positional rows in the order cooperation, sharing,
    /// exploitation, robbery (+ sustainability for values).
    pub fn from_rows(expectancy: [f64; 4], value: [f64; 5]) -> Result<Self, DomainError> {
        let e = BeliefDimension::EXPECTANCY.into_iter().zip(expectancy).collect();
        let v = BeliefDimension::ALL.into_iter().zip(value).collect();
        Self::new(e, v)
    }

    pub fn expectancy(&self) -> &BTreeMap<BeliefDimension, f64> {
        &self.expectancy
    }

    pub fn values(&self) -> &BTreeMap<BeliefDimension, f64> {
        &self.value
    }

    pub fn value(&self, d: BeliefDimension) -> f64 {
        self.value[&d]
    }

    pub fn expectancy_of(&self, d: BeliefDimension) -> Option<f64> {
        self.expectancy.get(&d).copied()
    }

    pub fn svo(&self) -> f64 {
        svo_score(&self.value).expect("belief system always holds every value dimension")
    }

    /// Adds signed deltas and clamps the results back into range.
    pub fn apply_updates(
        &mut self,
        expectancy_deltas: &BTreeMap<BeliefDimension, f64>,
        value_deltas: &BTreeMap<BeliefDimension, f64>,
    ) -> Result<(), DomainError> {
        for (d, delta) in expectancy_deltas {
            if !d.has_expectancy() {
                return Err(DomainError::ContractViolation("sustainability carries no expectancy belief".into()));
            }
            let slot = self.expectancy.get_mut(d).expect("expectancy keys are complete");
            *slot = clamp_belief(BeliefKind::Expectancy, *slot + delta)?;
        }
        for (d, delta) in value_deltas {
            let slot = self.value.get_mut(d).expect("value keys are complete");
            *slot = clamp_belief(BeliefKind::Value, *slot + delta)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoralGroup {
    Prosocial,
    Selfish,
}

impl MoralGroup {
    pub fn label(self) -> &'static str {
        match self {
            MoralGroup::Prosocial => "prosocial",
            MoralGroup::Selfish => "selfish",
        }
    }
}

impl fmt::Display for MoralGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Analysis grouping of follower archetypes.
pub fn moral_group(kind: ArchetypeKind) -> Result<MoralGroup, DomainError> {
    match kind {
        ArchetypeKind::Universal | ArchetypeKind::Reciprocal | ArchetypeKind::Kin => Ok(MoralGroup::Prosocial),
        ArchetypeKind::ReproductiveSelfish => Ok(MoralGroup::Selfish),
        other => Err(DomainError::NotAFollower(other)),
    }
}

/// Per-role physical attributes. Reproduction fields are carried but drive no mechanic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoleAttributes {
    pub initial_hp: i64,
    pub max_hp: i64,
    pub age: u32,
    pub max_age: u32,
    pub physical_ability: f64,
    pub min_reproduction_hp: i64,
    pub reproduction_hp_cost: i64,
    pub min_reproduction_age: u32,
    pub offspring_initial_hp: i64,
}

impl Default for RoleAttributes {
    fn default() -> Self {
        Self::follower()
    }
}

impl RoleAttributes {
    pub fn role_model() -> Self {
        Self { initial_hp: 396, age: 28, max_age: 70, physical_ability: 8.5, ..Self::follower() }
    }

    pub fn warlord() -> Self {
        Self { initial_hp: 380, age: 30, max_age: 65, physical_ability: 9.0, ..Self::follower() }
    }

    pub fn follower() -> Self {
        Self {
            initial_hp: 24,
            max_hp: 400,
            age: 22,
            max_age: 60,
            physical_ability: 5.0,
            min_reproduction_hp: 12,
            reproduction_hp_cost: 10,
            min_reproduction_age: 4,
            offspring_initial_hp: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub day: u32,
    pub digest_text: String,
    pub future_inspiration: String,
    pub end_hp: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub agent_id: AgentId,
    pub archetype: MoralArchetype,
    pub goal: String,
    pub hp: i64,
    pub max_hp: i64,
    pub food: i64,
    pub age: u32,
    pub max_age: u32,
    pub physical_ability: f64,
    pub beliefs: BeliefSystem,
    pub allies: BTreeSet<AgentId>,
    pub children: u32,
    pub alive: bool,
    pub memory_log: Vec<MemoryEntry>,
    pub self_notes: Vec<String>,
}

impl AgentState {
    pub fn new(
        agent_id: impl Into<AgentId>,
        archetype: MoralArchetype,
        goal: impl Into<String>,
        attrs: &RoleAttributes,
        food: i64,
        beliefs: BeliefSystem,
    ) -> Self {
        Self {
            agent_id: agent_id.into(),
            archetype,
            goal: goal.into(),
            hp: attrs.initial_hp.min(attrs.max_hp),
            max_hp: attrs.max_hp,
            food,
            age: attrs.age,
            max_age: attrs.max_age,
            physical_ability: attrs.physical_ability,
            beliefs,
            allies: BTreeSet::new(),
            children: 0,
            alive: attrs.initial_hp > 0,
            memory_log: Vec::new(),
            self_notes: Vec::new(),
        }
    }

    pub fn kind(&self) -> ArchetypeKind {
        self.archetype.kind
    }

    pub fn is_exemplar(&self) -> bool {
        self.archetype.kind.is_exemplar()
    }

    /// Sets HP, clamping into `[0, max_hp]` and updating the alive flag.
    pub fn set_hp(&mut self, hp: i64) {
        self.hp = hp.clamp(0, self.max_hp);
        if self.hp == 0 {
            self.alive = false;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Valence {
    Prosocial,
    Antisocial,
    Neutral,
}

impl Valence {
    pub fn sign(self) -> i32 {
        match self {
            Valence::Prosocial => 1,
            Valence::Antisocial => -1,
            Valence::Neutral => 0,
        }
    }
}

/// One agent command. Serialized with an `action_type` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action_type", rename_all = "snake_case")]
pub enum ActionCommand {
    GatherFood,
    ShareFood { target_agent_id: AgentId, amount: i64 },
    FormAlliance { target_agent_id: AgentId },
    Rest,
    ExploitResource,
    Rob { target_agent_id: AgentId, quantity: i64 },
    DoNothing { reason: String },
    Score { target_agent_id: AgentId, score: i64, reason: String },
}

impl ActionCommand {
    pub fn do_nothing(reason: impl Into<String>) -> Self {
        ActionCommand::DoNothing { reason: reason.into() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ActionCommand::GatherFood => "gatherFood",
            ActionCommand::ShareFood { .. } => "shareFood",
            ActionCommand::FormAlliance { .. } => "formAlliance",
            ActionCommand::Rest => "rest",
            ActionCommand::ExploitResource => "exploitResource",
            ActionCommand::Rob { .. } => "rob",
            ActionCommand::DoNothing { .. } => "do_nothing",
            ActionCommand::Score { .. } => "score",
        }
    }

    pub fn target(&self) -> Option<&str> {
        match self {
            ActionCommand::ShareFood { target_agent_id, .. }
            | ActionCommand::FormAlliance { target_agent_id }
            | ActionCommand::Rob { target_agent_id, .. }
            | ActionCommand::Score { target_agent_id, .. } => Some(target_agent_id),
            _ => None,
        }
    }

    /// `None` for the rating action, which has no valence.
    pub fn valence(&self) -> Option<Valence> {
        match self {
            ActionCommand::ShareFood { .. } | ActionCommand::FormAlliance { .. } => Some(Valence::Prosocial),
            ActionCommand::ExploitResource | ActionCommand::Rob { .. } => Some(Valence::Antisocial),
            ActionCommand::GatherFood | ActionCommand::Rest | ActionCommand::DoNothing { .. } => Some(Valence::Neutral),
            ActionCommand::Score { .. } => None,
        }
    }

    /// The belief dimension an action exercises, if any.
    pub fn dimension(&self) -> Option<BeliefDimension> {
        match self {
            ActionCommand::FormAlliance { .. } => Some(BeliefDimension::Cooperation),
            ActionCommand::ShareFood { .. } => Some(BeliefDimension::Sharing),
            ActionCommand::ExploitResource => Some(BeliefDimension::Exploitation),
            ActionCommand::Rob { .. } => Some(BeliefDimension::Robbery),
            _ => None,
        }
    }

    /// Checks the action-local invariants: no self-targeting, positive amounts, score in 1..=10.
    pub fn check(&self, actor: &str) -> Result<(), DomainError> {
        if self.target() == Some(actor) {
            return Err(DomainError::ContractViolation(format!("{actor} cannot target itself")));
        }
        match self {
            ActionCommand::ShareFood { amount, .. } if *amount <= 0 => {
                Err(DomainError::ContractViolation(format!("share amount must be positive, got {amount}")))
            }
            ActionCommand::Rob { quantity, .. } if *quantity <= 0 => {
                Err(DomainError::ContractViolation(format!("rob quantity must be positive, got {quantity}")))
            }
            ActionCommand::Score { score, .. } if !(1..=10).contains(score) => {
                Err(DomainError::ContractViolation(format!("score must be within 1..=10, got {score}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ActionCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionCommand::GatherFood => write!(f, "gatherFood()"),
            ActionCommand::ShareFood { target_agent_id, amount } => {
                write!(f, "shareFood({target_agent_id}, {amount})")
            }
            ActionCommand::FormAlliance { target_agent_id } => write!(f, "formAlliance({target_agent_id})"),
            ActionCommand::Rest => write!(f, "rest()"),
            ActionCommand::ExploitResource => write!(f, "exploitResource()"),
            ActionCommand::Rob { target_agent_id, quantity } => write!(f, "rob({target_agent_id}, {quantity})"),
            ActionCommand::DoNothing { .. } => write!(f, "do_nothing()"),
            ActionCommand::Score { target_agent_id, score, .. } => write!(f, "score({target_agent_id}, {score})"),
        }
    }
}
