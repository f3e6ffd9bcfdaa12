//! Experiment configuration and the day-triggered scenario transforms.
//!
//! Config files are TOML with a `version = "exemplar-sim/1"` key and sections
//! named after the parameter tables they override. Every section is optional;
//! unset keys keep their defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cognition::{profiles, ComparisonMode, PromptVariant, RemoteConfig};
use crate::domain::{
    AgentId, AgentState, ArchetypeKind, BeliefDimension, BeliefSystem, EconomyParams, MoralArchetype, RoleAttributes,
    WorldParams,
};
use crate::error::{ConfigError, DomainError};
use crate::world::WorldState;

pub const CONFIG_VERSION: &str = "exemplar-sim/1";
pub const YURI_ID: &str = "elder_yuri";
pub const KORG_ID: &str = "warlord_korg";
/// Vote-target placeholder resolved to the Game 4 chosen one.
pub const CHOSEN_ONE_TOKEN: &str = "chosen_one";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Game1,
    Game2,
    Game3,
    Game4,
    Ablation1,
    Ablation2,
    Ablation3,
    AblationUninspiring,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::Game1,
        ExperimentId::Game2,
        ExperimentId::Game3,
        ExperimentId::Game4,
        ExperimentId::Ablation1,
        ExperimentId::Ablation2,
        ExperimentId::Ablation3,
        ExperimentId::AblationUninspiring,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Game1 => "game1",
            ExperimentId::Game2 => "game2",
            ExperimentId::Game3 => "game3",
            ExperimentId::Game4 => "game4",
            ExperimentId::Ablation1 => "ablation1",
            ExperimentId::Ablation2 => "ablation2",
            ExperimentId::Ablation3 => "ablation3",
            ExperimentId::AblationUninspiring => "ablation_uninspiring",
        }
    }

    /// Exemplar roles present at the start of a run.
    pub fn default_exemplars(self) -> Vec<ArchetypeKind> {
        match self {
            ExperimentId::Game3 => vec![ArchetypeKind::RoleModelProsocial, ArchetypeKind::WarlordCompetitor],
            ExperimentId::Game4 => vec![],
            _ => vec![ArchetypeKind::RoleModelProsocial],
        }
    }

    pub fn default_vote_targets(self) -> Vec<AgentId> {
        match self {
            ExperimentId::Game3 => vec![YURI_ID.into(), KORG_ID.into()],
            ExperimentId::Game4 => vec![CHOSEN_ONE_TOKEN.into()],
            _ => vec![YURI_ID.into()],
        }
    }

    pub fn comparison_mode(self) -> ComparisonMode {
        match self {
            ExperimentId::Ablation2 => ComparisonMode::Halved,
            ExperimentId::Ablation3 => ComparisonMode::Removed,
            ExperimentId::AblationUninspiring => ComparisonMode::Muted,
            _ => ComparisonMode::Full,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentId::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| ConfigError::Schema {
            field: "experiment.id".into(),
            message: format!("unknown experiment `{s}`"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChosenOne {
    Random,
    Agent(AgentId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Scripted,
    Remote(RemoteConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleAttributeSet {
    pub role_model: RoleAttributes,
    pub warlord: RoleAttributes,
    pub follower: RoleAttributes,
}

/// Initial belief rows by agent type, plus the row an exemplar collapses into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialBeliefs {
    pub role_model: BeliefSystem,
    pub warlord: BeliefSystem,
    pub follower: BeliefSystem,
    pub collapsed: BeliefSystem,
}

impl Default for InitialBeliefs {
    fn default() -> Self {
        let row = |e, v| BeliefSystem::from_rows(e, v).expect("default belief rows are in range");
        Self {
            role_model: row([0.70, 0.60, 0.80, 0.60], [0.90, 0.80, -0.90, -1.00, 0.90]),
            warlord: row([0.20, 0.10, 0.90, 0.80], [-0.50, -0.60, 0.80, 0.90, -0.70]),
            follower: row([0.30, 0.25, 0.50, 0.40], [0.40, 0.30, 0.70, 0.70, 0.30]),
            collapsed: row([0.10, 0.10, 0.90, 0.85], [-0.70, -0.80, 0.90, 0.85, -0.80]),
        }
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment_id: ExperimentId,
    pub seed: u64,
    pub exemplars: Vec<ArchetypeKind>,
    pub follower_count: usize,
    pub moral_type_mix: BTreeMap<ArchetypeKind, usize>,
    pub follower_goal: String,
    pub initial_beliefs: InitialBeliefs,
    pub attributes: RoleAttributeSet,
    pub world: WorldParams,
    pub economy: EconomyParams,
    pub vote_targets: Vec<AgentId>,
    pub chosen_one: Option<ChosenOne>,
    pub exemplar_reflects: bool,
    pub prompt_variant: PromptVariant,
    pub max_repair_retries: u32,
    pub backend: BackendConfig,
}

pub fn default_mix() -> BTreeMap<ArchetypeKind, usize> {
    BTreeMap::from([
        (ArchetypeKind::Universal, 1),
        (ArchetypeKind::Reciprocal, 2),
        (ArchetypeKind::Kin, 1),
        (ArchetypeKind::ReproductiveSelfish, 3),
    ])
}

impl ExperimentConfig {
    /// Defaults for an experiment, as if loaded from a file naming only the id.
    pub fn for_experiment(experiment_id: ExperimentId, seed: u64) -> Self {
        Self {
            experiment_id,
            seed,
            exemplars: experiment_id.default_exemplars(),
            follower_count: 7,
            moral_type_mix: default_mix(),
            follower_goal: profiles::FOLLOWER_GOAL.into(),
            initial_beliefs: InitialBeliefs::default(),
            attributes: RoleAttributeSet {
                role_model: RoleAttributes::role_model(),
                warlord: RoleAttributes::warlord(),
                follower: RoleAttributes::follower(),
            },
            world: WorldParams::default(),
            economy: EconomyParams::default(),
            vote_targets: experiment_id.default_vote_targets(),
            chosen_one: (experiment_id == ExperimentId::Game4).then_some(ChosenOne::Random),
            exemplar_reflects: false,
            prompt_variant: PromptVariant::Base,
            max_repair_retries: 2,
            backend: BackendConfig::Scripted,
        }
    }

    /// Cross-field checks.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |m: String| Err(ConfigError::Invariant(m));
        self.world.validate().map_err(|e| ConfigError::Invariant(e.to_string()))?;
        let mix_total: usize = self.moral_type_mix.values().sum();
        if mix_total != self.follower_count {
            return inv(format!("follower_count is {} but moral_type_mix sums to {mix_total}", self.follower_count));
        }
        if let Some(k) = self.moral_type_mix.keys().find(|k| !k.is_follower()) {
            return inv(format!("moral_type_mix names non-follower archetype `{k}`"));
        }
        if let Some(k) = self.exemplars.iter().find(|k| !k.is_exemplar()) {
            return inv(format!("exemplars names non-exemplar archetype `{k}`"));
        }
        let distinct: BTreeSet<_> = self.exemplars.iter().collect();
        if distinct.len() != self.exemplars.len() {
            return inv("exemplars lists a role twice".into());
        }
        let has = |k| self.exemplars.contains(&k);
        match self.experiment_id {
            ExperimentId::Game3
                if !(has(ArchetypeKind::RoleModelProsocial) && has(ArchetypeKind::WarlordCompetitor)) =>
            {
                return inv("game3 requires both the role model and the warlord as exemplars".into())
            }
            ExperimentId::Game4 if self.chosen_one.is_none() => return inv("game4 requires chosen_one".into()),
            ExperimentId::Game4 => {}
            id if !has(ArchetypeKind::RoleModelProsocial) => {
                return inv(format!("{id} requires the prosocial role model as an exemplar"))
            }
            _ => {}
        }
        if self.chosen_one.is_some() && self.experiment_id != ExperimentId::Game4 {
            return inv("chosen_one is only meaningful for game4".into());
        }
        let ids: BTreeSet<AgentId> = self.agent_ids().into_iter().collect();
        if let Some(ChosenOne::Agent(id)) = &self.chosen_one {
            if !ids.contains(id) || !self.follower_ids().contains(id) {
                return inv(format!("chosen_one `{id}` is not a follower id"));
            }
        }
        for t in &self.vote_targets {
            let known = ids.contains(t) || (t == CHOSEN_ONE_TOKEN && self.chosen_one.is_some());
            if !known {
                return inv(format!("vote target `{t}` does not name an agent"));
            }
        }
        if let BackendConfig::Remote(r) = &self.backend {
            if r.base_url.trim().is_empty() || r.model.trim().is_empty() {
                return inv("remote backend requires base_url and model".into());
            }
            if r.max_attempts == 0 {
                return inv("llm_backend.max_attempts must be at least 1".into());
            }
        }
        Ok(())
    }

    pub fn exemplar_ids(&self) -> Vec<AgentId> {
        self.exemplars.iter().map(|k| exemplar_id(*k).to_string()).collect()
    }

    /// Follower ids in creation order, e.g. `universal_1`, `reciprocal_1`, `reciprocal_2`.
    pub fn follower_ids(&self) -> Vec<AgentId> {
        let mut out = Vec::new();
        for kind in ArchetypeKind::FOLLOWERS {
            let n = self.moral_type_mix.get(&kind).copied().unwrap_or(0);
            out.extend((1..=n).map(|i| format!("{}_{i}", kind.id_prefix())));
        }
        out
    }

    pub fn agent_ids(&self) -> Vec<AgentId> {
        let mut ids = self.exemplar_ids();
        ids.extend(self.follower_ids());
        ids
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("configs always serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn comparison_mode(&self) -> ComparisonMode {
        self.experiment_id.comparison_mode()
    }

    /// Day on which the prosocial exemplar collapses, for Game 2 only.
    pub fn collapse_day(&self) -> Option<u32> {
        (self.experiment_id == ExperimentId::Game2).then_some(self.world.collapse_day)
    }
}

pub fn exemplar_id(kind: ArchetypeKind) -> &'static str {
    match kind {
        ArchetypeKind::WarlordCompetitor => KORG_ID,
        _ => YURI_ID,
    }
}

/// Human-readable name used in framing texts.
pub fn display_name(id: &str) -> String {
    match id {
        YURI_ID => "Elder Yuri".into(),
        KORG_ID => "Warlord Korg".into(),
        other => other.into(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    version: String,
    experiment: ExperimentSection,
    #[serde(default)]
    global_world_parameters: Option<toml::Table>,
    #[serde(default)]
    economy: Option<toml::Table>,
    #[serde(default)]
    agent_state_attributes: AttributeSection,
    #[serde(default)]
    initial_belief_configurations: BeliefSection,
    #[serde(default)]
    agent_type_distribution: DistributionSection,
    #[serde(default)]
    prompts: PromptSection,
    #[serde(default)]
    llm_backend: Option<toml::Table>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    id: ExperimentId,
    #[serde(default)]
    seed: u64,
    exemplars: Option<Vec<ArchetypeKind>>,
    vote_targets: Option<Vec<AgentId>>,
    chosen_one: Option<String>,
    #[serde(default)]
    exemplar_reflects: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeSection {
    role_model: Option<toml::Table>,
    warlord: Option<toml::Table>,
    follower: Option<toml::Table>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BeliefSection {
    role_model: Option<toml::Table>,
    warlord: Option<toml::Table>,
    follower: Option<toml::Table>,
    collapsed: Option<toml::Table>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionSection {
    follower_count: Option<usize>,
    mix: Option<BTreeMap<ArchetypeKind, usize>>,
    goal: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PromptSection {
    variant: Option<String>,
    max_repair_retries: Option<u32>,
}

fn merge(base: &mut toml::Table, patch: &toml::Table) {
    for (k, v) in patch {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) => merge(b, p),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

/// Applies a partial table on top of `base`, reporting errors with a dotted field path.
fn overlay<T: Serialize + DeserializeOwned>(
    base: &T,
    patch: Option<&toml::Table>,
    section: &str,
) -> Result<T, ConfigError> {
    let Some(patch) = patch else {
        return serde_json::to_value(base).and_then(serde_json::from_value).map_err(schema(section));
    };
    let mut table = match toml::Value::try_from(base).map_err(schema(section))? {
        toml::Value::Table(t) => t,
        _ => unreachable!("sections serialize to tables"),
    };
    merge(&mut table, patch);
    serde_path_to_error::deserialize::<_, T>(toml::Value::Table(table)).map_err(|e| {
        let inner = e.path().to_string();
        let field = if inner == "." { section.to_string() } else { format!("{section}.{inner}") };
        ConfigError::Schema { field, message: e.into_inner().to_string() }
    })
}

fn schema<E: fmt::Display>(section: &str) -> impl Fn(E) -> ConfigError + '_ {
    move |e| ConfigError::Schema { field: section.to_string(), message: e.to_string() }
}

/// Parses and validates config text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::new(text);
    let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
        field: e.path().to_string(),
        message: e.into_inner().message().trim().to_string(),
    })?;
    if file.version != CONFIG_VERSION {
        return Err(ConfigError::Schema {
            field: "version".into(),
            message: format!("expected `{CONFIG_VERSION}`, found `{}`", file.version),
        });
    }
    let id = file.experiment.id;
    let mut cfg = ExperimentConfig::for_experiment(id, file.experiment.seed);

    let world_patch = file.global_world_parameters.as_ref();
    if id == ExperimentId::Game2 && !world_patch.is_some_and(|t| t.contains_key("collapse_day")) {
        return Err(ConfigError::Invariant("game2 requires global_world_parameters.collapse_day".into()));
    }
    cfg.world = overlay(&cfg.world, world_patch, "global_world_parameters")?;
    cfg.economy = overlay(&cfg.economy, file.economy.as_ref(), "economy")?;

    let attrs = &file.agent_state_attributes;
    cfg.attributes.role_model =
        overlay(&cfg.attributes.role_model, attrs.role_model.as_ref(), "agent_state_attributes.role_model")?;
    cfg.attributes.warlord =
        overlay(&cfg.attributes.warlord, attrs.warlord.as_ref(), "agent_state_attributes.warlord")?;
    cfg.attributes.follower =
        overlay(&cfg.attributes.follower, attrs.follower.as_ref(), "agent_state_attributes.follower")?;

    let b = &file.initial_belief_configurations;
    let ib = &mut cfg.initial_beliefs;
    ib.role_model = overlay(&ib.role_model, b.role_model.as_ref(), "initial_belief_configurations.role_model")?;
    ib.warlord = overlay(&ib.warlord, b.warlord.as_ref(), "initial_belief_configurations.warlord")?;
    ib.follower = overlay(&ib.follower, b.follower.as_ref(), "initial_belief_configurations.follower")?;
    ib.collapsed = overlay(&ib.collapsed, b.collapsed.as_ref(), "initial_belief_configurations.collapsed")?;

    let dist = file.agent_type_distribution;
    if let Some(mix) = dist.mix {
        cfg.moral_type_mix = mix;
    }
    cfg.follower_count = dist.follower_count.unwrap_or_else(|| cfg.moral_type_mix.values().sum());
    if let Some(goal) = dist.goal {
        cfg.follower_goal = goal;
    }

    if let Some(v) = file.prompts.variant {
        cfg.prompt_variant = v.parse()?;
    }
    if let Some(n) = file.prompts.max_repair_retries {
        cfg.max_repair_retries = n;
    }

    if let Some(table) = file.llm_backend {
        cfg.backend = parse_backend(table)?;
    }

    let ex = file.experiment;
    if let Some(e) = ex.exemplars {
        cfg.exemplars = e;
    }
    if let Some(t) = ex.vote_targets {
        cfg.vote_targets = t;
    }
    cfg.chosen_one = match ex.chosen_one.as_deref() {
        None => None,
        Some("random") => Some(ChosenOne::Random),
        Some(id) => Some(ChosenOne::Agent(id.to_string())),
    };
    cfg.exemplar_reflects = ex.exemplar_reflects;

    cfg.validate()?;
    Ok(cfg)
}

fn parse_backend(mut table: toml::Table) -> Result<BackendConfig, ConfigError> {
    let kind = match table.remove("kind") {
        None => "scripted".to_string(),
        Some(toml::Value::String(s)) => s,
        Some(other) => {
            return Err(ConfigError::Schema {
                field: "llm_backend.kind".into(),
                message: format!("expected a string, found {other}"),
            })
        }
    };
    match kind.as_str() {
        "scripted" if table.is_empty() => Ok(BackendConfig::Scripted),
        "scripted" => Err(ConfigError::Schema {
            field: "llm_backend".into(),
            message: "the scripted backend takes no options".into(),
        }),
        "remote" => Ok(BackendConfig::Remote(overlay(&RemoteConfig::default(), Some(&table), "llm_backend")?)),
        other => Err(ConfigError::Schema {
            field: "llm_backend.kind".into(),
            message: format!("unknown backend `{other}` (expected scripted or remote)"),
        }),
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

/// Initial world for a config: exemplars first, then followers by mix.
pub fn build_world(cfg: &ExperimentConfig) -> Result<WorldState, DomainError> {
    let mut agents = Vec::new();
    let food = cfg.world.init_food;
    for kind in &cfg.exemplars {
        let (attrs, beliefs, goal, profile) = match kind {
            ArchetypeKind::WarlordCompetitor => (
                &cfg.attributes.warlord,
                &cfg.initial_beliefs.warlord,
                profiles::WARLORD_GOAL,
                profiles::WARLORD.to_string(),
            ),
            _ => (
                &cfg.attributes.role_model,
                &cfg.initial_beliefs.role_model,
                profiles::ROLE_MODEL_GOAL,
                profiles::role_model_profile(),
            ),
        };
        let mut attrs = attrs.clone();
        attrs.max_hp = cfg.world.max_hp;
        let archetype = MoralArchetype::new(*kind, profile)?;
        agents.push(AgentState::new(exemplar_id(*kind), archetype, goal, &attrs, food, beliefs.clone()));
    }
    let mut follower_attrs = cfg.attributes.follower.clone();
    follower_attrs.initial_hp = cfg.world.init_hp_follower;
    follower_attrs.max_hp = cfg.world.max_hp;
    for kind in ArchetypeKind::FOLLOWERS {
        for i in 1..=cfg.moral_type_mix.get(&kind).copied().unwrap_or(0) {
            let archetype = MoralArchetype::new(kind, profiles::profile_for(kind))?;
            agents.push(AgentState::new(
                format!("{}_{i}", kind.id_prefix()),
                archetype,
                cfg.follower_goal.clone(),
                &follower_attrs,
                food,
                cfg.initial_beliefs.follower.clone(),
            ));
        }
    }
    Ok(WorldState::new(cfg.world.clone(), cfg.economy.clone(), agents, cfg.seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioEventKind {
    Collapse,
    ProphecyBroadcast,
    ChosenOneSelfNote,
    AblationFraming,
    OutcomeInterception,
    ProfileSwap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    /// 0 means every day.
    pub trigger_day: u32,
    pub kind: ScenarioEventKind,
    pub payload: String,
}

/// The event schedule implied by a config.
pub fn scenario_events(cfg: &ExperimentConfig) -> Vec<ScenarioEvent> {
    let ev = |trigger_day, kind, payload: String| ScenarioEvent { trigger_day, kind, payload };
    match cfg.experiment_id {
        ExperimentId::Game2 => {
            vec![ev(cfg.world.collapse_day, ScenarioEventKind::Collapse, profiles::COLLAPSE_ANNOUNCEMENT.into())]
        }
        ExperimentId::Game4 => vec![
            ev(1, ScenarioEventKind::ChosenOneSelfNote, profiles::CHOSEN_ONE_NOTE.into()),
            ev(1, ScenarioEventKind::ProphecyBroadcast, profiles::prophecy("[Chosen One ID]")),
        ],
        ExperimentId::Ablation1 => {
            vec![ev(1, ScenarioEventKind::OutcomeInterception, "exemplar prosocial actions fail".into())]
        }
        ExperimentId::Ablation2 => {
            vec![ev(0, ScenarioEventKind::AblationFraming, profiles::unattainable_framing(&display_name(YURI_ID)))]
        }
        ExperimentId::AblationUninspiring => {
            vec![ev(1, ScenarioEventKind::ProfileSwap, profiles::STRATEGIST_KHAN.into())]
        }
        ExperimentId::Game1 | ExperimentId::Game3 | ExperimentId::Ablation3 => vec![],
    }
}

/// Output of applying one day's events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioDay {
    pub announcements: Vec<String>,
    /// Extra prompt text per agent for this day.
    pub framing: BTreeMap<AgentId, Vec<String>>,
}

/// Replaces an exemplar's beliefs with the collapsed row and returns the new goal.
pub fn collapse_transform(collapsed_row: &BeliefSystem) -> (BeliefSystem, String) {
    (collapsed_row.clone(), profiles::COLLAPSE_GOAL.to_string())
}

/// Uniform draw over sorted follower ids using the run seed.
pub fn select_chosen_one(cfg: &ExperimentConfig, state: &WorldState) -> Option<AgentId> {
    match cfg.chosen_one.as_ref()? {
        ChosenOne::Agent(id) => Some(id.clone()),
        ChosenOne::Random => {
            let followers: Vec<&AgentId> =
                state.agents.values().filter(|a| !a.is_exemplar()).map(|a| &a.agent_id).collect();
            if followers.is_empty() {
                return None;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            Some(followers[rng.random_range(0..followers.len())].clone())
        }
    }
}

/// Applies the events due on `day`. One-shot events are guarded, so a repeat call changes nothing.
pub fn apply_scenario_events(state: &mut WorldState, day: u32, cfg: &ExperimentConfig) -> ScenarioDay {
    let mut out = ScenarioDay::default();
    for event in scenario_events(cfg) {
        if event.trigger_day != 0 && event.trigger_day != day {
            continue;
        }
        if event.trigger_day != 0 && !state.fired_events.insert(format!("{:?}@{day}", event.kind)) {
            continue;
        }
        match event.kind {
            ScenarioEventKind::Collapse => {
                if let Some(yuri) = state.agents.get_mut(YURI_ID) {
                    let (beliefs, goal) = collapse_transform(&cfg.initial_beliefs.collapsed);
                    yuri.beliefs = beliefs;
                    yuri.goal = goal;
                    state.collapsed_on = Some(day);
                    state.pending_announcements.push(event.payload.clone());
                    out.announcements.push(event.payload);
                }
            }
            ScenarioEventKind::ChosenOneSelfNote => {
                if let Some(chosen) = select_chosen_one(cfg, state) {
                    if let Some(agent) = state.agents.get_mut(&chosen) {
                        agent.self_notes.push(event.payload);
                    }
                    state.chosen_one = Some(chosen);
                }
            }
            ScenarioEventKind::ProphecyBroadcast => {
                let Some(chosen) = state.chosen_one.clone().or_else(|| select_chosen_one(cfg, state)) else { continue };
                let text = profiles::prophecy(&chosen);
                for agent in state.agents.values_mut().filter(|a| !a.is_exemplar() && a.agent_id != chosen) {
                    agent.self_notes.push(text.clone());
                }
            }
            ScenarioEventKind::AblationFraming => {
                for agent in state.agents.values().filter(|a| a.alive && !a.is_exemplar()) {
                    out.framing.entry(agent.agent_id.clone()).or_default().push(event.payload.clone());
                }
            }
            ScenarioEventKind::OutcomeInterception => state.exemplar_prosocial_fails = true,
            ScenarioEventKind::ProfileSwap => {
                if let Some(yuri) = state.agents.get_mut(YURI_ID) {
                    yuri.archetype.profile_text = event.payload;
                    yuri.goal = profiles::KHAN_GOAL.into();
                }
            }
        }
    }
    out
}

/// Value belief of one dimension for every agent, for before/after comparisons.
pub fn value_snapshot(state: &WorldState) -> BTreeMap<AgentId, BTreeMap<BeliefDimension, f64>> {
    state.agents.iter().map(|(id, a)| (id.clone(), a.beliefs.values().clone())).collect()
}
