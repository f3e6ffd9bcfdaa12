//! The five-phase daily loop and whole-run orchestration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cognition::{
    build_prompt, decide_validated, CognitionBackend, Decided, DecisionRequest, ExemplarView, PhaseKind, PromptContext,
    PublicEvent, ReflectionPayload, RemoteBackend, RosterEntry, ScriptedBackend, Situation, Validated,
};
use crate::domain::{ActionCommand, AgentId, AgentState, MemoryEntry};
use crate::error::{BackendError, RunError, TelemetryError};
use crate::scenario::{
    apply_scenario_events, build_world, display_name, BackendConfig, ExperimentConfig, CHOSEN_ONE_TOKEN,
};
use crate::telemetry::{
    append_logs, checkpoint_path, load_checkpoint, log_path, new_run_id, save_checkpoint, truncate_log, CheckpointFile,
    EndOfDayState, LogEntry, PhaseRecord, RngState, VoteRecord, CHECKPOINT_VERSION,
};
use crate::world::{compose_digest, inject_memory, ActionOutcome, DailyDigest, WorldState};

/// Everything a run needs besides the world itself.
pub struct RunContext {
    pub run_id: String,
    pub config: ExperimentConfig,
    pub backend: Box<dyn CognitionBackend>,
    pub rng: ChaCha8Rng,
}

impl RunContext {
    pub fn new(run_id: impl Into<String>, config: ExperimentConfig, backend: Box<dyn CognitionBackend>) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self { run_id: run_id.into(), config, backend, rng }
    }
}

/// Instantiates the backend a config asks for. Remote backends read their key from the environment.
pub fn make_backend(config: &BackendConfig) -> Result<Box<dyn CognitionBackend>, BackendError> {
    Ok(match config {
        BackendConfig::Scripted => Box::new(ScriptedBackend::new()),
        BackendConfig::Remote(r) => Box::new(RemoteBackend::from_env(r.clone())?),
    })
}

struct DayRun<'a> {
    day: u32,
    cfg: &'a ExperimentConfig,
    backend: &'a mut dyn CognitionBackend,
    rng: &'a mut ChaCha8Rng,
    digest: Option<DailyDigest>,
    events: Vec<PublicEvent>,
    framing: BTreeMap<AgentId, Vec<String>>,
}

#[derive(Default)]
struct AgentDay {
    trace: Vec<PhaseRecord>,
    plan: String,
    outcome: Option<ActionOutcome>,
    votes: Vec<VoteRecord>,
    reflection: Option<ReflectionPayload>,
}

impl DayRun<'_> {
    fn situation(&self, s: &WorldState, own: Option<&ActionOutcome>) -> Situation {
        let exemplars = s
            .exemplar_ids()
            .into_iter()
            .filter_map(|id| s.agents.get(&id))
            .filter(|a| a.alive)
            .map(|a| ExemplarView { agent_id: a.agent_id.clone(), values: a.beliefs.values().clone() })
            .collect();
        Situation {
            day: self.day,
            exemplars,
            exemplar_prosocial_successes: s.exemplar_prosocial_successes(),
            todays_events: self.events.clone(),
            own_outcome: own.map(|o| PublicEvent {
                actor: o.actor.clone(),
                action: o.action.clone(),
                succeeded: o.succeeded,
            }),
            collapsed_on: s.collapsed_on,
            chosen_one: s.chosen_one.clone(),
            comparison: self.cfg.comparison_mode(),
            last_valence: s
                .public_record
                .iter()
                .filter_map(|(id, r)| r.last_valence.map(|v| (id.clone(), v)))
                .collect(),
            roster: s
                .agent_order()
                .into_iter()
                .map(|id| {
                    let a = &s.agents[&id];
                    RosterEntry { agent_id: id, kind: a.kind(), food: a.food, alive: a.alive }
                })
                .collect(),
        }
    }

    fn ask(
        &mut self,
        s: &WorldState,
        phase: PhaseKind,
        agent: &AgentState,
        targets: Vec<AgentId>,
        extra: Option<String>,
        own: Option<&ActionOutcome>,
    ) -> Result<Decided, BackendError> {
        let mut framing = self.framing.get(&agent.agent_id).cloned().unwrap_or_default();
        framing.extend(extra);
        let digest = match phase {
            PhaseKind::Plan | PhaseKind::Act => None,
            _ => self.digest.as_ref().map(|d| d.to_string()),
        };
        let memory = inject_memory(agent, s.params.obs_mem_lines);
        let exemplar_names =
            s.exemplar_ids().into_iter().filter(|id| *id != agent.agent_id).map(|id| display_name(&id)).collect();
        let ctx = PromptContext {
            day: self.day,
            memory: memory.clone(),
            digest: digest.clone(),
            framing: framing.clone(),
            vote_targets: targets.clone(),
            exemplar_names,
            reflect_on_exemplar: self.cfg.comparison_mode() != crate::cognition::ComparisonMode::Removed,
        };
        let prompt = build_prompt(phase, agent, &ctx, self.cfg.prompt_variant);
        let request = DecisionRequest {
            phase,
            agent: agent.clone(),
            memory_context: memory,
            todays_digest: digest,
            vote_targets: targets,
            scenario_framing: framing,
            prompt,
            situation: self.situation(s, own),
            nonce: self.rng.next_u64(),
        };
        decide_validated(&mut *self.backend, &request, self.cfg.max_repair_retries)
    }
}

fn record(phase: PhaseKind, d: &Decided) -> PhaseRecord {
    let action = match &d.validated {
        Validated::Decision(r) => r.action.to_string(),
        Validated::Reflection(_) => "reflect()".to_string(),
    };
    PhaseRecord { phase, action, repairs: d.repairs, fallback: d.fallback }
}

fn decision_action(d: &Decided) -> ActionCommand {
    match &d.validated {
        Validated::Decision(r) => r.action.clone(),
        Validated::Reflection(_) => ActionCommand::do_nothing("validation fallback"),
    }
}

fn in_memory(day: u32) -> impl Fn(BackendError) -> RunError {
    move |source| RunError::BackendInMemory { day, source }
}

/// Runs the day after `state.day`. The input is untouched; the new state is returned.
///
/// Scenario events for the day are applied first, on the working copy.
pub fn run_day(state: &WorldState, ctx: &mut RunContext) -> Result<(WorldState, Vec<LogEntry>), RunError> {
    let day = state.day + 1;
    let cfg = ctx.config.clone();
    let mut s = state.clone();
    let mut rng = ctx.rng.clone();
    let scenario = apply_scenario_events(&mut s, day, &cfg);
    let announcements = std::mem::take(&mut s.pending_announcements);

    let dawn = s.living_order();
    let mut days: BTreeMap<AgentId, AgentDay> = dawn.iter().map(|id| (id.clone(), AgentDay::default())).collect();
    let participates = |a: &AgentState| cfg.exemplar_reflects || !a.is_exemplar();
    let err = in_memory(day);

    let mut run = DayRun {
        day,
        cfg: &cfg,
        backend: ctx.backend.as_mut(),
        rng: &mut rng,
        digest: None,
        events: Vec::new(),
        framing: scenario.framing,
    };

    for id in &dawn {
        let agent = s.agents[id].clone();
        let d = run.ask(&s, PhaseKind::Plan, &agent, vec![], None, None).map_err(&err)?;
        let entry = days.get_mut(id).unwrap();
        entry.trace.push(record(PhaseKind::Plan, &d));
        if let Validated::Decision(r) = &d.validated {
            entry.plan = r.short_term_plan.clone();
        }
    }

    let mut outcomes = Vec::new();
    for id in &dawn {
        if !s.agents[id].alive {
            continue;
        }
        let agent = s.agents[id].clone();
        let plan = &days[id].plan;
        let extra = (!plan.is_empty()).then(|| format!("Your plan for today: {plan}"));
        let d = run.ask(&s, PhaseKind::Act, &agent, vec![], extra, None).map_err(&err)?;
        let outcome = s.resolve_action(id, decision_action(&d))?;
        let entry = days.get_mut(id).unwrap();
        entry.trace.push(record(PhaseKind::Act, &d));
        entry.outcome = Some(outcome.clone());
        outcomes.push(outcome);
    }

    let digest = compose_digest(day, &outcomes, &announcements);
    s.record_public(&outcomes);
    run.events = outcomes
        .iter()
        .filter(|o| o.public_line.is_some())
        .map(|o| PublicEvent { actor: o.actor.clone(), action: o.action.clone(), succeeded: o.succeeded })
        .collect();
    run.digest = Some(digest.clone());

    for id in &dawn {
        if !s.agents[id].alive {
            continue;
        }
        let agent = s.agents[id].clone();
        let d = run.ask(&s, PhaseKind::Observe, &agent, vec![], None, None).map_err(&err)?;
        days.get_mut(id).unwrap().trace.push(record(PhaseKind::Observe, &d));
    }

    let targets: Vec<AgentId> = cfg
        .vote_targets
        .iter()
        .filter_map(|t| if t == CHOSEN_ONE_TOKEN { s.chosen_one.clone() } else { Some(t.clone()) })
        .filter(|t| s.agents.get(t).is_some_and(|a| a.alive))
        .collect();
    for id in &dawn {
        let agent = s.agents[id].clone();
        if !agent.alive || !participates(&agent) {
            continue;
        }
        for target in targets.iter().filter(|t| *t != id) {
            let d = run.ask(&s, PhaseKind::Vote, &agent, vec![target.clone()], None, None).map_err(&err)?;
            let entry = days.get_mut(id).unwrap();
            entry.trace.push(record(PhaseKind::Vote, &d));
            if let ActionCommand::Score { target_agent_id, score, reason } = decision_action(&d) {
                entry.votes.push(VoteRecord { target: target_agent_id, score, reason });
            }
        }
    }

    for id in &dawn {
        let agent = s.agents[id].clone();
        if !agent.alive || !participates(&agent) {
            continue;
        }
        let own = days[id].outcome.clone();
        let d = run.ask(&s, PhaseKind::Reflect, &agent, vec![], None, own.as_ref()).map_err(&err)?;
        let entry = days.get_mut(id).unwrap();
        entry.trace.push(record(PhaseKind::Reflect, &d));
        if let Validated::Reflection(p) = d.validated {
            s.agents.get_mut(id).unwrap().beliefs.apply_updates(&p.expectancy_updates, &p.value_updates)?;
            entry.reflection = Some(p);
        }
    }
    drop(run);

    s.daily_upkeep();
    s.day = day;

    let summary = digest.summary();
    let post_collapse = cfg.collapse_day().is_some_and(|c| day > c);
    let mut logs = Vec::with_capacity(dawn.len());
    for id in &dawn {
        let entry = days.remove(id).unwrap();
        let agent = s.agents.get_mut(id).unwrap();
        let inspiration = entry.reflection.as_ref().map(|r| r.future_inspiration.clone()).unwrap_or_default();
        agent.memory_log.push(MemoryEntry {
            day,
            digest_text: summary.clone(),
            future_inspiration: inspiration,
            end_hp: agent.hp,
        });
        let (action_taken, action_succeeded) = match &entry.outcome {
            Some(o) => (o.action.to_string(), o.succeeded),
            None => ("none".to_string(), false),
        };
        logs.push(LogEntry {
            run_id: ctx.run_id.clone(),
            day,
            aspirant_id: id.clone(),
            aspirant_type: agent.kind().label().to_string(),
            observation_brief: summary.clone(),
            action_taken,
            action_succeeded,
            votes_given: entry.votes,
            reflection_struct: entry.reflection,
            end_of_day_state: EndOfDayState {
                hp: agent.hp,
                food: agent.food,
                age: agent.age,
                allies: agent.allies.iter().cloned().collect(),
                children: agent.children,
            },
            svo_score: agent.beliefs.svo(),
            current_beliefs: agent.beliefs.clone(),
            experiment_id: cfg.experiment_id.name().to_string(),
            is_post_collapse: post_collapse,
            phase_trace: entry.trace,
        });
    }
    ctx.rng = rng;
    Ok((s, logs))
}

/// In-memory run without files, for tests and sweeps.
pub struct Simulation {
    pub state: WorldState,
    pub ctx: RunContext,
}

impl Simulation {
    pub fn new(config: ExperimentConfig, backend: Box<dyn CognitionBackend>) -> Result<Self, RunError> {
        config.validate()?;
        let state = build_world(&config)?;
        Ok(Self { state, ctx: RunContext::new("in-memory", config, backend) })
    }

    pub fn scripted(config: ExperimentConfig) -> Result<Self, RunError> {
        Self::new(config, Box::new(ScriptedBackend::new()))
    }

    pub fn finished(&self) -> bool {
        self.state.day >= self.state.params.max_days
    }

    pub fn step_day(&mut self) -> Result<Vec<LogEntry>, RunError> {
        let (next, logs) = run_day(&self.state, &mut self.ctx)?;
        self.state = next;
        Ok(logs)
    }

    pub fn run_to_end(&mut self) -> Result<Vec<LogEntry>, RunError> {
        let mut all = Vec::new();
        while !self.finished() {
            all.extend(self.step_day()?);
        }
        Ok(all)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Fixed id instead of a fresh timestamp id. Ignored when resuming.
    pub run_id: Option<String>,
    /// Stop once this day is complete.
    pub stop_after: Option<u32>,
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run_id: String,
    pub days_completed: u32,
    pub log_path: PathBuf,
    pub checkpoint_path: PathBuf,
    pub final_state: WorldState,
}

fn checkpoint_for(
    run_id: &str,
    cfg: &ExperimentConfig,
    digest: &str,
    state: &WorldState,
    rng: &ChaCha8Rng,
) -> CheckpointFile {
    CheckpointFile {
        version: CHECKPOINT_VERSION.into(),
        run_id: run_id.to_string(),
        experiment_id: cfg.experiment_id.name().into(),
        seed: cfg.seed,
        day: state.day,
        world: state.clone(),
        rng_state: RngState::capture(rng),
        config_digest: digest.to_string(),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), TelemetryError> {
    fs::create_dir_all(dir).map_err(|source| TelemetryError::Io { path: dir.to_path_buf(), day: 0, source })
}

/// Runs (or resumes) an experiment, writing `{run_id}.jsonl` and `{run_id}.ckpt` under `out_dir`.
///
/// A checkpoint is written after every day. On a backend failure the last good
/// state is checkpointed and the error names the file to resume from.
pub fn run_experiment(
    config: ExperimentConfig,
    backend: Box<dyn CognitionBackend>,
    opts: &RunOptions,
) -> Result<RunSummary, RunError> {
    config.validate()?;
    let digest = config.digest();
    ensure_dir(&opts.out_dir)?;

    let (mut state, ctx_rng, run_id) = match &opts.resume {
        Some(path) => {
            let ckpt = load_checkpoint(path)?;
            ckpt.check_digest(&digest)?;
            let rng = ckpt.rng().map_err(|message| TelemetryError::Corrupt { path: path.clone(), message })?;
            if ckpt.day >= ckpt.world.params.max_days {
                return Err(RunError::AlreadyComplete { run_id: ckpt.run_id, days: ckpt.day });
            }
            truncate_log(&log_path(&opts.out_dir, &ckpt.run_id), ckpt.day)?;
            (ckpt.world, rng, ckpt.run_id)
        }
        None => {
            let run_id = opts.run_id.clone().unwrap_or_else(new_run_id);
            let logs = log_path(&opts.out_dir, &run_id);
            if logs.exists() {
                fs::remove_file(&logs).map_err(|source| TelemetryError::Io { path: logs.clone(), day: 0, source })?;
            }
            (build_world(&config)?, ChaCha8Rng::seed_from_u64(config.seed), run_id)
        }
    };

    let logs = log_path(&opts.out_dir, &run_id);
    let ckpt_path = checkpoint_path(&opts.out_dir, &run_id);
    let mut ctx = RunContext { run_id: run_id.clone(), config: config.clone(), backend, rng: ctx_rng };
    if opts.resume.is_none() {
        save_checkpoint(&ckpt_path, &checkpoint_for(&run_id, &config, &digest, &state, &ctx.rng))?;
    }

    let last_day = opts.stop_after.map_or(state.params.max_days, |d| d.min(state.params.max_days));
    while state.day < last_day {
        match run_day(&state, &mut ctx) {
            Ok((next, entries)) => {
                append_logs(&logs, &entries)?;
                state = next;
                save_checkpoint(&ckpt_path, &checkpoint_for(&run_id, &config, &digest, &state, &ctx.rng))?;
            }
            Err(RunError::BackendInMemory { day, source }) => {
                save_checkpoint(&ckpt_path, &checkpoint_for(&run_id, &config, &digest, &state, &ctx.rng))?;
                return Err(RunError::Backend { day, checkpoint: ckpt_path, source });
            }
            Err(other) => return Err(other),
        }
    }

    Ok(RunSummary { run_id, days_completed: state.day, log_path: logs, checkpoint_path: ckpt_path, final_state: state })
}
