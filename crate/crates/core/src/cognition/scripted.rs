//! Deterministic rule-based stand-in for a language model.
//!
//! The rules encode the qualitative dynamics the experiments are meant to show,
//! so every scenario can be replayed end to end without a network.

use std::collections::BTreeMap;

use super::{
    render_reflection, render_response, CognitionBackend, ComparisonMode, DecisionRequest, DecisionResponse, PhaseKind,
    ReflectionPayload, Situation,
};
use crate::domain::{moral_group, ActionCommand, AgentId, BeliefDimension, MoralGroup, Valence};
use crate::error::BackendError;

/// Observed exemplar prosocial successes needed before selfish agents imitate.
pub const IMITATION_THRESHOLD: u32 = 3;
/// Agents below this much food spend odd days gathering.
const LOW_FOOD: i64 = 4;
/// Leaders are fed by imitators, so they only top up when nearly out.
const LEADER_LOW_FOOD: i64 = 2;
const EXEMPLAR_STEP: f64 = 0.05;
const COLLAPSE_STEP: f64 = 0.05;
const RECOVERY_STEP: f64 = 0.03;
const EXPECTANCY_STEP: f64 = 0.02;

#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend;

impl ScriptedBackend {
    pub fn new() -> Self {
        Self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    /// Role model, warlord or chosen one; acts by the sign of its own SVO.
    Leader {
        prosocial: bool,
    },
    Follower(MoralGroup),
}

fn role(req: &DecisionRequest) -> Role {
    let agent = &req.agent;
    if agent.is_exemplar() || req.situation.chosen_one.as_deref() == Some(agent.agent_id.as_str()) {
        let prosocial =
            agent.beliefs.svo() >= 0.0 || req.situation.chosen_one.as_deref() == Some(agent.agent_id.as_str());
        Role::Leader { prosocial }
    } else {
        Role::Follower(moral_group(agent.kind()).unwrap_or(MoralGroup::Selfish))
    }
}

fn collapsed(s: &Situation) -> bool {
    s.collapsed_on.is_some_and(|c| s.day >= c)
}

/// The exemplar a follower looks up to: the one with the highest SVO, never itself.
fn model_exemplar<'a>(s: &'a Situation, me: &str) -> Option<&'a AgentId> {
    s.exemplars
        .iter()
        .filter(|e| e.agent_id != me)
        .map(|e| (svo_of(&e.values), &e.agent_id))
        .fold(None, |best: Option<(f64, &AgentId)>, (svo, id)| match best {
            Some((b, _)) if b >= svo => best,
            _ => Some((svo, id)),
        })
        .map(|(_, id)| id)
}

fn svo_of(values: &BTreeMap<BeliefDimension, f64>) -> f64 {
    let v = |d| values.get(&d).copied().unwrap_or(0.0);
    v(BeliefDimension::Cooperation) + v(BeliefDimension::Sharing)
        - v(BeliefDimension::Exploitation)
        - v(BeliefDimension::Robbery)
}

fn living_followers<'a>(s: &'a Situation, me: &str) -> Vec<&'a super::RosterEntry> {
    s.roster.iter().filter(|r| r.alive && r.kind.is_follower() && r.agent_id != me).collect()
}

fn leader_action(req: &DecisionRequest, prosocial: bool) -> ActionCommand {
    let s = &req.situation;
    let me = req.agent.agent_id.as_str();
    let followers = living_followers(s, me);
    let odd = s.day % 2 == 1;
    if prosocial {
        let poorest = followers.iter().min_by(|a, b| a.food.cmp(&b.food).then(a.agent_id.cmp(&b.agent_id)));
        if !odd && req.agent.food >= 1 {
            if let Some(t) = poorest {
                return ActionCommand::ShareFood { target_agent_id: t.agent_id.clone(), amount: 1 };
            }
        }
        if followers.is_empty() || (odd && req.agent.food < LEADER_LOW_FOOD) {
            return ActionCommand::GatherFood;
        }
        let t = followers[(s.day as usize / 2) % followers.len()];
        ActionCommand::FormAlliance { target_agent_id: t.agent_id.clone() }
    } else {
        let richest = followers
            .iter()
            .filter(|r| r.food > 0)
            .max_by(|a, b| a.food.cmp(&b.food).then(b.agent_id.cmp(&a.agent_id)));
        match richest {
            Some(t) if !odd => ActionCommand::Rob { target_agent_id: t.agent_id.clone(), quantity: 2 },
            _ => ActionCommand::ExploitResource,
        }
    }
}

fn follower_action(req: &DecisionRequest, group: MoralGroup) -> ActionCommand {
    let s = &req.situation;
    let me = req.agent.agent_id.as_str();
    let odd = s.day % 2 == 1;
    let Some(model) = model_exemplar(s, me) else {
        return match group {
            MoralGroup::Prosocial => ActionCommand::GatherFood,
            MoralGroup::Selfish => ActionCommand::ExploitResource,
        };
    };
    match group {
        MoralGroup::Prosocial if odd => ActionCommand::GatherFood,
        MoralGroup::Prosocial => ActionCommand::FormAlliance { target_agent_id: model.clone() },
        MoralGroup::Selfish if collapsed(s) || s.exemplar_prosocial_successes < IMITATION_THRESHOLD => {
            ActionCommand::ExploitResource
        }
        MoralGroup::Selfish if odd && req.agent.food < LOW_FOOD => ActionCommand::GatherFood,
        MoralGroup::Selfish if !odd && req.agent.food >= 2 => {
            ActionCommand::ShareFood { target_agent_id: model.clone(), amount: 1 }
        }
        MoralGroup::Selfish => ActionCommand::FormAlliance { target_agent_id: model.clone() },
    }
}

fn comparison_scale(mode: ComparisonMode) -> f64 {
    match mode {
        ComparisonMode::Full => 1.0,
        ComparisonMode::Halved => 0.5,
        ComparisonMode::Muted => 0.2,
        ComparisonMode::Removed => 0.0,
    }
}

fn add(map: &mut BTreeMap<BeliefDimension, f64>, d: BeliefDimension, x: f64) {
    if x != 0.0 {
        *map.entry(d).or_insert(0.0) += x;
    }
}

fn reflection(req: &DecisionRequest) -> ReflectionPayload {
    let s = &req.situation;
    let me = req.agent.agent_id.as_str();
    let mut expectancy = BTreeMap::new();
    let mut values = BTreeMap::new();

    if let Some(own) = &s.own_outcome {
        if let Some(d) = own.action.dimension() {
            add(&mut expectancy, d, if own.succeeded { EXPECTANCY_STEP } else { -EXPECTANCY_STEP });
        }
    }

    let group = match role(req) {
        Role::Follower(g) => Some(g),
        Role::Leader { .. } => None,
    };
    let after_collapse = collapsed(s);
    let follows_exemplar = !(after_collapse && group == Some(MoralGroup::Prosocial));
    let scale = comparison_scale(s.comparison);
    let mut observed = 0usize;
    if follows_exemplar && scale > 0.0 {
        for event in s.todays_events.iter().filter(|e| e.succeeded && e.actor != me) {
            let Some(view) = s.exemplars.iter().find(|e| e.agent_id == event.actor) else { continue };
            let Some(d) = event.action.dimension() else { continue };
            let sign = view.values.get(&d).copied().unwrap_or(0.0).signum();
            add(&mut values, d, EXEMPLAR_STEP * sign * scale);
            observed += 1;
        }
    }
    if after_collapse {
        match group {
            Some(MoralGroup::Selfish) => add(&mut values, BeliefDimension::Cooperation, -COLLAPSE_STEP),
            Some(MoralGroup::Prosocial) if s.collapsed_on == Some(s.day) => {
                add(&mut values, BeliefDimension::Cooperation, -COLLAPSE_STEP)
            }
            Some(MoralGroup::Prosocial) => {
                add(&mut values, BeliefDimension::Cooperation, RECOVERY_STEP);
                add(&mut values, BeliefDimension::Sharing, RECOVERY_STEP);
            }
            None => {}
        }
    }

    let svo = req.agent.beliefs.svo();
    let n = req.nonce as usize;
    let causal = if observed == 0 {
        pick(
            n,
            &[
                "Nothing I saw today gave me a reason to change how I live.",
                "No one I look up to did anything that changed my view today.",
            ],
        )
    } else if svo < 0.0 {
        pick(n, &[
            "I saw the elder's choices pay off again; I still want to maximize my gain, but maybe working with others is a benefit too.",
            "Others gained from what the elder did. My own gain matters most, yet the benefit of cooperating is hard to ignore.",
        ])
    } else {
        pick(n, &[
            "The alliance and sharing I saw today brought stability to the tribe and long-term security for everyone.",
            "What I observed shows that social trust and alliance give long-term stability.",
        ])
    };
    let on_action = match &s.own_outcome {
        Some(o) if o.succeeded => format!("My action {} worked out as I hoped.", o.action),
        Some(o) => format!("My action {} did not work out.", o.action),
        None => "I did not act today.".to_string(),
    };
    let future = if svo < 0.0 {
        pick(n, &["Keep food close and maximize my gain.", "Look for the biggest benefit to myself tomorrow."])
    } else {
        pick(n, &["Build alliances for long-term stability.", "Share and cooperate so the tribe stays stable."])
    };
    ReflectionPayload {
        causal_reasoning: causal.to_string(),
        reflection_on_action: on_action,
        future_inspiration: future.to_string(),
        expectancy_updates: expectancy,
        value_updates: values,
        svo_note: None,
    }
}

fn pick<'a>(nonce: usize, options: &[&'a str]) -> &'a str {
    options[nonce % options.len()]
}

fn vote(req: &DecisionRequest) -> ActionCommand {
    let target = req.vote_targets.first().cloned().unwrap_or_default();
    let voter = req.agent.beliefs.svo();
    let voter_sign = if voter > 0.0 {
        1
    } else if voter < 0.0 {
        -1
    } else {
        0
    };
    let valence = req.situation.last_valence.get(&target).copied().unwrap_or(Valence::Neutral);
    let score = (5 + 2 * voter_sign * valence.sign()).clamp(1, 10) as i64;
    let reason = match (score, valence) {
        (s, _) if s > 5 => "Their alliance and sharing bring stability to the tribe; I admire that.",
        (s, Valence::Prosocial) if s < 5 => "They give away what they could keep; that is no way to maximize gain.",
        (s, _) if s < 5 => "They take from others and harm the valley's long-term stability.",
        _ => "I have no strong view of them today.",
    };
    ActionCommand::Score { target_agent_id: target, score, reason: reason.to_string() }
}

fn thinking(req: &DecisionRequest, action: &ActionCommand) -> (String, String, String) {
    let svo = req.agent.beliefs.svo();
    let n = req.nonce as usize;
    let thought = if svo < 0.0 {
        pick(
            n,
            &[
                "I have to look after myself first and maximize my gain.",
                "Resources are scarce; my own benefit comes first.",
            ],
        )
    } else {
        pick(
            n,
            &[
                "Working with others gives the tribe stability and me long-term safety.",
                "Alliances and social trust are what keep us alive in the long-term.",
            ],
        )
    };
    let memory = format!("Day {}: HP {}, food {}.", req.situation.day, req.agent.hp, req.agent.food);
    let plan = format!("Today I will {action}.");
    (thought.to_string(), memory, plan)
}

fn decision(req: &DecisionRequest, action: ActionCommand) -> String {
    let (thinking, long_term_memory, short_term_plan) = thinking(req, &action);
    render_response(&DecisionResponse {
        agent_id: req.agent.agent_id.clone(),
        thinking,
        long_term_memory,
        short_term_plan,
        action,
    })
}

/// The Act-phase choice the policy makes for a request.
pub fn scripted_action(req: &DecisionRequest) -> ActionCommand {
    match role(req) {
        Role::Leader { prosocial } => leader_action(req, prosocial),
        Role::Follower(group) => follower_action(req, group),
    }
}

impl CognitionBackend for ScriptedBackend {
    fn decide(&mut self, req: &DecisionRequest) -> Result<String, BackendError> {
        Ok(match req.phase {
            PhaseKind::Plan => decision(req, ActionCommand::do_nothing("Finished planning.")),
            PhaseKind::Observe => decision(req, ActionCommand::do_nothing("Observing.")),
            PhaseKind::Act => decision(req, scripted_action(req)),
            PhaseKind::Vote => decision(req, vote(req)),
            PhaseKind::Reflect => render_reflection(&req.agent.agent_id, &reflection(req)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cognition::{profiles, validate_response, ExemplarView, PublicEvent, RosterEntry, Validated};
    use crate::domain::{AgentState, ArchetypeKind, BeliefSystem, MoralArchetype, RoleAttributes};

    fn agent(id: &str, kind: ArchetypeKind, values: [f64; 5]) -> AgentState {
        let attrs = if kind.is_exemplar() { RoleAttributes::role_model() } else { RoleAttributes::follower() };
        AgentState::new(
            id,
            MoralArchetype::new(kind, profiles::profile_for(kind)).unwrap(),
            profiles::FOLLOWER_GOAL,
            &attrs,
            6,
            BeliefSystem::from_rows([0.5; 4], values).unwrap(),
        )
    }

    const FOLLOWER_ROW: [f64; 5] = [0.4, 0.3, 0.7, 0.7, 0.3];
    const YURI_ROW: [f64; 5] = [0.9, 0.8, -0.9, -1.0, 0.9];
    const KORG_ROW: [f64; 5] = [-0.5, -0.6, 0.8, 0.9, -0.7];

    fn yuri_view(values: [f64; 5]) -> ExemplarView {
        ExemplarView { agent_id: "elder_yuri".into(), values: BeliefDimension::ALL.into_iter().zip(values).collect() }
    }

    fn roster() -> Vec<RosterEntry> {
        vec![
            RosterEntry {
                agent_id: "elder_yuri".into(),
                kind: ArchetypeKind::RoleModelProsocial,
                food: 3,
                alive: true,
            },
            RosterEntry { agent_id: "kin_1".into(), kind: ArchetypeKind::Kin, food: 2, alive: true },
            RosterEntry {
                agent_id: "reproductive_1".into(),
                kind: ArchetypeKind::ReproductiveSelfish,
                food: 9,
                alive: true,
            },
        ]
    }

    fn request(phase: PhaseKind, agent: AgentState, day: u32, successes: u32) -> DecisionRequest {
        DecisionRequest {
            phase,
            agent,
            memory_context: String::new(),
            todays_digest: None,
            vote_targets: if phase == PhaseKind::Vote { vec!["elder_yuri".into()] } else { vec![] },
            scenario_framing: vec![],
            prompt: "p".into(),
            situation: Situation {
                day,
                exemplars: vec![yuri_view(YURI_ROW)],
                exemplar_prosocial_successes: successes,
                todays_events: vec![],
                own_outcome: None,
                collapsed_on: None,
                chosen_one: None,
                comparison: ComparisonMode::Full,
                last_valence: BTreeMap::new(),
                roster: roster(),
            },
            nonce: 7,
        }
    }

    fn act(req: &DecisionRequest) -> ActionCommand {
        let mut b = ScriptedBackend::new();
        let raw = b.decide(req).unwrap();
        match validate_response(&raw, req.phase, &req.agent.agent_id, None).unwrap() {
            Validated::Decision(d) => d.action,
            other => panic!("{other:?}"),
        }
    }

    fn reflect(req: &DecisionRequest) -> ReflectionPayload {
        let raw = ScriptedBackend::new().decide(req).unwrap();
        match validate_response(&raw, PhaseKind::Reflect, &req.agent.agent_id, None).unwrap() {
            Validated::Reflection(p) => p,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn selfish_exploits_before_threshold() {
        let r =
            request(PhaseKind::Act, agent("reproductive_1", ArchetypeKind::ReproductiveSelfish, FOLLOWER_ROW), 1, 0);
        assert_eq!(act(&r), ActionCommand::ExploitResource);
    }

    #[test]
    fn selfish_imitates_after_threshold() {
        let r =
            request(PhaseKind::Act, agent("reproductive_1", ArchetypeKind::ReproductiveSelfish, FOLLOWER_ROW), 5, 3);
        assert_eq!(act(&r), ActionCommand::FormAlliance { target_agent_id: "elder_yuri".into() });
        let r =
            request(PhaseKind::Act, agent("reproductive_1", ArchetypeKind::ReproductiveSelfish, FOLLOWER_ROW), 6, 3);
        assert_eq!(act(&r), ActionCommand::ShareFood { target_agent_id: "elder_yuri".into(), amount: 1 });
    }

    #[test]
    fn prosocial_alternates() {
        let a = agent("kin_1", ArchetypeKind::Kin, FOLLOWER_ROW);
        assert_eq!(act(&request(PhaseKind::Act, a.clone(), 1, 0)), ActionCommand::GatherFood);
        assert_eq!(
            act(&request(PhaseKind::Act, a, 2, 0)),
            ActionCommand::FormAlliance { target_agent_id: "elder_yuri".into() }
        );
    }

    #[test]
    fn leaders_act_by_svo_sign() {
        let yuri = agent("elder_yuri", ArchetypeKind::RoleModelProsocial, YURI_ROW);
        assert_eq!(
            act(&request(PhaseKind::Act, yuri, 2, 0)),
            ActionCommand::ShareFood { target_agent_id: "kin_1".into(), amount: 1 }
        );
        let korg = agent("warlord_korg", ArchetypeKind::WarlordCompetitor, KORG_ROW);
        assert_eq!(act(&request(PhaseKind::Act, korg.clone(), 1, 0)), ActionCommand::ExploitResource);
        assert_eq!(
            act(&request(PhaseKind::Act, korg, 2, 0)),
            ActionCommand::Rob { target_agent_id: "reproductive_1".into(), quantity: 2 }
        );
    }

    fn with_event(mut r: DecisionRequest, action: ActionCommand, succeeded: bool) -> DecisionRequest {
        r.situation.todays_events.push(PublicEvent { actor: "elder_yuri".into(), action, succeeded });
        r
    }

    #[test]
    fn reflection_moves_toward_exemplar() {
        let r = request(PhaseKind::Reflect, agent("kin_1", ArchetypeKind::Kin, FOLLOWER_ROW), 1, 0);
        let r = with_event(r, ActionCommand::FormAlliance { target_agent_id: "kin_1".into() }, true);
        let p = reflect(&r);
        assert_eq!(p.value_updates.get(&BeliefDimension::Cooperation), Some(&EXEMPLAR_STEP));
    }

    #[test]
    fn failed_exemplar_actions_teach_nothing() {
        let r = request(
            PhaseKind::Reflect,
            agent("reproductive_1", ArchetypeKind::ReproductiveSelfish, FOLLOWER_ROW),
            1,
            0,
        );
        let r = with_event(r, ActionCommand::FormAlliance { target_agent_id: "kin_1".into() }, false);
        assert!(reflect(&r).value_updates.is_empty());
    }

    #[test]
    fn comparison_modes_scale_the_update() {
        for (mode, expected) in [
            (ComparisonMode::Halved, Some(EXEMPLAR_STEP * 0.5)),
            (ComparisonMode::Muted, Some(EXEMPLAR_STEP * 0.2)),
            (ComparisonMode::Removed, None),
        ] {
            let mut r = request(PhaseKind::Reflect, agent("kin_1", ArchetypeKind::Kin, FOLLOWER_ROW), 1, 0);
            r.situation.comparison = mode;
            let r = with_event(r, ActionCommand::FormAlliance { target_agent_id: "kin_1".into() }, true);
            assert_eq!(reflect(&r).value_updates.get(&BeliefDimension::Cooperation).copied(), expected, "{mode:?}");
        }
    }

    #[test]
    fn collapse_pulls_selfish_down_and_prosocial_recover() {
        let collapsed_row = [-0.7, -0.8, 0.9, 0.85, -0.8];
        let mut r = request(
            PhaseKind::Reflect,
            agent("reproductive_1", ArchetypeKind::ReproductiveSelfish, FOLLOWER_ROW),
            16,
            5,
        );
        r.situation.collapsed_on = Some(15);
        r.situation.exemplars = vec![yuri_view(collapsed_row)];
        let r = with_event(r, ActionCommand::ExploitResource, true);
        let p = reflect(&r);
        assert_eq!(p.value_updates[&BeliefDimension::Exploitation], EXEMPLAR_STEP);
        assert_eq!(p.value_updates[&BeliefDimension::Cooperation], -0.05);

        let mut r = request(PhaseKind::Reflect, agent("kin_1", ArchetypeKind::Kin, FOLLOWER_ROW), 16, 5);
        r.situation.collapsed_on = Some(15);
        r.situation.exemplars = vec![yuri_view(collapsed_row)];
        let r = with_event(r, ActionCommand::ExploitResource, true);
        let p = reflect(&r);
        assert_eq!(p.value_updates[&BeliefDimension::Cooperation], 0.03);
        assert_eq!(p.value_updates[&BeliefDimension::Sharing], 0.03);
        assert!(!p.value_updates.contains_key(&BeliefDimension::Exploitation));
    }

    #[test]
    fn vote_scores_follow_alignment() {
        let mut r = request(PhaseKind::Vote, agent("kin_1", ArchetypeKind::Kin, YURI_ROW), 3, 0);
        r.situation.last_valence.insert("elder_yuri".into(), Valence::Prosocial);
        let raw = ScriptedBackend::new().decide(&r).unwrap();
        let v = validate_response(&raw, PhaseKind::Vote, "kin_1", Some("elder_yuri")).unwrap();
        assert!(matches!(v.action(), Some(ActionCommand::Score { score: 7, .. })));

        let mut r = request(PhaseKind::Vote, agent("kin_1", ArchetypeKind::Kin, FOLLOWER_ROW), 3, 0);
        r.situation.last_valence.insert("elder_yuri".into(), Valence::Prosocial);
        let raw = ScriptedBackend::new().decide(&r).unwrap();
        let v = validate_response(&raw, PhaseKind::Vote, "kin_1", Some("elder_yuri")).unwrap();
        assert!(matches!(v.action(), Some(ActionCommand::Score { score: 3, .. })));
    }

    /// Every branch of the policy table yields a reply that validates first time.
    #[test]
    fn all_outputs_validate_without_repair() {
        let agents = [
            agent("elder_yuri", ArchetypeKind::RoleModelProsocial, YURI_ROW),
            agent("elder_yuri", ArchetypeKind::RoleModelProsocial, [-0.7, -0.8, 0.9, 0.85, -0.8]),
            agent("warlord_korg", ArchetypeKind::WarlordCompetitor, KORG_ROW),
            agent("universal_1", ArchetypeKind::Universal, FOLLOWER_ROW),
            agent("reciprocal_1", ArchetypeKind::Reciprocal, YURI_ROW),
            agent("kin_1", ArchetypeKind::Kin, FOLLOWER_ROW),
            agent("reproductive_1", ArchetypeKind::ReproductiveSelfish, FOLLOWER_ROW),
        ];
        let events = [
            ActionCommand::FormAlliance { target_agent_id: "kin_1".into() },
            ActionCommand::ShareFood { target_agent_id: "kin_1".into(), amount: 1 },
            ActionCommand::ExploitResource,
            ActionCommand::Rob { target_agent_id: "kin_1".into(), quantity: 2 },
        ];
        let mut count = 0;
        for a in &agents {
            for phase in PhaseKind::DAILY {
                for day in [1u32, 2, 15, 16] {
                    for successes in [0u32, 3] {
                        for collapse in [None, Some(15)] {
                            for mode in [
                                ComparisonMode::Full,
                                ComparisonMode::Halved,
                                ComparisonMode::Muted,
                                ComparisonMode::Removed,
                            ] {
                                for food in [0i64, 1, 5] {
                                    for chosen in [None, Some("kin_1")] {
                                        for nonce in 0..2u64 {
                                            let mut ag = a.clone();
                                            ag.food = food;
                                            let mut r = request(phase, ag, day, successes);
                                            r.nonce = nonce;
                                            r.situation.collapsed_on = collapse;
                                            r.situation.comparison = mode;
                                            r.situation.chosen_one = chosen.map(str::to_string);
                                            r.situation.last_valence.insert("elder_yuri".into(), Valence::Antisocial);
                                            for e in &events {
                                                r = with_event(r, e.clone(), day % 2 == 0);
                                            }
                                            r.situation.own_outcome = Some(PublicEvent {
                                                actor: r.agent.agent_id.clone(),
                                                action: ActionCommand::GatherFood,
                                                succeeded: true,
                                            });
                                            let target = r.vote_targets.first().map(String::as_str);
                                            if target == Some(r.agent.agent_id.as_str()) {
                                                continue;
                                            }
                                            let raw = ScriptedBackend::new().decide(&r).unwrap();
                                            validate_response(&raw, phase, &r.agent.agent_id, target)
                                                .unwrap_or_else(|e| panic!("{phase} {}: {e}\n{raw}", r.agent.agent_id));
                                            count += 1;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        assert!(count > 5000);
    }
}
