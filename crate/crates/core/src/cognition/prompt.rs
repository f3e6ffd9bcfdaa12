use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PhaseKind;
use crate::domain::{AgentId, AgentState, BeliefDimension};
use crate::error::ConfigError;

/// Paraphrase set used for phase instructions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    #[default]
    Base,
    V1,
    V2,
}

impl PromptVariant {
    pub fn name(self) -> &'static str {
        match self {
            PromptVariant::Base => "base",
            PromptVariant::V1 => "v1",
            PromptVariant::V2 => "v2",
        }
    }
}

impl FromStr for PromptVariant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(PromptVariant::Base),
            "v1" => Ok(PromptVariant::V1),
            "v2" => Ok(PromptVariant::V2),
            _ => Err(ConfigError::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PromptContext {
    pub day: u32,
    /// Output of `inject_memory`.
    pub memory: String,
    /// Rendered Tribe Daily; absent before the Observe phase.
    pub digest: Option<String>,
    pub framing: Vec<String>,
    pub vote_targets: Vec<AgentId>,
    pub exemplar_names: Vec<AgentId>,
    /// When false the exemplar-comparison part of the reflection prompt is dropped.
    pub reflect_on_exemplar: bool,
}

const ORDER_LINE: &str = "You must output the following items in the following order: agent ID, thinking, long_term_memory, short_term_plan, action.";

fn plan_text(v: PromptVariant) -> &'static str {
    match v {
        PromptVariant::Base => "You are a survival-focused agent in a resource-scarce tribal simulation.

In this phase, you are not taking any real actions. Instead, your job is to carefully think and plan ahead for the day.

Specifically, you must consider your current state (like HP, food, allies), your long-term goals, and your social environment.

You need to output a \"thinking\" section where you articulate your reasoning and priorities.

You must also propose a short_term_plan describing what you intend to do today.

You must return an action object with:
{\"action_type\": \"do_nothing\", \"reason\": \"Finished planning.\"}",
        PromptVariant::V1 => "You live in a tribe where resources are scarce, and today begins with planning.

Take no real action yet. Think about your HP, your food, your allies, your long-term goals and the people around you.

Write your reasoning in \"thinking\" and describe what you mean to do today in short_term_plan.

Your action object must be exactly:
{\"action_type\": \"do_nothing\", \"reason\": \"Finished planning.\"}",
        PromptVariant::V2 => "Planning phase. Nothing you write here changes the world.

Review your condition (HP, food, allies), what you want in the long run, and the social situation in the tribe. Put your reasoning under \"thinking\" and today's intention under short_term_plan.

Return this action object unchanged:
{\"action_type\": \"do_nothing\", \"reason\": \"Finished planning.\"}",
    }
}

fn act_text(v: PromptVariant) -> &'static str {
    match v {
        PromptVariant::Base => "You are in the action phase of a survival simulation.

Based on your current short_term_plan and your overall goals, you must now execute ONE concrete action.

Available actions include: gatherFood(), shareFood(agent_id, amount), exploitResource(), rob(agent_id, quantity), rest(), formAlliance(agent_id), or do_nothing().

Remember that some actions like exploitResource and rob may help in the short term but are morally questionable.

Your response must include:
- thinking: explain your reasoning behind your chosen action.
- the action itself in structured form.",
        PromptVariant::V1 => "Time to act. Carry out exactly ONE action that follows from your short_term_plan and your goals.

You may choose gatherFood(), shareFood(agent_id, amount), exploitResource(), rob(agent_id, quantity), rest(), formAlliance(agent_id), or do_nothing().

exploitResource and rob can pay off quickly, but others may judge them harshly.

Explain your choice under \"thinking\" and give the action in structured form.",
        PromptVariant::V2 => "Action phase: pick ONE action for today.

Options: gatherFood(), shareFood(agent_id, amount), exploitResource(), rob(agent_id, quantity), rest(), formAlliance(agent_id), do_nothing().

Keep in mind that exploiting the valley or robbing others is morally questionable, even when it helps you today.

State your reasoning in \"thinking\", then give the structured action.",
    }
}

fn observe_text(v: PromptVariant) -> &'static str {
    match v {
        PromptVariant::Base => "You are in the observation phase.

You are not allowed to take any real action right now.

Instead, your task is to read and reflect on the \"Tribe Daily\" report, which summarizes significant events in your social environment.

You must incorporate these events into your thinking and memory to inform your future decisions.

You must return an action object with:
{\"action_type\": \"do_nothing\", \"reason\": \"Observing.\"}",
        PromptVariant::V1 => "Observation phase. You cannot act now.

Read the \"Tribe Daily\" report below and work what happened into your thinking and memory.

Your action object must be exactly:
{\"action_type\": \"do_nothing\", \"reason\": \"Observing.\"}",
        PromptVariant::V2 => "Read today's \"Tribe Daily\" carefully. No actions are possible during this phase.

Note what matters for your future choices in \"thinking\" and long_term_memory.

Return this action object unchanged:
{\"action_type\": \"do_nothing\", \"reason\": \"Observing.\"}",
    }
}

fn vote_text(v: PromptVariant) -> &'static str {
    match v {
        PromptVariant::Base => "You are in the social evaluation phase.

You are asked to evaluate one or more agents based on their observed behavior in the recent Tribe Daily report.

You must give each target agent a score from 1 to 10 based on how much you agree with or identify with their actions and philosophy.

- 1 = Strongly disagree
- 5 = Neutral
- 10 = Strongly agree / admire

If you did not observe the agent doing anything, you may give a neutral score or base your rating on general impressions.",
        PromptVariant::V1 => "Social evaluation phase. Judge the target agent by what the Tribe Daily reported about them.

Give a score from 1 to 10 for how much you agree with or identify with their actions and philosophy (1 = strongly disagree, 5 = neutral, 10 = strongly admire).

If you saw nothing from them, give a neutral score or go by your general impression.",
        PromptVariant::V2 => "Rate the target agent. Use a score from 1 to 10, where 1 means you strongly reject what they do, 5 is neutral and 10 means you admire them.

Base the rating on their recent behavior in the Tribe Daily; fall back on your general impression if they did nothing notable.",
    }
}

fn reflect_text(v: PromptVariant) -> &'static str {
    match v {
        PromptVariant::Base => "You are in the reflection phase at the end of the day.

Look back on what you did today, what happened to you, and what the Tribe Daily reported.

First, causal_reasoning: explain why today's events turned out the way they did.

Second, reflection_on_action: judge your own action today and what you might have done instead.

Third, future_inspiration: state what you will carry forward into the coming days.",
        PromptVariant::V1 => "End-of-day reflection.

causal_reasoning: why did today unfold as it did?
reflection_on_action: was your own action the right one, and what else could you have done?
future_inspiration: what lesson will guide you tomorrow?",
        PromptVariant::V2 => "The day is over. Reflect honestly.

Give causal_reasoning for today's outcomes, a reflection_on_action about your own choice, and the future_inspiration you take from the day.",
    }
}

fn comparison_text(exemplars: &[AgentId]) -> String {
    let names = if exemplars.is_empty() { "the tribe's role model".to_string() } else { exemplars.join(" and ") };
    format!(
        "Compare your action today with what {names} did. Consider whether their choices succeeded and whether you want to become more like them."
    )
}

fn updates_text() -> String {
    let exp: Vec<&str> = BeliefDimension::EXPECTANCY.iter().map(|d| d.name()).collect();
    let val: Vec<&str> = BeliefDimension::ALL.iter().map(|d| d.name()).collect();
    format!(
        "Then give expectancy_updates (signed changes to how likely each behavior is to succeed; keys: {}) and value_updates (signed changes to how much you value each behavior; keys: {}). Expectancies stay in [0, 1] and values in [-1, 1]; omit keys you do not want to change.",
        exp.join(", "),
        val.join(", ")
    )
}

fn format_text(phase: PhaseKind, agent_id: &str, targets: &[AgentId]) -> String {
    match phase {
        PhaseKind::Reflect => format!(
            "Respond with a single JSON object:\n{{\"agent_id\": \"{agent_id}\", \"causal_reasoning\": \"...\", \"reflection_on_action\": \"...\", \"future_inspiration\": \"...\", \"expectancy_updates\": {{\"cooperation\": 0.05}}, \"value_updates\": {{\"cooperation\": 0.05}}}}"
        ),
        PhaseKind::Vote => {
            let target = targets.first().map(String::as_str).unwrap_or("agent_x");
            format!(
                "You must return a \"score\" action in this exact format:\n\"action\": {{\"action_type\": \"score\", \"target_agent_id\": \"{target}\", \"score\": 7, \"reason\": \"...\"}}\n\n{ORDER_LINE}\nRespond with a single JSON object with keys agent_id, thinking, long_term_memory, short_term_plan, action."
            )
        }
        _ => format!(
            "{ORDER_LINE}\nRespond with a single JSON object with keys agent_id, thinking, long_term_memory, short_term_plan, action. Actions use snake_case action_type values: gather_food, share_food (target_agent_id, amount), form_alliance (target_agent_id), rest, exploit_resource, rob (target_agent_id, quantity), do_nothing (reason)."
        ),
    }
}

/// Renders the full user message for one phase request.
pub fn build_prompt(phase: PhaseKind, agent: &AgentState, ctx: &PromptContext, variant: PromptVariant) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}\n", agent.archetype.profile_text);
    let _ = writeln!(out, "Your agent ID is {}. Your goal: {}", agent.agent_id, agent.goal);
    let allies = if agent.allies.is_empty() {
        "none".to_string()
    } else {
        agent.allies.iter().cloned().collect::<Vec<_>>().join(", ")
    };
    let _ = writeln!(
        out,
        "Day {}. HP {}/{}, food {}, age {}, allies: {}.",
        ctx.day, agent.hp, agent.max_hp, agent.food, agent.age, allies
    );
    for note in &agent.self_notes {
        let _ = writeln!(out, "{note}");
    }
    if !ctx.memory.is_empty() {
        let _ = writeln!(out, "\nYour recent memories:\n{}", ctx.memory);
    }
    for f in &ctx.framing {
        let _ = writeln!(out, "\n{f}");
    }
    if let Some(digest) = &ctx.digest {
        let _ = writeln!(out, "\n{digest}");
    }
    let instructions = match phase {
        PhaseKind::Plan => plan_text(variant).to_string(),
        PhaseKind::Act => act_text(variant).to_string(),
        PhaseKind::Observe => observe_text(variant).to_string(),
        PhaseKind::Vote => format!("{}\n\nTarget agent(s): {}.", vote_text(variant), ctx.vote_targets.join(", ")),
        PhaseKind::Reflect => {
            let mut s = reflect_text(variant).to_string();
            if ctx.reflect_on_exemplar {
                let _ = write!(s, "\n\n{}", comparison_text(&ctx.exemplar_names));
            }
            let _ = write!(s, "\n\n{}", updates_text());
            s
        }
    };
    let _ = writeln!(out, "\n{instructions}\n");
    out.push_str(&format_text(phase, &agent.agent_id, &ctx.vote_targets));
    out
}
