//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use wiremock::matchers::{method, path};
use wiremock::{Mock, MockServer, Request, Respond, ResponseTemplate};

use exemplar_core::analysis::{
    classify_stability, compute_metrics, compute_metrics_with, group_svo_series, norm_loss, GroupSeries, MetricWindows,
    Pooling, Stability,
};
use exemplar_core::cognition::{validate_response, CognitionBackend, DecisionRequest, PhaseKind, ScriptedBackend};
use exemplar_core::domain::{BeliefDimension, MoralGroup};
use exemplar_core::scenario::{apply_scenario_events, build_world, InitialBeliefs, YURI_ID};
use exemplar_core::telemetry::{audit_entries, load_checkpoint};
use exemplar_core::{read_logs, BackendError, ExperimentConfig, ExperimentId, LogEntry, Simulation};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_exemplar-sim")
}

fn sim(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn exemplar-sim")
}

fn scripted_run(id: ExperimentId) -> Vec<LogEntry> {
    Simulation::scripted(ExperimentConfig::for_experiment(id, 42)).unwrap().run_to_end().unwrap()
}

fn series(logs: &[LogEntry]) -> BTreeMap<MoralGroup, GroupSeries> {
    group_svo_series(logs, Pooling::Observation).unwrap()
}

fn svo_exactness() -> Outcome {
    let start = Instant::now();
    let b = InitialBeliefs::default();
    let rows = [
        ("role_model", &b.role_model, 3.60),
        ("warlord", &b.warlord, -2.80),
        ("follower", &b.follower, -0.70),
        ("collapsed", &b.collapsed, -3.25),
    ];
    for (name, beliefs, want) in rows {
        let got = beliefs.svo();
        ensure((got - want).abs() < 1e-9, format!("{name}: {got} != {want}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("4 rows exact in {elapsed:?}"))
}

fn collapse_fidelity() -> Outcome {
    let cfg = ExperimentConfig::for_experiment(ExperimentId::Game2, 42);
    let mut s = Simulation::scripted(cfg.clone()).unwrap();
    for _ in 0..14 {
        s.step_day().unwrap();
    }
    let mut state = s.state.clone();
    let followers_before: Vec<_> = cfg.follower_ids().iter().map(|id| state.agents[id].beliefs.clone()).collect();
    let day = apply_scenario_events(&mut state, 15, &cfg);
    let yuri = state.agents[YURI_ID].beliefs.values();
    let expected =
        [(BeliefDimension::Exploitation, 0.9), (BeliefDimension::Robbery, 0.85), (BeliefDimension::Cooperation, -0.7)];
    for (d, want) in expected {
        ensure((yuri[&d] - want).abs() < 1e-12, format!("yuri {d:?} = {}", yuri[&d]))?;
    }
    let followers_after: Vec<_> = cfg.follower_ids().iter().map(|id| state.agents[id].beliefs.clone()).collect();
    ensure(followers_before == followers_after, "follower beliefs changed at collapse")?;
    ensure(
        day.announcements.iter().any(|a| a.starts_with("SHOCKING NEWS: Elder Yuri has dramatically changed!")),
        "announcement missing",
    )?;
    let logs = s.step_day().unwrap();
    ensure(
        logs.iter().all(|e| e.observation_brief.contains("SHOCKING NEWS: Elder Yuri has dramatically changed!")),
        "digest lacks the line",
    )?;
    Ok("Yuri inverted, followers untouched, digest carries the announcement".into())
}

fn stability_labels() -> Outcome {
    let table = [
        (0.14, 0.36, Stability::Degraded),
        (0.19, 0.20, Stability::Stable),
        (0.12, 0.13, Stability::Stable),
        (0.07, 0.28, Stability::Degraded),
        (0.20, 0.16, Stability::Improved),
        (0.12, 0.15, Stability::Stable),
        (0.13, 0.44, Stability::Degraded),
        (0.23, 0.26, Stability::Stable),
    ];
    let mismatches: Vec<_> = table.iter().filter(|(e, l, want)| classify_stability(*e, *l) != *want).collect();
    ensure(mismatches.is_empty(), format!("mismatches: {mismatches:?}"))?;
    Ok("8/8 labels".into())
}

fn determinism_and_resume() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let cfg = workspace().join("configs/game1.toml");
    let run = |dir: &str, extra: &[&str]| {
        let out = sim(Command::new(bin())
            .args(["run", "--config"])
            .arg(&cfg)
            .args(["--seed", "42", "--run-id", "det", "--out"])
            .arg(tmp.path().join(dir))
            .args(extra));
        ensure(out.status.success(), format!("{dir}: {}", String::from_utf8_lossy(&out.stderr)))
    };
    run("full_a", &[])?;
    run("full_b", &[])?;
    run("split", &["--stop-after", "15"])?;
    let ckpt = tmp.path().join("split/det.ckpt");
    let resumed = sim(Command::new(bin()).args(["run", "--config"]).arg(&cfg).arg("--resume").arg(&ckpt));
    ensure(resumed.status.success(), String::from_utf8_lossy(&resumed.stderr).to_string())?;
    let read = |dir: &str| std::fs::read(tmp.path().join(dir).join("det.jsonl")).unwrap();
    let (a, b, split) = (read("full_a"), read("full_b"), read("split"));
    let lines = a.iter().filter(|c| **c == b'\n').count();
    ensure(lines == 240, format!("{lines} entries"))?;
    ensure(a == b, "independent full runs differ")?;
    ensure(a == split, "15 + resume differs from the full run")?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!("240 entries, byte-identical in {elapsed:?}"))
}

fn directionality() -> Outcome {
    let start = Instant::now();
    let g1 = series(&scripted_run(ExperimentId::Game1));
    let g2 = series(&scripted_run(ExperimentId::Game2));
    let g3 = series(&scripted_run(ExperimentId::Game3));
    let a1 = series(&scripted_run(ExperimentId::Ablation1));
    let (sel, pro) = (MoralGroup::Selfish, MoralGroup::Prosocial);

    let m = compute_metrics(&g1[&sel]).unwrap();
    let crossed = m.first_positive_day.is_some_and(|d| d <= 15);
    ensure(crossed, format!("(a) game1 selfish first_positive {:?}", m.first_positive_day))?;
    ensure(m.late_svo_mean - m.early_svo_mean >= 0.5, format!("(a) delta {}", m.delta_svo))?;

    let (s15, s30) = (g2[&sel].mean_on(15).unwrap(), g2[&sel].mean_on(30).unwrap());
    ensure(s30 < s15, format!("(b) game2 selfish day30 {s30} vs day15 {s15}"))?;
    let (p16, p30) = (g2[&pro].mean_on(16).unwrap(), g2[&pro].mean_on(30).unwrap());
    ensure(p30 > p16, format!("(b) game2 prosocial day30 {p30} vs day16 {p16}"))?;

    let fp = compute_metrics(&a1[&sel]).unwrap().first_positive_day;
    ensure(fp.is_none(), format!("(c) ablation1 first_positive {fp:?}"))?;

    let mut shares = Vec::new();
    for g in [pro, sel] {
        let loss = norm_loss(&g1[&g], &g3[&g]).unwrap();
        let ok = loss.iter().filter(|d| d.is_some_and(|d| d >= 0.0)).count() as f64 / loss.len() as f64;
        ensure(ok >= 0.8, format!("(d) {g}: {:.0}% of days non-negative", ok * 100.0))?;
        shares.push(format!("{g} {:.0}%", ok * 100.0));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!(
        "first_positive {:?}, delta {:.2}, norm loss >= 0 on {}, {elapsed:?}",
        m.first_positive_day,
        m.delta_svo,
        shares.join(" / ")
    ))
}

#[derive(Clone, Copy, PartialEq)]
enum Inject {
    Once,
    Always,
}

struct Injector {
    payload: String,
    phase: PhaseKind,
    mode: Inject,
    target: Arc<Mutex<Option<String>>>,
    calls: u32,
    inner: ScriptedBackend,
}

fn fill(payload: &str, r: &DecisionRequest) -> String {
    let target = r.vote_targets.first().map(String::as_str).unwrap_or("elder_yuri");
    payload.replace("{agent}", &r.agent.agent_id).replace("{target}", target)
}

impl CognitionBackend for Injector {
    fn decide(&mut self, r: &DecisionRequest) -> Result<String, BackendError> {
        if r.phase == self.phase {
            let mut target = self.target.lock().unwrap();
            let first = target.is_none();
            if first {
                *target = Some(r.agent.agent_id.clone());
            }
            let hit = target.as_deref() == Some(r.agent.agent_id.as_str());
            if hit && (first || (self.mode == Inject::Always && self.calls < 3)) {
                self.calls += 1;
                return Ok(fill(&self.payload, r));
            }
        }
        self.inner.decide(r)
    }
}

fn corpus() -> Vec<(String, PhaseKind, String)> {
    let text =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/malformed_payloads.json"))
            .unwrap();
    let items: Vec<Value> = serde_json::from_str(&text).unwrap();
    items
        .iter()
        .map(|i| {
            let phase: PhaseKind = serde_json::from_value(i["phase"].clone()).unwrap();
            (i["name"].as_str().unwrap().to_string(), phase, i["payload"].as_str().unwrap().to_string())
        })
        .collect()
}

struct Soak {
    corpus: Vec<(String, PhaseKind, String)>,
    calls: usize,
    next: usize,
    inner: ScriptedBackend,
}

impl CognitionBackend for Soak {
    fn decide(&mut self, r: &DecisionRequest) -> Result<String, BackendError> {
        self.calls += 1;
        if self.calls.is_multiple_of(5) {
            let matching: Vec<_> = self.corpus.iter().filter(|(_, p, _)| *p == r.phase).collect();
            if !matching.is_empty() {
                self.next += 1;
                return Ok(fill(&matching[self.next % matching.len()].2, r));
            }
        }
        self.inner.decide(r)
    }
}

fn validation_repair() -> Outcome {
    let items = corpus();
    ensure(items.len() >= 20, format!("only {} payloads", items.len()))?;
    let cfg = ExperimentConfig::for_experiment(ExperimentId::Game1, 42);
    let (mut repaired, mut degraded) = (0, 0);
    for (name, phase, payload) in &items {
        let raw = fill(payload, &dummy_request(&cfg, *phase));
        let vote_target = (*phase == PhaseKind::Vote).then_some("elder_yuri");
        ensure(
            validate_response(&raw, *phase, "reproductive_1", vote_target).is_err(),
            format!("{name} is accepted as valid"),
        )?;
        for mode in [Inject::Once, Inject::Always] {
            let target = Arc::new(Mutex::new(None));
            let backend = Injector {
                payload: payload.clone(),
                phase: *phase,
                mode,
                target: target.clone(),
                calls: 0,
                inner: ScriptedBackend::new(),
            };
            let mut s = Simulation::new(cfg.clone(), Box::new(backend)).map_err(|e| e.to_string())?;
            let logs = match catch_unwind(AssertUnwindSafe(|| s.step_day())) {
                Ok(Ok(logs)) => logs,
                Ok(Err(e)) => return Err(format!("{name}: run error {e}")),
                Err(_) => return Err(format!("{name}: run panicked")),
            };
            let agent = target.lock().unwrap().clone().ok_or(format!("{name}: never injected"))?;
            let rec = logs
                .iter()
                .find(|e| e.aspirant_id == agent)
                .and_then(|e| e.phase_trace.iter().find(|p| p.phase == *phase))
                .ok_or(format!("{name}: no trace"))?;
            match mode {
                Inject::Once => {
                    ensure(
                        !rec.fallback && rec.repairs >= 1 && rec.repairs <= 2,
                        format!("{name}: not repaired ({rec:?})"),
                    )?;
                    repaired += 1;
                }
                Inject::Always => {
                    ensure(rec.fallback, format!("{name}: no fallback ({rec:?})"))?;
                    degraded += 1;
                }
            }
        }
    }
    let soak = Soak { corpus: items.clone(), calls: 0, next: 0, inner: ScriptedBackend::new() };
    let logs = Simulation::new(cfg, Box::new(soak)).unwrap().run_to_end().map_err(|e| format!("soak: {e}"))?;
    let report = audit_entries(&logs);
    ensure(report.ok(), format!("soak audit: {:?}", report.problems))?;
    let touched = logs.iter().flat_map(|e| &e.phase_trace).filter(|p| p.repairs > 0 || p.fallback).count();
    ensure(touched > 0, "soak injected nothing")?;
    Ok(format!(
        "{} payloads: {repaired} repaired, {degraded} degraded to fallback; 30-day soak with {touched} repaired phases",
        items.len()
    ))
}

fn dummy_request(cfg: &ExperimentConfig, phase: PhaseKind) -> DecisionRequest {
    let world = build_world(cfg).unwrap();
    let agent = world.agents["reproductive_1"].clone();
    DecisionRequest {
        phase,
        agent,
        memory_context: String::new(),
        todays_digest: None,
        vote_targets: vec!["elder_yuri".into()],
        scenario_framing: vec![],
        prompt: String::new(),
        situation: exemplar_core::cognition::Situation {
            day: 1,
            exemplars: vec![],
            exemplar_prosocial_successes: 0,
            todays_events: vec![],
            own_outcome: None,
            collapsed_on: None,
            chosen_one: None,
            comparison: exemplar_core::cognition::ComparisonMode::Full,
            last_valence: Default::default(),
            roster: vec![],
        },
        nonce: 0,
    }
}

/// Answers every phase with a valid payload for the agent named in the prompt.
struct TribeResponder;

fn between<'a>(text: &'a str, start: &str, end: char) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let rest = &text[from..];
    Some(&rest[..rest.find(end)?])
}

impl Respond for TribeResponder {
    fn respond(&self, request: &Request) -> ResponseTemplate {
        let body: Value = serde_json::from_slice(&request.body).unwrap();
        let prompt = body["messages"][1]["content"].as_str().unwrap_or_default();
        let agent = between(prompt, "Your agent ID is ", '.').unwrap_or_default();
        let content = if prompt.contains("\"causal_reasoning\": \"...\"") {
            json!({"agent_id": agent, "causal_reasoning": "c", "reflection_on_action": "r", "future_inspiration": "f",
                   "expectancy_updates": {}, "value_updates": {"cooperation": 0.01}})
        } else if let Some(target) = between(prompt, "\"action_type\": \"score\", \"target_agent_id\": \"", '"') {
            json!({"agent_id": agent, "thinking": "t", "long_term_memory": "m", "short_term_plan": "p",
                   "action": {"action_type": "score", "target_agent_id": target, "score": 6, "reason": "steady"}})
        } else {
            json!({"agent_id": agent, "thinking": "t", "long_term_memory": "m", "short_term_plan": "p",
                   "action": {"action_type": "do_nothing", "reason": "Finished planning."}})
        };
        ResponseTemplate::new(200).set_body_json(
            json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content.to_string()}}]}),
        )
    }
}

fn wire_protocol() -> Outcome {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let server = rt.block_on(MockServer::start());
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("remote.toml");
    let text = format!(
        "version = \"exemplar-sim/1\"\n[experiment]\nid = \"game1\"\nseed = 7\n[llm_backend]\nkind = \"remote\"\nbase_url = \"{}\"\nmodel = \"acceptance-model\"\nmax_attempts = 3\nbackoff_ms = 1\ntimeout_secs = 5\n",
        server.uri()
    );
    std::fs::write(&cfg_path, text).unwrap();
    let out_dir = tmp.path().join("out");
    let base = || {
        let mut c = Command::new(bin());
        c.env("EXEMPLAR_SIM_API_KEY", "acceptance-key").arg("run").arg("--config").arg(&cfg_path);
        c
    };

    rt.block_on(
        Mock::given(method("POST"))
            .and(path("/v1/chat/completions"))
            .respond_with(ResponseTemplate::new(500).set_body_string("upstream down"))
            .mount(&server),
    );
    let failed = sim(base().args(["--run-id", "wire", "--out"]).arg(&out_dir));
    ensure(!failed.status.success(), "run succeeded against a failing server")?;
    let stderr = String::from_utf8_lossy(&failed.stderr);
    ensure(stderr.contains("--resume"), format!("no resume hint: {stderr}"))?;
    let received = rt.block_on(server.received_requests()).unwrap();
    ensure(received.len() == 3, format!("{} requests on 500s, expected 3", received.len()))?;

    let cfg = exemplar_core::load_config(&cfg_path).unwrap();
    let world = build_world(&cfg).unwrap();
    let first: Value = serde_json::from_slice(&received[0].body).unwrap();
    ensure(first["model"] == "acceptance-model", "model not honored")?;
    ensure(first["messages"][0]["role"] == "system", "first message is not system")?;
    ensure(
        first["messages"][0]["content"] == world.agents[YURI_ID].archetype.profile_text.as_str(),
        "system message is not the profile",
    )?;
    let auth = received[0].headers.get("authorization").map(|v| v.to_str().unwrap_or_default().to_string());
    ensure(auth.as_deref() == Some("Bearer acceptance-key"), format!("authorization {auth:?}"))?;

    let ckpt_path = out_dir.join("wire.ckpt");
    let ckpt = load_checkpoint(&ckpt_path).map_err(|e| format!("checkpoint: {e}"))?;
    ensure(ckpt.day == 0, format!("checkpoint at day {}", ckpt.day))?;

    rt.block_on(async {
        server.reset().await;
        Mock::given(method("POST")).and(path("/v1/chat/completions")).respond_with(TribeResponder).mount(&server).await;
    });
    let resumed = sim(base().arg("--resume").arg(&ckpt_path).args(["--stop-after", "2"]));
    ensure(resumed.status.success(), format!("resume failed: {}", String::from_utf8_lossy(&resumed.stderr)))?;
    let logs = read_logs(&out_dir.join("wire.jsonl")).unwrap();
    ensure(logs.len() == 16, format!("{} entries after resume", logs.len()))?;
    let requests = rt.block_on(server.received_requests()).unwrap();
    for r in &requests {
        let body: Value = serde_json::from_slice(&r.body).unwrap();
        let prompt = body["messages"][1]["content"].as_str().unwrap_or_default();
        let agent = between(prompt, "Your agent ID is ", '.').unwrap_or_default();
        let profile = world.agents.get(agent).map(|a| a.archetype.profile_text.as_str());
        ensure(body["messages"][0]["content"].as_str() == profile, format!("system message mismatch for {agent}"))?;
    }
    Ok(format!("3 attempts on 500, checkpoint at day 0, resumed 2 days over {} requests", requests.len()))
}

fn oracle_equivalence() -> Outcome {
    let dir = workspace().join("crates/core/tests/fixtures/oracle");
    let logs = read_logs(&dir.join("logs.jsonl")).unwrap();
    let runs: std::collections::BTreeSet<_> = logs.iter().map(|e| e.run_id.clone()).collect();
    let agents: std::collections::BTreeSet<_> = logs.iter().map(|e| e.aspirant_id.clone()).collect();
    ensure(runs.len() == 3 && agents.len() == 4 && logs.iter().all(|e| e.day <= 10), "fixture shape")?;
    let s = series(&logs);
    let mut checked = 0;
    for r in csv::Reader::from_path(dir.join("expected_series.csv")).unwrap().records() {
        let r = r.unwrap();
        let g = if &r[0] == "prosocial" { MoralGroup::Prosocial } else { MoralGroup::Selfish };
        let i: usize = r[1].parse::<usize>().unwrap() - 1;
        let (m, sd): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        ensure((s[&g].per_day_mean[i].unwrap() - m).abs() < 1e-9, format!("mean {r:?}"))?;
        ensure((s[&g].per_day_sd[i].unwrap() - sd).abs() < 1e-9, format!("sd {r:?}"))?;
        checked += 2;
    }
    let windows = MetricWindows { early: 1..=5, late: 6..=10 };
    for r in csv::Reader::from_path(dir.join("expected_metrics.csv")).unwrap().records() {
        let r = r.unwrap();
        let g = if &r[0] == "prosocial" { MoralGroup::Prosocial } else { MoralGroup::Selfish };
        let m = compute_metrics_with(&s[&g], &windows).unwrap();
        for (k, v) in [m.early_svo_mean, m.early_svo_sd, m.late_svo_mean, m.late_svo_sd, m.delta_svo].iter().enumerate()
        {
            let want: f64 = r[k + 1].parse().unwrap();
            ensure((v - want).abs() < 1e-9, format!("{} column {}: {v} vs {want}", &r[0], k + 1))?;
            checked += 1;
        }
        let fp = m.first_positive_day.map(|d| d.to_string()).unwrap_or_else(|| "none".into());
        ensure(fp == r[6], format!("first_positive {fp} vs {}", &r[6]))?;
        let peak: f64 = r[7].parse().unwrap();
        ensure((m.peak_svo - peak).abs() < 1e-9, "peak")?;
        ensure(m.stability.label() == &r[8], "stability")?;
        checked += 3;
    }
    Ok(format!("{checked} values within 1e-9"))
}

fn log_audit() -> Outcome {
    let mut total = 0;
    for id in ExperimentId::ALL {
        let logs = scripted_run(id);
        let report = audit_entries(&logs);
        ensure(report.ok(), format!("{id}: {:?}", report.problems))?;
        total += report.entries;
    }
    let mut tampered = scripted_run(ExperimentId::Game1);
    tampered[5].svo_score += 0.5;
    tampered.remove(17);
    let report = audit_entries(&tampered);
    ensure(report.problems.len() >= 2, format!("tampered log not caught: {:?}", report.problems))?;
    Ok(format!("{} experiments, {total} entries clean; tampering detected", ExperimentId::ALL.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("svo exactness", svo_exactness),
        ("collapse fidelity", collapse_fidelity),
        ("stability labels", stability_labels),
        ("determinism and resume", determinism_and_resume),
        ("scripted directionality", directionality),
        ("validation and repair", validation_repair),
        ("wire protocol", wire_protocol),
        ("oracle equivalence", oracle_equivalence),
        ("log completeness audit", log_audit),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(check).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
