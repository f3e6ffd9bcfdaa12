use criterion::{black_box, criterion_group, criterion_main, Criterion};

use exemplar_core::analysis::{group_svo_series, Pooling};
use exemplar_core::cognition::{validate_response, PhaseKind};
use exemplar_core::{ExperimentConfig, ExperimentId, Simulation};

fn game1() -> ExperimentConfig {
    ExperimentConfig::for_experiment(ExperimentId::Game1, 42)
}

fn simulate(c: &mut Criterion) {
    c.bench_function("step_day game1", |b| {
        b.iter_batched(
            || Simulation::scripted(game1()).unwrap(),
            |mut s| s.step_day().unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
    c.bench_function("full run game1", |b| b.iter(|| Simulation::scripted(game1()).unwrap().run_to_end().unwrap()));
}

fn analyze(c: &mut Criterion) {
    let logs = Simulation::scripted(game1()).unwrap().run_to_end().unwrap();
    c.bench_function("group_svo_series 240 entries", |b| {
        b.iter(|| group_svo_series(black_box(&logs), Pooling::Observation).unwrap())
    });
}

fn validate(c: &mut Criterion) {
    let raw = r#"{"agent_id": "reproductive_1", "thinking": "t", "long_term_memory": "m", "short_term_plan": "p",
        "action": {"action_type": "share_food", "target_agent_id": "elder_yuri", "amount": 1}}"#;
    c.bench_function("validate_response act", |b| {
        b.iter(|| validate_response(black_box(raw), PhaseKind::Act, "reproductive_1", None).unwrap())
    });
}

criterion_group!(benches, simulate, analyze, validate);
criterion_main!(benches);
