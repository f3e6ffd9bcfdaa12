use std::path::PathBuf;

use exemplar_core::scenario::{BackendConfig, ExperimentConfig, ExperimentId};
use exemplar_core::{load_config, Simulation};

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    load_config(config_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn every_shipped_config_loads_and_builds() {
    let mut seen = 0;
    for entry in std::fs::read_dir(config_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            if cfg.backend == BackendConfig::Scripted {
                Simulation::scripted(cfg).unwrap().step_day().unwrap();
            }
            seen += 1;
        }
    }
    assert!(seen >= 13);
}

#[test]
fn reference_game1_file_restates_defaults() {
    assert_eq!(load("game1.toml"), ExperimentConfig::for_experiment(ExperimentId::Game1, 42));
}

#[test]
fn experiment_files_match_their_presets() {
    for (file, id) in [
        ("game2.toml", ExperimentId::Game2),
        ("game3.toml", ExperimentId::Game3),
        ("game4.toml", ExperimentId::Game4),
        ("ablation1.toml", ExperimentId::Ablation1),
        ("ablation2.toml", ExperimentId::Ablation2),
        ("ablation3.toml", ExperimentId::Ablation3),
        ("uninspiring.toml", ExperimentId::AblationUninspiring),
    ] {
        assert_eq!(load(file), ExperimentConfig::for_experiment(id, 42), "{file}");
    }
}

#[test]
fn sweeps_change_only_their_knob() {
    assert_eq!(load("game1_followers12.toml").follower_ids().len(), 12);
    assert_eq!(load("game1_followers17.toml").follower_ids().len(), 17);
    assert_eq!(load("game1_prompt_v2.toml").prompt_variant.name(), "v2");
    assert!(matches!(load("game1_remote.toml").backend, BackendConfig::Remote(_)));
}
