//! JSONL agent-day logs and whole-run checkpoints.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cognition::{PhaseKind, ReflectionPayload};
use crate::domain::{AgentId, BeliefSystem};
use crate::error::TelemetryError;
use crate::world::WorldState;

pub const CHECKPOINT_VERSION: &str = "exemplar-sim-ckpt/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub target: AgentId,
    pub score: i64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndOfDayState {
    pub hp: i64,
    pub food: i64,
    pub age: u32,
    pub allies: Vec<AgentId>,
    pub children: u32,
}

/// How one phase decision was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub phase: PhaseKind,
    pub action: String,
    pub repairs: u32,
    pub fallback: bool,
}

/// One agent-day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub run_id: String,
    pub day: u32,
    pub aspirant_id: AgentId,
    pub aspirant_type: String,
    pub observation_brief: String,
    pub action_taken: String,
    pub action_succeeded: bool,
    pub votes_given: Vec<VoteRecord>,
    pub reflection_struct: Option<ReflectionPayload>,
    pub end_of_day_state: EndOfDayState,
    pub current_beliefs: BeliefSystem,
    pub svo_score: f64,
    pub experiment_id: String,
    pub is_post_collapse: bool,
    pub phase_trace: Vec<PhaseRecord>,
}

pub fn log_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join(format!("{run_id}.jsonl"))
}

pub fn checkpoint_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join(format!("{run_id}.ckpt"))
}

/// Appends one JSON line.
pub fn append_log(path: &Path, entry: &LogEntry) -> Result<(), TelemetryError> {
    append_logs(path, std::slice::from_ref(entry))
}

/// Appends a day's entries with a single write.
pub fn append_logs(path: &Path, entries: &[LogEntry]) -> Result<(), TelemetryError> {
    let day = entries.first().map_or(0, |e| e.day);
    let io = |source| TelemetryError::Io { path: path.to_path_buf(), day, source };
    let mut buf = String::new();
    for e in entries {
        buf.push_str(&serde_json::to_string(e).expect("log entries always serialize"));
        buf.push('\n');
    }
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    file.write_all(buf.as_bytes()).map_err(io)?;
    file.flush().map_err(io)
}

pub fn read_logs(path: &Path) -> Result<Vec<LogEntry>, TelemetryError> {
    let file = File::open(path).map_err(|source| TelemetryError::Io { path: path.to_path_buf(), day: 0, source })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| TelemetryError::Io { path: path.to_path_buf(), day: 0, source })?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| TelemetryError::MalformedLog {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(entry);
    }
    Ok(out)
}

/// Drops log lines past `max_day`, e.g. from a day that aborted after partial output.
pub fn truncate_log(path: &Path, max_day: u32) -> Result<(), TelemetryError> {
    if !path.exists() {
        return Ok(());
    }
    let entries = read_logs(path)?;
    if entries.iter().all(|e| e.day <= max_day) {
        return Ok(());
    }
    let mut buf = String::new();
    for e in entries.iter().filter(|e| e.day <= max_day) {
        buf.push_str(&serde_json::to_string(e).expect("log entries always serialize"));
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes(), max_day)
}

fn write_atomic(path: &Path, bytes: &[u8], day: u32) -> Result<(), TelemetryError> {
    let io = |source| TelemetryError::Io { path: path.to_path_buf(), day, source };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp).map_err(io)?;
        f.write_all(bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

/// Serializable position of the run generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    /// Decimal, since the position is 128-bit.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self { seed: hex::encode(rng.get_seed()), stream: rng.get_stream(), word_pos: rng.get_word_pos().to_string() }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng, String> {
        use rand::SeedableRng;
        let bytes = hex::decode(&self.seed).map_err(|e| format!("rng seed: {e}"))?;
        let seed: [u8; 32] = bytes.try_into().map_err(|_| "rng seed must be 32 bytes".to_string())?;
        let pos: u128 = self.word_pos.parse().map_err(|e| format!("rng word_pos: {e}"))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub version: String,
    pub run_id: String,
    pub experiment_id: String,
    pub seed: u64,
    /// Last completed day.
    pub day: u32,
    pub world: WorldState,
    pub rng_state: RngState,
    pub config_digest: String,
}

impl CheckpointFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoints always serialize");
        s.push('\n');
        s.into_bytes()
    }

    pub fn rng(&self) -> Result<ChaCha8Rng, String> {
        self.rng_state.restore()
    }

    /// Errors if the checkpoint was written for a different config.
    pub fn check_digest(&self, current: &str) -> Result<(), TelemetryError> {
        if self.config_digest != current {
            return Err(TelemetryError::DigestMismatch {
                checkpoint: self.config_digest.clone(),
                current: current.to_string(),
            });
        }
        Ok(())
    }
}

/// Writes to a temporary file and renames over the target.
pub fn save_checkpoint(path: &Path, ckpt: &CheckpointFile) -> Result<(), TelemetryError> {
    write_atomic(path, &ckpt.to_bytes(), ckpt.day)
}

pub fn load_checkpoint(path: &Path) -> Result<CheckpointFile, TelemetryError> {
    let text =
        fs::read_to_string(path).map_err(|source| TelemetryError::Io { path: path.to_path_buf(), day: 0, source })?;
    let corrupt = |message: String| TelemetryError::Corrupt { path: path.to_path_buf(), message };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    let version = value.get("version").and_then(|v| v.as_str()).ok_or_else(|| corrupt("missing version".into()))?;
    if version != CHECKPOINT_VERSION {
        return Err(TelemetryError::Version { found: version.to_string(), expected: CHECKPOINT_VERSION.into() });
    }
    let ckpt: CheckpointFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
    ckpt.rng_state.restore().map_err(corrupt)?;
    Ok(ckpt)
}

/// UTC timestamp plus a 4-hex suffix, e.g. `20260101T093000Z-1a2b`.
pub fn new_run_id() -> String {
    format!("{}-{:04x}", chrono::Utc::now().format("%Y%m%dT%H%M%SZ"), rand::random::<u16>())
}

/// Result of [`audit_entries`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub runs: usize,
    pub entries: usize,
    pub problems: Vec<String>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Checks completeness (one entry per agent per day while alive, no gaps or repeats)
/// and that each `svo_score` agrees with the logged beliefs.
pub fn audit_entries(entries: &[LogEntry]) -> AuditReport {
    let mut problems = Vec::new();
    let mut by_run: BTreeMap<&str, Vec<&LogEntry>> = BTreeMap::new();
    for e in entries {
        by_run.entry(&e.run_id).or_default().push(e);
        let svo = e.current_beliefs.svo();
        if (svo - e.svo_score).abs() > 1e-9 {
            problems
                .push(format!("{} day {} {}: svo_score {} != {}", e.run_id, e.day, e.aspirant_id, e.svo_score, svo));
        }
    }
    for (run, rows) in &by_run {
        let mut seen = BTreeSet::new();
        let mut days: BTreeMap<u32, BTreeSet<&str>> = BTreeMap::new();
        for e in rows {
            if !seen.insert((e.day, e.aspirant_id.as_str())) {
                problems.push(format!("{run} day {}: duplicate entry for {}", e.day, e.aspirant_id));
            }
            days.entry(e.day).or_default().insert(&e.aspirant_id);
        }
        let day_list: Vec<u32> = days.keys().copied().collect();
        if day_list.first() != Some(&1) || day_list.windows(2).any(|w| w[1] != w[0] + 1) {
            problems.push(format!("{run}: days are not contiguous from 1: {day_list:?}"));
        }
        let dead_after: BTreeMap<&str, u32> = rows
            .iter()
            .filter(|e| e.end_of_day_state.hp <= 0)
            .map(|e| (e.aspirant_id.as_str(), e.day))
            .fold(BTreeMap::new(), |mut m, (id, d)| {
                m.entry(id).and_modify(|x: &mut u32| *x = (*x).min(d)).or_insert(d);
                m
            });
        let mut prev: Option<&BTreeSet<&str>> = None;
        for (day, agents) in &days {
            if let Some(prev) = prev {
                for id in prev.iter() {
                    let died = dead_after.get(id).is_some_and(|d| d < day);
                    if !died && !agents.contains(id) {
                        problems.push(format!("{run} day {day}: living agent {id} has no entry"));
                    }
                }
                for id in agents {
                    if !prev.contains(id) {
                        problems.push(format!("{run} day {day}: {id} appears without a previous day"));
                    }
                }
            }
            for id in agents {
                if dead_after.get(id).is_some_and(|d| d < day) {
                    problems.push(format!("{run} day {day}: {id} logged after death"));
                }
            }
            prev = Some(agents);
        }
    }
    AuditReport { runs: by_run.len(), entries: entries.len(), problems }
}
