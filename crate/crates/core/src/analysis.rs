//! Metrics over JSONL logs. Every function here is a pure function of its input entries.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::domain::{moral_group, ArchetypeKind, MoralGroup};
use crate::error::AnalysisError;
use crate::telemetry::LogEntry;

pub const EARLY_WINDOW: RangeInclusive<u32> = 1..=5;
pub const LATE_WINDOW: RangeInclusive<u32> = 26..=30;
/// Minimum SD shift that changes the stability label.
pub const STABILITY_THRESHOLD: f64 = 0.03;
const STABILITY_EPS: f64 = 1e-9;

/// How observations from several runs are combined per day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pooling {
    /// Every agent-day observation counts once.
    #[default]
    Observation,
    /// Each run contributes its group mean for the day.
    RunMean,
}

/// Per-day group statistics, index 0 is day 1. Days without observations are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSeries {
    pub group: MoralGroup,
    pub per_day_mean: Vec<Option<f64>>,
    /// Population SD.
    pub per_day_sd: Vec<Option<f64>>,
    pub per_day_count: Vec<usize>,
}

impl GroupSeries {
    pub fn len(&self) -> usize {
        self.per_day_mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_day_mean.is_empty()
    }

    pub fn mean_on(&self, day: u32) -> Option<f64> {
        self.per_day_mean.get(day.checked_sub(1)? as usize).copied().flatten()
    }

    /// Pooled mean and population SD over the observations of a day window.
    pub fn window_stats(&self, window: RangeInclusive<u32>) -> Option<(f64, f64)> {
        let days: Vec<(f64, f64, f64)> = window
            .filter_map(|d| {
                let i = d.checked_sub(1)? as usize;
                let n = *self.per_day_count.get(i)?;
                Some((n as f64, self.per_day_mean[i]?, self.per_day_sd[i]?))
            })
            .filter(|(n, _, _)| *n > 0.0)
            .collect();
        let total: f64 = days.iter().map(|(n, _, _)| n).sum();
        if total == 0.0 {
            return None;
        }
        let mean = days.iter().map(|(n, m, _)| n * m).sum::<f64>() / total;
        let var = days.iter().map(|(n, m, sd)| n * (sd * sd + (m - mean).powi(2))).sum::<f64>() / total;
        Some((mean, var.max(0.0).sqrt()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Degraded,
    Improved,
}

impl Stability {
    pub fn label(self) -> &'static str {
        match self {
            Stability::Stable => "Stable",
            Stability::Degraded => "Degraded",
            Stability::Improved => "Improved",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub group: MoralGroup,
    pub early_svo_mean: f64,
    pub early_svo_sd: f64,
    pub late_svo_mean: f64,
    pub late_svo_sd: f64,
    pub delta_svo: f64,
    pub first_positive_day: Option<u32>,
    pub peak_svo: f64,
    pub stability: Stability,
}

/// Follower group of a log entry, `None` for exemplars and unknown labels.
pub fn entry_group(entry: &LogEntry) -> Option<MoralGroup> {
    ArchetypeKind::from_label(&entry.aspirant_type).and_then(|k| moral_group(k).ok())
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-group daily SVO mean and population SD over followers, pooled across runs.
pub fn group_svo_series(
    logs: &[LogEntry],
    pooling: Pooling,
) -> Result<BTreeMap<MoralGroup, GroupSeries>, AnalysisError> {
    let max_day = logs.iter().map(|e| e.day).max().unwrap_or(0) as usize;
    let mut obs: BTreeMap<MoralGroup, Vec<BTreeMap<&str, Vec<f64>>>> = BTreeMap::new();
    for e in logs {
        let Some(group) = entry_group(e) else { continue };
        if e.day == 0 {
            continue;
        }
        let days = obs.entry(group).or_insert_with(|| vec![BTreeMap::new(); max_day]);
        days[e.day as usize - 1].entry(e.run_id.as_str()).or_default().push(e.svo_score);
    }
    for group in [MoralGroup::Prosocial, MoralGroup::Selfish] {
        if !obs.contains_key(&group) {
            return Err(AnalysisError::EmptyGroup(group.label().into()));
        }
    }
    Ok(obs
        .into_iter()
        .map(|(group, days)| {
            let mut series = GroupSeries { group, per_day_mean: vec![], per_day_sd: vec![], per_day_count: vec![] };
            for runs in days {
                let xs: Vec<f64> = match pooling {
                    Pooling::Observation => runs.values().flatten().copied().collect(),
                    Pooling::RunMean => runs.values().map(|v| mean_sd(v).0).collect(),
                };
                if xs.is_empty() {
                    series.per_day_mean.push(None);
                    series.per_day_sd.push(None);
                } else {
                    let (m, sd) = mean_sd(&xs);
                    series.per_day_mean.push(Some(m));
                    series.per_day_sd.push(Some(sd));
                }
                series.per_day_count.push(xs.len());
            }
            (group, series)
        })
        .collect())
}

pub fn classify_stability(early_sd: f64, late_sd: f64) -> Stability {
    let shift = late_sd - early_sd;
    if shift > STABILITY_THRESHOLD + STABILITY_EPS {
        Stability::Degraded
    } else if shift < -STABILITY_THRESHOLD - STABILITY_EPS {
        Stability::Improved
    } else {
        Stability::Stable
    }
}

/// Early and late day windows for [`compute_metrics_with`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricWindows {
    pub early: RangeInclusive<u32>,
    pub late: RangeInclusive<u32>,
}

impl Default for MetricWindows {
    fn default() -> Self {
        Self { early: EARLY_WINDOW, late: LATE_WINDOW }
    }
}

/// Metrics with the standard days 1-5 and 26-30 windows.
pub fn compute_metrics(series: &GroupSeries) -> Result<MetricsRow, AnalysisError> {
    compute_metrics_with(series, &MetricWindows::default())
}

pub fn compute_metrics_with(series: &GroupSeries, windows: &MetricWindows) -> Result<MetricsRow, AnalysisError> {
    let needed = *windows.late.end().max(windows.early.end()) as usize;
    if series.len() < needed {
        return Err(AnalysisError::SeriesTooShort { len: series.len(), needed });
    }
    let window = |w: RangeInclusive<u32>| {
        let label = format!("{} on days {}-{}", series.group, w.start(), w.end());
        series.window_stats(w).ok_or(AnalysisError::EmptyGroup(label))
    };
    let (early_svo_mean, early_svo_sd) = window(windows.early.clone())?;
    let (late_svo_mean, late_svo_sd) = window(windows.late.clone())?;
    let first_positive_day = series.per_day_mean.iter().position(|m| m.is_some_and(|m| m > 0.0)).map(|i| i as u32 + 1);
    let peak_svo = series.per_day_mean.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(MetricsRow {
        group: series.group,
        early_svo_mean,
        early_svo_sd,
        late_svo_mean,
        late_svo_sd,
        delta_svo: late_svo_mean - early_svo_mean,
        first_positive_day,
        peak_svo,
        stability: classify_stability(early_svo_sd, late_svo_sd),
    })
}

/// Per-day baseline mean minus conflict mean. Positive values mean the conflict run lost cooperation.
pub fn norm_loss(baseline: &GroupSeries, conflict: &GroupSeries) -> Result<Vec<Option<f64>>, AnalysisError> {
    if baseline.group != conflict.group {
        return Err(AnalysisError::GroupMismatch(baseline.group.label().into(), conflict.group.label().into()));
    }
    if baseline.len() != conflict.len() {
        return Err(AnalysisError::LengthMismatch { baseline: baseline.len(), conflict: conflict.len() });
    }
    Ok(baseline.per_day_mean.iter().zip(&conflict.per_day_mean).map(|(b, c)| Some((*b)? - (*c)?)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BehaviorCount {
    pub prosocial: u32,
    pub antisocial: u32,
    pub neutral: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntisocialReduction {
    pub group: MoralGroup,
    /// Mean antisocial acts per run-day in the early window.
    pub early_mean: f64,
    pub late_mean: f64,
    /// `None` when there were no early antisocial acts.
    pub reduction_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorReport {
    pub counts: BTreeMap<(u32, MoralGroup), BehaviorCount>,
    pub reductions: Vec<AntisocialReduction>,
}

fn action_name(action_taken: &str) -> &str {
    action_taken.split('(').next().unwrap_or("").trim()
}

/// Daily prosocial/antisocial/neutral act counts per follower group.
///
/// Prosocial is formAlliance and shareFood, antisocial is exploitResource and rob,
/// neutral is rest. Gathering and doing nothing are not counted.
pub fn behavior_counts(logs: &[LogEntry]) -> BehaviorReport {
    let max_day = logs.iter().map(|e| e.day).max().unwrap_or(0);
    let groups: BTreeSet<MoralGroup> = logs.iter().filter_map(entry_group).collect();
    let mut counts = BTreeMap::new();
    for &g in &groups {
        for d in 1..=max_day {
            counts.insert((d, g), BehaviorCount::default());
        }
    }
    for e in logs {
        let Some(g) = entry_group(e) else { continue };
        let Some(c) = counts.get_mut(&(e.day, g)) else { continue };
        match action_name(&e.action_taken) {
            "formAlliance" | "shareFood" => c.prosocial += 1,
            "exploitResource" | "rob" => c.antisocial += 1,
            "rest" => c.neutral += 1,
            _ => {}
        }
    }
    let runs = logs.iter().map(|e| e.run_id.as_str()).collect::<BTreeSet<_>>().len().max(1);
    let window_mean = |g: MoralGroup, w: RangeInclusive<u32>| {
        let days: Vec<u32> = w.filter_map(|d| counts.get(&(d, g)).map(|c| c.antisocial)).collect();
        if days.is_empty() {
            0.0
        } else {
            days.iter().sum::<u32>() as f64 / (days.len() * runs) as f64
        }
    };
    let reductions = groups
        .iter()
        .map(|&g| {
            let early_mean = window_mean(g, EARLY_WINDOW);
            let late_mean = window_mean(g, LATE_WINDOW);
            AntisocialReduction {
                group: g,
                early_mean,
                late_mean,
                reduction_pct: (early_mean > 0.0).then(|| (early_mean - late_mean) / early_mean * 100.0),
            }
        })
        .collect();
    BehaviorReport { counts, reductions }
}

/// Daily mean score given to `target` across voters and runs. Days without votes are `None`.
pub fn voting_trend(logs: &[LogEntry], target: &str) -> Result<Vec<Option<f64>>, AnalysisError> {
    let max_day = logs.iter().map(|e| e.day).max().unwrap_or(0) as usize;
    let mut days: Vec<Vec<i64>> = vec![Vec::new(); max_day];
    for e in logs.iter().filter(|e| e.day >= 1) {
        for v in e.votes_given.iter().filter(|v| v.target == target) {
            days[e.day as usize - 1].push(v.score);
        }
    }
    if days.iter().all(Vec::is_empty) {
        return Err(AnalysisError::NeverVoted(target.into()));
    }
    Ok(days.into_iter().map(|s| (!s.is_empty()).then(|| s.iter().sum::<i64>() as f64 / s.len() as f64)).collect())
}

/// Agents that received at least one vote, sorted.
pub fn vote_targets(logs: &[LogEntry]) -> Vec<String> {
    let set: BTreeSet<&str> = logs.iter().flat_map(|e| e.votes_given.iter().map(|v| v.target.as_str())).collect();
    set.into_iter().map(str::to_string).collect()
}

pub type Lexicon = BTreeMap<String, Vec<String>>;

/// Self-interest and cooperation vocabularies.
pub fn default_lexicon() -> Lexicon {
    let words = |ws: &[&str]| ws.iter().map(|w| w.to_string()).collect();
    BTreeMap::from([
        ("selfish".to_string(), words(&["gain", "maximize", "benefit"])),
        ("prosocial".to_string(), words(&["alliance", "stability", "long-term", "social"])),
    ])
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || c == '-' || c == '\''))
        .map(|t| t.trim_matches(|c| c == '-' || c == '\'').to_lowercase())
        .filter(|t| !t.is_empty())
}

/// Keyword counts keyed by (group, lexicon label, word).
pub type KeywordTable = BTreeMap<(MoralGroup, String, String), u32>;

/// Keyword frequencies in reflection text and vote reasons.
pub fn justification_keywords(
    logs: &[LogEntry],
    lexicon: &Lexicon,
    window: RangeInclusive<u32>,
) -> Result<KeywordTable, AnalysisError> {
    if lexicon.values().all(Vec::is_empty) {
        return Err(AnalysisError::EmptyLexicon);
    }
    let mut lookup: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    for (label, words) in lexicon {
        for w in words {
            lookup.entry(w.to_lowercase()).or_default().push((label.clone(), w.clone()));
        }
    }
    let mut table = BTreeMap::new();
    for g in [MoralGroup::Prosocial, MoralGroup::Selfish] {
        for (label, words) in lexicon {
            for w in words {
                table.insert((g, label.clone(), w.clone()), 0);
            }
        }
    }
    for e in logs.iter().filter(|e| window.contains(&e.day)) {
        let Some(g) = entry_group(e) else { continue };
        let mut texts: Vec<&str> = e.votes_given.iter().map(|v| v.reason.as_str()).collect();
        if let Some(r) = &e.reflection_struct {
            texts.extend([r.causal_reasoning.as_str(), r.reflection_on_action.as_str(), r.future_inspiration.as_str()]);
        }
        for token in texts.into_iter().flat_map(tokens) {
            for (label, word) in lookup.get(&token).into_iter().flatten() {
                *table.get_mut(&(g, label.clone(), word.clone())).unwrap() += 1;
            }
        }
    }
    Ok(table)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

pub fn write_series_csv<W: Write>(out: W, series: &BTreeMap<MoralGroup, GroupSeries>) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["day", "group", "mean_svo", "sd_population", "n"])?;
    for s in series.values() {
        for i in 0..s.len() {
            let day = (i + 1).to_string();
            w.write_record([
                &day,
                s.group.label(),
                &opt(s.per_day_mean[i]),
                &opt(s.per_day_sd[i]),
                &s.per_day_count[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricsRow]) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record([
        "group",
        "early_svo_mean",
        "early_svo_sd_population",
        "late_svo_mean",
        "late_svo_sd_population",
        "delta_svo",
        "first_positive_day",
        "peak_svo",
        "stability",
    ])?;
    for r in rows {
        w.write_record([
            r.group.label().to_string(),
            r.early_svo_mean.to_string(),
            r.early_svo_sd.to_string(),
            r.late_svo_mean.to_string(),
            r.late_svo_sd.to_string(),
            r.delta_svo.to_string(),
            r.first_positive_day.map(|d| d.to_string()).unwrap_or_else(|| "none".into()),
            r.peak_svo.to_string(),
            r.stability.label().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_norm_loss_csv<W: Write>(out: W, rows: &BTreeMap<MoralGroup, Vec<Option<f64>>>) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["day", "group", "svo_deficit"])?;
    for (g, days) in rows {
        for (i, d) in days.iter().enumerate() {
            w.write_record([&(i + 1).to_string(), g.label(), &opt(*d)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_behavior_csv<W: Write>(out: W, report: &BehaviorReport) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["day", "group", "category", "count"])?;
    for ((day, g), c) in &report.counts {
        for (cat, n) in [("prosocial", c.prosocial), ("antisocial", c.antisocial), ("neutral", c.neutral)] {
            w.write_record([&day.to_string(), g.label(), cat, &n.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_reduction_csv<W: Write>(out: W, report: &BehaviorReport) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["group", "early_antisocial_mean", "late_antisocial_mean", "reduction_pct"])?;
    for r in &report.reductions {
        w.write_record([r.group.label(), &r.early_mean.to_string(), &r.late_mean.to_string(), &opt(r.reduction_pct)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_voting_csv<W: Write>(out: W, trends: &BTreeMap<String, Vec<Option<f64>>>) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["day", "target", "mean_score"])?;
    for (target, days) in trends {
        for (i, d) in days.iter().enumerate() {
            w.write_record([&(i + 1).to_string(), target.as_str(), &opt(*d)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_keywords_csv<W: Write>(out: W, tables: &[(&str, KeywordTable)]) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["window", "group", "label", "word", "count"])?;
    for (window, table) in tables {
        for ((g, label, word), n) in table {
            w.write_record([*window, g.label(), label.as_str(), word.as_str(), &n.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
