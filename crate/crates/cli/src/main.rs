use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use exemplar_core::analysis::{
    behavior_counts, compute_metrics, default_lexicon, group_svo_series, justification_keywords, norm_loss,
    vote_targets, voting_trend, write_behavior_csv, write_keywords_csv, write_metrics_csv, write_norm_loss_csv,
    write_reduction_csv, write_series_csv, write_voting_csv, MetricsRow, Pooling, EARLY_WINDOW, LATE_WINDOW,
};
use exemplar_core::telemetry::audit_entries;
use exemplar_core::{load_config, make_backend, read_logs, run_experiment, LogEntry, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "exemplar-sim", version, about = "Valley Tribe exemplar-learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run or resume an experiment.
    Run(RunArgs),
    /// Write every metric table as CSV.
    Analyze(AnalyzeArgs),
    /// Print per-group summary metrics.
    Metrics(MetricsArgs),
    /// Check logs for one entry per living agent-day and consistent SVO.
    Audit {
        #[arg(long)]
        logs: String,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Output directory; defaults to `runs`, or the checkpoint's directory when resuming.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    run_id: Option<String>,
    /// Stop once this day is complete.
    #[arg(long)]
    stop_after: Option<u32>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Glob of JSONL log files.
    #[arg(long)]
    logs: String,
    #[arg(long)]
    out: PathBuf,
    /// Glob of baseline logs; enables the norm-loss table.
    #[arg(long)]
    baseline: Option<String>,
    /// Pool run means instead of individual observations.
    #[arg(long)]
    run_mean_pooling: bool,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    logs: String,
    #[arg(long)]
    run_mean_pooling: bool,
}

fn load_logs(pattern: &str) -> Result<Vec<LogEntry>> {
    let mut paths: Vec<PathBuf> =
        glob::glob(pattern).with_context(|| format!("bad glob `{pattern}`"))?.collect::<Result<_, _>>()?;
    paths.sort();
    if paths.is_empty() {
        bail!("no log files match `{pattern}`");
    }
    let mut all = Vec::new();
    for p in &paths {
        all.extend(read_logs(p)?);
    }
    Ok(all)
}

fn pooling(run_mean: bool) -> Pooling {
    if run_mean {
        Pooling::RunMean
    } else {
        Pooling::Observation
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = match (&args.out, &args.resume) {
        (Some(o), _) => o.clone(),
        (None, Some(ckpt)) => ckpt.parent().map(Path::to_path_buf).unwrap_or_default(),
        (None, None) => PathBuf::from("runs"),
    };
    let backend = make_backend(&config.backend)?;
    let opts = RunOptions { out_dir: out, run_id: args.run_id, stop_after: args.stop_after, resume: args.resume };
    match run_experiment(config, backend, &opts) {
        Ok(s) => {
            println!("run {} completed day {}", s.run_id, s.days_completed);
            println!("log: {}", s.log_path.display());
            println!("checkpoint: {}", s.checkpoint_path.display());
            Ok(())
        }
        Err(RunError::Backend { day, checkpoint, source }) => {
            bail!("backend failed on day {day}: {source}\nresume with --resume {}", checkpoint.display())
        }
        Err(e) => Err(e.into()),
    }
}

fn metrics_rows(logs: &[LogEntry], pool: Pooling) -> Result<Vec<MetricsRow>> {
    let series = group_svo_series(logs, pool)?;
    Ok(series.values().map(compute_metrics).collect::<Result<_, _>>()?)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("cannot write {}", path.display()))?))
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let logs = load_logs(&args.logs)?;
    let pool = pooling(args.run_mean_pooling);
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;

    let series = group_svo_series(&logs, pool)?;
    write_series_csv(create(&args.out, "svo_series.csv")?, &series)?;
    let rows: Vec<MetricsRow> = series.values().map(compute_metrics).collect::<Result<_, _>>()?;
    write_metrics_csv(create(&args.out, "metrics.csv")?, &rows)?;

    let behavior = behavior_counts(&logs);
    write_behavior_csv(create(&args.out, "behavior_counts.csv")?, &behavior)?;
    write_reduction_csv(create(&args.out, "antisocial_reduction.csv")?, &behavior)?;

    let targets = vote_targets(&logs);
    if !targets.is_empty() {
        let trends =
            targets.iter().map(|t| Ok((t.clone(), voting_trend(&logs, t)?))).collect::<Result<BTreeMap<_, _>>>()?;
        write_voting_csv(create(&args.out, "voting_trend.csv")?, &trends)?;
    }

    let lexicon = default_lexicon();
    let tables = vec![
        ("early", justification_keywords(&logs, &lexicon, EARLY_WINDOW)?),
        ("late", justification_keywords(&logs, &lexicon, LATE_WINDOW)?),
    ];
    write_keywords_csv(create(&args.out, "keywords.csv")?, &tables)?;

    if let Some(pattern) = &args.baseline {
        let base = group_svo_series(&load_logs(pattern)?, pool)?;
        let mut deficits = BTreeMap::new();
        for (g, conflict) in &series {
            if let Some(b) = base.get(g) {
                deficits.insert(*g, norm_loss(b, conflict)?);
            }
        }
        write_norm_loss_csv(create(&args.out, "norm_loss.csv")?, &deficits)?;
    }
    println!("wrote analysis for {} entries to {}", logs.len(), args.out.display());
    Ok(())
}

fn cmd_metrics(args: MetricsArgs) -> Result<()> {
    let logs = load_logs(&args.logs)?;
    let rows = metrics_rows(&logs, pooling(args.run_mean_pooling))?;
    write_metrics_csv(io::stdout().lock(), &rows)?;
    Ok(())
}

fn cmd_audit(pattern: &str) -> Result<()> {
    let report = audit_entries(&load_logs(pattern)?);
    for p in &report.problems {
        eprintln!("{p}");
    }
    if !report.ok() {
        bail!("{} problems in {} entries", report.problems.len(), report.entries);
    }
    println!("ok: {} runs, {} entries", report.runs, report.entries);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Audit { logs } => cmd_audit(&logs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
