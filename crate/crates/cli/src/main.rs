//! `entrospect` — mine a repository's entropy history and analyze it.
//!
//! Four stages, each reading the previous stage's artifacts from the output
//! directory so the expensive mining pass runs once:
//!
//! ```text
//! entrospect analyze   --repo PATH --out DIR    # commits.csv, file_changes.csv, series.json
//! entrospect detect    --out DIR [--labels F]   # events.json (+ precision report)
//! entrospect trends    --out DIR                # trend_report.json, spikes_drops.csv
//! entrospect correlate --out DIR                # correlations_file.csv, correlations_commit.csv
//! ```

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};

use entrospect_core::anomaly::{
    attach_events, detect, deltas_from_series, summarize_runs, DetectorConfig, MemoryPolicy,
    StrictnessLevel,
};
use entrospect_core::datasets;
use entrospect_core::miner::{mine, MineConfig};
use entrospect_core::records::SeriesMetric;
use entrospect_core::stats::{commit_correlation_table, file_correlation_table, EntropyBasis};
use entrospect_core::trends::{lehman_indicators, TrendConfig, DEFAULT_THRESHOLDS};
use entrospect_core::{GrammarRegistry, TokenizationConfig};

use config::FileConfig;

#[derive(Parser)]
#[command(name = "entrospect", version, about = "Entropy analysis of source code history")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine a repository into the commit/file datasets and the entropy series
    Analyze(AnalyzeArgs),
    /// Flag commits whose entropy delta is a windowed z-score outlier
    Detect(DetectArgs),
    /// Slopes, spikes/drops, spread pattern and evolution indicators
    Trends(TrendsArgs),
    /// Spearman correlation tables against classic complexity metrics
    Correlate(CorrelateArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Output directory owned by this run
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file supplying defaults for any flag
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Path to the repository to analyze
    #[arg(long)]
    repo: Option<PathBuf>,
    /// Branch to walk (defaults to the repository's HEAD branch)
    #[arg(long)]
    branch: Option<String>,
    /// Registered grammar id
    #[arg(long)]
    grammar: Option<String>,
    /// Include comment words in the primary token entropy (default)
    #[arg(long, action = ArgAction::SetTrue, conflicts_with = "no_comments")]
    include_comments: bool,
    /// Exclude comment words from the primary token entropy
    #[arg(long, action = ArgAction::SetTrue)]
    no_comments: bool,
    /// Measure comment words only
    #[arg(long, action = ArgAction::SetTrue)]
    comments_only: bool,
    /// Include keywords in the primary token entropy (default)
    #[arg(long, action = ArgAction::SetTrue, conflicts_with = "no_keywords")]
    include_keywords: bool,
    /// Exclude keywords from the primary token entropy
    #[arg(long, action = ArgAction::SetTrue)]
    no_keywords: bool,
    /// Include numeric literals in the primary token entropy (default)
    #[arg(long, action = ArgAction::SetTrue, conflicts_with = "no_numbers")]
    include_numbers: bool,
    /// Exclude numeric literals from the primary token entropy
    #[arg(long, action = ArgAction::SetTrue)]
    no_numbers: bool,
    /// Cross-check incremental totals against a full recompute every N commits
    #[arg(long)]
    verify_every: Option<usize>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mine this repository first if series.json is missing
    #[arg(long)]
    repo: Option<PathBuf>,
    /// Window capacity as a fraction of the commit count, in (0, 1]
    #[arg(long, conflicts_with = "window_size")]
    memory_frac: Option<f64>,
    /// Fixed window capacity (streaming mode)
    #[arg(long)]
    window_size: Option<usize>,
    /// |z| at or above which a delta is flagged
    #[arg(long)]
    z_threshold: Option<f64>,
    /// Window fill required before anything is flagged
    #[arg(long)]
    min_samples: Option<usize>,
    /// Series metric to detect on: token, ast-edge or ast-node
    #[arg(long)]
    metric: Option<String>,
    /// labels.csv with human judgments; prints precision per strictness level
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Also print event counts for 50/75/100% memory windows
    #[arg(long, action = ArgAction::SetTrue)]
    summarize: bool,
}

#[derive(Args)]
struct TrendsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Spike/drop thresholds as comma-separated fractions
    #[arg(long)]
    thresholds: Option<String>,
    /// Number of regression segments
    #[arg(long)]
    segments: Option<usize>,
    /// Series metric to analyze: token, ast-edge or ast-node
    #[arg(long)]
    metric: Option<String>,
}

#[derive(Args)]
struct CorrelateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Correlate entropy levels instead of per-change deltas
    #[arg(long, action = ArgAction::SetTrue)]
    entropy_levels: bool,
}

fn main() {
    if let Err(e) = run() {
        eprintln!("entrospect: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Trends(args) => cmd_trends(args),
        Command::Correlate(args) => cmd_correlate(args),
    }
}

fn load_file_config(common: &CommonArgs) -> Result<FileConfig> {
    match &common.config {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::default()),
    }
}

fn resolve_out(common: &CommonArgs, file: &FileConfig) -> Result<PathBuf> {
    common
        .out
        .clone()
        .or_else(|| file.string("out").map(PathBuf::from))
        .ok_or_else(|| anyhow!("--out is required (flag or config file)"))
}

/// Exclusive ownership of an output directory for the duration of a run.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory `{}`", dir.display()))?;
        let path = dir.join(".entrospect.lock");
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut f) => {
                use std::io::Write;
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(anyhow!(
                "another run owns `{}` (remove `{}` if no run is active)",
                dir.display(),
                path.display()
            )),
            Err(e) => Err(e).with_context(|| format!("cannot lock `{}`", dir.display())),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

fn resolve_bool(on: bool, off: bool, file: Option<bool>, default: bool) -> bool {
    if on {
        true
    } else if off {
        false
    } else {
        file.unwrap_or(default)
    }
}

fn parse_metric(name: &str) -> Result<SeriesMetric> {
    match name {
        "token" => Ok(SeriesMetric::TokenTotal),
        "ast-edge" => Ok(SeriesMetric::AstEdgeTotal),
        "ast-node" => Ok(SeriesMetric::AstNodeTotal),
        other => bail!("unknown metric `{other}` (expected token, ast-edge or ast-node)"),
    }
}

fn mine_into(
    repo: &Path,
    out: &Path,
    branch: Option<String>,
    grammar: String,
    tokenization: TokenizationConfig,
    verify_every: Option<usize>,
) -> Result<String> {
    let registry = GrammarRegistry::with_builtins();
    let mine_config = MineConfig {
        branch,
        grammar,
        tokenization,
        verify_every,
    };
    let output = mine(repo, &registry, &mine_config).context("analyze: mining failed")?;
    datasets::write_commits_csv(&out.join("commits.csv"), &output.commits)
        .context("analyze: writing commits.csv")?;
    datasets::write_file_changes_csv(&out.join("file_changes.csv"), &output.file_changes)
        .context("analyze: writing file_changes.csv")?;
    datasets::write_series_json(&out.join("series.json"), &output.series)
        .context("analyze: writing series.json")?;

    let final_totals = output
        .commits
        .last()
        .map(|c| c.totals)
        .unwrap_or_default();
    let mut summary = format!(
        "analyzed {} commits, {} file changes; final H_token {:.4} bits over {} files",
        output.commits.len(),
        output.file_changes.len(),
        final_totals.total_h_token,
        final_totals.file_count,
    );
    if !output.skipped.is_empty() {
        summary.push_str(&format!("; {} files skipped", output.skipped.len()));
        for skip in &output.skipped {
            eprintln!(
                "skipped {} at {}: {}",
                skip.path, skip.commit_id, skip.reason
            );
        }
    }
    if let Some(deviation) = output.max_recompute_deviation {
        summary.push_str(&format!("; max recompute deviation {deviation:.2e} bits"));
    }
    Ok(summary)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let file = load_file_config(&args.common)?;
    let out = resolve_out(&args.common, &file)?;
    let repo = args
        .repo
        .or_else(|| file.string("repo").map(PathBuf::from))
        .ok_or_else(|| anyhow!("--repo is required (flag or config file)"))?;
    let branch = args.branch.or_else(|| file.string("branch"));
    let grammar = args
        .grammar
        .or_else(|| file.string("grammar"))
        .unwrap_or_else(|| "java".to_string());

    let comments = resolve_bool(
        args.include_comments,
        args.no_comments,
        file.bool("include-comments")?,
        true,
    );
    let keywords = resolve_bool(
        args.include_keywords,
        args.no_keywords,
        file.bool("include-keywords")?,
        true,
    );
    let numbers = resolve_bool(
        args.include_numbers,
        args.no_numbers,
        file.bool("include-numbers")?,
        true,
    );
    let comments_only = args.comments_only || file.bool("comments-only")?.unwrap_or(false);
    let tokenization = if comments_only {
        TokenizationConfig::comments_only()
    } else {
        TokenizationConfig::new(comments, keywords, numbers)
    };
    let verify_every = match args.verify_every {
        Some(n) => Some(n),
        None => file.parse::<usize>("verify-every")?,
    };

    let _lock = DirLock::acquire(&out)?;
    let summary = mine_into(&repo, &out, branch, grammar, tokenization, verify_every)?;
    println!("{summary}");
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<()> {
    let file = load_file_config(&args.common)?;
    let out = resolve_out(&args.common, &file)?;
    let _lock = DirLock::acquire(&out)?;

    let series_path = out.join("series.json");
    if !series_path.exists() {
        let repo = args.repo.or_else(|| file.string("repo").map(PathBuf::from));
        match repo {
            Some(repo) => {
                let summary = mine_into(
                    &repo,
                    &out,
                    file.string("branch"),
                    file.string("grammar").unwrap_or_else(|| "java".into()),
                    TokenizationConfig::all_tokens(),
                    None,
                )?;
                println!("{summary}");
            }
            None => bail!(
                "detect: `{}` not found; run `entrospect analyze` first or pass --repo",
                series_path.display()
            ),
        }
    }
    let series = datasets::read_series_json(&series_path).context("detect: reading series.json")?;

    let memory_frac = match args.memory_frac {
        Some(f) => Some(f),
        None => file.parse::<f64>("memory-frac")?,
    };
    let window_size = match args.window_size {
        Some(w) => Some(w),
        None => file.parse::<usize>("window-size")?,
    };
    let memory = match (memory_frac, window_size) {
        (Some(_), Some(_)) => bail!("detect: --memory-frac and --window-size are exclusive"),
        (None, Some(w)) => MemoryPolicy::WindowSize(w),
        (Some(f), None) => MemoryPolicy::Fraction(f),
        (None, None) => MemoryPolicy::Fraction(1.0),
    };
    let detector = DetectorConfig {
        memory,
        z_threshold: match args.z_threshold {
            Some(z) => z,
            None => file.parse::<f64>("z-threshold")?.unwrap_or(3.0),
        },
        min_samples: match args.min_samples {
            Some(m) => m,
            None => file.parse::<usize>("min-samples")?.unwrap_or(30),
        },
    };
    detector
        .validate()
        .map_err(|e| anyhow!("detect: invalid configuration: {e}"))?;
    let metric = parse_metric(
        &args
            .metric
            .or_else(|| file.string("metric"))
            .unwrap_or_else(|| "token".into()),
    )?;

    let deltas = deltas_from_series(&series, metric);
    let detections = detect(&deltas, &detector);

    // files_changed per commit comes from commits.csv when this directory has
    // one; a bare series is still usable.
    let commits_path = out.join("commits.csv");
    let files_changed: BTreeMap<String, u64> = if commits_path.exists() {
        datasets::read_commits_csv(&commits_path)
            .context("detect: reading commits.csv")?
            .into_iter()
            .map(|c| (c.commit_id, c.files_changed))
            .collect()
    } else {
        BTreeMap::new()
    };
    let events = attach_events(&series, &detections, &files_changed);
    datasets::write_events_json(&out.join("events.json"), &events)
        .context("detect: writing events.json")?;
    println!(
        "detected {} events over {} commits ({})",
        events.len(),
        series.len(),
        detector.describe()
    );

    if args.summarize || file.bool("summarize")?.unwrap_or(false) {
        let configs: Vec<DetectorConfig> = [0.5, 0.75, 1.0]
            .iter()
            .map(|&f| DetectorConfig {
                memory: MemoryPolicy::Fraction(f),
                ..detector
            })
            .collect();
        for summary in summarize_runs(&configs, &deltas) {
            println!(
                "{}: {} events, audit sample {}",
                summary.config, summary.events_detected, summary.audit_sample_size
            );
        }
    }

    let labels_path = match args.labels {
        Some(p) => Some(p),
        None => file.string("labels").map(PathBuf::from),
    };
    if let Some(labels_path) = labels_path {
        let labels =
            datasets::read_labels_csv(&labels_path).context("detect: reading labels")?;
        for level in StrictnessLevel::ALL {
            let report = entrospect_core::anomaly::score_events(&events, &labels, level)
                .map_err(|e| anyhow!("detect: scoring failed: {e}"))?;
            println!(
                "precision {:?}: {:.4} ({}/{})",
                level, report.precision, report.true_positives, report.scored
            );
        }
    }
    Ok(())
}

fn cmd_trends(args: TrendsArgs) -> Result<()> {
    let file = load_file_config(&args.common)?;
    let out = resolve_out(&args.common, &file)?;
    let _lock = DirLock::acquire(&out)?;

    let series_path = out.join("series.json");
    if !series_path.exists() {
        bail!(
            "trends: `{}` not found; run `entrospect analyze` first",
            series_path.display()
        );
    }
    let series = datasets::read_series_json(&series_path).context("trends: reading series.json")?;

    let thresholds = match args.thresholds {
        Some(t) => config::parse_float_list(&t)?,
        None => file
            .float_list("thresholds")?
            .unwrap_or_else(|| DEFAULT_THRESHOLDS.to_vec()),
    };
    let segments = match args.segments {
        Some(k) => k,
        None => file.parse::<usize>("segments")?.unwrap_or(10),
    };
    let metric = parse_metric(
        &args
            .metric
            .or_else(|| file.string("metric"))
            .unwrap_or_else(|| "token".into()),
    )?;

    let trend_config = TrendConfig {
        metric,
        thresholds,
        segments,
        ..Default::default()
    };
    let report = lehman_indicators(&series, &trend_config)
        .map_err(|e| anyhow!("trends: {e}"))?;
    datasets::write_trend_report_json(&out.join("trend_report.json"), &report)
        .context("trends: writing trend_report.json")?;
    datasets::write_spikes_drops_csv(&out.join("spikes_drops.csv"), &report.spike_drop_table)
        .context("trends: writing spikes_drops.csv")?;
    println!(
        "overall slope {:.6} bits/commit, {} segments, pattern {}, smoothness {:.4}",
        report.overall_slope,
        report.segment_slopes.len(),
        report.spread_pattern,
        report.smoothness
    );
    Ok(())
}

fn cmd_correlate(args: CorrelateArgs) -> Result<()> {
    let file = load_file_config(&args.common)?;
    let out = resolve_out(&args.common, &file)?;
    let _lock = DirLock::acquire(&out)?;

    let changes_path = out.join("file_changes.csv");
    if !changes_path.exists() {
        bail!(
            "correlate: `{}` not found; run `entrospect analyze` first",
            changes_path.display()
        );
    }
    let records = datasets::read_file_changes_csv(&changes_path)
        .context("correlate: reading file_changes.csv")?;
    let basis = if args.entropy_levels || file.bool("entropy-levels")?.unwrap_or(false) {
        EntropyBasis::Level
    } else {
        EntropyBasis::Delta
    };

    let file_table = file_correlation_table(&records, basis);
    let commit_table = commit_correlation_table(&records, basis);
    datasets::write_correlations_csv(&out.join("correlations_file.csv"), &file_table)
        .context("correlate: writing correlations_file.csv")?;
    datasets::write_correlations_csv(&out.join("correlations_commit.csv"), &commit_table)
        .context("correlate: writing correlations_commit.csv")?;
    let defined = |t: &[entrospect_core::stats::CorrelationCell]| {
        t.iter().filter(|c| c.rho.is_some()).count()
    };
    println!(
        "correlations over {} file changes: {}/{} file-level and {}/{} commit-level cells defined",
        records.len(),
        defined(&file_table),
        file_table.len(),
        defined(&commit_table),
        commit_table.len()
    );
    Ok(())
}
