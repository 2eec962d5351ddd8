//! Command line front end for the covert beamformer experiment runner.
//!
//! Exit codes: 0 on success, 2 when every attempted design in a run was
//! infeasible, 1 on any error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use covertbeam::experiment::{self, ExperimentConfig, ExperimentKind, RunOutput};
use covertbeam::plot::{self, PlotKind, PlotSpec, YColumn};

#[derive(Parser)]
#[command(name = "covertbeam", version, about = "Covert beamformer design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed` when given.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker pool size; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    /// Plot configuration (JSON): the CSV to read and the figures to draw.
    #[arg(long)]
    config: PathBuf,
    /// Output SVG path or stem (suffixed `_0`, `_1`, ... for multiple plots).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo check of the analytic detection error probabilities over
    /// a grid of warden received-power pairs.
    DetectOracle(RunArgs),
    /// Empirical CDF of the achieved KL divergence under sampled warden-CSI
    /// error, per designed scene.
    CdfKl(RunArgs),
    /// Trend sweep of a design parameter across random scenes.
    Sweep(RunArgs),
    /// Render SVG figures from a result CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PlotKindConfig {
    Cdf,
    Line,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum YColumnConfig {
    MiBits,
    RateBits,
    Kl01,
    Kl10,
    Xi,
    WorstKl,
}

#[derive(Debug, Deserialize)]
struct FigureConfig {
    kind: PlotKindConfig,
    #[serde(default)]
    title: String,
    #[serde(default)]
    x_label: String,
    #[serde(default)]
    y_label: String,
    #[serde(default)]
    threshold: Option<f64>,
    #[serde(default)]
    y_column: Option<YColumnConfig>,
}

#[derive(Debug, Deserialize)]
struct PlotConfig {
    csv: PathBuf,
    figures: Vec<FigureConfig>,
}

fn to_spec(f: &FigureConfig) -> PlotSpec {
    let y_column = match f.y_column.as_ref().unwrap_or(&YColumnConfig::MiBits) {
        YColumnConfig::MiBits => YColumn::MiBits,
        YColumnConfig::RateBits => YColumn::RateBits,
        YColumnConfig::Kl01 => YColumn::Kl01,
        YColumnConfig::Kl10 => YColumn::Kl10,
        YColumnConfig::Xi => YColumn::Xi,
        YColumnConfig::WorstKl => YColumn::WorstKl,
    };
    PlotSpec {
        kind: match f.kind {
            PlotKindConfig::Cdf => PlotKind::Cdf,
            PlotKindConfig::Line => PlotKind::Line,
        },
        title: f.title.clone(),
        x_label: f.x_label.clone(),
        y_label: if f.y_label.is_empty() && matches!(f.kind, PlotKindConfig::Cdf) {
            "empirical CDF".to_string()
        } else {
            f.y_label.clone()
        },
        threshold: f.threshold,
        y_column,
    }
}

fn load_config(args: &RunArgs, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut config: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    if config.kind != kind {
        bail!(
            "config kind {:?} does not match the invoked subcommand",
            config.kind
        );
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn emit(args: &RunArgs, out: &RunOutput) -> Result<()> {
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            experiment::write_csv(&out.rows, file)?;
        }
        None => {
            let stdout = std::io::stdout();
            experiment::write_csv(&out.rows, stdout.lock())?;
        }
    }
    let mut err = std::io::stderr().lock();
    writeln!(
        err,
        "{} rows, {}/{} designs feasible, {} ms total design time",
        out.rows.len(),
        out.n_feasible,
        out.n_designs,
        out.total_design_ms
    )?;
    for s in &out.cdf_summaries {
        writeln!(
            err,
            "scene {}: feasible={} violation_fraction={:.4} worst_kl={:.6e}",
            s.scene_id, s.feasible, s.violation_fraction, s.worst_kl
        )?;
    }
    for p in &out.sweep_summary {
        writeln!(
            err,
            "axis {:+.4e}: n={} mi={:.4} +/- {:.4} rate={:.4} +/- {:.4}",
            p.axis_value, p.n_feasible, p.mean_mi, p.std_mi, p.mean_rate, p.std_rate
        )?;
    }
    Ok(())
}

fn run_experiment(args: &RunArgs, kind: ExperimentKind) -> Result<ExitCode> {
    let config = load_config(args, kind)?;
    let out = experiment::run(&config, args.jobs)?;
    emit(args, &out)?;
    if out.all_infeasible() {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_plot(args: &PlotArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let config: PlotConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    if config.figures.is_empty() {
        bail!("plot config lists no figures");
    }
    let specs: Vec<PlotSpec> = config.figures.iter().map(to_spec).collect();
    let csv = config
        .csv
        .to_str()
        .context("csv path is not valid UTF-8")?
        .to_string();
    let written = plot::render_plots(&csv, &specs, &args.out)?;
    let mut err = std::io::stderr().lock();
    for p in &written {
        writeln!(err, "wrote {}", p.display())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::DetectOracle(a) => run_experiment(a, ExperimentKind::DetectionOracle),
        Command::CdfKl(a) => run_experiment(a, ExperimentKind::CdfKl),
        Command::Sweep(a) => run_experiment(a, ExperimentKind::Sweep),
        Command::Plot(a) => run_plot(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
