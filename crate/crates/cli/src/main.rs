//! `flexflock` command line: run, compare, plotdata, validate.
//!
//! Exit codes: 0 on success, 1 on configuration or I/O errors, 3 when a run
//! stops on a theorem violation (collision, barrier domain, removed edge,
//! non-finite state, broken invariant).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use flexflock::compare::{compare, CompareError, DEFAULT_THRESHOLD};
use flexflock::export::{self, RunSummary};
use flexflock::scenario::{bundled, load_config, InitialPoses, BUNDLED};
use flexflock::sim::{run, RunError};
use flexflock::{ScenarioConfig, SpacingPolicy};

const EXIT_ERROR: u8 = 1;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "flexflock", version, about = "Gradient-space flocking with adaptive spacing")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trace, metrics, events and summary.
    Run(RunArgs),
    /// Run adaptive spacing and the fixed-spacing baseline from the same start.
    Compare(RunArgs),
    /// Turn a run directory into plot-ready tables under <dir>/plot.
    Plotdata {
        /// Run output directory.
        dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load and check a config without running it.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file, or the name of a bundled scenario.
    #[arg(long)]
    config: String,
    /// Output directory (default: the config's output_dir, else out/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// Seed for generated initial poses.
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Error(anyhow::Error),
    Violation(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Error(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FLEXFLOCK_LOG", "warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Run(a) => cmd_run(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Plotdata { dir, out } => cmd_plotdata(dir.or(out)),
        Command::Validate(a) => cmd_validate(&a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(EXIT_VIOLATION)
        }
    }
}

fn load(a: &RunArgs) -> anyhow::Result<ScenarioConfig> {
    let path = Path::new(&a.config);
    let mut cfg = if path.exists() {
        load_config(path).with_context(|| format!("loading {}", path.display()))?
    } else if let Some(cfg) = bundled(&a.config) {
        cfg
    } else {
        let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
        bail!("{} is neither a file nor a bundled scenario ({})", a.config, names.join(", "));
    };
    if let Some(dt) = a.dt {
        cfg.dt = dt;
    }
    if let Some(t) = a.t_end {
        cfg.t_end = t;
    }
    if let Some(seed) = a.seed {
        if !matches!(cfg.initial, InitialPoses::Generated(_)) {
            bail!("--seed needs a config with generated initial poses");
        }
        cfg.set_seed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(a: &RunArgs, cfg: &ScenarioConfig) -> PathBuf {
    a.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
}

fn write(dir: &Path, trace: &flexflock::SimTrace, summary: &RunSummary) -> anyhow::Result<()> {
    export::write_run(dir, trace, summary).with_context(|| format!("writing {}", dir.display()))?;
    Ok(())
}

/// Writes whatever was traced before a violation, then reports it.
fn violation(dir: &Path, cfg: &ScenarioConfig, err: RunError) -> Failure {
    let summary = RunSummary::from_trace(&cfg.name, &err.trace, cfg.d_nom, Some(err.error.to_string()));
    if let Err(e) = write(dir, &err.trace, &summary) {
        return Failure::Error(e);
    }
    if err.error.is_theorem_violation() {
        Failure::Violation(format!("{} (partial outputs in {})", err.error, dir.display()))
    } else {
        Failure::Error(err.error.into())
    }
}

fn cmd_run(a: &RunArgs) -> CmdResult {
    let cfg = load(a)?;
    let dir = out_dir(a, &cfg);
    let (sim, state) = cfg.build(SpacingPolicy::Adaptive).map_err(anyhow::Error::from)?;
    log::info!("running {} for {} steps", cfg.name, sim.n_steps());
    let trace = run(&sim, state).map_err(|e| violation(&dir, &cfg, e))?;
    let summary = RunSummary::from_trace(&cfg.name, &trace, cfg.d_nom, None);
    write(&dir, &trace, &summary)?;
    print!("{}", summary.render());
    log::info!("outputs in {}", dir.display());
    Ok(())
}

fn cmd_compare(a: &RunArgs) -> CmdResult {
    let cfg = load(a)?;
    let dir = out_dir(a, &cfg);
    let report = match compare(&cfg, DEFAULT_THRESHOLD) {
        Ok(r) => r,
        Err(CompareError::Config(e)) => return Err(Failure::Error(e.into())),
        Err(CompareError::Run { which, source }) => {
            let sub = if which == "baseline" { dir.join("baseline") } else { dir.clone() };
            return Err(violation(&sub, &cfg, source));
        }
    };
    write(&dir, &report.flexible, &RunSummary::from_trace(&cfg.name, &report.flexible, cfg.d_nom, None))?;
    let base_dir = dir.join("baseline");
    write(&base_dir, &report.baseline, &RunSummary::from_trace(&cfg.name, &report.baseline, cfg.d_nom, None))?;
    let csv = export::compare_csv(&report).map_err(anyhow::Error::from)?;
    std::fs::write(dir.join(export::COMPARE_CSV), csv).context("writing compare.csv")?;
    let text = export::compare_summary(&report);
    std::fs::write(dir.join("compare_summary.txt"), &text).context("writing compare_summary.txt")?;
    print!("{text}");
    Ok(())
}

fn cmd_plotdata(dir: Option<PathBuf>) -> CmdResult {
    let Some(dir) = dir else {
        return Err(Failure::Error(anyhow::anyhow!("plotdata needs a run directory")));
    };
    let files = export::plotdata(&dir).map_err(anyhow::Error::from)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn cmd_validate(a: &RunArgs) -> CmdResult {
    let cfg = load(a)?;
    println!("ok: {} ({} agents, {})", cfg.name, cfg.n_agents, if cfg.is_dynamic() { "dynamic" } else { "static" });
    Ok(())
}
