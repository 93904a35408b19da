use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use kerrosc_cli::config::parse_seeds;
use kerrosc_cli::{presets, run_to_dir, validate, CliError, Engine, ExperimentConfig, Overrides, DEFAULT_OUT, OUT_ENV};
use kerrosc_core::DampingConvention;

/// Print to stdout, ignoring a closed pipe (e.g. `kerrosc list | head`).
macro_rules! out {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "kerrosc", version, about = "Driven dissipative Kerr oscillator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the named presets.
    List,
    /// Print a preset as a config file.
    Describe { preset: String },
    /// Run the fast invariant suite.
    Validate,
    /// Run a preset or a config file and write its bundle.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Preset name (same as --preset).
    #[arg(conflicts_with_all = ["preset", "config"])]
    name: Option<String>,
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; the bundle goes into a subdirectory named after the run.
    /// Defaults to the config's out_dir, then $KERROSC_OUT, then ./kerrosc-out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trajectory seeds, e.g. `0..100` or `1,5,9`.
    #[arg(long)]
    seeds: Option<String>,
    /// Ensemble size (seeds 0..N). Fewer trajectories widen the Monte-Carlo
    /// error as 1/sqrt(N).
    #[arg(long)]
    trajectories: Option<usize>,
    /// Trajectory time step. Larger steps bias ensemble means at first order.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_parser = ["half", "full"])]
    damping_convention: Option<String>,
    #[arg(long, value_enum)]
    engine: Option<Engine>,
    /// Also write a matplotlib script next to the data.
    #[arg(long)]
    plots: bool,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&args.name, &args.preset, &args.config) {
        (Some(n), _, _) | (None, Some(n), _) => presets::find(n)?.config(),
        (None, None, Some(path)) => ExperimentConfig::load(path)?,
        (None, None, None) => {
            return Err(CliError::Config("give a preset name, --preset or --config".into()));
        }
    };
    let overrides = Overrides {
        seeds: args.seeds.as_deref().map(parse_seeds).transpose().map_err(CliError::Config)?,
        trajectories: args.trajectories,
        dt: args.dt,
        damping_convention: args
            .damping_convention
            .as_deref()
            .map(|s| s.parse::<DampingConvention>().expect("restricted by clap")),
        engine: args.engine,
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let root = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let started = Instant::now();
    eprintln!("running {} ({} study)", cfg.name, cfg.study.kind());
    let report = run_to_dir(&cfg, &root, args.plots)?;
    for c in &report.checks {
        eprintln!(
            "  cross-check {}: {} (value {:.3e}, tolerance {:.1e})",
            if c.passed { "ok" } else { "MISMATCH" },
            c.name,
            c.value,
            c.tolerance
        );
    }
    out!("{}", report.dir.display());
    eprintln!("wrote {} files in {:.1} s", report.files.len(), started.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::List => {
            for p in presets::PRESETS {
                out!("{:<22} {}", p.name, p.config().description);
            }
            Ok(())
        }
        Command::Describe { preset } => presets::find(preset).map(|p| {
            out!("# {}", p.caption);
            out!("{}", p.config().to_json());
        }),
        Command::Validate => {
            let started = Instant::now();
            let results = validate::run_suite();
            for r in &results {
                out!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            out!("{:.1} s", started.elapsed().as_secs_f64());
            if results.iter().all(|r| r.passed) {
                Ok(())
            } else {
                Err(CliError::Numerical("invariant suite failed".into()))
            }
        }
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
