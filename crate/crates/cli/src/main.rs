use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tanglesim_cli::config::{parse_config, ConfigError};
use tanglesim_cli::dot::export_dot;
use tanglesim_cli::runner::{run_experiment, RunError};
use tanglesim_core::metrics::MetricsReport;
use tanglesim_core::resolve_conflicts;
use tanglesim_core::sim::SimTrace;

/// Tangle tip-selection simulator and experiment runner.
#[derive(Parser)]
#[command(name = "tanglesim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (overrides the config's `[output] dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Parallel runs within a sweep (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Suppress per-run progress lines.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a config file (sweep x replications).
    Run { config: PathBuf },
    /// Re-run a single replication of a config with an explicit seed.
    Replay {
        /// Seed recorded in the results row to reproduce.
        #[arg(long)]
        seed: u64,
        config: PathBuf,
    },
    /// Render the final tangle of an exported trace as Graphviz DOT.
    Dot { trace: PathBuf },
}

// Exit codes: 0 success, 1 config error, 2 runtime error.
fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config } => {
            let spec = parse_config(&read(&config)?)?;
            run_experiment(&spec, cli.out.as_deref(), cli.jobs, cli.quiet)?;
            Ok(())
        }
        Command::Replay { seed, config } => {
            let mut spec = parse_config(&read(&config)?)?;
            spec.sweep.clear();
            spec.replications = 1;
            spec.base.seed = seed;
            let out = run_experiment(&spec, cli.out.as_deref(), Some(1), true)?;
            if !cli.quiet {
                let trace = tanglesim_core::sim::run(&spec.base)
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
                let report = MetricsReport::compute(&trace, &spec.metrics);
                println!("seed {seed}: {}", summary_line(&report));
                println!("outputs in {}", out.out_dir.display());
            }
            Ok(())
        }
        Command::Dot { trace } => {
            let body = read(&trace)?;
            let trace: SimTrace = serde_json::from_str(&body)
                .map_err(|e| Failure::Runtime(format!("invalid trace file: {e}")))?;
            let state = resolve_conflicts(&trace.tangle.full_view());
            print!("{}", export_dot(&trace.tangle, Some(&state)));
            Ok(())
        }
    }
}

fn summary_line(report: &MetricsReport) -> String {
    let mut s = format!(
        "sites {} avg tips {:.2} approval {} left behind {}",
        report.site_count,
        report.avg_tip_count,
        report
            .mean_approval_time
            .map(|v| format!("{v:.2}s"))
            .unwrap_or_else(|| "-".into()),
        report.left_behind_count,
    );
    if let Some(success) = report.attack_success {
        s.push_str(&format!(
            ", attack {} (attachment {})",
            if success { "succeeded" } else { "failed" },
            report
                .parasite_attachment_fraction
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".into()),
        ));
    }
    s
}
