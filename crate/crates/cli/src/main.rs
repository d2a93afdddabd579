use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hardy_blh_cli::selftest::selftest;
use hardy_blh_cli::{compare, render, run, CliError, Mode, Scenario, Settings, Status, DEFAULT_MAX_DIM};

/// Invariant subspaces of vector-valued Hardy spaces over the polydisc:
/// inner functions, multipliers and certificates at finite truncation.
#[derive(Debug, Parser)]
#[command(name = "hardy-blh", version)]
struct Cli {
    /// Verdict tolerance for every check whose step does not set one.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Working margin for orbit construction (overrides the scenario).
    #[arg(long, global = true)]
    margin: Option<usize>,
    /// Largest ambient dimension accepted before allocating.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_DIM)]
    max_dim: usize,
    /// Suppress the per-step summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Leave wall-clock timing out of reports, making them byte-reproducible.
    #[arg(long, global = true)]
    no_timing: bool,
    /// Skip the margin + 1 stability re-run.
    #[arg(long, global = true)]
    no_stability: bool,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a scenario pipeline.
    Run {
        scenario: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run two scenarios and certify how their subspaces relate.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the built-in corpus.
    Selftest {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Writes the report to `output`, or to stdout when no path is given.
fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: &Cli, settings: &Settings) -> Result<Status, CliError> {
    let say = |line: String| {
        if !cli.quiet {
            eprintln!("{line}");
        }
    };
    match &cli.command {
        Command::Run { scenario, output } => {
            let sc = Scenario::load(scenario)?;
            let (report, _) = run(&sc, settings)?;
            for step in &report.steps {
                let status = if step.passed { "ok" } else { "FAILED" };
                say(format!("{:>2} {:<14} {status}{}", step.index, step.step, step.error.as_deref().map(|e| format!(": {e}")).unwrap_or_default()));
            }
            if let Some(st) = report.stability.as_ref().filter(|s| !s.stable) {
                say(format!(
                    "warning: wandering dimension {} at margin {} but {} at margin {}",
                    st.runs[0].dim_w, st.runs[0].working_margin, st.runs[1].dim_w, st.runs[1].working_margin
                ));
            }
            emit(&render(&report), output.as_deref())?;
            Ok(Status::from_passed(report.passed))
        }
        Command::Compare { a, b, mode, output } => {
            let (sa, sb) = (Scenario::load(a)?, Scenario::load(b)?);
            let (report, status) = compare(&sa, &sb, *mode, settings)?;
            match (&report.outcome, &report.error) {
                (Some(o), _) => say(format!("{:?} '{}' vs '{}': {o:?}", mode, sa.label, sb.label)),
                (None, Some(e)) => say(format!("{:?} '{}' vs '{}': {e}", mode, sa.label, sb.label)),
                (None, None) => {}
            }
            emit(&render(&report), output.as_deref())?;
            Ok(status)
        }
        Command::Selftest { output } => {
            let report = selftest(settings);
            for entry in &report.entries {
                say(format!("{:<20} {}", entry.label, if entry.passed { "ok" } else { "FAILED" }));
            }
            if let Some(path) = output {
                emit(&render(&report), Some(path))?;
            }
            Ok(Status::from_passed(report.passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = Settings {
        tolerance: cli.tolerance,
        margin: cli.margin,
        max_dim: cli.max_dim,
        stability: !cli.no_stability,
        timing: !cli.no_timing,
        exec: if cli.sequential { hardy_blh::Execution::Sequential } else { hardy_blh::Execution::default() },
    };
    let status = execute(&cli, &settings).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        Status::InputError
    });
    ExitCode::from(status.code())
}
