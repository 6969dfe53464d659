mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::config::ExecutorKind;

#[derive(Debug, Parser)]
#[command(name = "reprokit", version, about = "Build reproducibility benchmarks and evaluate repair workflows")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
#[command(next_help_heading = "Global options")]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true, env = "REPROKIT_CONFIG")]
    pub config: Option<PathBuf>,
    /// Parallel runs.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Container runtime binary.
    #[arg(long, global = true)]
    pub container_runtime: Option<String>,
    /// Where scripts run.
    #[arg(long, global = true, value_enum)]
    pub executor: Option<ExecutorKind>,
    /// Program used for `Rscript` by the local executor.
    #[arg(long, global = true)]
    pub rscript: Option<PathBuf>,
    /// Output comparison: byte-exact, normalized or numeric:EPS.
    #[arg(long, global = true)]
    pub policy: Option<String>,
    /// Skip runs already present in the records file.
    #[arg(long, global = true)]
    pub resume: bool,
    /// More logging (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Re-run ground-truth projects and check their outputs against base_results.
    Verify {
        /// Project directories, or directories of projects.
        #[arg(required = true)]
        projects: Vec<PathBuf>,
    },
    /// Record hashes of base_results into each project manifest.
    Seal {
        /// Project directories, or directories of projects.
        #[arg(required = true)]
        projects: Vec<PathBuf>,
    },
    /// Generate a corpus of broken test cases from a plan.
    Inject(commands::InjectArgs),
    /// Run repair workflows over a corpus.
    #[command(subcommand)]
    Run(RunCommand),
    /// Aggregate run records into success-rate tables.
    Report(commands::ReportArgs),
}

#[derive(Debug, Subcommand)]
enum RunCommand {
    /// Iterative prompt-based repair.
    Prompt(commands::PromptArgs),
    /// Autonomous agents in a container.
    Agent(commands::AgentArgs),
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_env("REPROKIT_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
}

fn install_stop_handler() -> Arc<AtomicBool> {
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    let installed = ctrlc::set_handler(move || {
        if flag.swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
        eprintln!("interrupted: finishing in-flight runs (press again to abort)");
    });
    if let Err(e) = installed {
        tracing::warn!("cannot install interrupt handler: {e}");
    }
    stop
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.global.verbose);
    let stop = install_stop_handler();
    let result = commands::Context::new(&cli.global).and_then(|ctx| match cli.command {
        Command::Verify { projects } => ctx.verify(&projects),
        Command::Seal { projects } => ctx.seal(&projects),
        Command::Inject(args) => ctx.inject(&args),
        Command::Run(RunCommand::Prompt(args)) => ctx.run_prompt(&args, &stop),
        Command::Run(RunCommand::Agent(args)) => ctx.run_agent(&args, &stop),
        Command::Report(args) => ctx.report(&args),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            match e.downcast_ref::<reprokit_core::Error>() {
                Some(core) => eprintln!("error: {}: {e:#}", core.kind()),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(2)
        }
    }
}
