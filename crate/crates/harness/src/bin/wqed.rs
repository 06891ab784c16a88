use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wqed_harness::acceptance::{summary_line, validate_suite, SuiteSettings};
use wqed_harness::{run_experiment, ExperimentConfig, HarnessError, Kind};

#[derive(Parser)]
#[command(name = "wqed", about = "Emitter-in-waveguide scattering experiments")]
struct Cli {
    /// Output directory; overrides the config file and WQED_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for randomized sample points; never touches physics.
    #[arg(long, global = true, default_value_t = SuiteSettings::default().seed)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Runs whatever kind the config file declares.
    Run(ConfigArg),
    BoundEnergies(ConfigArg),
    BoundProfile(ConfigArg),
    Emission(ConfigArg),
    OnePhotonRt(ConfigArg),
    B2b(ConfigArg),
    F2b(ConfigArg),
    F2f(ConfigArg),
    Simulate(ConfigArg),
    Compare(ConfigArg),
    /// Runs the acceptance suite and prints one line per criterion.
    Validate {
        /// Criterion ids to run; all when omitted.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn fail(e: HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            return fail(HarnessError::config("--workers", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .expect("thread pool is built once");
    }
    let (expected, cfg_path) = match &cli.command {
        Command::Validate { only } => {
            if let Some(bad) = only.iter().find(|&&i| !(1..=12).contains(&i)) {
                return fail(HarnessError::config("--only", format!("no criterion {bad}")));
            }
            let settings = SuiteSettings {
                seed: cli.seed,
                ..SuiteSettings::default()
            };
            let outcomes = validate_suite(&settings, only, |o| println!("{}", o.line()));
            println!("{}", summary_line(&outcomes));
            return if outcomes.iter().all(|o| o.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            };
        }
        Command::Run(c) => (None, &c.config),
        Command::BoundEnergies(c) => (Some(Kind::BoundEnergies), &c.config),
        Command::BoundProfile(c) => (Some(Kind::BoundProfile), &c.config),
        Command::Emission(c) => (Some(Kind::Emission), &c.config),
        Command::OnePhotonRt(c) => (Some(Kind::OnePhotonRt), &c.config),
        Command::B2b(c) => (Some(Kind::B2b), &c.config),
        Command::F2b(c) => (Some(Kind::F2b), &c.config),
        Command::F2f(c) => (Some(Kind::F2f), &c.config),
        Command::Simulate(c) => (Some(Kind::Simulate), &c.config),
        Command::Compare(c) => (Some(Kind::Compare), &c.config),
    };
    let cfg = match ExperimentConfig::load(cfg_path) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if let Some(k) = expected {
        if k != cfg.kind {
            return fail(HarnessError::config(
                "experiment.kind",
                format!("`{}` does not match the `{}` subcommand", cfg.kind.name(), k.name()),
            ));
        }
    }
    let out = cli
        .out
        .or_else(|| std::env::var_os("WQED_OUT").map(PathBuf::from))
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("wqed-out"));
    match run_experiment(&cfg, &out) {
        Ok(art) => {
            for f in &art.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
