use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use routekd_cli::config::{RunConfig, CONFIG_ENV};
use routekd_cli::pipeline::{run_all, run_sweep, Command};
use routekd_cli::CliError;

/// Route-choice knowledge distillation pipeline.
#[derive(Debug, Parser)]
#[command(name = "routekd", version)]
struct Cli {
    /// JSON run configuration. Built-in defaults are used when neither this
    /// nor the environment variable is set.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Sample basic records from the aggregate baseline model.
    GenBasic,
    /// Generate the synthetic stated-choice corpus.
    GenVr,
    /// Fit a mixture to the VR corpus and sample an augmented corpus.
    Augment,
    /// Pretrain the teacher on the augmented corpus.
    TrainTeacher,
    /// Train the distilled and standalone students on basic data.
    Distill,
    /// Write the comparison report, chart and summary.
    Eval,
    /// Every step in order.
    RunAll {
        /// Comma-separated seeds; each gets its own pipeline in `<out>/seed-<n>`.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Print the effective configuration as JSON.
    Config,
}

fn usage_line(message: &str) -> String {
    let message = message.split_whitespace().collect::<Vec<_>>().join(" ");
    serde_json::json!({ "error": "usage", "message": message }).to_string()
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let single = |c: Command| -> Result<(), CliError> {
        let m = c.run(&cfg)?;
        for o in &m.outputs {
            match o.rows {
                Some(rows) => println!("{}: wrote {} ({rows} rows)", m.command, o.artifact),
                None => println!("{}: wrote {}", m.command, o.artifact),
            }
        }
        Ok(())
    };
    match &cli.command {
        Cmd::GenBasic => single(Command::GenBasic),
        Cmd::GenVr => single(Command::GenVr),
        Cmd::Augment => single(Command::Augment),
        Cmd::TrainTeacher => single(Command::TrainTeacher),
        Cmd::Distill => single(Command::Distill),
        Cmd::Eval => single(Command::Eval),
        Cmd::RunAll { seeds: None } => {
            let manifests = run_all(&cfg)?;
            println!("run-all: {} steps complete in {}", manifests.len(), cfg.out_dir.display());
            Ok(())
        }
        Cmd::RunAll { seeds: Some(seeds) } => {
            for dir in run_sweep(&cfg, seeds)? {
                println!("run-all: complete in {}", dir.display());
            }
            Ok(())
        }
        Cmd::Config => {
            print!("{}", cfg.to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", usage_line(&e.to_string()));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
