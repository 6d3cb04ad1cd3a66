use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fkam_cli::artifacts::{write_json, ErrorReport};
use fkam_cli::commands::{self, load_checkpoint, Outcome};
use fkam_cli::{parse_config, CliError, ExperimentConfig};
use fkam_core::engine::{Checkpoint, Mode};

#[derive(Parser)]
#[command(name = "fkam", version, about = "KAM reducibility experiments for fibered holomorphic maps")]
struct Cli {
    /// JSON experiment config; omitted keys take their defaults.
    #[arg(long, env = "FKAM_CONFIG", global = true)]
    config: Option<PathBuf>,
    #[arg(long, env = "FKAM_MODE", global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Output directory.
    #[arg(long, env = "FKAM_OUT", global = true)]
    out: Option<PathBuf>,
    #[arg(long, env = "FKAM_SEED", global = true)]
    seed: Option<u64>,
    #[arg(long, env = "FKAM_PRECISION_BITS", global = true)]
    precision_bits: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Paper,
    Adaptive,
}

#[derive(Subcommand)]
enum Command {
    /// Continued fraction, worst divisors and Brjuno sums.
    Arith,
    /// KAM schedule, its inequalities and n*.
    Schedule,
    /// Random cohomological equations and their residuals.
    CohomologyTest,
    /// Full KAM run; writes result.json, stages.csv, jet.json and curve.json.
    RunKam {
        /// Continue from a checkpoint file written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Checks the invariance residual of a curve against a jet.
    VerifyCurve {
        #[arg(long)]
        jet: PathBuf,
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Arith => "arith",
            Command::Schedule => "schedule",
            Command::CohomologyTest => "cohomology-test",
            Command::RunKam { .. } => "run-kam",
            Command::VerifyCurve { .. } => "verify-curve",
        }
    }
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, Option<Checkpoint>, Vec<String>), CliError> {
    let mut notes = Vec::new();
    let (mut cfg, checkpoint) = match &cli.command {
        Command::RunKam { resume: Some(path) } => {
            let file = load_checkpoint(path)?;
            if cli.mode.is_some() || cli.seed.is_some() || cli.precision_bits.is_some() || cli.config.is_some() {
                notes.push("resuming: config, mode, seed and precision come from the checkpoint".into());
            }
            let mut cfg = file.config;
            if let Some(out) = &cli.out {
                cfg.output.dir = out.clone();
            }
            cfg.validate()?;
            return Ok((cfg, Some(file.checkpoint), notes));
        }
        _ => match &cli.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
                (parse_config(&text)?, None)
            }
            None => (ExperimentConfig::default(), None),
        },
    };
    if let Some(m) = cli.mode {
        cfg.engine.mode = match m {
            ModeArg::Paper => Mode::Paper,
            ModeArg::Adaptive => Mode::Adaptive,
        };
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(bits) = cli.precision_bits {
        cfg.arithmetic.precision_bits = bits;
    }
    if let Command::VerifyCurve { threshold: Some(t), .. } = &cli.command {
        cfg.verify.threshold = *t;
    }
    cfg.validate()?;
    Ok((cfg, checkpoint, notes))
}

fn execute(
    cli: &Cli,
    cfg: &ExperimentConfig,
    checkpoint: Option<Checkpoint>,
    warnings: &[String],
) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Arith => commands::arith(cfg, warnings),
        Command::Schedule => commands::schedule(cfg, warnings),
        Command::CohomologyTest => commands::cohomology_test(cfg, warnings),
        Command::RunKam { .. } => commands::run_kam(cfg, warnings, checkpoint),
        Command::VerifyCurve { jet, curve, .. } => commands::verify_curve(cfg, warnings, jet, curve),
    }
}

fn fail(command: &str, cfg: Option<&ExperimentConfig>, out: Option<PathBuf>, err: &CliError) -> ExitCode {
    eprintln!("fkam {command}: error in {}: {err}", err.module());
    if let Some(dir) = out {
        if let Err(e) = write_json(&dir.join("error.json"), &ErrorReport::new(command, cfg, err)) {
            eprintln!("fkam {command}: {e}");
        }
    }
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    let (cfg, checkpoint, notes) = match load(&cli) {
        Ok(x) => x,
        Err(e) => return fail(command, None, cli.out.clone(), &e),
    };
    let mut warnings = cfg.precision_warnings(command);
    warnings.extend(notes);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    match execute(&cli, &cfg, checkpoint, &warnings) {
        Ok(o) => {
            let _ = std::fs::remove_file(cfg.output.dir.join("error.json"));
            println!("{command}: {} ({})", if o.passed { "passed" } else { "FAILED" }, o.summary);
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(command, Some(&cfg), Some(cfg.output.dir.clone()), &e),
    }
}
