use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qier::trainer::{self, Precision, Profile, RunConfig};
use qier::Error;

mod commands;
mod selftest;

#[derive(Debug, Parser)]
#[command(name = "qier", version, about = "UAV navigation with quantum-inspired experience replay")]
struct Cli {
    /// Flat `key = value` configuration applied on top of the profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base parameter set.
    #[arg(long, global = true, default_value = "desk", value_parser = parse_profile)]
    profile: Profile,

    /// Learning seed (starts, exploration, fading, replay, init).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "runs/latest")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the TOP map of the environment.
    Topmap,
    /// Train one agent and evaluate it.
    Train {
        #[arg(long)]
        variant: Option<String>,
    },
    /// Greedy evaluation of a saved checkpoint against the straight-line baseline.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train several replay variants on the same starts.
    Compare {
        #[arg(long, value_delimiter = ',', default_value = "qier,er,per")]
        variants: Vec<String>,
    },
    /// Statistical self-check of the replay samplers.
    BuffersSelftest,
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Resolved configuration, or a config error.
fn resolve(cli: &Cli) -> qier::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => trainer::load_config(p, cli.profile)?,
        None => RunConfig::profile(cli.profile),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> qier::Result<()> {
    std::fs::create_dir_all(dir)?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"")?;
    std::fs::remove_file(probe)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let setup = resolve(&cli).and_then(|mut cfg| {
        if let Command::Train { variant: Some(v) } = &cli.command {
            cfg.variant = v.parse()?;
        }
        prepare_out(&cli.out)?;
        Ok(cfg)
    });
    let cfg = match setup {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qier: configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Topmap => commands::topmap(&cfg, &cli.out),
        Command::Train { .. } => match cfg.precision {
            Precision::F32 => commands::train::<f32>(&cfg, &cli.out).map(|_| ()),
            Precision::F64 => commands::train::<f64>(&cfg, &cli.out).map(|_| ()),
        },
        Command::Eval { checkpoint } => match cfg.precision {
            Precision::F32 => commands::eval::<f32>(&cfg, checkpoint, &cli.out),
            Precision::F64 => commands::eval::<f64>(&cfg, checkpoint, &cli.out),
        },
        Command::Compare { variants } => commands::compare(&cfg, variants, &cli.out),
        Command::BuffersSelftest => selftest::run(&cli.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if trainer::is_divergence(&e) => {
            eprintln!("qier: {e}");
            ExitCode::from(3)
        }
        Err(e @ (Error::InvalidParam { .. } | Error::Parse { .. })) => {
            eprintln!("qier: configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("qier: {e}");
            ExitCode::from(1)
        }
    }
}
