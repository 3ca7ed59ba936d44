use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use raychan::config::{load_config_file, JobConfig};
use raychan::pipeline::{run, run_trace, run_validate, Mode};

#[derive(Parser)]
#[command(version, about = "Channel dataset synthesis from ray paths")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Job configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Noise seed; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Trace the scene source into a paths file.
    Trace(Common),
    /// Static UL/DL channel tensors for the selected points.
    Generate(Common),
    /// UL/DL channel tensors along the configured trajectory.
    Mobility(Common),
    /// Windowed UL features and DL beam labels.
    Beams(Common),
    /// Run the invariant checks against the configured source.
    Validate(Common),
}

fn load(c: &Common) -> Result<(JobConfig, PathBuf)> {
    let mut cfg = load_config_file(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    let out = c.out.clone().unwrap_or_else(|| cfg.output_path());
    Ok((cfg, out))
}

fn generate(c: &Common, mode: Mode) -> Result<()> {
    let (cfg, out) = load(c)?;
    let manifest = run(&cfg, mode, &out)?;
    for f in &manifest.files {
        println!("{} {:?} {}", f.name, f.dims, f.sha256);
    }
    Ok(())
}

fn main() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Trace(c) => {
            let (cfg, out) = load(&c)?;
            for p in run_trace(&cfg, &out)? {
                println!("{}", p.display());
            }
        }
        Cmd::Generate(c) => generate(&c, Mode::Static)?,
        Cmd::Mobility(c) => generate(&c, Mode::Mobile)?,
        Cmd::Beams(c) => generate(&c, Mode::Beams)?,
        Cmd::Validate(c) => {
            let (cfg, _) = load(&c)?;
            let report = run_validate(&cfg);
            print!("{report}");
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
