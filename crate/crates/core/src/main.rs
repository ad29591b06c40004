use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shapelab::cli::{self, Command, EXIT_VALIDATION};

#[derive(Parser)]
#[command(name = "shapelab", version, about = "Free boundary shape optimization lab")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Overrides `[output].directory`.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve both state equations on the configured domain.
    Solve(Common),
    /// Run the free boundary descent.
    Optimize(Common),
    /// First and second shape variation with a Taylor ladder.
    Variation(Common),
    /// Weiss traces and rescalings at sampled boundary points.
    Blowup(Common),
    /// Classify sampled boundary points by half-plane fits.
    Classify(Common),
    /// Scan axisymmetric cones and evaluate their stability form.
    Cone(Common),
    /// Regularity diagnostics and minimality margins.
    Diagnose(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION as u8 } else { 0 });
        }
    };
    let (cmd, common) = match args.cmd {
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Optimize(c) => (Command::Optimize, c),
        Cmd::Variation(c) => (Command::Variation, c),
        Cmd::Blowup(c) => (Command::Blowup, c),
        Cmd::Classify(c) => (Command::Classify, c),
        Cmd::Cone(c) => (Command::Cone, c),
        Cmd::Diagnose(c) => (Command::Diagnose, c),
    };
    match cli::run_file(cmd, &common.config, common.out.as_deref()) {
        Ok(out) => {
            for (k, v) in &out.summary {
                println!("{k} = {v}");
            }
            log::info!("wrote {} files to {}", out.files.len() + 1, out.directory.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("shapelab {cmd}: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
