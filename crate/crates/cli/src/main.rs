use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use territories::cli::{
    env_workers, output_dir, parse_seed_range, render, run_to_dir, seed_scan, with_workers, RunConfig,
};
use territories::Error;

#[derive(Parser)]
#[command(name = "territories", version, about = "Competing first-passage growth experiments")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Regenerate tables from a report.json, or a PPM from a .tmap file.
    Render {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file and print it with every default filled in.
    Validate { config: PathBuf },
    /// Run a config once per seed in an inclusive range `a..b`.
    SeedScan {
        config: PathBuf,
        #[arg(long)]
        seeds: String,
    },
}

fn load(path: &PathBuf) -> territories::Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::parse(&text)
}

fn execute(cmd: Command) -> territories::Result<()> {
    let workers = env_workers()?;
    match cmd {
        Command::Validate { config } => {
            let cfg = load(&config)?;
            for w in &cfg.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", cfg.resolved());
        }
        Command::Run { config } => {
            let cfg = load(&config)?;
            let dir = output_dir(&cfg);
            let out = with_workers(workers, || run_to_dir(&cfg, &dir))??;
            print!("{}", out.report.summary());
            println!("wrote {} files to {}", out.manifest.files.len() + 1, out.dir.display());
        }
        Command::Render { report, out } => {
            for p in render(&report, out.as_deref())? {
                println!("{}", p.display());
            }
        }
        Command::SeedScan { config, seeds } => {
            let cfg = load(&config)?;
            let range = parse_seed_range(&seeds)?;
            let dir = output_dir(&cfg);
            let path = with_workers(workers, || seed_scan(&cfg, &dir, range))??;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::Config { .. } => eprintln!("config error: {e}"),
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(2)
        }
    }
}
