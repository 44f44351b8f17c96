use std::path::PathBuf;
use std::process::ExitCode;

use carnot_cli::{run, Command, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "carnot", version, about = "Normal extremals on step-2 free Carnot groups")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Casimir basis and symplectic leaf of the configured M
    Analyze(Io),
    /// Integrate the extremal and write trajectory.csv and summary.json
    Integrate(Io),
    /// Constant or periodic classification (k = 3)
    Classify(Io),
    /// Compare the support gradient against finite differences
    Gradcheck(Io),
}

#[derive(clap::Args, Debug)]
struct Io {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CARNOT_LOG", "warn")).init();
    let args = Args::parse();
    let (command, io) = match args.command {
        Cmd::Analyze(io) => (Command::Analyze, io),
        Cmd::Integrate(io) => (Command::Integrate, io),
        Cmd::Classify(io) => (Command::Classify, io),
        Cmd::Gradcheck(io) => (Command::Gradcheck, io),
    };
    let result = RunConfig::from_path(&io.config).and_then(|cfg| run(command, &cfg, &io.out));
    match result {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
