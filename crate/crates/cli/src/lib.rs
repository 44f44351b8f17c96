//! Command-line front end for `carnot-core`: reads a JSON run configuration,
//! runs one command and writes JSON reports and CSV trajectories.
//!
//! Exit codes: `0` success, `2` configuration error, `3` numerical failure.

pub mod commands;
pub mod config;
pub mod json;

use std::fs;
use std::path::{Path, PathBuf};

pub use commands::{
    cmd_analyze, cmd_classify, cmd_gradcheck, cmd_integrate, AnalyzeReport, ClassifyReport, GradcheckReport,
    IntegrateRun, IntegrateSummary,
};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("numerical failure: {0}")]
    Numerical(carnot_core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<carnot_core::Error> for CliError {
    fn from(e: carnot_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config { field: String::from("config"), message: e.to_string() }
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Integrate,
    Classify,
    Gradcheck,
}

/// Files written and the process exit code.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub exit_code: i32,
}

fn write(out: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = out.join(name);
    fs::write(&path, text)?;
    files.push(path);
    Ok(())
}

pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<RunOutput, CliError> {
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let exit_code = match command {
        Command::Analyze => {
            write(out, "analyze.json", &json::to_string(&cmd_analyze(cfg)?), &mut files)?;
            0
        }
        Command::Classify => {
            let reports = cmd_classify(cfg)?;
            let failed = reports.iter().any(|r| !r.is_classified());
            let text = if cfg.sweep.is_some() {
                json::to_string(&serde_json::json!({
                    "command": "classify",
                    "seed": cfg.seed,
                    "results": reports,
                }))
            } else {
                json::to_string(&Envelope { command: "classify", seed: cfg.seed, report: &reports[0] })
            };
            write(out, "classify.json", &text, &mut files)?;
            if failed {
                3
            } else {
                0
            }
        }
        Command::Integrate => {
            let run = cmd_integrate(cfg)?;
            let path = out.join("trajectory.csv");
            run.write_csv(cfg, fs::File::create(&path)?)?;
            files.push(path);
            write(out, "summary.json", &json::to_string(&run.summary(cfg)), &mut files)?;
            if run.failure.is_some() {
                3
            } else {
                0
            }
        }
        Command::Gradcheck => {
            let report = cmd_gradcheck(cfg)?;
            write(out, "gradcheck.json", &json::to_string(&report), &mut files)?;
            match (report.valid, report.pass) {
                (false, _) => 2,
                (true, false) => 3,
                (true, true) => 0,
            }
        }
    };
    Ok(RunOutput { files, exit_code })
}

#[derive(serde::Serialize)]
struct Envelope<'a, T> {
    command: &'static str,
    seed: u64,
    #[serde(flatten)]
    report: &'a T,
}
