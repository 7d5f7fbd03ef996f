use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use galrelax::experiment::{run, ExperimentConfig};
use galrelax::Error;

/// Runs one experiment described by a JSON config file.
///
/// Exit status: 0 when every audit passes, 1 when an audit fails, 2 for an
/// invalid config, 3 for a numerical failure (see `diagnostic.txt`).
#[derive(Parser)]
#[command(name = "relaxlab", version)]
struct Cli {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("relaxlab: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cli
        .out
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(format!("{:?}", config.kind).to_lowercase()));
    match run(&config, &out) {
        Ok(report) => {
            print!("{}", std::fs::read_to_string(out.join("summary.txt")).unwrap_or_default());
            println!("artifacts: {}", report.out_dir.display());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Error::Config { path, message }) => {
            eprintln!("relaxlab: invalid config at `{path}`: {message}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("relaxlab: {e}");
            ExitCode::from(3)
        }
    }
}
