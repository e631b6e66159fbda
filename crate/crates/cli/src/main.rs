use std::process::ExitCode;

use clap::Parser;

use sdot_cli::config::{Cli, Command, ExperimentConfig};
use sdot_cli::verify::{verify_all, VerifyOptions};
use sdot_cli::{runner, CliError};

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = ExperimentConfig::from_args(&args)?;
            let summary = runner::run(&cfg)?;
            for f in &summary.files {
                println!("{}", f.display());
            }
            match summary.failures() {
                0 => Ok(()),
                k => Err(CliError::Solver(format!("{k} of {} cells failed", summary.cells.len()))),
            }
        }
        Command::Verify(args) => {
            let cfg = ExperimentConfig::from_args(&args)?;
            let opts = VerifyOptions::from_config(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
            let results = verify_all(&opts, |r| println!("{r}"));
            let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.id.clone()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Verification(format!("checks {} failed", failed.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
