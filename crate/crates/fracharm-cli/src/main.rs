use clap::Parser;
use fracharm_cli::commands::{run, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(res) => {
            for c in &res.outcome.checks {
                println!("{c}");
            }
            println!("manifest: {}", res.manifest.display());
            if res.outcome.passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}: some checks failed", cli.command.name());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
