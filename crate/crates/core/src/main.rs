use std::process::ExitCode;

use clap::Parser;
use visrecon::cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("visrecon {}: {e}", cli.command.name());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
