use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = byzmatch_cli::Cli::parse();
    match byzmatch_cli::execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
