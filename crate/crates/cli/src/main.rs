use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = qew_cli::Cli::parse();
    match qew_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qew: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
