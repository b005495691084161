use std::process::ExitCode;

use clap::Parser;
use dyadic_morrey_cli::commands::{execute, Cli, Outcome};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Gates { failures }) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(Outcome::Gates { failures }) => {
            for label in &failures {
                eprintln!("FAIL: {label}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
