use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use primstab_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.stdout.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("primstab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
