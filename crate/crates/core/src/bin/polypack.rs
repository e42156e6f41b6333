use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use polypack::cli::{run, Cli};
use polypack::exec::configure_threads_from_env;

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads_from_env();
    match run(&cli) {
        Ok(report) => {
            let text = if cli.json {
                report.to_json()
            } else {
                report.to_text()
            };
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
