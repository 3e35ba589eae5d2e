use std::process::ExitCode;

use clap::Parser;
use mosaic_qaoa::cli::Cli;
use mosaic_qaoa::{commands, EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK } as u8);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(0) => ExitCode::from(EXIT_OK as u8),
        Ok(failed) => {
            eprintln!("{failed} unit(s) failed; partial results written");
            ExitCode::from(EXIT_PARTIAL as u8)
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
