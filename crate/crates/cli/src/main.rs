use std::process::ExitCode;

use clap::Parser;

use selftest_cli::cli::{Cli, Format};
use selftest_cli::{canonical, run, Outcome};

fn main() -> ExitCode {
    let (cfg, format) = match Cli::parse().into_config() {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(Outcome::InputError.exit_code() as u8);
        }
    };
    let report = run(&cfg);
    if let Some(e) = &report.error {
        eprintln!("{}: {}", e.kind, e.message);
    }
    match format {
        Format::Json => print!("{}", canonical::to_string(&report).expect("reports serialize")),
        Format::Text => print!("{}", report.to_text()),
    }
    ExitCode::from(report.outcome().exit_code() as u8)
}
