//! Command-line driver: configuration, dispatch and structured output.

pub mod config;
pub mod dispatch;
pub mod output;

use std::io::Write;

use clap::Parser;

pub use config::{Cli, ConfigError, RunConfig};
pub use dispatch::{dispatch, Failure, Outcome};
pub use output::ResultEnvelope;

/// Parses `args`, runs the command and writes outputs. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let json_path = cli.json.clone();
    let outcome = RunConfig::resolve(&cli, config::env_cache_dir())
        .map_err(Failure::from)
        .and_then(dispatch);
    match outcome {
        Ok(outcome) => {
            let json = outcome.envelope.to_json();
            match json_path.as_deref() {
                Some(p) if p.as_os_str() == "-" => print_stdout(&json),
                Some(p) => {
                    if let Err(e) = std::fs::write(p, json + "\n") {
                        eprintln!("error: writing {}: {e}", p.display());
                        return dispatch::EXIT_RUNTIME;
                    }
                    print_stdout(&outcome.summary);
                }
                None => print_stdout(&outcome.summary),
            }
            let code = outcome.exit_code();
            if code == dispatch::EXIT_IDENTITY {
                let _ = writeln!(std::io::stderr(), "identity check failed beyond tolerance");
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Writes a line to standard output, ignoring a closed pipe.
fn print_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}
