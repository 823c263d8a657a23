//! Library side of the `bhatt` command-line tool, kept separate from the
//! binary so commands can be tested in-process.

pub mod args;
pub mod commands;
pub mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use bhatt_core::Exec;
use clap::Parser;

pub use args::{Cli, Command};
pub use commands::{Format, Report, RunConfig};
pub use error::{CliError, EXIT_NOT_CONVERGED, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};

/// Default output directory when `--out` is not given. Unset means stdout.
pub const OUT_DIR_ENV: &str = "BHATT_OUT_DIR";

/// Runs a parsed command and returns its report.
pub fn dispatch(command: &Command, run: &RunConfig) -> Result<Report, CliError> {
    command.validate()?;
    match command {
        Command::Estimate(a) => commands::cmd_estimate(a, run),
        Command::RiskCurve(a) => commands::cmd_risk_curve(a, run),
        Command::Reldiff(a) => commands::cmd_reldiff(a, run),
        Command::BetaScan(a) => commands::cmd_beta_scan(a, run),
        Command::Lfp(a) => commands::cmd_lfp(a, run),
        Command::Compare(a) => commands::cmd_compare(a, run),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

fn execute(cli: &Cli, out_dir: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let run = RunConfig { seed: cli.seed, exec: if cli.sequential { Exec::Sequential } else { Exec::default() } };
    let report = dispatch(&cli.command, &run)?;

    let main_path: Option<PathBuf> = cli
        .out
        .clone()
        .or_else(|| out_dir.map(|d| d.join(format!("{}.{}", report.command, report.format.extension()))));
    match &main_path {
        Some(p) => write_file(p, &report.body)?,
        None => stdout.write_all(report.body.as_bytes()).map_err(|e| CliError::Output(e.to_string()))?,
    }

    if let Some(curve) = &report.curve {
        let explicit = match &cli.command {
            Command::BetaScan(a) => a.curve.clone(),
            _ => None,
        };
        if let Some(p) = explicit.or_else(|| out_dir.map(|d| d.join(format!("{}-curve.csv", report.command)))) {
            write_file(&p, curve)?;
        }
    }
    if !report.converged {
        let _ = writeln!(stderr, "bhatt: iteration cap reached before convergence; bounds above are best so far");
    }
    Ok(report.exit_code())
}

/// Full command-line entry point; returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    match execute(&cli, out_dir.as_deref(), stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "bhatt: {e}");
            e.exit_code()
        }
    }
}
