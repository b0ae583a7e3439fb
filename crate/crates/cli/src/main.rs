//! The `gkz` binary: parse a problem file, run one command, emit the report.
//!
//! Exit codes: 0 when the command ran and every reported check passed,
//! 1 when the command ran but a check failed or the computation refused
//! (the failure list goes to stderr as a JSON array of strings), 2 for
//! usage errors — bad arguments, unreadable input, malformed problem files.

use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gkz::problem::parse_problem;
use gkz::report::{emit_report, run_command, Command, Format};

/// Gevrey solution series and solution-complex diagnostics for the
/// hypergeometric system of a one-row matrix A = (a b).
#[derive(Parser)]
#[command(name = "gkz", version, max_term_width = 100)]
struct Cli {
    /// What to compute: basis, gevrey, slope, recurrence, ext, monodromy,
    /// or verify.
    command: String,

    /// Problem file in the `key = value` format (`-` reads standard input).
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,

    /// Output format: json, csv, or text.
    #[arg(long, default_value = "json", value_name = "FORMAT")]
    format: String,

    /// Write the report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

const EXIT_CHECK_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn usage_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("gkz: {message}");
    ExitCode::from(EXIT_USAGE)
}

/// Failed checks and refused computations leave a machine-readable trace:
/// a JSON array of failure strings on stderr.
fn check_failure(failures: &[String]) -> ExitCode {
    eprintln!("{}", serde_json::to_string(failures).expect("strings serialize"));
    ExitCode::from(EXIT_CHECK_FAILURE)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap prints help/version with status 0 and argument errors with
        // status 2, both matching the exit-code contract.
        Err(e) => e.exit(),
    };

    if let Some(threads) = std::env::var_os("GKZ_THREADS") {
        let parsed = threads
            .to_str()
            .and_then(|t| t.parse::<usize>().ok())
            .filter(|&n| n > 0);
        let Some(n) = parsed else {
            return usage_error(format!(
                "GKZ_THREADS must be a positive integer, got `{}`",
                threads.to_string_lossy()
            ));
        };
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return usage_error(format!("cannot configure the thread pool: {e}"));
        }
    }

    let command: Command = match cli.command.parse() {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    let format: Format = match cli.format.parse() {
        Ok(f) => f,
        Err(e) => return usage_error(e),
    };

    let text = if cli.spec.as_os_str() == "-" {
        let mut buf = String::new();
        if let Err(e) = std::io::stdin().read_to_string(&mut buf) {
            return usage_error(format!("cannot read standard input: {e}"));
        }
        buf
    } else {
        match fs::read_to_string(&cli.spec) {
            Ok(t) => t,
            Err(e) => return usage_error(format!("cannot read {}: {e}", cli.spec.display())),
        }
    };
    let spec = match parse_problem(&text) {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };

    let report = match run_command(&spec, command) {
        Ok(r) => r,
        Err(e) => return check_failure(&[e.to_string()]),
    };

    let bytes = emit_report(&report, format);
    let written = match &cli.out {
        Some(path) => {
            fs::write(path, &bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&bytes)
                .and_then(|()| stdout.flush())
                .map_err(|e| format!("cannot write to standard output: {e}"))
        }
    };
    if let Err(e) = written {
        return usage_error(e);
    }

    let failures = report.failures();
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        check_failure(&failures)
    }
}
