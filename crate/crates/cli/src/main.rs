mod args;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use kpzlab::experiments::{self, ExperimentResult};
use serde_json::json;

use args::{Cli, Command, Format};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(exit_for_help(&e));
        }
    };
    let common = cli.command.common().clone();
    if let Some(n) = common.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    }
    let outcome = match run(&cli.command) {
        Ok(v) => v,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_FAIL);
        }
    };
    if let Err(e) = write_outputs(&common.out, common.format, common.threads, &outcome) {
        eprintln!("error: writing results to {}: {e}", common.out.display());
        return ExitCode::from(EXIT_FAIL);
    }
    let runtime = outcome.runtime.map_or(0.0, |d| d.as_secs_f64());
    if outcome.pass {
        log::info!("{}: {} tests passed in {runtime:.1}s", outcome.experiment, outcome.tests.len());
        ExitCode::SUCCESS
    } else {
        eprintln!("{}: failing tests:", outcome.experiment);
        for t in outcome.failing_tests() {
            eprintln!("  {} (statistic {})", t.name, t.statistic);
        }
        ExitCode::from(EXIT_FAIL)
    }
}

/// Help and version requests are not usage errors.
fn exit_for_help(e: &clap::Error) -> u8 {
    use clap::error::ErrorKind::*;
    match e.kind() {
        DisplayHelp | DisplayVersion => 0,
        _ => EXIT_USAGE,
    }
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<kpzlab::Error> for Failure {
    fn from(e: kpzlab::Error) -> Self {
        match e {
            kpzlab::Error::Config(_) | kpzlab::Error::Parameter(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn run(command: &Command) -> Result<ExperimentResult, Failure> {
    fn go<C>(cfg: Result<C, String>, f: impl Fn(&C) -> kpzlab::Result<ExperimentResult>) -> Result<ExperimentResult, Failure> {
        let cfg = cfg.map_err(Failure::Usage)?;
        Ok(f(&cfg)?)
    }
    match command {
        Command::Independence(a) => go(a.config(), experiments::run_independence),
        Command::EndpointScaling(a) => go(a.config(), experiments::run_endpoint_scaling),
        Command::QueueingFuzz(a) => go(a.config(), experiments::run_queueing_fuzz),
        Command::AppendixBounds(a) => go(a.config(), experiments::run_appendix_bounds),
        Command::Marginals(a) => go(a.config(), experiments::run_marginals),
        Command::Coalescence(a) => go(a.config(), experiments::run_coalescence),
    }
}

/// Writes `<experiment>.<format>` and `<experiment>.manifest.json`; the
/// manifest echoes the resolved configuration.
fn write_outputs(
    out: &Path,
    format: Format,
    threads: Option<usize>,
    result: &ExperimentResult,
) -> Result<(), Box<dyn std::error::Error>> {
    fs::create_dir_all(out)?;
    let body = match format {
        Format::Csv => result.to_csv()?,
        Format::Json => result.to_json()? + "\n",
    };
    let report = out.join(format!("{}.{}", result.experiment, format.extension()));
    fs::write(&report, body)?;
    let manifest = json!({
        "experiment": result.experiment,
        "version": env!("CARGO_PKG_VERSION"),
        "config": result.params,
        "format": format,
        "threads": threads,
        "report": report.file_name().and_then(|n| n.to_str()),
        "pass": result.pass,
        "runtime_seconds": result.runtime.map(|d| d.as_secs_f64()),
    });
    fs::write(
        out.join(format!("{}.manifest.json", result.experiment)),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    log::info!("wrote {}", report.display());
    Ok(())
}
