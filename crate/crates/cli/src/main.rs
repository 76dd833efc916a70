//! `maxmin`: solve, scaling sweeps and property verification.

mod args;
mod pool;
mod run;
mod scaling;

use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use maxmin::report::write_run_records;
use maxmin::verify::{run_suite, Fault, Suite, VerifyOptions};
use maxmin::{Result, RunRecord};

use args::{Cli, Command, Format, SolveArgs, VerifyArgs};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_UNMET: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(&a),
        Command::Scaling(a) => scaling::scaling(&a).map(|_| EXIT_OK),
        Command::Verify(a) => verify(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn solve(args: &SolveArgs) -> Result<u8> {
    let prep = run::prepare(&args.run)?;
    let outcome = run::run(&args.run, &prep, None)?;
    emit_records(std::slice::from_ref(&outcome.record), args.format, args.out.as_deref())?;
    if outcome.reached {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "target not reached: gap {} > eps {} ({})",
            outcome.record.final_gap, outcome.record.eps, outcome.record.termination_reason
        );
        Ok(EXIT_UNMET)
    }
}

/// Appends `records` to `out` (stdout when `None`). CSV files get a header
/// when they start empty; JSON output is one object per line.
pub fn emit_records(records: &[RunRecord], format: Format, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let file = OpenOptions::new().create(true).append(true).open(path)?;
            let fresh = file.metadata()?.len() == 0;
            write_records(file, records, format, fresh)
        }
        None => write_records(io::stdout().lock(), records, format, true),
    }
}

fn write_records<W: Write>(mut w: W, records: &[RunRecord], format: Format, header: bool) -> Result<()> {
    match format {
        Format::Csv => write_run_records(w, records, header),
        Format::Json => {
            for r in records {
                let line = serde_json::to_string(r).map_err(|e| maxmin::Error::InvalidParameter(e.to_string()))?;
                writeln!(w, "{line}")?;
            }
            Ok(())
        }
    }
}

fn verify(args: &VerifyArgs) -> Result<u8> {
    let suite: Suite = args.suite.parse()?;
    let fault = args.inject_fault.as_deref().map(str::parse::<Fault>).transpose()?;
    let opts = VerifyOptions { trials: args.trials, seed: args.seed, fault };
    let report = run_suite(suite, &opts)?;
    if args.json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| maxmin::Error::InvalidParameter(e.to_string()))?;
        println!("{text}");
    } else {
        for check in &report.checks {
            println!("{check}");
        }
    }
    Ok(if report.ok() { EXIT_OK } else { EXIT_ERROR })
}
