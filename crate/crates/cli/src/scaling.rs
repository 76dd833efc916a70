use std::fs::File;
use std::io::Write;

use maxmin::report::{fit_loglog, write_run_records, MIN_FIT_POINTS};
use maxmin::{Error, Result, ScalingFit};
use serde::Serialize;

use crate::args::{RunArgs, ScalingArgs, Sweep};
use crate::pool::{map_ordered, threads};
use crate::run::{prepare, run, Outcome};

#[derive(Debug, Serialize)]
struct FitSummary<'a> {
    sweep: &'static str,
    y: &'static str,
    #[serde(flatten)]
    fit: &'a ScalingFit,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Grid from `--grid`, or `--points` geometric steps from `--from` to `--to`.
pub fn grid(args: &ScalingArgs) -> Result<Vec<f64>> {
    let values = match (&args.grid, args.from, args.to) {
        (Some(g), _, _) => g.clone(),
        (None, Some(a), Some(b)) => {
            if !(a > 0.0 && b > 0.0) {
                return Err(invalid("geometric grid ends must be positive"));
            }
            let k = args.points;
            if k < 2 {
                return Err(invalid("--points must be at least 2"));
            }
            (0..k)
                .map(|i| a * (b / a).powf(i as f64 / (k - 1) as f64))
                .collect()
        }
        _ => return Err(invalid("give --grid or both --from and --to")),
    };
    if values.len() < MIN_FIT_POINTS {
        return Err(invalid(format!(
            "a sweep needs at least {MIN_FIT_POINTS} grid points, got {}",
            values.len()
        )));
    }
    // rejects non-positive and coincident grids before any solve runs
    fit_loglog(&values, &vec![1.0; values.len()])?;
    Ok(values)
}

fn point_args(base: &RunArgs, sweep: Sweep, value: f64) -> Result<(RunArgs, Option<f64>)> {
    let mut args = base.clone();
    let radius = match sweep {
        Sweep::R => Some(value),
        Sweep::Eps => {
            args.eps = value;
            None
        }
        Sweep::N => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(invalid(format!("N grid values must be positive integers, got {value}")));
            }
            args.n = value as usize;
            None
        }
    };
    Ok((args, radius))
}

pub fn scaling(args: &ScalingArgs) -> Result<()> {
    let values = grid(args)?;
    let jobs = values
        .iter()
        .map(|&v| point_args(&args.run, args.sweep, v))
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<Outcome>> = map_ordered(&jobs, threads(), |(a, radius)| {
        let prep = prepare(a)?;
        run(a, &prep, *radius)
    });
    let outcomes = results.into_iter().collect::<Result<Vec<_>>>()?;
    let records: Vec<_> = outcomes.iter().map(|o| o.record.clone()).collect();
    let (y_name, ys): (&'static str, Vec<f64>) = match args.sweep {
        Sweep::N => ("full_passes", records.iter().map(|r| r.full_passes).collect()),
        _ => ("outer_iters", records.iter().map(|r| r.outer_iters as f64).collect()),
    };
    let fit = fit_loglog(&values, &ys)?;
    let summary = FitSummary {
        sweep: match args.sweep {
            Sweep::R => "r",
            Sweep::Eps => "eps",
            Sweep::N => "N",
        },
        y: y_name,
        fit: &fit,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| invalid(e.to_string()))?;

    match &args.out {
        Some(path) => write_run_records(File::create(path)?, &records, true)?,
        None => write_run_records(std::io::stdout().lock(), &records, true)?,
    }
    match &args.fit_out {
        Some(path) => writeln!(File::create(path)?, "{json}")?,
        None => println!("{json}"),
    }
    Ok(())
}
