//! Run records and log-log scaling fits.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::problem::QueryLedger;

/// Column order of [`RunRecord`] CSV output.
pub const RUN_RECORD_COLUMNS: [&str; 13] = [
    "method",
    "N",
    "d",
    "eps",
    "seed",
    "outer_iters",
    "broo_calls",
    "value_queries",
    "grad_queries",
    "full_passes",
    "final_gap",
    "wall_ms",
    "termination_reason",
];

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    /// Chain length of a hard instance.
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    pub eps: f64,
    pub seed: u64,
    pub outer_iters: usize,
    pub broo_calls: usize,
    pub value_queries: u64,
    pub grad_queries: u64,
    pub full_passes: f64,
    pub final_gap: f64,
    pub wall_ms: u64,
    pub termination_reason: String,
}

impl RunRecord {
    /// Fills the query columns from `queries`, with passes over `n` components.
    pub fn set_queries(&mut self, queries: &QueryLedger) {
        self.value_queries = queries.value_queries;
        self.grad_queries = queries.grad_queries;
        self.full_passes = queries.full_passes(self.n);
    }

    pub fn csv_fields(&self) -> [String; 13] {
        [
            self.method.clone(),
            self.n.to_string(),
            self.d.to_string(),
            self.eps.to_string(),
            self.seed.to_string(),
            self.outer_iters.to_string(),
            self.broo_calls.to_string(),
            self.value_queries.to_string(),
            self.grad_queries.to_string(),
            self.full_passes.to_string(),
            self.final_gap.to_string(),
            self.wall_ms.to_string(),
            self.termination_reason.clone(),
        ]
    }
}

/// Writes `records` as CSV, with the header row when `header` is set.
pub fn write_run_records<W: Write>(w: W, records: &[RunRecord], header: bool) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| invalid(format!("csv write failed: {e}"));
    if header {
        out.write_record(RUN_RECORD_COLUMNS).map_err(io)?;
    }
    for r in records {
        out.write_record(r.csv_fields()).map_err(io)?;
    }
    out.flush()?;
    Ok(())
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Minimum number of points accepted by [`fit_loglog`].
pub const MIN_FIT_POINTS: usize = 4;

/// Fits `ln y = slope ln x + intercept`. Needs at least four points with
/// positive coordinates and at least two distinct `x` values.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    if xs.len() != ys.len() {
        return Err(invalid(format!("{} x values but {} y values", xs.len(), ys.len())));
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(invalid(format!(
            "a scaling fit needs at least {MIN_FIT_POINTS} points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(invalid("log-log fit needs positive finite values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= 1e-24 * n {
        return Err(invalid("degenerate grid: all x values coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ScalingFit {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        slope,
        intercept,
        r_squared,
    })
}
