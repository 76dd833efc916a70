use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::broo::{BallOracle, ExactOracle, KatyushaConfig, KatyushaOracle, SgdConfig, SgdOracle};
use crate::error::{invalid, Error, Result};
use crate::linalg::{check_point, Vector};
use crate::problem::{eval_fmax, Problem, QueryLedger};
use crate::softmax::SmoothingParams;

use super::outer::{accelerate, SolverTrace, TerminationReason};
use super::AccelConfig;

/// Ball oracle used by the end-to-end solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "broo-sgd")]
    BrooSgd,
    #[serde(rename = "broo-katyusha")]
    BrooKatyusha,
    /// Deterministic reference oracle for small problems.
    #[serde(rename = "exact")]
    Exact,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BrooSgd => "broo-sgd",
            Self::BrooKatyusha => "broo-katyusha",
            Self::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "broo-sgd" => Ok(Self::BrooSgd),
            "broo-katyusha" => Ok(Self::BrooKatyusha),
            "exact" => Ok(Self::Exact),
            other => Err(invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// Safety cap `50 (R/r)^{2/3} ln(L_f R^2 / (r eps))^2` on outer iterations.
pub fn max_outer_default(big_r: f64, r: f64, eps: f64, lip: f64) -> usize {
    let log = (lip * big_r * big_r / (r * eps)).ln().max(1.0);
    (50.0 * (big_r / r).powf(2.0 / 3.0) * log * log).ceil() as usize
}

/// Tunable constants of the end-to-end solver.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveOptions {
    pub sgd: SgdConfig,
    pub katyusha: KatyushaConfig,
    pub max_outer: Option<usize>,
    /// Per-query failure probability; defaults to `1 / (100 T)` with `T` the
    /// outer-iteration cap.
    pub sigma: Option<f64>,
    /// Stop once this many value plus gradient queries have been charged.
    pub max_queries: Option<u64>,
    /// Oracle ball radius; defaults to `min(r_eps, R)`.
    pub ball_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: Method,
    pub params: SmoothingParams,
    pub accel: AccelConfig,
    /// `F_max` at the returned point.
    pub fmax: f64,
    /// Softmax at the returned point.
    pub fsmax: f64,
    pub outer_iters: usize,
    pub broo_calls: usize,
    /// Queries charged by this solve.
    pub queries: QueryLedger,
    pub full_passes: f64,
    pub termination: TerminationReason,
    pub trace: SolverTrace,
}

/// Minimizes `F_max` to accuracy `eps` over `B_R(x0)`: smooths with
/// temperature `eps'`, then accelerates the softmax to `eps / 2` with ball
/// radius `r_eps = eps' / L_f`. The exact oracle is limited to small
/// problems.
pub fn solve_max_loss<P: Problem + ?Sized, R: Rng>(
    inst: &P,
    x0: &Vector,
    big_r: f64,
    eps: f64,
    method: Method,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<(Vector, SolveReport)> {
    solve_max_loss_with(inst, x0, big_r, eps, method, &SolveOptions::default(), rng, ledger)
}

#[allow(clippy::too_many_arguments)]
pub fn solve_max_loss_with<P: Problem + ?Sized, R: Rng>(
    inst: &P,
    x0: &Vector,
    big_r: f64,
    eps: f64,
    method: Method,
    opts: &SolveOptions,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<(Vector, SolveReport)> {
    check_point(x0, inst.dim(), "initial point")?;
    let params = SmoothingParams::for_problem(eps, inst)?;
    let r = opts.ball_radius.unwrap_or(params.r_eps).min(big_r);
    let mut cfg = AccelConfig::new(big_r, r, eps / 2.0, inst.lipschitz())?;
    if let Some(m) = opts.max_outer {
        cfg = cfg.with_max_outer(m);
    }
    let sigma = opts.sigma.unwrap_or(1.0 / (100.0 * cfg.max_outer as f64));
    cfg = cfg.with_sigma(sigma).with_max_queries(opts.max_queries);
    cfg.validate()?;

    let start = *ledger;
    let mut broo: Box<dyn BallOracle + '_> = match method {
        Method::BrooSgd => Box::new(SgdOracle::new(inst, params, opts.sgd, &mut *rng)),
        Method::BrooKatyusha => Box::new(KatyushaOracle::new(inst, params, opts.katyusha, &mut *rng)?),
        Method::Exact => Box::new(ExactOracle::new(inst, params)),
    };
    let (x, trace) = accelerate(inst, &params, x0, &cfg, &mut broo, ledger, None)?;
    drop(broo);
    let queries = ledger.since(&start);

    let fmax = eval_fmax(inst, &x, &mut QueryLedger::new())?;
    let report = SolveReport {
        method,
        params,
        accel: cfg,
        fmax,
        fsmax: trace.f_values[trace.best_index],
        outer_iters: trace.outer_iters(),
        broo_calls: trace.broo_calls(),
        full_passes: queries.full_passes(inst.num_components()),
        queries,
        termination: trace.termination,
        trace,
    };
    Ok((x, report))
}
