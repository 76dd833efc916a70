use std::fmt;

use serde::{Deserialize, Serialize};

use crate::broo::{BallOracle, BrooRequest};
use crate::broo::BrooResponse;
use crate::error::{Error, Result};
use crate::linalg::{check_point, dist, project_ball_in_place, Vector};
use crate::problem::{Problem, QueryLedger};
use crate::softmax::{fsmax, SmoothingParams};

use super::bisection::{lambda_bisection, BisectionOutcome};
use super::{step_coefficients, AccelConfig};

/// Why the outer loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// `A_{t+1} >= R^2 / eps`.
    TargetReached,
    /// `lambda_{t+1} <= eps / (3 r R)`.
    SmallLambda,
    /// `|x_{t+1} - v_{t+1}| > 2R`.
    Diverged,
    /// `A_{t+1} < exp((r/R)^{2/3} (t - 1)) A_1`.
    SlowGrowth,
    /// Safety cap on outer iterations.
    MaxOuter,
    /// The query budget ran out.
    BudgetExhausted,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::TargetReached => "target_reached",
            Self::SmallLambda => "small_lambda",
            Self::Diverged => "diverged",
            Self::SlowGrowth => "slow_growth",
            Self::MaxOuter => "max_outer",
            Self::BudgetExhausted => "budget_exhausted",
        }
    }
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One outer iteration `t -> t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    pub lambda: f64,
    pub delta: f64,
    pub outcome: BisectionOutcome,
    pub bisection_calls: usize,
    pub a_next: f64,
    pub big_a_prev: f64,
    pub big_a_next: f64,
    /// `sum_{i <= t+1} 1 / sqrt(lambda_i)`.
    pub inv_sqrt_lambda_sum: f64,
    /// `|x_t - v_t|`.
    pub xv_dist_prev: f64,
    /// `|x_{t+1} - v_{t+1}|`.
    pub xv_dist_next: f64,
    pub y: Vector,
    pub x_prev: Vector,
    pub v_prev: Vector,
    pub x_next: Vector,
    pub v_next: Vector,
    /// Objective at `x_{t+1}`.
    pub f_next: f64,
}

/// Potential `P_t = A_t (E_t - eps/4) + D_t` against a reference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSample {
    /// `f(x_t) - f(x_ref)`
    pub e: f64,
    /// `|v_t - x_ref|^2 / 2`
    pub d: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub iterations: Vec<IterationRecord>,
    /// `(lambda, delta)` of every oracle query, bisection included.
    pub broo_queries: Vec<(f64, f64)>,
    pub bisection_calls: usize,
    pub termination: TerminationReason,
    /// Objective at `x_0, x_1, ...`.
    pub f_values: Vec<f64>,
    pub best_index: usize,
    /// `P_0, P_1, ...`; present when a reference point was supplied.
    pub potentials: Option<Vec<PotentialSample>>,
}

impl SolverTrace {
    pub fn outer_iters(&self) -> usize {
        self.iterations.len()
    }

    pub fn broo_calls(&self) -> usize {
        self.broo_queries.len()
    }
}

/// Forwards queries while a ledger budget lasts. Each query is capped by the
/// remaining budget and a query that hits the cap ends the run.
struct Capped<'a, B: ?Sized> {
    inner: &'a mut B,
    start: QueryLedger,
    limit: Option<u64>,
}

impl<B: BallOracle + ?Sized> Capped<'_, B> {
    fn remaining(&self, ledger: &QueryLedger) -> Option<u64> {
        self.limit.map(|l| l.saturating_sub(ledger.since(&self.start).total()))
    }
}

impl<B: BallOracle + ?Sized> BallOracle for Capped<'_, B> {
    fn query(&mut self, req: &BrooRequest, ledger: &mut QueryLedger) -> Result<BrooResponse> {
        let limit = self.limit.unwrap_or(0);
        match self.remaining(ledger) {
            None => self.inner.query(req, ledger),
            Some(0) => Err(Error::QueryBudgetExhausted { limit }),
            Some(left) => {
                let cap = (left / 2) as usize;
                let req = BrooRequest {
                    budget_cap: Some(req.budget_cap.map_or(cap, |c| c.min(cap))),
                    ..req.clone()
                };
                let resp = self.inner.query(&req, ledger)?;
                // a truncated answer says nothing about the true step length
                if resp.truncated || self.remaining(ledger) == Some(0) {
                    return Err(Error::QueryBudgetExhausted { limit });
                }
                Ok(resp)
            }
        }
    }

    fn name(&self) -> &'static str {
        self.inner.name()
    }
}

/// Accelerated outer loop on the softmax of `inst`, using `broo` as the ball
/// oracle. Returns the iterate with the lowest softmax value.
///
/// With `reference = Some(x_ref)` the trace also records the potential
/// `P_t`; the extra evaluation at `x_ref` is not charged to `ledger`. When
/// `cfg.max_queries` runs out the best iterate so far is returned with
/// [`TerminationReason::BudgetExhausted`].
pub fn accelerate<P: Problem + ?Sized, B: BallOracle + ?Sized>(
    inst: &P,
    params: &SmoothingParams,
    x0: &Vector,
    cfg: &AccelConfig,
    broo: &mut B,
    ledger: &mut QueryLedger,
    reference: Option<&Vector>,
) -> Result<(Vector, SolverTrace)> {
    cfg.validate()?;
    check_point(x0, inst.dim(), "initial point")?;
    let f_ref = match reference {
        Some(xr) => {
            check_point(xr, inst.dim(), "reference point")?;
            Some(fsmax(inst, params, xr, &mut QueryLedger::new())?)
        }
        None => None,
    };
    let potential = |big_a: f64, f: f64, v: &Vector| {
        let (xr, fr) = (reference?, f_ref?);
        let e = f - fr;
        let d = 0.5 * dist(v, xr).powi(2);
        Some(PotentialSample {
            e,
            d,
            p: big_a * (e - cfg.eps / 4.0) + d,
        })
    };

    let mut x = x0.clone();
    let mut v = x0.clone();
    let mut big_a = 0.0;
    let f0 = fsmax(inst, params, x0, ledger)?;
    let mut trace = SolverTrace {
        iterations: Vec::new(),
        broo_queries: Vec::new(),
        bisection_calls: 0,
        termination: TerminationReason::MaxOuter,
        f_values: vec![f0],
        best_index: 0,
        potentials: potential(0.0, f0, &v).map(|p| vec![p]),
    };
    let mut best = x0.clone();
    let mut best_f = f0;
    let mut big_a1 = 0.0;
    let mut inv_sqrt_sum = 0.0;
    let growth = (cfg.r / cfg.big_r).powf(2.0 / 3.0);
    let mut broo = Capped {
        inner: broo,
        start: *ledger,
        limit: cfg.max_queries,
    };

    for t in 0.. {
        if t >= cfg.max_outer {
            log::warn!("outer loop stopped after {} iterations", cfg.max_outer);
            trace.termination = TerminationReason::MaxOuter;
            break;
        }
        let bis = match lambda_bisection(&x, &v, big_a, cfg, &mut broo, ledger) {
            Err(Error::QueryBudgetExhausted { .. }) => {
                trace.termination = TerminationReason::BudgetExhausted;
                break;
            }
            other => other?,
        };
        trace.bisection_calls += bis.oracle_calls;
        trace
            .broo_queries
            .extend(bis.queried.iter().map(|&l| (l, cfg.bisection_delta)));

        let lambda = bis.lambda;
        let (a, big_next) = step_coefficients(lambda, big_a)?;
        let y = &x * (big_a / big_next) + &v * (a / big_next);
        let delta = cfg.step_delta(lambda);
        let req = BrooRequest::new(y.clone(), cfg.r, lambda, delta, cfg.sigma)?;
        let resp = match broo.query(&req, ledger) {
            Err(Error::QueryBudgetExhausted { .. }) => {
                trace.termination = TerminationReason::BudgetExhausted;
                break;
            }
            other => other?,
        };
        trace.broo_queries.push((lambda, delta));
        let x_next = resp.point;
        let mut v_next = &v - (&y - &x_next) * (a * lambda);
        project_ball_in_place(&mut v_next, x0, cfg.big_r);

        let f_next = fsmax(inst, params, &x_next, ledger)?;
        trace.f_values.push(f_next);
        if f_next < best_f {
            best_f = f_next;
            best = x_next.clone();
            trace.best_index = t + 1;
        }
        if t == 0 {
            big_a1 = big_next;
        }
        inv_sqrt_sum += 1.0 / lambda.sqrt();
        if let (Some(ps), Some(p)) = (trace.potentials.as_mut(), potential(big_next, f_next, &v_next)) {
            ps.push(p);
        }
        let xv_next = dist(&x_next, &v_next);
        trace.iterations.push(IterationRecord {
            t,
            lambda,
            delta,
            outcome: bis.outcome,
            bisection_calls: bis.oracle_calls,
            a_next: a,
            big_a_prev: big_a,
            big_a_next: big_next,
            inv_sqrt_lambda_sum: inv_sqrt_sum,
            xv_dist_prev: dist(&x, &v),
            xv_dist_next: xv_next,
            y,
            x_prev: x.clone(),
            v_prev: v.clone(),
            x_next: x_next.clone(),
            v_next: v_next.clone(),
            f_next,
        });

        let stop = if big_next >= cfg.big_r * cfg.big_r / cfg.eps {
            Some(TerminationReason::TargetReached)
        } else if lambda <= cfg.eps / (3.0 * cfg.r * cfg.big_r) {
            Some(TerminationReason::SmallLambda)
        } else if xv_next > 2.0 * cfg.big_r {
            Some(TerminationReason::Diverged)
        } else if big_next < (growth * (t as f64 - 1.0)).exp() * big_a1 {
            Some(TerminationReason::SlowGrowth)
        } else {
            None
        };
        x = x_next;
        v = v_next;
        big_a = big_next;
        if let Some(reason) = stop {
            trace.termination = reason;
            break;
        }
    }
    Ok((best, trace))
}
