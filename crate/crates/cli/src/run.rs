use std::sync::Arc;
use std::time::Instant;

use maxmin::baselines::{agd_run, subgradient_run, BaselineConfig};
use maxmin::broo::{exact_broo, BrooRequest};
use maxmin::instances::{load_linear_csv, make_duplicated_instance, make_hard_instance, ChainSum, HardInstanceConfig};
use maxmin::{
    eval_fmax, solve_max_loss_with, Error, Method, Problem, QueryLedger, Result, RunRecord, SmoothingParams,
    SolveOptions, TerminationReason, Vector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::args::{InstanceKind, MethodArg, RunArgs};

/// Instance plus what is known about its optimum.
pub struct Prepared {
    pub inst: Arc<dyn Problem>,
    pub x0: Vector,
    pub big_r: f64,
    /// Lower bound on the optimal value over `B_R(x0)`.
    pub f_star: f64,
    pub t: Option<usize>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub fn prepare(args: &RunArgs) -> Result<Prepared> {
    match args.instance {
        InstanceKind::Hard => {
            let cfg = HardInstanceConfig::sample(args.t, args.n, args.ell, args.d_cap, args.seed)?;
            let inst = make_hard_instance(cfg)?;
            let d = inst.dim();
            Ok(Prepared {
                big_r: args.radius.unwrap_or(1.0),
                inst: Arc::new(inst),
                x0: Vector::zeros(d),
                f_star: 0.0,
                t: Some(args.t),
            })
        }
        InstanceKind::Duplicated => {
            let base = Arc::new(ChainSum::new(args.t, args.ell)?);
            let inst = make_duplicated_instance(base, args.n)?;
            let d = inst.dim();
            Ok(Prepared {
                big_r: args.radius.unwrap_or((args.n as f64).sqrt()),
                inst: Arc::new(inst),
                x0: Vector::zeros(d),
                f_star: 0.0,
                t: Some(args.t),
            })
        }
        InstanceKind::LinearCsv => {
            let path = args
                .input
                .as_ref()
                .ok_or_else(|| invalid("--instance linear-csv needs --input <file>"))?;
            let inst = load_linear_csv(path)?;
            let d = inst.dim();
            let x0 = Vector::zeros(d);
            let big_r = args.radius.unwrap_or(1.0);
            let f_star = linear_lower_bound(&inst, &x0, big_r, args.eps)?;
            Ok(Prepared { inst: Arc::new(inst), x0, big_r, f_star, t: None })
        }
    }
}

/// A lower bound on `min_{B_R(x0)} F_max`: exact for one component, from an
/// accurate softmax minimization when the exact oracle applies, else the best
/// value of a long subgradient run.
fn linear_lower_bound(inst: &maxmin::instances::LinearInstance, x0: &Vector, big_r: f64, eps: f64) -> Result<f64> {
    let mut scratch = QueryLedger::new();
    if inst.num_components() == 1 {
        let a = &inst.slopes()[0];
        return Ok(a.dot(x0) + inst.offsets()[0] - big_r * a.norm());
    }
    if inst.lipschitz() == 0.0 {
        return eval_fmax(inst, x0, &mut scratch);
    }
    let eps_ref = eps / 100.0;
    let params = SmoothingParams::for_problem(eps_ref, inst)?;
    let req = BrooRequest::new(x0.clone(), big_r, 0.0, eps_ref, 0.5)?;
    match exact_broo(inst, &params, &req, &mut scratch) {
        Ok(sol) => Ok(sol.value - sol.certified_gap.unwrap_or(0.0) - eps_ref / 2.0),
        Err(Error::TooLarge { .. }) => {
            log::warn!("instance too large for an exact reference; using a long subgradient run");
            let cfg = BaselineConfig::new(100_000)?;
            Ok(subgradient_run(inst, x0, big_r, &cfg, &mut scratch)?.best_value)
        }
        Err(e) => Err(e),
    }
}

pub struct Outcome {
    pub record: RunRecord,
    pub reached: bool,
}

/// Solves `prep` with the method in `args`; `ball_radius` overrides the
/// oracle radius of the accelerated methods.
pub fn run(args: &RunArgs, prep: &Prepared, ball_radius: Option<f64>) -> Result<Outcome> {
    if !(args.eps > 0.0) {
        return Err(invalid("--eps must be positive"));
    }
    let inst = prep.inst.as_ref();
    let n = inst.num_components();
    let max_queries = args.max_passes.map(|p| (p * n as f64).ceil() as u64);
    let start = Instant::now();
    let mut ledger = QueryLedger::new();
    let target = prep.f_star + args.eps;

    let (x, outer_iters, broo_calls, termination) = match args.method {
        MethodArg::BrooSgd | MethodArg::BrooKatyusha | MethodArg::Exact => {
            let method = match args.method {
                MethodArg::BrooSgd => Method::BrooSgd,
                MethodArg::BrooKatyusha => Method::BrooKatyusha,
                _ => Method::Exact,
            };
            let opts = SolveOptions { max_queries, ball_radius, ..SolveOptions::default() };
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let (x, report) =
                solve_max_loss_with(inst, &prep.x0, prep.big_r, args.eps, method, &opts, &mut rng, &mut ledger)?;
            (x, report.outer_iters, report.broo_calls, report.termination.as_str())
        }
        MethodArg::Subgradient | MethodArg::AgdSoftmax => {
            let steps_per_pass = if args.method == MethodArg::Subgradient {
                n as f64 / (n as f64 + 1.0)
            } else {
                0.5
            };
            let budget = match args.max_passes {
                Some(p) => ((p * steps_per_pass).floor() as usize).max(1),
                None => default_baseline_steps(args.method, inst, prep.big_r, args.eps),
            };
            let cfg = BaselineConfig::new(budget)?.with_target(target);
            let run = if args.method == MethodArg::Subgradient {
                subgradient_run(inst, &prep.x0, prep.big_r, &cfg, &mut ledger)?
            } else {
                let params = SmoothingParams::for_problem(args.eps, inst)?;
                agd_run(inst, &params, &prep.x0, prep.big_r, &cfg, &mut ledger)?
            };
            let reason = if run.reached_target {
                TerminationReason::TargetReached
            } else {
                TerminationReason::BudgetExhausted
            };
            (run.best, run.steps, 0, reason.as_str())
        }
    };
    let wall_ms = start.elapsed().as_millis() as u64;
    let fmax = eval_fmax(inst, &x, &mut QueryLedger::new())?;
    let final_gap = (fmax - prep.f_star).max(0.0);
    let mut record = RunRecord {
        method: args.method.as_str().to_string(),
        n,
        d: inst.dim(),
        t: prep.t,
        eps: args.eps,
        seed: args.seed,
        outer_iters,
        broo_calls,
        value_queries: 0,
        grad_queries: 0,
        full_passes: 0.0,
        final_gap,
        wall_ms,
        termination_reason: termination.to_string(),
    };
    record.set_queries(&ledger);
    Ok(Outcome { reached: final_gap <= args.eps, record })
}

/// Step budget with room above the textbook rates: `16 (L R / eps)^2` for the
/// subgradient method, `16 R sqrt(L / eps')` for AGD.
fn default_baseline_steps(method: MethodArg, inst: &dyn Problem, big_r: f64, eps: f64) -> usize {
    let lip = inst.lipschitz();
    let steps = if method == MethodArg::Subgradient {
        16.0 * (lip * big_r / eps).powi(2)
    } else {
        let eps_prime = eps / (2.0 * (inst.num_components().max(2) as f64).ln());
        let smooth = inst.smoothness().unwrap_or(f64::INFINITY) + lip * lip / eps_prime;
        16.0 * big_r * smooth.sqrt()
    };
    steps.ceil().clamp(1.0, 1e9) as usize
}
