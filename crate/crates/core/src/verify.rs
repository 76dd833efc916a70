//! Property suites run by `maxmin verify` and the integration tests.
//!
//! Exact checks must hold on every trial. Statistical checks pass when the
//! fraction of passing trials reaches their threshold.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::accel::{accelerate, alpha_tau, lambda_bisection, step_coefficients, AccelConfig, BisectionOutcome};
use crate::broo::{
    exact_broo, katyusha_broo, project_ball_intersection, sgd_broo, BrooRequest, ExactOracle, KatyushaConfig,
    SgdConfig,
};
use crate::error::{invalid, Error, Result};
use crate::instances::{
    make_hard_instance, parse_linear_csv, HardInstance, HardInstanceConfig, LinearInstance, Link, SoftplusInstance,
};
use crate::linalg::{dist, Vector};
use crate::problem::{eval_fmax, Problem, QueryLedger};
use crate::softmax::{
    fsmax, gamma_full, gamma_value_grad, make_ball_context, regularized_fsmax, stability_constants,
    BallContext, SmoothingParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Softmax,
    Broo,
    Accel,
    Instances,
    All,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Softmax => "softmax",
            Self::Broo => "broo",
            Self::Accel => "accel",
            Self::Instances => "instances",
            Self::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(Self::Softmax),
            "broo" => Ok(Self::Broo),
            "accel" => Ok(Self::Accel),
            "instances" => Ok(Self::Instances),
            "all" => Ok(Self::All),
            other => Err(invalid(format!("unknown suite `{other}`"))),
        }
    }
}

/// Deliberate bugs used to check that the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Negate every `grad gamma_i` seen by the suites.
    FlipGammaGradient,
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flip-gamma-gradient" => Ok(Self::FlipGammaGradient),
            other => Err(invalid(format!("unknown fault `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { trials: 100, seed: 0, fault: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckKind {
    Exact,
    Statistical { threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: Suite,
    pub name: String,
    pub kind: CheckKind,
    pub passed: usize,
    pub total: usize,
    /// Largest violation seen, in the check's own units; `0` when none.
    pub worst: f64,
}

impl CheckResult {
    pub fn ok(&self) -> bool {
        match self.kind {
            CheckKind::Exact => self.passed == self.total,
            CheckKind::Statistical { threshold } => {
                self.total > 0 && self.passed as f64 >= threshold * self.total as f64
            }
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.ok() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}/{} {}/{}", self.suite, self.name, self.passed, self.total)?;
        match self.kind {
            CheckKind::Exact => write!(f, " (exact")?,
            CheckKind::Statistical { threshold } => write!(f, " (threshold {threshold}")?,
        }
        if self.worst > 0.0 {
            write!(f, ", worst violation {:.3e}", self.worst)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(CheckResult::ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.ok())
    }
}

/// Counts passing trials of one check; `violation` is `<= 0` on success.
struct Tally {
    suite: Suite,
    name: &'static str,
    kind: CheckKind,
    passed: usize,
    total: usize,
    worst: f64,
}

impl Tally {
    fn exact(suite: Suite, name: &'static str) -> Self {
        Self { suite, name, kind: CheckKind::Exact, passed: 0, total: 0, worst: 0.0 }
    }

    fn statistical(suite: Suite, name: &'static str, threshold: f64) -> Self {
        Self { kind: CheckKind::Statistical { threshold }, ..Self::exact(suite, name) }
    }

    fn record(&mut self, violation: f64) {
        self.total += 1;
        if violation <= 0.0 {
            self.passed += 1;
        } else if violation.is_nan() {
            self.worst = f64::INFINITY;
        } else {
            self.worst = self.worst.max(violation);
        }
    }

    fn pass_if(&mut self, ok: bool) {
        self.record(if ok { 0.0 } else { 1.0 });
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            suite: self.suite,
            name: self.name.to_string(),
            kind: self.kind,
            passed: self.passed,
            total: self.total,
            worst: self.worst,
        }
    }
}

/// Runs `suite` (every suite for [`Suite::All`]).
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let suites: &[Suite] = match suite {
        Suite::All => &[Suite::Softmax, Suite::Broo, Suite::Accel, Suite::Instances],
        _ => std::slice::from_ref(&suite),
    };
    let mut report = VerifyReport::default();
    for &s in suites {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let checks = match s {
            Suite::Softmax => softmax_suite(opts, &mut rng)?,
            Suite::Broo => broo_suite(opts, &mut rng)?,
            Suite::Accel => accel_suite(opts, &mut rng)?,
            Suite::Instances => instances_suite(opts, &mut rng)?,
            Suite::All => unreachable!(),
        };
        report.checks.extend(checks);
    }
    Ok(report)
}

/// Uniform point in `B_r(center)`.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, center: &Vector, r: f64) -> Vector {
    let d = center.len();
    let g = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let radius = r * rng.random::<f64>().powf(1.0 / d as f64);
    let scale = radius / g.norm().max(1e-300);
    center + g * scale
}

/// A random small softplus instance with `d` in `[2, max_d]` and `N` in
/// `[2, max_n]`.
pub fn random_softplus<R: Rng + ?Sized>(rng: &mut R, max_d: usize, max_n: usize) -> Result<SoftplusInstance> {
    let d = rng.random_range(2..=max_d.max(2));
    let n = rng.random_range(2..=max_n.max(2));
    SoftplusInstance::random(d, n, rng.random())
}

/// A random linear instance with slopes of norm at most one.
pub fn random_linear<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> Result<LinearInstance> {
    let a = (0..n)
        .map(|_| {
            let g = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let s = rng.random_range(0.2..1.0) / g.norm().max(1e-300);
            g * s
        })
        .collect();
    let b = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
    LinearInstance::new(a, b)
}

/// A point with `prog < T`: either generic, or a nearly equally spaced chain
/// running from the anchor down to the flat region, which is close to the
/// worst case for the gap.
pub fn sample_low_progress<R: Rng + ?Sized>(rng: &mut R, inst: &HardInstance) -> Vector {
    let t = inst.chain_len();
    let alpha = inst.alpha();
    let anchor = 1.0 / (t as f64).sqrt();
    let mut z = Vector::zeros(t);
    let end = rng.random_range(-1.0..1.0) * alpha;
    if rng.random_bool(0.5) {
        for j in 0..t - 1 {
            z[j] = rng.random_range(-1.5..1.5) * anchor;
        }
    } else {
        let jitter = 0.2 * (anchor - end) / t as f64 * rng.random::<f64>();
        for j in 0..t - 1 {
            let frac = (j + 1) as f64 / t as f64;
            z[j] = anchor + (end - anchor) * frac + jitter * rng.random_range(-1.0..1.0);
        }
    }
    z[t - 1] = end;
    let u = &inst.config().u;
    let mut x = u * &z;
    let noise = Vector::from_fn(inst.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let orth = &noise - u * u.tr_mul(&noise);
    x += orth * 0.1;
    x
}

fn gamma_grad_sum<P: Problem + ?Sized>(
    ctx: &BallContext,
    inst: &P,
    x: &Vector,
    fault: Option<Fault>,
    ledger: &mut QueryLedger,
) -> Result<Vector> {
    let mut sum = Vector::zeros(inst.dim());
    for (i, &p) in ctx.probs().iter().enumerate() {
        let mut g = gamma_value_grad(ctx, inst, i, x, ledger)?.grad;
        if fault == Some(Fault::FlipGammaGradient) {
            g.neg_mut();
        }
        sum.axpy(p, &g, 1.0);
    }
    Ok(sum)
}

/// A random ball context in the stable regime `r = eps' / L_f`,
/// `lambda <= L_f / r`.
fn random_ball<R: Rng + ?Sized>(
    rng: &mut R,
    inst: &SoftplusInstance,
    ledger: &mut QueryLedger,
) -> Result<(SmoothingParams, BallContext, f64)> {
    let eps = rng.random_range(0.05..0.5);
    let params = SmoothingParams::for_problem(eps, inst)?;
    let r = params.r_eps;
    let lambda = rng.random_range(0.0..1.0) * inst.lipschitz() / r;
    let center = Vector::from_fn(inst.dim(), |_, _| rng.random_range(-1.0..1.0));
    let ctx = make_ball_context(inst, &params, &center, lambda, ledger)?;
    Ok((params, ctx, r))
}

fn softmax_suite(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let s = Suite::Softmax;
    let mut ledger = QueryLedger::new();
    let mut sandwich = Tally::exact(s, "sandwich");
    let mut unbiased = Tally::exact(s, "unbiased_estimator");
    let mut fd = Tally::exact(s, "gamma_gradient_fd");
    let mut monotone = Tally::exact(s, "monotone_transform");
    let mut norm = Tally::exact(s, "estimator_norm");
    let mut transfer = Tally::exact(s, "suboptimality_transfer");
    let big_c = stability_constants(1.0).big_c;

    for trial in 0..opts.trials {
        let inst = random_softplus(rng, 8, 40)?;
        let (params, ctx, r) = random_ball(rng, &inst, &mut ledger)?;
        let c = ctx.center().clone();

        let x = Vector::from_fn(inst.dim(), |_, _| rng.random_range(-2.0..2.0));
        let smax = fsmax(&inst, &params, &x, &mut ledger)?;
        let fmax = eval_fmax(&inst, &x, &mut ledger)?;
        sandwich.record((fmax - smax - 1e-10).max(smax - fmax - params.eps / 2.0 - 1e-12));

        let y = sample_ball(rng, &c, r);
        let est = gamma_grad_sum(&ctx, &inst, &y, opts.fault, &mut ledger)?;
        let full = gamma_full(&ctx, &inst, &y, &mut ledger)?;
        let scale = full.grad.norm().max(1e-300);
        unbiased.record((&est - &full.grad).norm() / scale - 1e-12);

        let h = 1e-6 * r;
        let dir = sample_ball(rng, &Vector::zeros(inst.dim()), 1.0).normalize();
        let gp = ctx.gamma_full_value(&inst, &(&y + &dir * h), &mut ledger).0;
        let gm = ctx.gamma_full_value(&inst, &(&y - &dir * h), &mut ledger).0;
        let fd_dir = (gp - gm) / (2.0 * h);
        let an_dir = est.dot(&dir);
        fd.record((fd_dir - an_dir).abs() - 1e-5 * est.norm().max(1e-8));

        let z = sample_ball(rng, &c, r);
        let (gy, gz) = (full.value, ctx.gamma_full_value(&inst, &z, &mut ledger).0);
        let fy = regularized_fsmax(&inst, &params, &c, ctx.lambda(), &y, &mut ledger)?.0;
        let fz = regularized_fsmax(&inst, &params, &c, ctx.lambda(), &z, &mut ledger)?.0;
        let tie = 1e-12 * (1.0 + fy.abs());
        monotone.pass_if((fy - fz).abs() <= tie || (gy - gz).signum() == (fy - fz).signum());

        for i in 0..ctx.num_components() {
            let g = gamma_value_grad(&ctx, &inst, i, &y, &mut ledger)?;
            norm.record(g.grad.norm() - big_c * inst.lipschitz() * (1.0 + 1e-12));
        }

        if trial % 10 == 0 {
            let req = BrooRequest::new(c.clone(), r, ctx.lambda(), 1e-9, 0.5)?;
            let star = exact_broo(&inst, &params, &req, &mut ledger)?.point;
            let f_star = regularized_fsmax(&inst, &params, &c, ctx.lambda(), &star, &mut ledger)?.0;
            let g_star = ctx.gamma_full_value(&inst, &star, &mut ledger).0;
            for _ in 0..20 {
                let p = sample_ball(rng, &c, r);
                let fp = regularized_fsmax(&inst, &params, &c, ctx.lambda(), &p, &mut ledger)?.0;
                let gp = ctx.gamma_full_value(&inst, &p, &mut ledger).0;
                transfer.record((fp - f_star) - big_c * (gp - g_star) - 1e-9);
            }
        }
    }
    Ok(vec![
        sandwich.finish(),
        unbiased.finish(),
        fd.finish(),
        monotone.finish(),
        norm.finish(),
        transfer.finish(),
    ])
}

fn broo_suite(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let s = Suite::Broo;
    let mut ledger = QueryLedger::new();
    let mut exact_opt = Tally::exact(s, "exact_optimality");
    let mut proj = Tally::exact(s, "projection_feasible");
    let mut sgd = Tally::statistical(s, "sgd_contract", 0.95);
    let mut kat = Tally::statistical(s, "katyusha_contract", 0.95);

    for _ in 0..opts.trials {
        let inst = random_softplus(rng, 6, 20)?;
        let params = SmoothingParams::for_problem(0.2, &inst)?;
        let r = params.r_eps;
        let lambda = rng.random_range(0.25..1.0) * inst.lipschitz() / r;
        let delta = r / 4.0;
        let c = Vector::from_fn(inst.dim(), |_, _| rng.random_range(-1.0..1.0));
        let req = BrooRequest::new(c.clone(), r, lambda, delta, 0.05)?;
        let star = exact_broo(&inst, &params, &req, &mut ledger)?;
        let f_star = regularized_fsmax(&inst, &params, &c, lambda, &star.point, &mut ledger)?.0;
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..5 {
            let p = sample_ball(rng, &c, r);
            let fp = regularized_fsmax(&inst, &params, &c, lambda, &p, &mut ledger)?.0;
            worst = worst.max(f_star - fp - 1e-10);
        }
        exact_opt.record(worst.max(dist(&star.point, &c) - r * (1.0 + 1e-12)));

        let slack = 0.5 * lambda * delta * delta;
        let contract = |point: &Vector, ledger: &mut QueryLedger| -> Result<bool> {
            let f = regularized_fsmax(&inst, &params, &c, lambda, point, ledger)?.0;
            Ok(f <= f_star + slack && dist(point, &star.point) <= delta)
        };
        let resp = sgd_broo(&inst, &params, &req, &SgdConfig::default(), rng, &mut ledger)?;
        sgd.pass_if(contract(&resp.point, &mut ledger)?);
        let resp = katyusha_broo(&inst, &params, &req, &KatyushaConfig::default(), rng, &mut ledger)?;
        kat.pass_if(contract(&resp.point, &mut ledger)?);

        let c2 = sample_ball(rng, &c, 1.5 * r);
        let x = sample_ball(rng, &c, 3.0 * r);
        let p = project_ball_intersection(&x, &c, r, &c2, r)?;
        proj.record((dist(&p, &c) - r).max(dist(&p, &c2) - r) - 1e-9);
    }
    Ok(vec![exact_opt.finish(), proj.finish(), sgd.finish(), kat.finish()])
}

fn accel_suite(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let s = Suite::Accel;
    let mut ledger = QueryLedger::new();
    let mut coupling = Tally::exact(s, "coupling_identities");
    let mut alpha = Tally::exact(s, "alpha_weights");
    let mut outcomes = Tally::exact(s, "bisection_outcomes");
    let mut traces = Tally::exact(s, "trace_identities");

    for _ in 0..opts.trials {
        let lambda = 10f64.powf(rng.random_range(-3.0..3.0));
        let big_a = 10f64.powf(rng.random_range(-3.0..4.0)) * rng.random_range(0.0..1.0);
        let (a, next) = step_coefficients(lambda, big_a)?;
        coupling.record(((next - a * a * lambda).abs().max((next - big_a - a).abs())) / next - 1e-12);
        alpha.record((alpha_tau(2.0 * big_a * lambda)? - big_a / next).abs() - 1e-12);

        let d = rng.random_range(2..=4);
        let n = rng.random_range(2..=6);
        let inst = random_linear(rng, d, n)?;
        let eps = 0.1;
        let params = SmoothingParams::for_problem(eps, &inst)?;
        let big_r = 1.0;
        let r = params.r_eps.min(big_r);
        let cfg = AccelConfig::new(big_r, r, eps / 2.0, inst.lipschitz())?;
        let x = sample_ball(rng, &Vector::zeros(d), 1.0);
        let v = sample_ball(rng, &Vector::zeros(d), 1.0);
        let big_a = rng.random_range(0.0..10.0);
        let mut broo = ExactOracle::new(&inst, params);
        let res = lambda_bisection(&x, &v, big_a, &cfg, &mut broo, &mut ledger)?;
        let ok = match res.outcome {
            BisectionOutcome::SmallLambda => res.lambda < 2.0 * cfg.lambda_min * (1.0 + 1e-12),
            _ => {
                let y = &x * alpha_tau(2.0 * big_a * res.lambda)? + &v * (1.0 - alpha_tau(2.0 * big_a * res.lambda)?);
                let req = BrooRequest::new(y.clone(), r, res.lambda, 1e-9, 0.5)?;
                let moved = dist(&exact_broo(&inst, &params, &req, &mut ledger)?.point, &y);
                moved > 0.75 * r && moved < r * (1.0 + 1e-9)
            }
        };
        outcomes.pass_if(ok);
    }

    for _ in 0..opts.trials.div_ceil(20) {
        let inst = random_linear(rng, 2, 3)?;
        let eps = 0.2;
        let params = SmoothingParams::for_problem(eps, &inst)?;
        let r = params.r_eps.min(1.0);
        let cfg = AccelConfig::new(1.0, r, eps / 2.0, inst.lipschitz())?.with_max_outer(200);
        let x0 = sample_ball(rng, &Vector::zeros(2), 0.5);
        let mut broo = ExactOracle::new(&inst, params);
        let (_, trace) = accelerate(&inst, &params, &x0, &cfg, &mut broo, &mut ledger, None)?;
        for rec in &trace.iterations {
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
            let v1 = rel(rec.big_a_next, rec.a_next * rec.a_next * rec.lambda);
            let v2 = rel(rec.big_a_next, rec.big_a_prev + rec.a_next);
            let v3 = 0.5 * rec.inv_sqrt_lambda_sum - rec.big_a_next.sqrt() * (1.0 + 1e-9);
            traces.record((v1 - 1e-9).max(v2 - 1e-9).max(v3));
        }
    }
    Ok(vec![coupling.finish(), alpha.finish(), outcomes.finish(), traces.finish()])
}

fn instances_suite(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let s = Suite::Instances;
    let mut ledger = QueryLedger::new();
    let mut link = Tally::exact(s, "link_shape");
    let mut minimizer = Tally::exact(s, "minimizer_value");
    let mut chain = Tally::exact(s, "zero_chain");
    let mut floor = Tally::exact(s, "low_progress_gap_floor");
    let mut csv_round = Tally::exact(s, "linear_csv_round_trip");

    for _ in 0..opts.trials {
        let t = rng.random_range(2..=8);
        let ell = [1.0, 4.0, 16.0][rng.random_range(0..3)];
        let n = t + rng.random_range(0..8);
        let cfg = HardInstanceConfig::sample(t, n, ell, Some(t + 8), rng.random())?;
        let inst = make_hard_instance(cfg)?;
        let alpha = inst.alpha();

        let lk = Link::new(alpha, ell)?;
        let a = rng.random_range(-1.0..1.0);
        let b = rng.random_range(-1.0..1.0);
        let mid = lk.value(0.5 * (a + b));
        let convex = mid <= 0.5 * (lk.value(a) + lk.value(b)) + 1e-15;
        let even = lk.value(a) == lk.value(-a);
        let flat = lk.value(alpha * rng.random_range(-1.0..1.0)) == 0.0;
        let lip = lk.derivative(a).abs() <= 1.0;
        link.pass_if(convex && even && flat && lip);

        minimizer.record(eval_fmax(&inst, &inst.minimizer(), &mut ledger)?.abs() - 1e-12);

        // gradients at a point with prog = k only touch latent coordinates <= k + 1
        let k = rng.random_range(0..t);
        let mut z = Vector::zeros(t);
        for j in 0..k {
            z[j] = rng.random_range(-1.0..1.0);
        }
        let x = &inst.config().u * &z;
        let mut leak: f64 = 0.0;
        for i in 0..n {
            let g = inst.latent(&ledger.subgradient(&inst, i, &x));
            for j in (k + 1).min(t)..t {
                leak = leak.max(g[j].abs());
            }
        }
        chain.record(leak - 1e-12);

        let p = sample_low_progress(rng, &inst);
        if inst.progress(&p) < t {
            let bound = lk.value(3.0 / (8.0 * (t as f64).powf(1.5)));
            floor.record(bound - eval_fmax(&inst, &p, &mut ledger)? - 1e-12);
        }

        let rows = rng.random_range(1..5);
        let lin = random_linear(rng, 3, rows)?;
        let mut buf = Vec::new();
        lin.write_csv(&mut buf)?;
        let back = parse_linear_csv(std::str::from_utf8(&buf).map_err(|e| invalid(e.to_string()))?)?;
        let q = Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let same = (0..lin.num_components()).all(|i| (lin.value(i, &q) - back.value(i, &q)).abs() <= 1e-12);
        csv_round.pass_if(same && back.num_components() == lin.num_components());
    }
    Ok(vec![link.finish(), minimizer.finish(), chain.finish(), floor.finish(), csv_round.finish()])
}
