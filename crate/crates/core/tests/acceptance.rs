//! Acceptance suite. Every test writes one `criterion N: PASS|FAIL` line to
//! stderr (bypassing the harness capture) before asserting.

use std::io::Write;
use std::time::Instant;

use maxmin::accel::{
    accelerate, alpha_tau, lambda_bisection, AccelConfig, BisectionOutcome, SolverTrace,
};
use maxmin::baselines::subgradient_run;
use maxmin::broo::{
    exact_broo, katyusha_broo, sgd_broo, ExactOracle, KatyushaConfig, KatyushaOracle, SgdConfig,
};
use maxmin::instances::{make_hard_instance, link_psi, HardInstanceConfig, SoftplusInstance};
use maxmin::linalg::dist;
use maxmin::softmax::{
    fsmax, fsmax_with_grad, gamma_full, gamma_value_grad, make_ball_context, regularized_fsmax,
};
use maxmin::verify::{random_linear, random_softplus, sample_ball, sample_low_progress};
use maxmin::{
    eval_fmax, fit_loglog, solve_max_loss_with, BaselineConfig, BrooRequest, Method, Problem,
    QueryLedger, SmoothingParams, SolveOptions, Vector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, name: &str, pass: bool, detail: String, start: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!(
        "criterion {n} {name}: {verdict} ({detail}; {:.1}s)\n",
        start.elapsed().as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn random_instance(rng: &mut ChaCha8Rng, max_d: usize, max_n: usize) -> Box<dyn Problem> {
    if rng.random_bool(0.5) {
        Box::new(random_softplus(rng, max_d, max_n).unwrap())
    } else {
        let d = rng.random_range(2..=max_d);
        let n = rng.random_range(1..=max_n);
        Box::new(random_linear(rng, d, n).unwrap())
    }
}

/// Worst violation of the coupling identities over a trace; `<= 0` means none.
fn coupling_violation(trace: &SolverTrace) -> f64 {
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
    trace
        .iterations
        .iter()
        .map(|rec| {
            let sq = rel(rec.big_a_next, rec.a_next * rec.a_next * rec.lambda) - 1e-9;
            let sum = rel(rec.big_a_next, rec.big_a_prev + rec.a_next) - 1e-9;
            let half = 0.5 * rec.inv_sqrt_lambda_sum;
            let growth = (half - rec.big_a_next.sqrt()) / half - 1e-9;
            sq.max(sum).max(growth)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn hard(t: usize, n: usize, d_cap: usize, seed: u64) -> maxmin::instances::HardInstance {
    make_hard_instance(HardInstanceConfig::sample(t, n, 16.0, Some(d_cap), seed).unwrap()).unwrap()
}

#[test]
fn criterion_01_softmax_sandwich() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ledger = QueryLedger::new();
    let (mut bad, mut worst_low, mut worst_high) = (0, 0.0_f64, f64::NEG_INFINITY);
    for _ in 0..1000 {
        let inst = random_instance(&mut rng, 10, 60);
        let eps = 10f64.powf(rng.random_range(-2.0..0.0));
        let params = SmoothingParams::for_problem(eps, inst.as_ref()).unwrap();
        let x = Vector::from_fn(inst.dim(), |_, _| rng.random_range(-2.0..2.0));
        let gap = fsmax(inst.as_ref(), &params, &x, &mut ledger).unwrap()
            - eval_fmax(inst.as_ref(), &x, &mut ledger).unwrap();
        worst_low = worst_low.min(gap);
        worst_high = worst_high.max(gap / eps);
        if gap < -1e-10 || gap > eps / 2.0 {
            bad += 1;
        }
    }
    let pass = bad == 0;
    report(
        1,
        "softmax_sandwich",
        pass,
        format!("violations {bad}/1000, min gap {worst_low:.2e}, max gap/eps {worst_high:.4}"),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_02_estimator_unbiasedness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ledger = QueryLedger::new();
    let (mut bad, mut worst) = (0, 0.0_f64);
    for _ in 0..20 {
        let inst = random_instance(&mut rng, 10, 50);
        let inst = inst.as_ref();
        let eps = rng.random_range(0.05..0.5);
        let params = SmoothingParams::for_problem(eps, inst).unwrap();
        let r = params.r_eps;
        for _ in 0..50 {
            let c = Vector::from_fn(inst.dim(), |_, _| rng.random_range(-1.0..1.0));
            let lambda = rng.random_range(0.0..1.0) * inst.lipschitz() / r;
            let ctx = make_ball_context(inst, &params, &c, lambda, &mut ledger).unwrap();
            let x = sample_ball(&mut rng, &c, r);
            let mut est = Vector::zeros(inst.dim());
            for (i, &p) in ctx.probs().iter().enumerate() {
                est.axpy(p, &gamma_value_grad(&ctx, inst, i, &x, &mut ledger).unwrap().grad, 1.0);
            }
            // Gamma = eps' exp((F_smax(x) + lambda/2 |x - c|^2 - F_smax(c)) / eps')
            let ep = params.eps_prime;
            let (fx, gx) = fsmax_with_grad(inst, &params, &x, &mut ledger).unwrap();
            let fc = fsmax(inst, &params, &c, &mut ledger).unwrap();
            let diff = &x - &c;
            let big_gamma = ep * ((fx + 0.5 * lambda * diff.norm_squared() - fc) / ep).exp();
            let exact = (gx + diff * lambda) * (big_gamma / ep);
            let full = gamma_full(&ctx, inst, &x, &mut ledger).unwrap().grad;
            let rel = (&est - &exact).norm().max((&full - &exact).norm()) / exact.norm().max(1e-300);
            worst = worst.max(rel);
            if rel > 1e-12 {
                bad += 1;
            }
        }
    }
    let pass = bad == 0;
    report(
        2,
        "estimator_unbiasedness",
        pass,
        format!("violations {bad}/1000, worst relative error {worst:.2e}"),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_03_suboptimality_transfer() {
    let start = Instant::now();
    let big_c = 3.0 * 1.5f64.exp();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ledger = QueryLedger::new();
    let (mut bad, mut worst) = (0, f64::NEG_INFINITY);
    for _ in 0..20 {
        let inst = random_instance(&mut rng, 10, 50);
        let inst = inst.as_ref();
        let eps = rng.random_range(0.05..0.5);
        let params = SmoothingParams::for_problem(eps, inst).unwrap();
        let r = params.r_eps;
        let lambda = rng.random_range(0.0..1.0) * inst.lipschitz() / r;
        let c = Vector::from_fn(inst.dim(), |_, _| rng.random_range(-1.0..1.0));
        let ctx = make_ball_context(inst, &params, &c, lambda, &mut ledger).unwrap();
        let req = BrooRequest::new(c.clone(), r, lambda, 1e-9, 0.5).unwrap();
        let star = exact_broo(inst, &params, &req, &mut ledger).unwrap().point;
        let f_star = regularized_fsmax(inst, &params, &c, lambda, &star, &mut ledger).unwrap().0;
        let g_star = ctx.gamma_full_value(inst, &star, &mut ledger).0;
        for _ in 0..1000 {
            let x = sample_ball(&mut rng, &c, r);
            let fx = regularized_fsmax(inst, &params, &c, lambda, &x, &mut ledger).unwrap().0;
            let gx = ctx.gamma_full_value(inst, &x, &mut ledger).0;
            // absolute slack for the 1e-12 accuracy of the reference minimizer
            let v = (fx - f_star) - big_c * (gx - g_star);
            worst = worst.max(v);
            if v > 1e-10 {
                bad += 1;
            }
        }
    }
    let pass = bad == 0;
    report(
        3,
        "suboptimality_transfer",
        pass,
        format!("violations {bad}/20000, worst lhs - C rhs {worst:.2e}"),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_04_broo_contract() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ledger = QueryLedger::new();
    let (mut min_sgd, mut min_kat) = (usize::MAX, usize::MAX);
    for k in 0..20u64 {
        let inst: SoftplusInstance = random_softplus(&mut rng, 10, 50).unwrap();
        let params = SmoothingParams::for_problem(rng.random_range(0.05..0.5), &inst).unwrap();
        let r = params.r_eps;
        let lambda = rng.random_range(0.25..2.0) * inst.lipschitz() / r;
        let delta = r / 17.0;
        let c = Vector::from_fn(inst.dim(), |_, _| rng.random_range(-1.0..1.0));
        let req = BrooRequest::new(c.clone(), r, lambda, delta, 0.05).unwrap();
        let star = exact_broo(&inst, &params, &req, &mut ledger).unwrap();
        let slack = 0.5 * lambda * delta * delta;
        let meets = |p: &Vector, ledger: &mut QueryLedger| {
            let f = regularized_fsmax(&inst, &params, &c, lambda, p, ledger).unwrap().0;
            f <= star.value + slack && dist(p, &star.point) <= delta
        };
        let (mut ok_sgd, mut ok_kat) = (0, 0);
        for trial in 0..100u64 {
            let mut trng = ChaCha8Rng::seed_from_u64(1000 * k + trial);
            let p = sgd_broo(&inst, &params, &req, &SgdConfig::default(), &mut trng, &mut ledger).unwrap();
            ok_sgd += meets(&p.point, &mut ledger) as usize;
            let p = katyusha_broo(&inst, &params, &req, &KatyushaConfig::default(), &mut trng, &mut ledger)
                .unwrap();
            ok_kat += meets(&p.point, &mut ledger) as usize;
        }
        min_sgd = min_sgd.min(ok_sgd);
        min_kat = min_kat.min(ok_kat);
    }
    let pass = min_sgd >= 95 && min_kat >= 95;
    report(
        4,
        "broo_contract",
        pass,
        format!("worst instance: sgd {min_sgd}/100, katyusha {min_kat}/100"),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_05_bisection_outcomes() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ledger = QueryLedger::new();
    let (mut bad, mut small, mut moved_range) = (0, 0, (f64::INFINITY, 0.0_f64));
    for _ in 0..100 {
        let inst = random_instance(&mut rng, 6, 20);
        let inst = inst.as_ref();
        let eps = rng.random_range(0.05..0.3);
        let params = SmoothingParams::for_problem(eps, inst).unwrap();
        let r = params.r_eps.min(1.0);
        let cfg = AccelConfig::new(1.0, r, eps / 2.0, inst.lipschitz()).unwrap();
        let origin = Vector::zeros(inst.dim());
        let x = sample_ball(&mut rng, &origin, 1.0);
        let v = sample_ball(&mut rng, &origin, 1.0);
        let big_a = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..20.0) };
        let mut broo = ExactOracle::new(inst, params);
        let res = lambda_bisection(&x, &v, big_a, &cfg, &mut broo, &mut ledger).unwrap();
        let ok = match res.outcome {
            BisectionOutcome::SmallLambda => {
                small += 1;
                res.lambda < 2.0 * cfg.lambda_min
            }
            _ => {
                let alpha = alpha_tau(2.0 * big_a * res.lambda).unwrap();
                let y = &x * alpha + &v * (1.0 - alpha);
                let req = BrooRequest::new(y.clone(), r, res.lambda, 1e-9, 0.5).unwrap();
                let moved = dist(&exact_broo(inst, &params, &req, &mut ledger).unwrap().point, &y) / r;
                moved_range = (moved_range.0.min(moved), moved_range.1.max(moved));
                moved > 0.75 && moved < 1.0
            }
        };
        bad += (!ok) as usize;
    }
    let pass = bad == 0;
    report(
        5,
        "bisection_outcomes",
        pass,
        format!(
            "violations {bad}/100, small-lambda exits {small}, displacement/r in [{:.3}, {:.3}]",
            moved_range.0, moved_range.1
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_06_coupling_identities() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut ledger = QueryLedger::new();
    let (mut iters, mut worst) = (0, f64::NEG_INFINITY);
    for _ in 0..10 {
        let inst = random_instance(&mut rng, 4, 6);
        let inst = inst.as_ref();
        let eps = 0.1;
        let params = SmoothingParams::for_problem(eps, inst).unwrap();
        let cfg = AccelConfig::new(1.0, params.r_eps.min(1.0), eps / 2.0, inst.lipschitz()).unwrap();
        let x0 = sample_ball(&mut rng, &Vector::zeros(inst.dim()), 0.5);
        let mut broo = ExactOracle::new(inst, params);
        let (_, trace) = accelerate(inst, &params, &x0, &cfg, &mut broo, &mut ledger, None).unwrap();
        iters += trace.outer_iters();
        worst = worst.max(coupling_violation(&trace));
    }
    for (t, n, seed) in [(4, 16, 0), (6, 32, 1)] {
        let inst = hard(t, n, 64, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = Vector::zeros(inst.dim());
        let (_, rep) = solve_max_loss_with(
            &inst,
            &x0,
            1.0,
            0.1,
            Method::BrooKatyusha,
            &SolveOptions::default(),
            &mut rng,
            &mut ledger,
        )
        .unwrap();
        iters += rep.outer_iters;
        worst = worst.max(coupling_violation(&rep.trace));
    }
    let pass = worst <= 0.0 && iters > 0;
    report(
        6,
        "coupling_identities",
        pass,
        format!("{iters} iterations checked, worst excess over 1e-9 {worst:.2e}"),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_07_potential_decrease() {
    let start = Instant::now();
    let eps = 0.1;
    let big_r = 1.0;
    let (mut checked, mut skipped, mut bad, mut worst, mut coupling) = (0, 0, 0, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for seed in 0..10u64 {
        let inst = hard(6, 8, 24, seed);
        let params = SmoothingParams::for_problem(eps, &inst).unwrap();
        let r = params.r_eps.min(big_r);
        let cfg = AccelConfig::new(big_r, r, eps / 2.0, inst.lipschitz()).unwrap();
        let cfg = cfg.with_sigma(1.0 / (100.0 * cfg.max_outer as f64));
        let x0 = Vector::zeros(inst.dim());
        let x_star = inst.minimizer();
        let mut broo =
            KatyushaOracle::new(&inst, params, KatyushaConfig::default(), ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut ledger = QueryLedger::new();
        let (_, trace) = accelerate(&inst, &params, &x0, &cfg, &mut broo, &mut ledger, Some(&x_star)).unwrap();
        coupling = coupling.max(coupling_violation(&trace));
        let pots = trace.potentials.as_ref().expect("reference supplied");
        for (t, rec) in trace.iterations.iter().enumerate() {
            let pre_a = rec.xv_dist_prev <= 2.0 * big_r;
            let pre_b = rec.lambda >= cfg.eps / (3.0 * r * big_r);
            let req = BrooRequest::new(rec.y.clone(), r, rec.lambda, rec.delta, 0.5).unwrap();
            let prox = exact_broo(&inst, &params, &req, &mut ledger).unwrap();
            let f_resp = regularized_fsmax(&inst, &params, &rec.y, rec.lambda, &rec.x_next, &mut ledger).unwrap().0;
            let accurate = f_resp <= prox.value + 0.5 * rec.lambda * rec.delta * rec.delta
                && dist(&rec.x_next, &prox.point) <= rec.delta;
            if !(pre_a && pre_b && accurate) {
                skipped += 1;
                continue;
            }
            checked += 1;
            let excess = pots[t + 1].p - pots[t].p + rec.big_a_next * rec.lambda * r * r / 12.0;
            worst = worst.max(excess);
            if excess > 1e-9 {
                bad += 1;
            }
        }
    }
    let pass = bad == 0 && checked > 0 && coupling <= 0.0;
    report(
        7,
        "potential_decrease",
        pass,
        format!(
            "violations {bad}/{checked} checked iterations ({skipped} outside the preconditions), worst excess {worst:.2e}"
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_08_end_to_end() {
    let start = Instant::now();
    let mut combos = Vec::new();
    for t in [4, 6, 8] {
        for n in [16, 32, 64] {
            for eps in [0.1, 0.05] {
                combos.push((t, n, eps));
            }
        }
    }
    let (mut reached, mut coupling) = (0, f64::NEG_INFINITY);
    let mut misses = Vec::new();
    for seed in 0..20u64 {
        let (t, n, eps) = combos[seed as usize % combos.len()];
        let inst = hard(t, n, 64, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ledger = QueryLedger::new();
        let x0 = Vector::zeros(inst.dim());
        let (x, rep) = solve_max_loss_with(
            &inst,
            &x0,
            1.0,
            eps,
            Method::BrooKatyusha,
            &SolveOptions::default(),
            &mut rng,
            &mut ledger,
        )
        .unwrap();
        coupling = coupling.max(coupling_violation(&rep.trace));
        // the minimum value is 0
        let gap = eval_fmax(&inst, &x, &mut QueryLedger::new()).unwrap();
        if gap <= eps {
            reached += 1;
        } else {
            misses.push(format!("T{t} N{n} eps{eps} seed{seed} gap {gap:.4}"));
        }
    }
    let pass = reached >= 18 && coupling <= 0.0;
    report(
        8,
        "end_to_end",
        pass,
        format!("{reached}/20 runs reached gap <= eps, misses {misses:?}"),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_09_radius_scaling() {
    let start = Instant::now();
    let inst = hard(6, 8, 24, 0);
    let x0 = Vector::zeros(inst.dim());
    let rs: Vec<f64> = (0..5).map(|i| 0.002 * 10f64.powf(i as f64 / 4.0)).collect();
    let mut iters = Vec::new();
    let mut coupling = f64::NEG_INFINITY;
    for &r in &rs {
        let opts = SolveOptions { ball_radius: Some(r), ..SolveOptions::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ledger = QueryLedger::new();
        let (_, rep) =
            solve_max_loss_with(&inst, &x0, 1.0, 0.05, Method::Exact, &opts, &mut rng, &mut ledger).unwrap();
        coupling = coupling.max(coupling_violation(&rep.trace));
        iters.push(rep.outer_iters as f64);
    }
    let fit = fit_loglog(&rs, &iters).unwrap();
    let pass = (-0.80..=-0.55).contains(&fit.slope) && fit.r_squared >= 0.9 && coupling <= 0.0;
    report(
        9,
        "radius_scaling",
        pass,
        format!("outer iterations {iters:?}, slope {:.3}, R^2 {:.4}", fit.slope, fit.r_squared),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_10_pass_count_advantage() {
    let start = Instant::now();
    let (t, n, eps) = (6, 2048, 0.05);
    let inst = hard(t, n, 64, 0);
    let x0 = Vector::zeros(inst.dim());

    let mut sg_ledger = QueryLedger::new();
    let budget = (16.0 * (inst.lipschitz() / eps).powi(2)).ceil() as usize;
    let cfg = BaselineConfig::new(budget).unwrap().with_target(eps);
    let sg = subgradient_run(&inst, &x0, 1.0, &cfg, &mut sg_ledger).unwrap();
    let sg_passes = sg_ledger.full_passes(n);

    // broo-sgd gets a third of the subgradient passes
    let allowed = sg_passes / 3.0;
    let opts = SolveOptions {
        max_queries: Some((allowed * n as f64).floor() as u64),
        ..SolveOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut ledger = QueryLedger::new();
    let (x, rep) = solve_max_loss_with(&inst, &x0, 1.0, eps, Method::BrooSgd, &opts, &mut rng, &mut ledger).unwrap();
    let gap = eval_fmax(&inst, &x, &mut QueryLedger::new()).unwrap();
    let pass = sg.reached_target && gap <= eps;
    report(
        10,
        "pass_count_advantage",
        pass,
        format!(
            "subgradient reached gap {:.4} in {sg_passes:.1} passes; broo-sgd with {allowed:.1} passes: gap {gap:.4}, {:.1} passes, {}",
            sg.best_value, rep.full_passes, rep.termination
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_11_hard_instance_gap_floor() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut lines = Vec::new();
    let mut total_bad = 0;
    for t in [4usize, 8] {
        for ell in [1.0, 16.0] {
            let inst = make_hard_instance(HardInstanceConfig::sample(t, t + 4, ell, Some(t + 8), rng.random()).unwrap())
                .unwrap();
            let tf = t as f64;
            let floor = (1.0 / (8.0 * tf.powf(1.5))).min(ell / (32.0 * tf.powi(3)));
            let (mut bad, mut sampled, mut lowest) = (0, 0, f64::INFINITY);
            while sampled < 1000 {
                let x = sample_low_progress(&mut rng, &inst);
                if inst.progress(&x) >= t {
                    continue;
                }
                sampled += 1;
                let f = inst.latent_fmax(&inst.latent(&x));
                lowest = lowest.min(f);
                bad += (f < floor) as usize;
            }
            total_bad += bad;
            let equal_spacing = link_psi((1.0 / tf.sqrt() - inst.alpha()) / (2.0 * tf), inst.alpha(), ell).unwrap();
            lines.push(format!(
                "T{t} ell{ell}: {bad}/1000 below {floor:.3e}, lowest {lowest:.3e}, equal-spacing infimum {equal_spacing:.3e}"
            ));
        }
    }
    let pass = total_bad == 0;
    report(11, "hard_instance_gap_floor", pass, lines.join("; "), start);
    assert!(pass);
}
