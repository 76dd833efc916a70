use crate::error::{Error, Result};
use crate::linalg::{check_point, dist, project_ball, Vector};
use crate::problem::{Problem, QueryLedger};
use crate::softmax::{fsmax_with_grad, SmoothingParams};

use super::{BallOracle, BrooRequest, BrooResponse};

/// Largest instance the reference solver accepts.
pub const EXACT_MAX_DIM: usize = 50;
pub const EXACT_MAX_COMPONENTS: usize = 200;

const STALL_ITERS: usize = 200;

/// Stopping rule for the reference solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactConfig {
    /// Certified objective gap at termination.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200_000,
        }
    }
}

/// Minimizer of the regularized objective over the ball together with its value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub point: Vector,
    /// `F(x) + lambda/2 |x - c|^2` at `point`.
    pub value: f64,
    pub iterations: usize,
    /// Upper bound on the remaining gap; `None` when the solver stopped at a kink.
    pub certified_gap: Option<f64>,
}

/// Minimizes `phi(x) + lambda/2 |x - center|^2` over `B_radius(center)`, where
/// `phi` returns a value and a (sub)gradient.
///
/// Runs accelerated projected gradient with backtracking and gradient-based
/// restarts. The gradient mapping `G` certifies the gap through
/// `min(|G|^2 / (2 lambda), |G| (radius + |y - center|))`. When backtracking
/// cannot make progress (a kink of a nonsmooth `phi`) the best point so far is
/// returned without a certificate; the same happens after 200 iterations
/// without decrease.
pub fn minimize_in_ball<F>(
    mut phi: F,
    center: &Vector,
    radius: f64,
    lambda: f64,
    start: &Vector,
    lip_guess: f64,
    cfg: &ExactConfig,
) -> Result<ExactSolution>
where
    F: FnMut(&Vector) -> (f64, Vector),
{
    let mut obj = |x: &Vector| {
        let (v, mut g) = phi(x);
        let diff = x - center;
        g.axpy(lambda, &diff, 1.0);
        (v + 0.5 * lambda * diff.norm_squared(), g)
    };
    let proj = |x: &Vector| project_ball(x, center, radius);

    let mut x = proj(start);
    let (mut fx, gx) = obj(&x);
    let mut y = x.clone();
    let (mut fy, mut gy) = (fx, gx);
    let mut t = 1.0f64;
    let mut lip = lip_guess.max(lambda).max(1e-8);
    let (mut best, mut best_val) = (x.clone(), fx);
    let mut since_improvement = 0usize;

    for it in 1..=cfg.max_iter {
        let mut grew = false;
        let (xn, fxn, gxn) = loop {
            let xn = proj(&(&y - &gy / lip));
            let (fxn, gxn) = obj(&xn);
            let d = &xn - &y;
            let model = fy + gy.dot(&d) + 0.5 * lip * d.norm_squared();
            if fxn <= model + 1e-15 * (1.0 + fy.abs()) {
                break (xn, fxn, gxn);
            }
            lip *= 2.0;
            grew = true;
            if lip > 1e30 || d.norm() <= 1e-15 * (1.0 + y.norm()) {
                log::debug!("ball solver stalled at iteration {it}");
                let (p, v) = if fxn < best_val { (xn, fxn) } else { (best, best_val) };
                return Ok(ExactSolution {
                    point: p,
                    value: v,
                    iterations: it,
                    certified_gap: None,
                });
            }
        };
        if fxn < best_val - 1e-15 * (1.0 + best_val.abs()) {
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if fxn < best_val {
            best = xn.clone();
            best_val = fxn;
        }

        let gmap = (&y - &xn) * lip;
        let gnorm = gmap.norm();
        let mut gap = gnorm * (radius + dist(&y, center));
        if lambda > 0.0 {
            gap = gap.min(gnorm * gnorm / (2.0 * lambda));
        }
        if gap <= cfg.tol {
            return Ok(ExactSolution {
                point: xn,
                value: fxn,
                iterations: it,
                certified_gap: Some(gap),
            });
        }

        if since_improvement >= STALL_ITERS {
            log::debug!("ball solver made no progress for {STALL_ITERS} iterations");
            return Ok(ExactSolution {
                point: best,
                value: best_val,
                iterations: it,
                certified_gap: None,
            });
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if (&y - &xn).dot(&(&xn - &x)) > 0.0 || fxn > fx {
            t = 1.0;
            y = xn.clone();
            fy = fxn;
            gy = gxn;
        } else {
            y = &xn + (&xn - &x) * ((t - 1.0) / t_next);
            t = t_next;
            (fy, gy) = obj(&y);
        }
        x = xn;
        fx = fxn;
        if !grew {
            lip = (lip * 0.9).max(lambda).max(1e-8);
        }
    }
    Err(Error::BudgetExhausted {
        iterations: cfg.max_iter,
    })
}

/// Reference BROO: minimizes `F_smax(x) + lambda/2 |x - c|^2` over the ball to
/// objective tolerance `1e-12`. Limited to `d <= 50`, `N <= 200`.
pub fn exact_broo<P: Problem + ?Sized>(
    inst: &P,
    params: &SmoothingParams,
    req: &BrooRequest,
    ledger: &mut QueryLedger,
) -> Result<ExactSolution> {
    exact_broo_with(inst, params, req, &ExactConfig::default(), ledger)
}

pub(crate) fn exact_broo_with<P: Problem + ?Sized>(
    inst: &P,
    params: &SmoothingParams,
    req: &BrooRequest,
    cfg: &ExactConfig,
    ledger: &mut QueryLedger,
) -> Result<ExactSolution> {
    let (d, n) = (inst.dim(), inst.num_components());
    if d > EXACT_MAX_DIM || n > EXACT_MAX_COMPONENTS {
        return Err(Error::TooLarge { d, n });
    }
    req.validate()?;
    check_point(&req.center, d, "ball center")?;
    let lip_guess = match inst.smoothness() {
        Some(lg) => lg + inst.lipschitz().powi(2) / params.eps_prime,
        None => 1.0,
    };
    let mut failure = None;
    let sol = minimize_in_ball(
        |x| match fsmax_with_grad(inst, params, x, ledger) {
            Ok(vg) => vg,
            Err(e) => {
                failure.get_or_insert(e);
                (f64::NAN, Vector::zeros(d))
            }
        },
        &req.center,
        req.radius,
        req.lambda,
        &req.center,
        lip_guess,
        cfg,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(sol),
    }
}

/// The reference solver behind the [`BallOracle`] interface.
pub struct ExactOracle<'a, P: Problem + ?Sized> {
    inst: &'a P,
    params: SmoothingParams,
    cfg: ExactConfig,
}

impl<'a, P: Problem + ?Sized> ExactOracle<'a, P> {
    pub fn new(inst: &'a P, params: SmoothingParams) -> Self {
        Self {
            inst,
            params,
            cfg: ExactConfig::default(),
        }
    }

    pub fn with_config(mut self, cfg: ExactConfig) -> Self {
        self.cfg = cfg;
        self
    }

    pub fn solve(&self, req: &BrooRequest, ledger: &mut QueryLedger) -> Result<ExactSolution> {
        exact_broo_with(self.inst, &self.params, req, &self.cfg, ledger)
    }
}

impl<P: Problem + ?Sized> BallOracle for ExactOracle<'_, P> {
    fn query(&mut self, req: &BrooRequest, ledger: &mut QueryLedger) -> Result<BrooResponse> {
        let sol = self.solve(req, ledger)?;
        Ok(BrooResponse {
            point: sol.point,
            iterations: sol.iterations,
            overflow_flagged: false,
            truncated: false,
        })
    }

    fn name(&self) -> &'static str {
        "exact"
    }
}
