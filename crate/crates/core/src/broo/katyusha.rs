use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{check_point, project_ball_in_place, Vector};
use crate::problem::{Problem, QueryLedger};
use crate::softmax::{make_ball_context, stability_constants, BallContext, SmoothingParams};

use super::{BallOracle, BrooRequest, BrooResponse};

/// Katyusha constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatyushaConfig {
    /// Inner epoch length as a multiple of `N`.
    pub epoch_mult: usize,
    /// Slack parameter `c` of the stability constant.
    pub stability_c: f64,
}

impl Default for KatyushaConfig {
    fn default() -> Self {
        Self {
            epoch_mult: 2,
            stability_c: 1.0,
        }
    }
}

/// Derived step sizes and epoch counts for one query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatyushaParams {
    /// Inner steps per epoch.
    pub m: usize,
    pub tau1: f64,
    pub tau2: f64,
    /// Step of the `z` sequence, `1 / (3 tau1 L)`.
    pub alpha: f64,
    /// Strong convexity `lambda / C`.
    pub mu: f64,
    /// Smoothness `C (L_g + lambda + L_f^2 / eps')`.
    pub smooth: f64,
    /// Number of expected-gap halvings.
    pub halvings: usize,
    /// Epochs needed per halving.
    pub epochs_per_halving: usize,
}

impl KatyushaParams {
    pub fn new<P: Problem + ?Sized>(
        inst: &P,
        params: &SmoothingParams,
        req: &BrooRequest,
        cfg: &KatyushaConfig,
    ) -> Result<Self> {
        let lg = inst
            .smoothness()
            .filter(|l| l.is_finite())
            .ok_or(Error::RequiresSmoothness { method: "katyusha_broo" })?;
        if req.lambda == 0.0 {
            return Err(invalid("stochastic oracles need lambda > 0; use exact_broo"));
        }
        let big_c = stability_constants(cfg.stability_c).big_c;
        let lip = inst.lipschitz();
        let lambda = req.lambda;
        let mu = lambda / big_c;
        let smooth = big_c * (lg + lambda + lip * lip / params.eps_prime);
        let m = (cfg.epoch_mult * inst.num_components()).max(1);
        let tau2 = 0.5;
        let tau1 = ((m as f64 * mu / (3.0 * smooth)).sqrt()).min(0.5);
        let alpha = 1.0 / (3.0 * tau1 * smooth);

        let gap_bound = big_c * lip * req.radius;
        let target = lambda * req.delta * req.delta / (6.0 * std::f64::consts::E.powi(2) * big_c);
        let halvings = (gap_bound / (target * req.sigma)).log2().ceil().max(1.0) as usize;
        let per_epoch = if m as f64 * mu / smooth <= 0.75 {
            (m as f64) * (alpha * mu).ln_1p()
        } else {
            1.5f64.ln()
        };
        let epochs_per_halving = (std::f64::consts::LN_2 / per_epoch).ceil().max(1.0) as usize;
        Ok(Self {
            m,
            tau1,
            tau2,
            alpha,
            mu,
            smooth,
            halvings,
            epochs_per_halving,
        })
    }

    pub fn epochs(&self) -> usize {
        self.halvings * self.epochs_per_halving
    }
}

struct Snapshot {
    point: Vector,
    full_grad: Vector,
    grads: Vec<Vector>,
    overflow: bool,
}

fn snapshot<P: Problem + ?Sized>(ctx: &BallContext, inst: &P, x: &Vector, ledger: &mut QueryLedger) -> Snapshot {
    let d = inst.dim();
    let mut full_grad = Vector::zeros(d);
    let mut grads = Vec::with_capacity(ctx.num_components());
    let mut overflow = false;
    for i in 0..ctx.num_components() {
        let mut g = Vector::zeros(d);
        let (_, o) = ctx.gamma_into(inst, i, x, &mut g, ledger);
        overflow |= o;
        full_grad.axpy(ctx.probs()[i], &g, 1.0);
        grads.push(g);
    }
    Snapshot {
        point: x.clone(),
        full_grad,
        grads,
        overflow,
    }
}

/// Runs `epochs` Katyusha epochs from the ball center and returns every
/// snapshot point, the first being the center.
pub(crate) fn katyusha_run<P: Problem + ?Sized, R: Rng + ?Sized>(
    inst: &P,
    ctx: &BallContext,
    req: &BrooRequest,
    kp: &KatyushaParams,
    epochs: usize,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> (Vec<Vector>, bool) {
    let d = inst.dim();
    let center = &req.center;
    let mut y = center.clone();
    let mut z = center.clone();
    let mut snap = snapshot(ctx, inst, center, ledger);
    let mut overflow = snap.overflow;
    let mut history = vec![center.clone()];
    let mut x = Vector::zeros(d);
    let mut g = Vector::zeros(d);
    let mut acc = Vector::zeros(d);
    let w_step = 1.0 + kp.alpha * kp.mu;
    let tau3 = 1.0 - kp.tau1 - kp.tau2;

    for _ in 0..epochs {
        acc.fill(0.0);
        let mut w = 1.0;
        let mut w_sum = 0.0;
        for _ in 0..kp.m {
            x.copy_from(&z);
            x *= kp.tau1;
            x.axpy(kp.tau2, &snap.point, 1.0);
            x.axpy(tau3, &y, 1.0);

            let i = ctx.sample(rng);
            let (_, o) = ctx.gamma_into(inst, i, &x, &mut g, ledger);
            overflow |= o;
            g -= &snap.grads[i];
            g += &snap.full_grad;

            z.axpy(-kp.alpha, &g, 1.0);
            project_ball_in_place(&mut z, center, req.radius);
            y.copy_from(&x);
            y.axpy(-1.0 / (3.0 * kp.smooth), &g, 1.0);
            project_ball_in_place(&mut y, center, req.radius);

            acc.axpy(w, &y, 1.0);
            w_sum += w;
            w *= w_step;
        }
        let next = &acc / w_sum;
        snap = snapshot(ctx, inst, &next, ledger);
        overflow |= snap.overflow;
        history.push(next);
    }
    (history, overflow)
}

/// Accelerated variance-reduced solver for the exponentiated softmax on the
/// request ball. Requires smooth components.
pub fn katyusha_broo<P: Problem + ?Sized, R: Rng + ?Sized>(
    inst: &P,
    params: &SmoothingParams,
    req: &BrooRequest,
    cfg: &KatyushaConfig,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<BrooResponse> {
    req.validate()?;
    check_point(&req.center, inst.dim(), "ball center")?;
    let kp = KatyushaParams::new(inst, params, req, cfg)?;
    let mut epochs = kp.epochs();
    let mut truncated = false;
    if let Some(cap) = req.budget_cap {
        let capped = cap / kp.m;
        if capped < epochs {
            log::debug!("epoch count {epochs} cut to {capped}");
            epochs = capped;
            truncated = true;
        }
    }
    let ctx = make_ball_context(inst, params, &req.center, req.lambda, ledger)?;
    let (mut history, overflow) = katyusha_run(inst, &ctx, req, &kp, epochs, rng, ledger);
    Ok(BrooResponse {
        point: history.pop().unwrap_or_else(|| req.center.clone()),
        iterations: epochs * kp.m,
        overflow_flagged: overflow,
        truncated,
    })
}

/// Katyusha behind the [`BallOracle`] interface, with its own RNG stream.
pub struct KatyushaOracle<'a, P: Problem + ?Sized, R: Rng = ChaCha8Rng> {
    inst: &'a P,
    params: SmoothingParams,
    cfg: KatyushaConfig,
    rng: R,
}

impl<'a, P: Problem + ?Sized, R: Rng> KatyushaOracle<'a, P, R> {
    pub fn new(inst: &'a P, params: SmoothingParams, cfg: KatyushaConfig, rng: R) -> Result<Self> {
        if inst.smoothness().filter(|l| l.is_finite()).is_none() {
            return Err(Error::RequiresSmoothness { method: "katyusha_broo" });
        }
        Ok(Self { inst, params, cfg, rng })
    }
}

impl<P: Problem + ?Sized, R: Rng> BallOracle for KatyushaOracle<'_, P, R> {
    fn query(&mut self, req: &BrooRequest, ledger: &mut QueryLedger) -> Result<BrooResponse> {
        katyusha_broo(self.inst, &self.params, req, &self.cfg, &mut self.rng, ledger)
    }

    fn name(&self) -> &'static str {
        "broo-katyusha"
    }
}
