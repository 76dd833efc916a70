use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{check_point, Vector};
use crate::problem::{Problem, QueryLedger};
use crate::softmax::{make_ball_context, stability_constants, SmoothingParams};

use super::project::project_ball_intersection;
use super::{BallOracle, BrooRequest, BrooResponse};

/// Epoch-SGD constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    /// Multiplier of `L_f^2 / (lambda delta)^2 * ln(ln(L_f / (lambda delta)) / sigma)`.
    pub budget_mult: f64,
    /// Constant in the first-epoch domain size `D_1 = k G sqrt(ln(ln T / sigma)) / lambda`.
    pub domain_const: f64,
    /// Length of the first epoch.
    pub first_epoch: usize,
    /// Slack parameter `c` of the stability constant; `G = C(c) L_f`.
    pub stability_c: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            budget_mult: 4.0,
            domain_const: 1.0,
            first_epoch: 450,
            stability_c: 1.0,
        }
    }
}

/// Total step budget `T` for one query.
pub fn sgd_budget(lip: f64, lambda: f64, delta: f64, sigma: f64, mult: f64) -> usize {
    let q = lip / (lambda * delta);
    let inner = q.ln().max(1.0);
    let t = mult * q * q * (inner / sigma).ln();
    if t.is_finite() {
        t.ceil().max(0.0) as usize
    } else {
        usize::MAX
    }
}

/// Epoch-doubling projected SGD on the exponentiated softmax.
///
/// Draws `i ~ p(center)` and steps along `grad gamma_i`, projecting onto the
/// request ball intersected with a shrinking ball around the epoch anchor.
/// Returns the anchor of the epoch after the last completed one.
pub fn sgd_broo<P: Problem + ?Sized, R: Rng + ?Sized>(
    inst: &P,
    params: &SmoothingParams,
    req: &BrooRequest,
    cfg: &SgdConfig,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<BrooResponse> {
    req.validate()?;
    check_point(&req.center, inst.dim(), "ball center")?;
    if req.lambda == 0.0 {
        return Err(invalid("stochastic oracles need lambda > 0; use exact_broo"));
    }
    let lip = inst.lipschitz();
    let lambda = req.lambda;
    if lambda * req.radius > 4.0 * lip {
        log::warn!("lambda = {lambda} is outside the regime lambda <= 4 L_f / r");
    }
    if req.radius > params.r_eps * (1.0 + 1e-9) {
        log::warn!("ball radius {} exceeds r_eps = {}", req.radius, params.r_eps);
    }

    // at least one full first epoch, otherwise no step would be taken
    let mut budget = sgd_budget(lip, lambda, req.delta, req.sigma, cfg.budget_mult).max(cfg.first_epoch);
    let mut truncated = false;
    if let Some(cap) = req.budget_cap {
        if cap < budget {
            log::debug!("step budget {budget} cut to {cap}");
            budget = cap;
            truncated = true;
        }
    }

    let ctx = make_ball_context(inst, params, &req.center, lambda, ledger)?;
    let g = stability_constants(cfg.stability_c).big_c * lip;
    let log_t = (budget.max(3) as f64).ln();
    let mut domain = cfg.domain_const * g * (log_t / req.sigma).ln().max(1.0).sqrt() / lambda;
    let mut eta = 1.0 / (3.0 * lambda);
    let mut epoch_len = cfg.first_epoch.max(1);

    let center = &req.center;
    let mut anchor = center.clone();
    let mut x = anchor.clone();
    let mut grad = Vector::zeros(inst.dim());
    let mut sum = Vector::zeros(inst.dim());
    let mut used = 0usize;
    let mut overflow = false;

    while used.saturating_add(epoch_len) <= budget {
        sum.fill(0.0);
        x.copy_from(&anchor);
        for _ in 0..epoch_len {
            sum += &x;
            let i = ctx.sample(rng);
            let (_, o) = ctx.gamma_into(inst, i, &x, &mut grad, ledger);
            overflow |= o;
            x.axpy(-eta, &grad, 1.0);
            x = project_ball_intersection(&x, center, req.radius, &anchor, domain)?;
        }
        used += epoch_len;
        anchor = &sum / epoch_len as f64;
        epoch_len = epoch_len.saturating_mul(2);
        eta *= 0.5;
        domain /= std::f64::consts::SQRT_2;
    }

    Ok(BrooResponse {
        point: anchor,
        iterations: used,
        overflow_flagged: overflow,
        truncated,
    })
}

/// Epoch-SGD behind the [`BallOracle`] interface, with its own RNG stream.
pub struct SgdOracle<'a, P: Problem + ?Sized, R: Rng = ChaCha8Rng> {
    inst: &'a P,
    params: SmoothingParams,
    cfg: SgdConfig,
    rng: R,
}

impl<'a, P: Problem + ?Sized, R: Rng> SgdOracle<'a, P, R> {
    pub fn new(inst: &'a P, params: SmoothingParams, cfg: SgdConfig, rng: R) -> Self {
        Self { inst, params, cfg, rng }
    }
}

impl<P: Problem + ?Sized, R: Rng> BallOracle for SgdOracle<'_, P, R> {
    fn query(&mut self, req: &BrooRequest, ledger: &mut QueryLedger) -> Result<BrooResponse> {
        sgd_broo(self.inst, &self.params, req, &self.cfg, &mut self.rng, ledger)
    }

    fn name(&self) -> &'static str {
        "broo-sgd"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broo::exact_broo;
    use crate::linalg::dist;
    use crate::problem::FnProblem;
    use rand::SeedableRng;

    fn quadratic(mu: f64, d: usize) -> FnProblem {
        FnProblem::new(d, 1, 2.0 * mu, Some(mu), move |_, x| 0.5 * mu * x.norm_squared(), move |_, x| x * mu)
    }

    #[test]
    fn budget_shape() {
        let base = sgd_budget(1.0, 1.0, 0.1, 0.05, 4.0);
        assert!(base > 4 * 100);
        assert_eq!(sgd_budget(1.0, 1.0, 0.1, 0.05, 8.0), {
            let t = 8.0 * 100.0 * ((10f64.ln()) / 0.05).ln();
            t.ceil() as usize
        });
        assert!(sgd_budget(1.0, 0.5, 0.1, 0.05, 4.0) > 3 * base);
    }

    #[test]
    fn zero_lambda_is_rejected() {
        let inst = quadratic(1.0, 2);
        let params = SmoothingParams::new(0.1, 1, 1.0).unwrap();
        let req = BrooRequest::new(Vector::zeros(2), 0.05, 0.0, 0.01, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ledger = QueryLedger::new();
        assert!(sgd_broo(&inst, &params, &req, &SgdConfig::default(), &mut rng, &mut ledger).is_err());
    }

    #[test]
    fn tiny_budget_returns_center() {
        let inst = quadratic(1.0, 2);
        let params = SmoothingParams::new(0.1, 1, 2.0).unwrap();
        let c = Vector::from_vec(vec![0.3, 0.1]);
        let req = BrooRequest::new(c.clone(), params.r_eps, 10.0, 1.0, 0.05).unwrap().with_budget_cap(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ledger = QueryLedger::new();
        let resp = sgd_broo(&inst, &params, &req, &SgdConfig::default(), &mut rng, &mut ledger).unwrap();
        assert_eq!(resp.point, c);
        assert_eq!(resp.iterations, 0);
        assert_eq!(ledger.value_queries, 1);
    }

    #[test]
    fn quadratic_far_from_minimizer_matches_reference() {
        let mu = 1.0;
        let inst = quadratic(mu, 2);
        let params = SmoothingParams::new(0.1, 1, inst.lipschitz()).unwrap();
        let c = Vector::from_vec(vec![0.8, -0.6]);
        let lambda = inst.lipschitz() / params.r_eps;
        let delta = params.r_eps / 10.0;
        let req = BrooRequest::new(c.clone(), params.r_eps, lambda, delta, 0.05).unwrap();
        let mut ledger = QueryLedger::new();
        let reference = exact_broo(&inst, &params, &req, &mut ledger).unwrap();
        let mut hits = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let resp = sgd_broo(&inst, &params, &req, &SgdConfig::default(), &mut rng, &mut ledger).unwrap();
            assert!(dist(&resp.point, &c) <= req.radius + 1e-9);
            if dist(&resp.point, &reference.point) <= delta {
                hits += 1;
            }
        }
        assert!(hits >= 95, "{hits}");
    }
}
