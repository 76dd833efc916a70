//! Softmax smoothing of the maximum and the exponentiated softmax surrogate.
//!
//! With temperature `eps' = eps / (2 ln max(N, 2))` the softmax
//! `F_smax(x) = eps' ln sum_i exp(f_i(x) / eps')` lies within `[F_max, F_max + eps/2]`.
//! Around a ball center `c` with regularization `lambda`, the surrogate
//!
//! ```text
//! Gamma(x) = sum_i p_i(c) gamma_i(x),   gamma_i(x) = eps' exp((f_i^lambda(x) - f_i(c)) / eps')
//! ```
//!
//! equals `eps' exp((F_smax^lambda(x) - F_smax^lambda(c)) / eps')`, so sampling
//! `i ~ p(c)` and returning `grad gamma_i(x)` is an unbiased estimator of
//! `grad Gamma(x)`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{check_point, dist_sq, Vector};
use crate::problem::{Problem, QueryLedger};

/// Exponent arguments are clamped to `[-EXP_CLAMP, EXP_CLAMP]`.
pub const EXP_CLAMP: f64 = 50.0;

/// Temperature and ball radius derived from a target accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub eps: f64,
    /// `eps / (2 ln max(N, 2))`
    pub eps_prime: f64,
    /// `eps_prime / L_f`
    pub r_eps: f64,
}

impl SmoothingParams {
    pub fn new(eps: f64, n: usize, lip: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(invalid(format!("accuracy must be positive, got {eps}")));
        }
        if !(lip >= 0.0) {
            return Err(invalid(format!("Lipschitz bound must be non-negative, got {lip}")));
        }
        let eps_prime = eps / (2.0 * (n.max(2) as f64).ln());
        Ok(Self { eps, eps_prime, r_eps: eps_prime / lip })
    }

    pub fn for_problem<P: Problem + ?Sized>(eps: f64, inst: &P) -> Result<Self> {
        Self::new(eps, inst.num_components(), inst.lipschitz())
    }
}

/// Radius-slack constant `C = (1 + c + c^2) e^{c + c^2/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityConstants {
    pub c: f64,
    pub big_c: f64,
}

pub fn stability_constants(c: f64) -> StabilityConstants {
    StabilityConstants {
        c,
        big_c: (1.0 + c + c * c) * (c + 0.5 * c * c).exp(),
    }
}

impl Default for StabilityConstants {
    fn default() -> Self {
        stability_constants(1.0)
    }
}

/// `ln sum_i exp(v_i)`, evaluated with max subtraction.
pub fn log_sum_exp(vals: &[f64]) -> Result<f64> {
    if vals.is_empty() {
        return Err(Error::Empty("log_sum_exp of an empty sequence"));
    }
    Ok(lse_nonempty(vals))
}

fn lse_nonempty(vals: &[f64]) -> f64 {
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Softmax weights `exp(v_i / t) / sum_j exp(v_j / t)`.
pub fn softmax_weights(vals: &[f64], temperature: f64) -> Vec<f64> {
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = vals.iter().map(|v| ((v - m) / temperature).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

fn smax_of(values: &[f64], eps_prime: f64) -> f64 {
    let scaled: Vec<f64> = values.iter().map(|v| v / eps_prime).collect();
    eps_prime * lse_nonempty(&scaled)
}

/// `F_smax(x)`; charges `N` value queries.
pub fn fsmax<P: Problem + ?Sized>(
    inst: &P,
    params: &SmoothingParams,
    x: &Vector,
    ledger: &mut QueryLedger,
) -> Result<f64> {
    check_point(x, inst.dim(), "query point")?;
    let values = ledger.all_values(inst, x);
    Ok(smax_of(&values, params.eps_prime))
}

/// `F_smax(x)` and its gradient `sum_i p_i(x) grad f_i(x)`; charges `N`
/// values and `N` gradients.
pub fn fsmax_with_grad<P: Problem + ?Sized>(
    inst: &P,
    params: &SmoothingParams,
    x: &Vector,
    ledger: &mut QueryLedger,
) -> Result<(f64, Vector)> {
    check_point(x, inst.dim(), "query point")?;
    let n = inst.num_components();
    let mut values = Vec::with_capacity(n);
    let mut grads = Vec::with_capacity(n);
    for i in 0..n {
        let (v, g) = ledger.value_and_subgradient(inst, i, x);
        values.push(v);
        grads.push(g);
    }
    let w = softmax_weights(&values, params.eps_prime);
    let mut grad = Vector::zeros(inst.dim());
    for (wi, gi) in w.iter().zip(&grads) {
        if *wi != 0.0 {
            grad.axpy(*wi, gi, 1.0);
        }
    }
    Ok((smax_of(&values, params.eps_prime), grad))
}

/// Cached state for minimizing `Gamma` in a ball around `center`.
#[derive(Debug, Clone)]
pub struct BallContext {
    center: Vector,
    lambda: f64,
    eps_prime: f64,
    values: Vec<f64>,
    probs: Vec<f64>,
    /// `F_smax(center) / eps'`
    log_partition: f64,
    sampler: WeightedIndex<f64>,
}

/// Value and gradient of `gamma_i` or `Gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEval {
    pub value: f64,
    pub grad: Vector,
    /// Set when an exponent argument left `[-50, 50]` and was clamped.
    pub overflow: bool,
}

/// Evaluates `f_i(center)` for all components (one data pass) and caches
/// `p(center)`.
pub fn make_ball_context<P: Problem + ?Sized>(
    inst: &P,
    params: &SmoothingParams,
    center: &Vector,
    lambda: f64,
    ledger: &mut QueryLedger,
) -> Result<BallContext> {
    check_point(center, inst.dim(), "ball center")?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("regularization must be non-negative, got {lambda}")));
    }
    let values = ledger.all_values(inst, center);
    BallContext::from_values(center.clone(), lambda, params.eps_prime, values)
}

impl BallContext {
    /// Builds a context from precomputed center values (no queries charged).
    pub fn from_values(center: Vector, lambda: f64, eps_prime: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("ball context needs at least one component"));
        }
        let probs = softmax_weights(&values, eps_prime);
        let scaled: Vec<f64> = values.iter().map(|v| v / eps_prime).collect();
        let log_partition = lse_nonempty(&scaled);
        let sampler = WeightedIndex::new(&probs).map_err(|e| invalid(format!("bad softmax weights: {e}")))?;
        Ok(Self {
            center,
            lambda,
            eps_prime,
            values,
            probs,
            log_partition,
            sampler,
        })
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps_prime
    }

    pub fn num_components(&self) -> usize {
        self.values.len()
    }

    pub fn center_values(&self) -> &[f64] {
        &self.values
    }

    /// `p(center)`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `F_smax(center)`.
    pub fn center_fsmax(&self) -> f64 {
        self.eps_prime * self.log_partition
    }

    /// Returns a copy with a different regularization; the cached center
    /// values are reused.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    #[inline]
    fn exponent(&self, i: usize, fi: f64, sq_dist: f64) -> (f64, bool) {
        let arg = (fi - self.values[i] + 0.5 * self.lambda * sq_dist) / self.eps_prime;
        if arg > EXP_CLAMP {
            (EXP_CLAMP, true)
        } else if arg < -EXP_CLAMP {
            (-EXP_CLAMP, true)
        } else {
            (arg, false)
        }
    }

    /// `gamma_i(x)`, writing `grad gamma_i(x)` into `grad`. `scratch` must
    /// have the problem dimension. Charges one value and one gradient.
    pub fn gamma_into<P: Problem + ?Sized>(
        &self,
        inst: &P,
        i: usize,
        x: &Vector,
        grad: &mut Vector,
        ledger: &mut QueryLedger,
    ) -> (f64, bool) {
        let fi = ledger.value_and_subgradient_into(inst, i, x, grad);
        let sq = dist_sq(x, &self.center);
        let (arg, overflow) = self.exponent(i, fi, sq);
        let gamma = self.eps_prime * arg.exp();
        // grad = gamma / eps' * (grad f_i + lambda (x - c))
        let s = gamma / self.eps_prime;
        for ((g, xi), ci) in grad.iter_mut().zip(x.iter()).zip(self.center.iter()) {
            *g = s * (*g + self.lambda * (xi - ci));
        }
        (gamma, overflow)
    }

    /// `gamma_i(x)` without its gradient; charges one value query.
    pub fn gamma_value<P: Problem + ?Sized>(&self, inst: &P, i: usize, x: &Vector, ledger: &mut QueryLedger) -> (f64, bool) {
        let fi = ledger.value(inst, i, x);
        let (arg, overflow) = self.exponent(i, fi, dist_sq(x, &self.center));
        (self.eps_prime * arg.exp(), overflow)
    }

    /// `Gamma(x)` without gradient; charges `N` value queries.
    pub fn gamma_full_value<P: Problem + ?Sized>(&self, inst: &P, x: &Vector, ledger: &mut QueryLedger) -> (f64, bool) {
        let mut total = 0.0;
        let mut overflow = false;
        for i in 0..self.values.len() {
            if self.probs[i] == 0.0 {
                ledger.charge_values(1);
                continue;
            }
            let (g, o) = self.gamma_value(inst, i, x, ledger);
            total += self.probs[i] * g;
            overflow |= o;
        }
        (total, overflow)
    }

    /// Draws `i ~ p(center)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }
}

/// `gamma_i(x)` and its gradient.
pub fn gamma_value_grad<P: Problem + ?Sized>(
    ctx: &BallContext,
    inst: &P,
    i: usize,
    x: &Vector,
    ledger: &mut QueryLedger,
) -> Result<GammaEval> {
    check_point(x, inst.dim(), "query point")?;
    if i >= ctx.num_components() {
        return Err(invalid(format!("component index {i} out of range")));
    }
    let mut grad = Vector::zeros(inst.dim());
    let (value, overflow) = ctx.gamma_into(inst, i, x, &mut grad, ledger);
    Ok(GammaEval { value, grad, overflow })
}

/// `Gamma(x) = sum_i p_i(center) gamma_i(x)` and its gradient; charges `N`
/// values and `N` gradients.
pub fn gamma_full<P: Problem + ?Sized>(
    ctx: &BallContext,
    inst: &P,
    x: &Vector,
    ledger: &mut QueryLedger,
) -> Result<GammaEval> {
    check_point(x, inst.dim(), "query point")?;
    let d = inst.dim();
    let mut value = 0.0;
    let mut grad = Vector::zeros(d);
    let mut gi = Vector::zeros(d);
    let mut overflow = false;
    for i in 0..ctx.num_components() {
        let (g, o) = ctx.gamma_into(inst, i, x, &mut gi, ledger);
        let p = ctx.probs[i];
        value += p * g;
        grad.axpy(p, &gi, 1.0);
        overflow |= o;
    }
    Ok(GammaEval { value, grad, overflow })
}

/// Draws a component index from `p(center)`.
pub fn sample_component<R: Rng + ?Sized>(ctx: &BallContext, rng: &mut R) -> usize {
    ctx.sample(rng)
}

/// `F_smax^lambda(x) = F_smax(x) + lambda/2 |x - center|^2` and its gradient.
pub fn regularized_fsmax<P: Problem + ?Sized>(
    inst: &P,
    params: &SmoothingParams,
    center: &Vector,
    lambda: f64,
    x: &Vector,
    ledger: &mut QueryLedger,
) -> Result<(f64, Vector)> {
    let (v, mut g) = fsmax_with_grad(inst, params, x, ledger)?;
    let diff = x - center;
    g.axpy(lambda, &diff, 1.0);
    Ok((v + 0.5 * lambda * diff.norm_squared(), g))
}
