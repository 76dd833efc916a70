//! Accelerated outer loop driving a ball oracle, and the end-to-end solver.
//!
//! Each outer iteration picks `lambda` by bisection so that the oracle step
//! from the coupled point `y_t` moves close to the full ball radius, then
//! updates the Monteiro-Svaiter sequences
//!
//! ```text
//! a = (1 + sqrt(1 + 4 lambda A)) / (2 lambda),   A' = A + a = a^2 lambda,
//! y = (A x + a v) / A',   x' = O(y),   v' = Proj_{B_R(x0)}(v - a lambda (y - x')).
//! ```

mod bisection;
mod outer;
mod pipeline;

pub use bisection::{lambda_bisection, BisectionOutcome, BisectionResult};
pub use outer::{accelerate, IterationRecord, SolverTrace, TerminationReason};
pub use outer::PotentialSample;
pub use pipeline::{max_outer_default, solve_max_loss, solve_max_loss_with, Method, SolveOptions, SolveReport};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Parameters of the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelConfig {
    /// Distance bound `R`.
    pub big_r: f64,
    /// Oracle ball radius `r`.
    pub r: f64,
    pub eps: f64,
    /// Lipschitz bound `L_f`.
    pub lip: f64,
    /// `2 L_f / r`
    pub lambda_max: f64,
    /// `eps / (6 r R)`
    pub lambda_min: f64,
    /// Oracle accuracy used inside the bisection, `r / 17`.
    pub bisection_delta: f64,
    pub max_outer: usize,
    /// Failure probability passed to every oracle query.
    pub sigma: f64,
    /// Optional cap on value plus gradient queries charged by the loop.
    pub max_queries: Option<u64>,
}

impl AccelConfig {
    pub fn new(big_r: f64, r: f64, eps: f64, lip: f64) -> Result<Self> {
        if !(r > 0.0 && r <= big_r) || !big_r.is_finite() {
            return Err(invalid(format!("need 0 < r <= R, got r = {r}, R = {big_r}")));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(invalid(format!("accuracy must be positive, got {eps}")));
        }
        if !(lip > 0.0) || !lip.is_finite() {
            return Err(invalid(format!("Lipschitz bound must be positive, got {lip}")));
        }
        let cfg = Self {
            big_r,
            r,
            eps,
            lip,
            lambda_max: 2.0 * lip / r,
            lambda_min: eps / (6.0 * r * big_r),
            bisection_delta: r / 17.0,
            max_outer: max_outer_default(big_r, r, eps, lip),
            sigma: 0.01,
            max_queries: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_max_outer(mut self, max_outer: usize) -> Self {
        self.max_outer = max_outer;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_max_queries(mut self, max_queries: Option<u64>) -> Self {
        self.max_queries = max_queries;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r <= self.big_r) {
            return Err(invalid("need 0 < r <= R"));
        }
        if !(self.lambda_min > 0.0 && self.lambda_min < self.lambda_max) {
            return Err(invalid(format!(
                "need 0 < lambda_min < lambda_max, got {} and {}",
                self.lambda_min, self.lambda_max
            )));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(invalid("sigma must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Oracle accuracy of the main step, `eps / (12 lambda R)`.
    pub fn step_delta(&self, lambda: f64) -> f64 {
        self.eps / (12.0 * lambda * self.big_r)
    }
}

/// `tau / (1 + tau + sqrt(1 + 2 tau))`.
pub fn alpha_tau(tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(invalid(format!("tau must be non-negative, got {tau}")));
    }
    if tau.is_infinite() {
        return Ok(1.0);
    }
    Ok(tau / (1.0 + tau + (1.0 + 2.0 * tau).sqrt()))
}

/// `(a', A')` with `a' = (1 + sqrt(1 + 4 lambda A)) / (2 lambda)` and `A' = A + a'`.
pub fn step_coefficients(lambda: f64, big_a: f64) -> Result<(f64, f64)> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(big_a >= 0.0) {
        return Err(invalid(format!("A must be non-negative, got {big_a}")));
    }
    let a = (1.0 + (1.0 + 4.0 * lambda * big_a).sqrt()) / (2.0 * lambda);
    Ok((a, big_a + a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_tau(0.0).unwrap(), 0.0);
        assert!((alpha_tau(4.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((alpha_tau(12.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(alpha_tau(-1.0).is_err());
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(step_coefficients(1.0, 0.0).unwrap(), (1.0, 1.0));
        assert_eq!(step_coefficients(1.0, 2.0).unwrap(), (2.0, 4.0));
        assert_eq!(step_coefficients(4.0, 3.0).unwrap(), (1.0, 4.0));
        assert!(step_coefficients(0.0, 1.0).is_err());
        assert!(step_coefficients(1.0, -1.0).is_err());
    }

    #[test]
    fn config() {
        let cfg = AccelConfig::new(1.0, 0.01, 0.05, 2.0).unwrap();
        assert_eq!(cfg.lambda_max, 400.0);
        assert!((cfg.lambda_min - 0.05 / 0.06).abs() < 1e-12);
        assert!((cfg.bisection_delta - 0.01 / 17.0).abs() < 1e-18);
        assert!(AccelConfig::new(1.0, 2.0, 0.05, 1.0).is_err());
        // lambda_min >= lambda_max when eps is huge
        assert!(AccelConfig::new(1.0, 1.0, 100.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn coupling_identity(lambda in 1e-4f64..1e4, a in 0.0f64..1e6) {
            let (an, big) = step_coefficients(lambda, a).unwrap();
            prop_assert!((big - (a + an)).abs() <= 1e-12 * big);
            prop_assert!((big - an * an * lambda).abs() <= 1e-12 * big);
        }

        #[test]
        fn alpha_is_monotone_in_unit_interval(t1 in 0.0f64..1e6, t2 in 0.0f64..1e6) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let (a, b) = (alpha_tau(lo).unwrap(), alpha_tau(hi).unwrap());
            prop_assert!((0.0..1.0).contains(&a) && (0.0..1.0).contains(&b));
            prop_assert!(a <= b);
        }

        #[test]
        fn alpha_matches_coupling_weights(lambda in 1e-3f64..1e3, big_a in 0.0f64..1e4) {
            let (_, next) = step_coefficients(lambda, big_a).unwrap();
            let alpha = alpha_tau(2.0 * big_a * lambda).unwrap();
            prop_assert!((alpha - big_a / next).abs() <= 1e-12);
        }
    }
}
