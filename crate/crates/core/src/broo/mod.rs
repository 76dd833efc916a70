//! Ball regularized optimization oracles.
//!
//! A BROO of radius `r` receives a center `c`, a regularization `lambda` and
//! an accuracy `delta` and returns `x` in `B_r(c)` with
//!
//! ```text
//! F(x) + lambda/2 |x - c|^2 <= min_{y in B_r(c)} F(y) + lambda/2 |y - c|^2 + lambda/2 delta^2,
//! ```
//!
//! where `F` is the softmax of the instance. Strong convexity turns the value
//! bound into `|x - prox| <= delta`.

mod exact;
mod katyusha;
mod project;
mod sgd;

pub use exact::{exact_broo, minimize_in_ball, ExactConfig, ExactOracle, ExactSolution};
pub use katyusha::{katyusha_broo, KatyushaConfig, KatyushaOracle, KatyushaParams};
pub use project::project_ball_intersection;
pub use sgd::{sgd_broo, sgd_budget, SgdConfig, SgdOracle};

use crate::error::{invalid, Result};
use crate::linalg::{is_finite, Vector};
use crate::problem::QueryLedger;

/// One oracle query.
#[derive(Debug, Clone, PartialEq)]
pub struct BrooRequest {
    pub center: Vector,
    pub radius: f64,
    pub lambda: f64,
    pub delta: f64,
    pub sigma: f64,
    /// Overrides the iteration budget of stochastic oracles.
    pub budget_cap: Option<usize>,
}

impl BrooRequest {
    pub fn new(center: Vector, radius: f64, lambda: f64, delta: f64, sigma: f64) -> Result<Self> {
        let req = Self {
            center,
            radius,
            lambda,
            delta,
            sigma,
            budget_cap: None,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn with_budget_cap(mut self, cap: usize) -> Self {
        self.budget_cap = Some(cap);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !is_finite(&self.center) {
            return Err(crate::error::Error::NonFinite("ball center"));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(invalid(format!("radius must be positive, got {}", self.radius)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(invalid(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(invalid(format!("sigma must lie in (0, 1), got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Oracle answer; `point` always lies in the request ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BrooResponse {
    pub point: Vector,
    pub iterations: usize,
    pub overflow_flagged: bool,
    /// The iteration count was cut by `budget_cap`.
    pub truncated: bool,
}

/// Anything that answers ball regularized queries on a fixed objective.
pub trait BallOracle {
    fn query(&mut self, req: &BrooRequest, ledger: &mut QueryLedger) -> Result<BrooResponse>;

    fn name(&self) -> &'static str;
}

impl<B: BallOracle + ?Sized> BallOracle for &mut B {
    fn query(&mut self, req: &BrooRequest, ledger: &mut QueryLedger) -> Result<BrooResponse> {
        (**self).query(req, ledger)
    }

    fn name(&self) -> &'static str {
        (**self).name()
    }
}

impl<B: BallOracle + ?Sized> BallOracle for Box<B> {
    fn query(&mut self, req: &BrooRequest, ledger: &mut QueryLedger) -> Result<BrooResponse> {
        (**self).query(req, ledger)
    }

    fn name(&self) -> &'static str {
        (**self).name()
    }
}
