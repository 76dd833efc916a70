use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::broo::{BallOracle, BrooRequest};
use crate::error::Result;
use crate::linalg::{dist, Vector};
use crate::problem::QueryLedger;

use super::{alpha_tau, AccelConfig};

/// Which exit of the bisection produced the returned `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BisectionOutcome {
    /// `lambda` fell below `lambda_min`; `2 lambda` is returned.
    SmallLambda,
    /// The lower end of the bracket already moved between `13r/16` and `15r/16`.
    Middle,
    /// Geometric-mean search inside the bracket.
    Search,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionResult {
    pub lambda: f64,
    pub outcome: BisectionOutcome,
    /// Oracle queries issued (cache hits are not counted).
    pub oracle_calls: usize,
    /// Every `lambda` handed to the oracle, in order.
    pub queried: Vec<f64>,
}

struct Probe<'a, B: ?Sized> {
    x: &'a Vector,
    v: &'a Vector,
    big_a: f64,
    cfg: &'a AccelConfig,
    broo: &'a mut B,
    cache: HashMap<u64, f64>,
    queried: Vec<f64>,
}

impl<B: BallOracle + ?Sized> Probe<'_, B> {
    fn y(&self, lambda: f64) -> Result<Vector> {
        let alpha = alpha_tau(2.0 * self.big_a * lambda)?;
        Ok(self.x * alpha + self.v * (1.0 - alpha))
    }

    /// Oracle displacement from `y_lambda`; overflow-flagged answers count as
    /// `+inf`.
    fn delta(&mut self, lambda: f64, ledger: &mut QueryLedger) -> Result<f64> {
        if let Some(&d) = self.cache.get(&lambda.to_bits()) {
            return Ok(d);
        }
        let y = self.y(lambda)?;
        let req = BrooRequest::new(y.clone(), self.cfg.r, lambda, self.cfg.bisection_delta, self.cfg.sigma)?;
        let resp = self.broo.query(&req, ledger)?;
        self.queried.push(lambda);
        let d = if resp.overflow_flagged {
            f64::INFINITY
        } else {
            dist(&resp.point, &y)
        };
        self.cache.insert(lambda.to_bits(), d);
        Ok(d)
    }
}

/// Finds `lambda` in `[lambda_min, lambda_max]` at which the oracle step from
/// `y_lambda = alpha_{2 A lambda} x + (1 - alpha_{2 A lambda}) v` moves between
/// `13r/16` and `15r/16`, or reports that `lambda` became small.
pub fn lambda_bisection<B: BallOracle + ?Sized>(
    x: &Vector,
    v: &Vector,
    big_a: f64,
    cfg: &AccelConfig,
    broo: &mut B,
    ledger: &mut QueryLedger,
) -> Result<BisectionResult> {
    let r = cfg.r;
    let (lo_band, hi_band) = (13.0 * r / 16.0, 15.0 * r / 16.0);
    let mut probe = Probe {
        x,
        v,
        big_a,
        cfg,
        broo,
        cache: HashMap::new(),
        queried: Vec::new(),
    };
    let finish = |probe: Probe<'_, B>, lambda, outcome| BisectionResult {
        lambda,
        outcome,
        oracle_calls: probe.queried.len(),
        queried: probe.queried,
    };

    let mut lambda = cfg.lambda_max;
    while lambda >= cfg.lambda_min && probe.delta(lambda, ledger)? <= lo_band {
        lambda /= 2.0;
    }
    if lambda <= cfg.lambda_min {
        return Ok(finish(probe, 2.0 * lambda, BisectionOutcome::SmallLambda));
    }

    let mut lam_u = 2.0 * lambda;
    let mut lam_l = lambda;
    let mut lam_m = (lam_u * lam_l).sqrt();
    if probe.delta(lam_l, ledger)? <= hi_band {
        return Ok(finish(probe, lam_l, BisectionOutcome::Middle));
    }
    loop {
        let dm = probe.delta(lam_m, ledger)?;
        let in_band = (lo_band..=hi_band).contains(&dm);
        let wide = (lam_u / lam_l).log2() >= r / (8.0 * (cfg.big_r + cfg.lip / lam_l));
        if in_band || !wide {
            break;
        }
        if dm < lo_band {
            lam_u = lam_m;
        } else {
            lam_l = lam_m;
        }
        lam_m = (lam_u * lam_l).sqrt();
    }
    Ok(finish(probe, lam_m, BisectionOutcome::Search))
}
