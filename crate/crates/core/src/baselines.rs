//! Reference methods: projected subgradient descent on `F_max` and
//! Nesterov's accelerated gradient descent on the softmax.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{check_point, project_ball_in_place, Vector};
use crate::problem::{fmax_and_subgradient, Problem, QueryLedger};
use crate::softmax::{softmax_weights, SmoothingParams};

/// Step budget and optional early stop for a baseline run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// Number of steps; each step is one round of oracle queries.
    pub budget: usize,
    /// Stop as soon as an iterate has `F_max` at or below this value.
    pub target: Option<f64>,
}

impl BaselineConfig {
    pub fn new(budget: usize) -> Result<Self> {
        let cfg = Self { budget, target: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(invalid("baseline budget must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRun {
    /// Iterate with the lowest observed `F_max`.
    pub best: Vector,
    pub best_value: f64,
    /// Average of the iterates in the second half of the run (subgradient
    /// method only; equals `best` for AGD).
    pub suffix_average: Vector,
    pub steps: usize,
    /// Best observed `F_max` after each step.
    pub best_values: Vec<f64>,
    pub reached_target: bool,
}

fn check_radius(big_r: f64) -> Result<()> {
    if !(big_r > 0.0) || !big_r.is_finite() {
        return Err(invalid(format!("radius must be positive, got {big_r}")));
    }
    Ok(())
}

/// Projected subgradient method on `F_max` over `B_R(x0)` with steps
/// `R / (L_f sqrt(t))`. Returns the best iterate.
pub fn subgradient_method<P: Problem + ?Sized>(
    inst: &P,
    x0: &Vector,
    big_r: f64,
    budget: usize,
    ledger: &mut QueryLedger,
) -> Result<Vector> {
    subgradient_run(inst, x0, big_r, &BaselineConfig::new(budget)?, ledger).map(|r| r.best)
}

/// [`subgradient_method`] with the full run record. Each step charges `N`
/// values and one gradient.
pub fn subgradient_run<P: Problem + ?Sized>(
    inst: &P,
    x0: &Vector,
    big_r: f64,
    cfg: &BaselineConfig,
    ledger: &mut QueryLedger,
) -> Result<BaselineRun> {
    cfg.validate()?;
    check_radius(big_r)?;
    check_point(x0, inst.dim(), "initial point")?;
    let lip = inst.lipschitz();
    let suffix_start = cfg.budget / 2;
    let mut x = x0.clone();
    let mut best = x0.clone();
    let mut best_value = f64::INFINITY;
    let mut sum = Vector::zeros(inst.dim());
    let mut count = 0usize;
    let mut best_values = Vec::new();
    let mut reached = false;

    for t in 0..cfg.budget {
        let (value, g) = fmax_and_subgradient(inst, &x, ledger)?;
        if value < best_value {
            best_value = value;
            best.copy_from(&x);
        }
        best_values.push(best_value);
        if t >= suffix_start {
            sum += &x;
            count += 1;
        }
        if cfg.target.is_some_and(|target| best_value <= target) {
            reached = true;
            break;
        }
        let eta = big_r / (lip * ((t + 1) as f64).sqrt());
        x.axpy(-eta, &g, 1.0);
        project_ball_in_place(&mut x, x0, big_r);
    }
    let suffix_average = if count > 0 { sum / count as f64 } else { best.clone() };
    Ok(BaselineRun {
        best,
        best_value,
        suffix_average,
        steps: best_values.len(),
        best_values,
        reached_target: reached,
    })
}

/// Accelerated gradient descent on `F_smax` over `B_R(x0)` with constant step
/// `1 / (L_g + L_f^2 / eps')`. Returns the query point with the lowest
/// `F_max`.
pub fn agd_softmax<P: Problem + ?Sized>(
    inst: &P,
    params: &SmoothingParams,
    x0: &Vector,
    big_r: f64,
    budget: usize,
    ledger: &mut QueryLedger,
) -> Result<Vector> {
    agd_run(inst, params, x0, big_r, &BaselineConfig::new(budget)?, ledger).map(|r| r.best)
}

/// [`agd_softmax`] with the full run record. Each step charges `N` values
/// and `N` gradients.
pub fn agd_run<P: Problem + ?Sized>(
    inst: &P,
    params: &SmoothingParams,
    x0: &Vector,
    big_r: f64,
    cfg: &BaselineConfig,
    ledger: &mut QueryLedger,
) -> Result<BaselineRun> {
    cfg.validate()?;
    check_radius(big_r)?;
    check_point(x0, inst.dim(), "initial point")?;
    let smooth = match inst.smoothness() {
        Some(lg) if lg.is_finite() => lg,
        _ => return Err(Error::RequiresSmoothness { method: "agd_softmax" }),
    };
    let lip = inst.lipschitz();
    let step = 1.0 / (smooth + lip * lip / params.eps_prime);
    let n = inst.num_components();
    let mut values = vec![0.0; n];
    let mut grads = vec![Vector::zeros(inst.dim()); n];

    let mut x_prev = x0.clone();
    let mut x = x0.clone();
    let mut best = x0.clone();
    let mut best_value = f64::INFINITY;
    let mut best_values = Vec::new();
    let mut reached = false;

    for k in 0..cfg.budget {
        let momentum = k.saturating_sub(1) as f64 / (k + 2) as f64;
        let y = &x + (&x - &x_prev) * momentum;
        for i in 0..n {
            values[i] = ledger.value_and_subgradient_into(inst, i, &y, &mut grads[i]);
        }
        let fmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if fmax < best_value {
            best_value = fmax;
            best.copy_from(&y);
        }
        best_values.push(best_value);
        if cfg.target.is_some_and(|target| best_value <= target) {
            reached = true;
            break;
        }
        let w = softmax_weights(&values, params.eps_prime);
        let mut next = y;
        for (wi, gi) in w.iter().zip(&grads) {
            if *wi != 0.0 {
                next.axpy(-step * wi, gi, 1.0);
            }
        }
        project_ball_in_place(&mut next, x0, big_r);
        x_prev = std::mem::replace(&mut x, next);
    }
    Ok(BaselineRun {
        suffix_average: best.clone(),
        best,
        best_value,
        steps: best_values.len(),
        best_values,
        reached_target: reached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{eval_fmax, FnProblem};
    use crate::softmax::fsmax_with_grad;
    use proptest::prelude::*;

    fn abs1() -> FnProblem {
        FnProblem::new(1, 1, 1.0, None, |_, x| x[0].abs(), |_, x| Vector::from_element(1, x[0].signum()))
    }

    fn shifted_quadratic(target: [f64; 2]) -> FnProblem {
        let t = Vector::from_vec(target.to_vec());
        let t2 = t.clone();
        FnProblem::new(
            2,
            1,
            4.0,
            Some(1.0),
            move |_, x| 0.5 * (x - &t).norm_squared(),
            move |_, x| x - &t2,
        )
    }

    #[test]
    fn subgradient_on_absolute_value() {
        let mut ledger = QueryLedger::new();
        let x = subgradient_method(&abs1(), &Vector::from_element(1, 1.0), 1.0, 10_000, &mut ledger).unwrap();
        assert!(x[0].abs() <= 0.05, "{}", x[0]);
    }

    #[test]
    fn subgradient_accounting() {
        let inst = FnProblem::new(3, 5, 1.0, None, |i, x| x[i % 3] - i as f64, |i, _| {
            let mut g = Vector::zeros(3);
            g[i % 3] = 1.0;
            g
        });
        let mut ledger = QueryLedger::new();
        subgradient_method(&inst, &Vector::zeros(3), 1.0, 40, &mut ledger).unwrap();
        assert_eq!(ledger.value_queries, 40 * 5);
        assert_eq!(ledger.grad_queries, 40);
        assert!((ledger.full_passes(5) - 40.0 * 6.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn constant_instance_keeps_value() {
        let inst = FnProblem::new(2, 3, 1.0, Some(0.0), |_, _| 2.5, |_, _| Vector::zeros(2));
        let x0 = Vector::from_vec(vec![0.3, 0.1]);
        let mut ledger = QueryLedger::new();
        let x = subgradient_method(&inst, &x0, 1.0, 10, &mut ledger).unwrap();
        assert_eq!(eval_fmax(&inst, &x, &mut ledger).unwrap(), 2.5);
        let params = SmoothingParams::new(0.1, 3, 1.0).unwrap();
        let y = agd_softmax(&inst, &params, &x0, 1.0, 10, &mut ledger).unwrap();
        assert_eq!(eval_fmax(&inst, &y, &mut ledger).unwrap(), 2.5);
    }

    #[test]
    fn zero_budget_is_rejected() {
        assert!(BaselineConfig::new(0).is_err());
        let mut ledger = QueryLedger::new();
        assert!(subgradient_method(&abs1(), &Vector::zeros(1), 1.0, 0, &mut ledger).is_err());
    }

    #[test]
    fn target_stops_early() {
        let cfg = BaselineConfig::new(10_000).unwrap().with_target(0.1);
        let mut ledger = QueryLedger::new();
        let run = subgradient_run(&abs1(), &Vector::from_element(1, 1.0), 1.0, &cfg, &mut ledger).unwrap();
        assert!(run.reached_target);
        assert!(run.steps < 10_000);
        assert!(run.best_value <= 0.1);
        assert_eq!(ledger.value_queries, run.steps as u64);
    }

    #[test]
    fn agd_on_quadratic() {
        let inst = shifted_quadratic([0.3, -0.2]);
        let params = SmoothingParams::new(0.1, 1, 4.0).unwrap();
        let mut ledger = QueryLedger::new();
        let x = agd_softmax(&inst, &params, &Vector::zeros(2), 1.0, 200, &mut ledger).unwrap();
        // one component: the softmax equals f, so the minimizer is exact
        assert!(eval_fmax(&inst, &x, &mut QueryLedger::new()).unwrap() <= 1e-6);
        assert_eq!(ledger.value_queries, 200);
        assert_eq!(ledger.grad_queries, 200);
    }

    #[test]
    fn agd_needs_smoothness() {
        let params = SmoothingParams::new(0.1, 1, 1.0).unwrap();
        let mut ledger = QueryLedger::new();
        let r = agd_softmax(&abs1(), &params, &Vector::zeros(1), 1.0, 5, &mut ledger);
        assert!(matches!(r, Err(Error::RequiresSmoothness { .. })));
    }

    #[test]
    fn agd_charges_two_n_per_step() {
        let inst = FnProblem::new(2, 4, 2.0, Some(1.0), |i, x| 0.5 * x.norm_squared() + i as f64 * x[0], |i, x| {
            let mut g = x.clone();
            g[0] += i as f64;
            g
        });
        let params = SmoothingParams::new(0.1, 4, 4.0).unwrap();
        let mut ledger = QueryLedger::new();
        agd_softmax(&inst, &params, &Vector::from_vec(vec![0.2, 0.2]), 1.0, 7, &mut ledger).unwrap();
        assert_eq!(ledger.total(), 7 * 2 * 4);
    }

    #[test]
    fn softmax_gradient_matches_finite_differences() {
        let inst = FnProblem::new(
            2,
            3,
            3.0,
            Some(2.0),
            |i, x| (x[0] - i as f64 * 0.1).powi(2) + x[1] * (i as f64 - 1.0),
            |i, x| Vector::from_vec(vec![2.0 * (x[0] - i as f64 * 0.1), i as f64 - 1.0]),
        );
        let params = SmoothingParams::new(0.2, 3, 3.0).unwrap();
        let x = Vector::from_vec(vec![0.17, -0.4]);
        let mut ledger = QueryLedger::new();
        let (_, g) = fsmax_with_grad(&inst, &params, &x, &mut ledger).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut e = Vector::zeros(2);
            e[k] = h;
            let fp = crate::softmax::fsmax(&inst, &params, &(&x + &e), &mut ledger).unwrap();
            let fm = crate::softmax::fsmax(&inst, &params, &(&x - &e), &mut ledger).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0), "{fd} vs {}", g[k]);
        }
    }

    proptest! {
        #[test]
        fn best_values_are_monotone(seed in 0u64..50, start in -1.0f64..1.0) {
            let shift = seed as f64 * 0.01;
            let inst = FnProblem::new(1, 2, 1.0, Some(0.0),
                move |i, x| if i == 0 { x[0] - shift } else { shift - x[0] },
                |i, _| Vector::from_element(1, if i == 0 { 1.0 } else { -1.0 }));
            let x0 = Vector::from_element(1, start);
            let cfg = BaselineConfig::new(50).unwrap();
            let mut ledger = QueryLedger::new();
            let run = subgradient_run(&inst, &x0, 2.0, &cfg, &mut ledger).unwrap();
            prop_assert!(run.best_values.windows(2).all(|w| w[1] <= w[0]));
            let params = SmoothingParams::new(0.1, 2, 1.0).unwrap();
            let run = agd_run(&inst, &params, &x0, 2.0, &cfg, &mut ledger).unwrap();
            prop_assert!(run.best_values.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
