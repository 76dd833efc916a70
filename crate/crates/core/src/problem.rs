//! The finite max-of-losses problem `F_max(x) = max_i f_i(x)` and oracle
//! accounting.
//!
//! Components are accessed only through [`QueryLedger`], which charges one
//! unit per component value and one per component subgradient. The ledger is
//! always passed explicitly so that concurrent solves never share counters.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{check_point, Vector};

/// A collection of `N` convex, Lipschitz component functions on `R^d`.
///
/// Implementations must be pure: the same `(i, x)` always yields the same
/// value and subgradient.
pub trait Problem: Send + Sync {
    fn dim(&self) -> usize;

    fn num_components(&self) -> usize;

    /// `f_i(x)`.
    fn value(&self, i: usize, x: &Vector) -> f64;

    /// A subgradient of `f_i` at `x`.
    fn subgradient(&self, i: usize, x: &Vector) -> Vector;

    fn value_and_subgradient(&self, i: usize, x: &Vector) -> (f64, Vector) {
        (self.value(i, x), self.subgradient(i, x))
    }

    /// Writes a subgradient into `grad` and returns the value. Hot loops use
    /// this to avoid allocating.
    fn value_and_subgradient_into(&self, i: usize, x: &Vector, grad: &mut Vector) -> f64 {
        let (v, g) = self.value_and_subgradient(i, x);
        grad.copy_from(&g);
        v
    }

    /// Uniform Lipschitz bound `L_f` on every component.
    fn lipschitz(&self) -> f64;

    /// Gradient Lipschitz bound `L_g`, or `None` for non-smooth components.
    fn smoothness(&self) -> Option<f64>;

    /// Known bound `R` on the distance from the origin to a minimizer, if any.
    fn radius_bound(&self) -> Option<f64> {
        None
    }
}

impl<P: Problem + ?Sized> Problem for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn num_components(&self) -> usize {
        (**self).num_components()
    }
    fn value(&self, i: usize, x: &Vector) -> f64 {
        (**self).value(i, x)
    }
    fn subgradient(&self, i: usize, x: &Vector) -> Vector {
        (**self).subgradient(i, x)
    }
    fn value_and_subgradient(&self, i: usize, x: &Vector) -> (f64, Vector) {
        (**self).value_and_subgradient(i, x)
    }
    fn value_and_subgradient_into(&self, i: usize, x: &Vector, grad: &mut Vector) -> f64 {
        (**self).value_and_subgradient_into(i, x, grad)
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
    fn smoothness(&self) -> Option<f64> {
        (**self).smoothness()
    }
    fn radius_bound(&self) -> Option<f64> {
        (**self).radius_bound()
    }
}

impl<P: Problem + ?Sized> Problem for Arc<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn num_components(&self) -> usize {
        (**self).num_components()
    }
    fn value(&self, i: usize, x: &Vector) -> f64 {
        (**self).value(i, x)
    }
    fn subgradient(&self, i: usize, x: &Vector) -> Vector {
        (**self).subgradient(i, x)
    }
    fn value_and_subgradient(&self, i: usize, x: &Vector) -> (f64, Vector) {
        (**self).value_and_subgradient(i, x)
    }
    fn value_and_subgradient_into(&self, i: usize, x: &Vector, grad: &mut Vector) -> f64 {
        (**self).value_and_subgradient_into(i, x, grad)
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
    fn smoothness(&self) -> Option<f64> {
        (**self).smoothness()
    }
    fn radius_bound(&self) -> Option<f64> {
        (**self).radius_bound()
    }
}

/// Counts of component oracle queries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub value_queries: u64,
    pub grad_queries: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge_values(&mut self, n: u64) {
        self.value_queries += n;
    }

    pub fn charge_grads(&mut self, n: u64) {
        self.grad_queries += n;
    }

    pub fn total(&self) -> u64 {
        self.value_queries + self.grad_queries
    }

    /// Total queries measured in units of `n` (one full data pass).
    pub fn full_passes(&self, n: usize) -> f64 {
        self.total() as f64 / n as f64
    }

    /// Adds another ledger's counts into this one.
    pub fn merge(&mut self, other: &QueryLedger) {
        self.value_queries += other.value_queries;
        self.grad_queries += other.grad_queries;
    }

    /// Counts accumulated since `earlier`.
    pub fn since(&self, earlier: &QueryLedger) -> QueryLedger {
        QueryLedger {
            value_queries: self.value_queries - earlier.value_queries,
            grad_queries: self.grad_queries - earlier.grad_queries,
        }
    }

    pub fn value<P: Problem + ?Sized>(&mut self, inst: &P, i: usize, x: &Vector) -> f64 {
        self.value_queries += 1;
        inst.value(i, x)
    }

    pub fn subgradient<P: Problem + ?Sized>(&mut self, inst: &P, i: usize, x: &Vector) -> Vector {
        self.grad_queries += 1;
        inst.subgradient(i, x)
    }

    pub fn value_and_subgradient<P: Problem + ?Sized>(
        &mut self,
        inst: &P,
        i: usize,
        x: &Vector,
    ) -> (f64, Vector) {
        self.value_queries += 1;
        self.grad_queries += 1;
        inst.value_and_subgradient(i, x)
    }

    pub fn value_and_subgradient_into<P: Problem + ?Sized>(
        &mut self,
        inst: &P,
        i: usize,
        x: &Vector,
        grad: &mut Vector,
    ) -> f64 {
        self.value_queries += 1;
        self.grad_queries += 1;
        inst.value_and_subgradient_into(i, x, grad)
    }

    /// All `N` component values at `x`.
    pub fn all_values<P: Problem + ?Sized>(&mut self, inst: &P, x: &Vector) -> Vec<f64> {
        let n = inst.num_components();
        self.value_queries += n as u64;
        (0..n).map(|i| inst.value(i, x)).collect()
    }
}

impl fmt::Display for QueryLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} values, {} gradients", self.value_queries, self.grad_queries)
    }
}

/// `F_max(x) = max_i f_i(x)`; charges `N` value queries.
pub fn eval_fmax<P: Problem + ?Sized>(inst: &P, x: &Vector, ledger: &mut QueryLedger) -> Result<f64> {
    check_point(x, inst.dim(), "query point")?;
    Ok(ledger
        .all_values(inst, x)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Value of `F_max` and a subgradient from the lowest index attaining the
/// maximum. Charges `N` values and one gradient.
pub fn fmax_and_subgradient<P: Problem + ?Sized>(
    inst: &P,
    x: &Vector,
    ledger: &mut QueryLedger,
) -> Result<(f64, Vector)> {
    check_point(x, inst.dim(), "query point")?;
    let values = ledger.all_values(inst, x);
    let (best, value) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    Ok((value, ledger.subgradient(inst, best, x)))
}

/// A subgradient of `F_max` at `x` (see [`fmax_and_subgradient`]).
pub fn subgrad_fmax<P: Problem + ?Sized>(
    inst: &P,
    x: &Vector,
    ledger: &mut QueryLedger,
) -> Result<Vector> {
    fmax_and_subgradient(inst, x, ledger).map(|(_, g)| g)
}

type ValueFn = dyn Fn(usize, &Vector) -> f64 + Send + Sync;
type GradFn = dyn Fn(usize, &Vector) -> Vector + Send + Sync;

/// A problem defined by closures; handy for tests and ad-hoc experiments.
pub struct FnProblem {
    dim: usize,
    n: usize,
    lip: f64,
    smooth: Option<f64>,
    value: Box<ValueFn>,
    grad: Box<GradFn>,
}

impl FnProblem {
    pub fn new(
        dim: usize,
        n: usize,
        lip: f64,
        smooth: Option<f64>,
        value: impl Fn(usize, &Vector) -> f64 + Send + Sync + 'static,
        grad: impl Fn(usize, &Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            n,
            lip,
            smooth,
            value: Box::new(value),
            grad: Box::new(grad),
        }
    }
}

impl fmt::Debug for FnProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnProblem")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("lip", &self.lip)
            .field("smooth", &self.smooth)
            .finish_non_exhaustive()
    }
}

impl Problem for FnProblem {
    fn dim(&self) -> usize {
        self.dim
    }
    fn num_components(&self) -> usize {
        self.n
    }
    fn value(&self, i: usize, x: &Vector) -> f64 {
        (self.value)(i, x)
    }
    fn subgradient(&self, i: usize, x: &Vector) -> Vector {
        (self.grad)(i, x)
    }
    fn lipschitz(&self) -> f64 {
        self.lip
    }
    fn smoothness(&self) -> Option<f64> {
        self.smooth
    }
}
