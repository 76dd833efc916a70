//! Softplus components `f_i(x) = ln(1 + exp(<a_i, x> + b_i))`, a smooth
//! random family for property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::linalg::Vector;
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq)]
pub struct SoftplusInstance {
    a: Vec<Vector>,
    b: Vec<f64>,
    lip: f64,
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl SoftplusInstance {
    pub fn new(a: Vec<Vector>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(invalid("softplus instance needs matching, non-empty slopes and offsets"));
        }
        let d = a[0].len();
        if d == 0 || a.iter().any(|ai| ai.len() != d) {
            return Err(invalid("slopes must share a positive dimension"));
        }
        let lip = a.iter().map(|ai| ai.norm()).fold(0.0, f64::max);
        if !(lip > 0.0) || !lip.is_finite() {
            return Err(invalid("slopes must be finite and not all zero"));
        }
        Ok(Self { a, b, lip })
    }

    /// Slopes uniform on the unit sphere scaled by `U[0.5, 1]`, offsets
    /// `N(0, 0.25)`.
    pub fn random(d: usize, n: usize, seed: u64) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(invalid("dimension and component count must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            let g = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let scale = rng.random_range(0.5..1.0) / g.norm().max(1e-300);
            a.push(g * scale);
            b.push(0.5 * rng.sample::<f64, _>(StandardNormal));
        }
        Self::new(a, b)
    }

    fn arg(&self, i: usize, x: &Vector) -> f64 {
        self.a[i].dot(x) + self.b[i]
    }
}

impl Problem for SoftplusInstance {
    fn dim(&self) -> usize {
        self.a[0].len()
    }

    fn num_components(&self) -> usize {
        self.a.len()
    }

    fn value(&self, i: usize, x: &Vector) -> f64 {
        softplus(self.arg(i, x))
    }

    fn subgradient(&self, i: usize, x: &Vector) -> Vector {
        &self.a[i] * sigmoid(self.arg(i, x))
    }

    fn value_and_subgradient_into(&self, i: usize, x: &Vector, grad: &mut Vector) -> f64 {
        let t = self.arg(i, x);
        grad.copy_from(&self.a[i]);
        *grad *= sigmoid(t);
        softplus(t)
    }

    fn lipschitz(&self) -> f64 {
        self.lip
    }

    fn smoothness(&self) -> Option<f64> {
        Some(0.25 * self.lip * self.lip)
    }
}
