//! Block-diagonal copies of a single smooth function, used to stress the
//! baselines in benchmarks.

use std::sync::Arc;

use super::hard::chain_alpha;
use super::link::Link;
use crate::error::{invalid, Result};
use crate::linalg::Vector;
use crate::problem::Problem;

/// Averaged smooth chain `f(z) = (1/T) sum_j psi((z_j - z_{j-1}) / 2)` with
/// anchor `z_{-1} = 1/sqrt(T)`. One component, 1-Lipschitz, minimum 0.
#[derive(Debug, Clone)]
pub struct ChainSum {
    t: usize,
    link: Link,
}

impl ChainSum {
    pub fn new(t: usize, ell: f64) -> Result<Self> {
        if t == 0 {
            return Err(invalid("chain length must be positive"));
        }
        Ok(Self { t, link: Link::new(chain_alpha(t), ell)? })
    }
}

impl Problem for ChainSum {
    fn dim(&self) -> usize {
        self.t
    }
    fn num_components(&self) -> usize {
        1
    }
    fn value(&self, _i: usize, z: &Vector) -> f64 {
        let anchor = 1.0 / (self.t as f64).sqrt();
        let mut prev = anchor;
        let mut total = 0.0;
        for j in 0..self.t {
            total += self.link.value((z[j] - prev) / 2.0);
            prev = z[j];
        }
        total / self.t as f64
    }
    fn subgradient(&self, _i: usize, z: &Vector) -> Vector {
        let anchor = 1.0 / (self.t as f64).sqrt();
        let mut g = Vector::zeros(self.t);
        let mut prev = anchor;
        let scale = 0.5 / self.t as f64;
        for j in 0..self.t {
            let dv = self.link.derivative((z[j] - prev) / 2.0);
            g[j] += scale * dv;
            if j > 0 {
                g[j - 1] -= scale * dv;
            }
            prev = z[j];
        }
        g
    }
    fn lipschitz(&self) -> f64 {
        1.0
    }
    fn smoothness(&self) -> Option<f64> {
        Some(self.link.ell())
    }
}

/// `N` copies of a one-component base function on disjoint coordinate
/// blocks: `f_i(x) = base(x[i*k .. (i+1)*k])`.
#[derive(Clone)]
pub struct DuplicatedInstance {
    base: Arc<dyn Problem>,
    block: usize,
    n: usize,
}

impl std::fmt::Debug for DuplicatedInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DuplicatedInstance")
            .field("block", &self.block)
            .field("n", &self.n)
            .finish()
    }
}

pub fn make_duplicated_instance(base: Arc<dyn Problem>, n: usize) -> Result<DuplicatedInstance> {
    if base.num_components() != 1 {
        return Err(invalid("duplicated instances need a single-component base"));
    }
    if n == 0 {
        return Err(invalid("need at least one copy"));
    }
    let block = base.dim();
    Ok(DuplicatedInstance { base, block, n })
}

impl DuplicatedInstance {
    pub fn block_dim(&self) -> usize {
        self.block
    }

    pub fn block_of(&self, i: usize, x: &Vector) -> Vector {
        x.rows(i * self.block, self.block).into_owned()
    }
}

impl Problem for DuplicatedInstance {
    fn dim(&self) -> usize {
        self.block * self.n
    }
    fn num_components(&self) -> usize {
        self.n
    }
    fn value(&self, i: usize, x: &Vector) -> f64 {
        self.base.value(0, &self.block_of(i, x))
    }
    fn subgradient(&self, i: usize, x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim());
        g.rows_mut(i * self.block, self.block)
            .copy_from(&self.base.subgradient(0, &self.block_of(i, x)));
        g
    }
    fn lipschitz(&self) -> f64 {
        self.base.lipschitz()
    }
    fn smoothness(&self) -> Option<f64> {
        self.base.smoothness()
    }
    fn radius_bound(&self) -> Option<f64> {
        self.base.radius_bound().map(|r| r * (self.n as f64).sqrt())
    }
}
