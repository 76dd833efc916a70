//! Randomly rotated and permuted chain instances.
//!
//! Component `j < T` of the latent instance is
//! `psi_{alpha_T, ell}((z_j - z_{j-1}) / 2)` with the constant anchor
//! `z_{-1} = 1/sqrt(T)`; components `j >= T` are identically zero. The
//! observed instance is `f~_i(x) = f_{pi^{-1}(i)}(U^T x)` for a `d x T` matrix
//! `U` with orthonormal columns and a permutation `pi` of the component
//! indices. The global minimum is `0`, attained at `U (1/sqrt(T), ...)`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::link::Link;
use crate::error::{invalid, Result};
use crate::linalg::{Matrix, Vector};
use crate::problem::Problem;

/// `alpha_T = 1 / (4 T^{3/2})`.
pub fn chain_alpha(t: usize) -> f64 {
    1.0 / (4.0 * (t as f64).powf(1.5))
}

/// Embedding dimension large enough for the rotation argument:
/// `T + ceil(2 / alpha_T^2 * ln(4 N T^2 / 0.01))`.
pub fn default_dim(t: usize, n: usize) -> usize {
    let alpha = chain_alpha(t);
    let tf = t as f64;
    let extra = (2.0 / (alpha * alpha)) * (4.0 * n as f64 * tf * tf / 0.01).ln();
    t + extra.ceil() as usize
}

/// `max { i >= 1 : |z_i| > alpha }` with 1-based coordinates, `0` if none.
pub fn prog_alpha(z: &Vector, alpha: f64) -> usize {
    z.iter()
        .rposition(|v| v.abs() > alpha)
        .map_or(0, |p| p + 1)
}

/// Draws a `d x t` matrix with orthonormal columns by orthonormalising a
/// Gaussian matrix, fixing signs so the triangular factor has a positive
/// diagonal. The result is distributed uniformly (Haar) over such matrices.
pub fn sample_orthogonal(d: usize, t: usize, seed: u64) -> Result<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_orthogonal_with(d, t, &mut rng)
}

fn sample_orthogonal_with(d: usize, t: usize, rng: &mut ChaCha8Rng) -> Result<Matrix> {
    if d < t {
        return Err(invalid(format!("embedding dimension {d} is smaller than chain length {t}")));
    }
    if t == 0 {
        return Err(invalid("chain length must be positive"));
    }
    let g = DMatrix::<f64>::from_fn(d, t, |_, _| rand::Rng::sample(rng, StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..t {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// Parameters of a rotated chain instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardInstanceConfig {
    /// Chain length `T`.
    pub t: usize,
    /// Number of components `N >= T`.
    pub n: usize,
    /// Link smoothness `ell`.
    pub ell: f64,
    /// Flat-region half-width, `1 / (4 T^{3/2})`.
    pub alpha: f64,
    /// Embedding dimension.
    pub d: usize,
    /// `d x T` matrix with orthonormal columns.
    #[serde(skip)]
    pub u: Matrix,
    /// Permutation of component indices: latent component `j` is exposed as
    /// index `perm[j]`.
    pub perm: Vec<usize>,
    pub seed: u64,
}

impl HardInstanceConfig {
    /// Random rotation and permutation drawn from `seed`. The embedding
    /// dimension is [`default_dim`] capped at `d_cap` (never below `T`).
    pub fn sample(t: usize, n: usize, ell: f64, d_cap: Option<usize>, seed: u64) -> Result<Self> {
        if t == 0 || t > n {
            return Err(invalid(format!("chain length T = {t} must satisfy 1 <= T <= N = {n}")));
        }
        let mut d = default_dim(t, n);
        if let Some(cap) = d_cap {
            d = d.min(cap.max(t));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = sample_orthogonal_with(d, t, &mut rng)?;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        Ok(Self { t, n, ell, alpha: chain_alpha(t), d, u, perm, seed })
    }

    /// Identity rotation (`d = T`) and identity permutation.
    pub fn unrotated(t: usize, n: usize, ell: f64) -> Self {
        Self {
            t,
            n,
            ell,
            alpha: chain_alpha(t),
            d: t,
            u: Matrix::identity(t, t),
            perm: (0..n).collect(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.t > self.n {
            return Err(invalid(format!(
                "chain length T = {} must satisfy 1 <= T <= N = {}",
                self.t, self.n
            )));
        }
        if self.d < self.t || self.u.nrows() != self.d || self.u.ncols() != self.t {
            return Err(invalid("rotation must be d x T with d >= T"));
        }
        if self.alpha != chain_alpha(self.t) {
            return Err(invalid("alpha must equal 1 / (4 T^{3/2})"));
        }
        let mut seen = vec![false; self.n];
        if self.perm.len() != self.n {
            return Err(invalid("permutation length must equal N"));
        }
        for &p in &self.perm {
            if p >= self.n || seen[p] {
                return Err(invalid("perm is not a bijection on [N]"));
            }
            seen[p] = true;
        }
        let gram = self.u.transpose() * &self.u;
        if (gram - Matrix::identity(self.t, self.t)).amax() > 1e-10 {
            return Err(invalid("rotation columns are not orthonormal"));
        }
        Ok(())
    }
}

/// The rotated, permuted chain instance.
#[derive(Debug, Clone)]
pub struct HardInstance {
    cfg: HardInstanceConfig,
    link: Link,
    /// latent index of each exposed component
    latent_of: Vec<usize>,
    anchor: f64,
}

pub fn make_hard_instance(cfg: HardInstanceConfig) -> Result<HardInstance> {
    cfg.validate()?;
    let link = Link::new(cfg.alpha, cfg.ell)?;
    let mut latent_of = vec![0; cfg.n];
    for (j, &i) in cfg.perm.iter().enumerate() {
        latent_of[i] = j;
    }
    let anchor = 1.0 / (cfg.t as f64).sqrt();
    Ok(HardInstance { cfg, link, latent_of, anchor })
}

impl HardInstance {
    pub fn config(&self) -> &HardInstanceConfig {
        &self.cfg
    }

    pub fn chain_len(&self) -> usize {
        self.cfg.t
    }

    pub fn alpha(&self) -> f64 {
        self.cfg.alpha
    }

    pub fn link(&self) -> Link {
        self.link
    }

    /// `U^T x`.
    pub fn latent(&self, x: &Vector) -> Vector {
        self.cfg.u.tr_mul(x)
    }

    /// The global minimiser `U (1/sqrt(T), ..., 1/sqrt(T))`, of unit norm.
    pub fn minimizer(&self) -> Vector {
        &self.cfg.u * Vector::from_element(self.cfg.t, self.anchor)
    }

    /// `prog_alpha(U^T x)`.
    pub fn progress(&self, x: &Vector) -> usize {
        prog_alpha(&self.latent(x), self.cfg.alpha)
    }

    /// Latent objective `max_j f^_j(z)` evaluated directly in `R^T`.
    pub fn latent_fmax(&self, z: &Vector) -> f64 {
        let mut best: f64 = if self.cfg.n > self.cfg.t { 0.0 } else { f64::NEG_INFINITY };
        for j in 0..self.cfg.t {
            best = best.max(self.latent_value(j, z));
        }
        best
    }

    /// Latent component `f^_j(z)` (0-based `j`).
    pub fn latent_value(&self, j: usize, z: &Vector) -> f64 {
        if j >= self.cfg.t {
            return 0.0;
        }
        let prev = if j == 0 { self.anchor } else { z[j - 1] };
        self.link.value((z[j] - prev) / 2.0)
    }

    #[inline]
    fn coord(&self, j: usize, x: &Vector) -> f64 {
        self.cfg.u.column(j).dot(x)
    }

    #[inline]
    fn link_arg(&self, j: usize, x: &Vector) -> f64 {
        let prev = if j == 0 { self.anchor } else { self.coord(j - 1, x) };
        (self.coord(j, x) - prev) / 2.0
    }
}

impl Problem for HardInstance {
    fn dim(&self) -> usize {
        self.cfg.d
    }

    fn num_components(&self) -> usize {
        self.cfg.n
    }

    fn value(&self, i: usize, x: &Vector) -> f64 {
        let j = self.latent_of[i];
        if j >= self.cfg.t {
            return 0.0;
        }
        self.link.value(self.link_arg(j, x))
    }

    fn subgradient(&self, i: usize, x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.cfg.d);
        self.value_and_subgradient_into(i, x, &mut g);
        g
    }

    fn value_and_subgradient(&self, i: usize, x: &Vector) -> (f64, Vector) {
        let mut g = Vector::zeros(self.cfg.d);
        let v = self.value_and_subgradient_into(i, x, &mut g);
        (v, g)
    }

    fn value_and_subgradient_into(&self, i: usize, x: &Vector, grad: &mut Vector) -> f64 {
        grad.fill(0.0);
        let j = self.latent_of[i];
        if j >= self.cfg.t {
            return 0.0;
        }
        let (v, dv) = self.link.eval(self.link_arg(j, x));
        if dv != 0.0 {
            grad.axpy(dv / 2.0, &self.cfg.u.column(j), 1.0);
            if j > 0 {
                grad.axpy(-dv / 2.0, &self.cfg.u.column(j - 1), 1.0);
            }
        }
        v
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.cfg.ell)
    }

    fn radius_bound(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Per-query progress values `prog_alpha(U^T x_t)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProgressReport {
    pub chain_len: usize,
    pub values: Vec<usize>,
}

impl ProgressReport {
    pub fn from_points<'a>(inst: &HardInstance, points: impl IntoIterator<Item = &'a Vector>) -> Self {
        Self {
            chain_len: inst.chain_len(),
            values: points.into_iter().map(|x| inst.progress(x)).collect(),
        }
    }

    pub fn max(&self) -> usize {
        self.values.iter().copied().max().unwrap_or(0)
    }
}
