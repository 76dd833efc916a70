//! The Huber-of-hinge link function used by the chain instances.

use crate::error::{invalid, Result};

/// `psi_{alpha,ell}(t)` and its derivative.
///
/// Flat on `|t| <= alpha`, quadratic with curvature `ell` up to
/// `|t| = alpha + 1/ell`, linear with slope one beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    alpha: f64,
    ell: f64,
}

impl Link {
    pub fn new(alpha: f64, ell: f64) -> Result<Self> {
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(invalid(format!("link smoothness must be positive, got {ell}")));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(invalid(format!("link threshold must be non-negative, got {alpha}")));
        }
        Ok(Self { alpha, ell })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// Returns `(psi(t), psi'(t))`.
    #[inline]
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let a = t.abs();
        let s = if t < 0.0 { -1.0 } else { 1.0 };
        if a <= self.alpha {
            (0.0, 0.0)
        } else if a <= self.alpha + 1.0 / self.ell {
            let u = a - self.alpha;
            (0.5 * self.ell * u * u, s * self.ell * u)
        } else {
            (a - self.alpha - 0.5 / self.ell, s)
        }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        self.eval(t).1
    }
}

/// `psi_{alpha,ell}(t)`.
pub fn link_psi(t: f64, alpha: f64, ell: f64) -> Result<f64> {
    Ok(Link::new(alpha, ell)?.value(t))
}
