//! Dense vector helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense column vector of 64-bit floats.
pub type Vector = DVector<f64>;
/// Dense matrix of 64-bit floats.
pub type Matrix = DMatrix<f64>;

pub fn zeros(d: usize) -> Vector {
    Vector::zeros(d)
}

pub fn is_finite(x: &Vector) -> bool {
    x.iter().all(|v| v.is_finite())
}

pub(crate) fn check_point(x: &Vector, d: usize, what: &'static str) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if !is_finite(x) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

/// Euclidean projection onto the closed ball `B_radius(center)`.
pub fn project_ball(x: &Vector, center: &Vector, radius: f64) -> Vector {
    let mut out = x.clone();
    project_ball_in_place(&mut out, center, radius);
    out
}

pub fn project_ball_in_place(x: &mut Vector, center: &Vector, radius: f64) {
    let dist = (&*x - center).norm();
    if dist > radius {
        let scale = radius / dist;
        for (xi, ci) in x.iter_mut().zip(center.iter()) {
            *xi = ci + (*xi - ci) * scale;
        }
    }
}

/// `y <- y + a * x`
#[inline]
pub fn axpy(y: &mut Vector, a: f64, x: &Vector) {
    y.axpy(a, x, 1.0);
}

pub fn dist(a: &Vector, b: &Vector) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn dist_sq(a: &Vector, b: &Vector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}
