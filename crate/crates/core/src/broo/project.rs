use crate::error::{Error, Result};
use crate::linalg::{dist, project_ball, Vector};

const TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 10_000;

fn inside(x: &Vector, c: &Vector, r: f64) -> bool {
    dist(x, c) <= r * (1.0 + TOL) + TOL
}

/// Euclidean projection onto `B_{r1}(c1) ∩ B_{r2}(c2)`.
///
/// Radial projection is used when a single constraint is active; otherwise
/// Dykstra's alternating scheme runs to a `1e-12` step tolerance. The result
/// is returned exactly inside the first ball.
pub fn project_ball_intersection(x: &Vector, c1: &Vector, r1: f64, c2: &Vector, r2: f64) -> Result<Vector> {
    let (in1, in2) = (inside(x, c1, r1), inside(x, c2, r2));
    if in1 && in2 {
        return Ok(x.clone());
    }
    if dist(c1, c2) > r1 + r2 {
        return Err(Error::EmptyIntersection);
    }
    if !in1 {
        let p = project_ball(x, c1, r1);
        if inside(&p, c2, r2) {
            return Ok(p);
        }
    }
    if !in2 {
        let p = project_ball(x, c2, r2);
        if inside(&p, c1, r1) {
            return Ok(p);
        }
    }

    let mut y = x.clone();
    let mut p = Vector::zeros(x.len());
    let mut q = Vector::zeros(x.len());
    for _ in 0..MAX_SWEEPS {
        let a = project_ball(&(&y + &p), c1, r1);
        p += &y - &a;
        let b = project_ball(&(&a + &q), c2, r2);
        q += &a - &b;
        let step = dist(&b, &y);
        y = b;
        if step <= TOL * (1.0 + y.norm()) {
            return Ok(project_ball(&y, c1, r1));
        }
    }
    if dist(&y, c1) <= r1 + 1e-9 && dist(&y, c2) <= r2 + 1e-9 {
        log::warn!("ball intersection projection stopped after {MAX_SWEEPS} sweeps");
        Ok(project_ball(&y, c1, r1))
    } else {
        Err(Error::EmptyIntersection)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn inside_both_is_unchanged() {
        let x = v(&[0.2, 0.1]);
        let p = project_ball_intersection(&x, &v(&[0.0, 0.0]), 1.0, &v(&[0.5, 0.0]), 1.0).unwrap();
        assert_eq!(p, x);
    }

    #[test]
    fn nested_balls_use_radial_projection() {
        let c = v(&[1.0, -1.0]);
        let x = v(&[4.0, 3.0]);
        let p = project_ball_intersection(&x, &c, 0.5, &c, 2.0).unwrap();
        assert!((p - project_ball(&x, &c, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn lens_corner() {
        let p = project_ball_intersection(&v(&[0.75, 5.0]), &v(&[0.0, 0.0]), 1.0, &v(&[1.5, 0.0]), 1.0).unwrap();
        let expected = v(&[0.75, (1.0f64 - 0.5625).sqrt()]);
        assert!((&p - expected).norm() < 1e-9, "{p}");
    }

    #[test]
    fn disjoint_balls() {
        let r = project_ball_intersection(&v(&[0.0, 3.0]), &v(&[0.0, 0.0]), 1.0, &v(&[3.0, 0.0]), 1.0);
        assert!(matches!(r, Err(Error::EmptyIntersection)));
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_optimal(
            x in prop::collection::vec(-4.0f64..4.0, 3),
            c2 in prop::collection::vec(-1.0f64..1.0, 3),
            r1 in 0.5f64..2.0,
            r2 in 0.5f64..2.0,
            probes in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 20),
        ) {
            let c1 = Vector::zeros(3);
            let c2 = Vector::from_vec(c2);
            prop_assume!(dist(&c1, &c2) < 0.9 * (r1 + r2));
            let x = Vector::from_vec(x);
            let p = project_ball_intersection(&x, &c1, r1, &c2, r2).unwrap();
            prop_assert!(dist(&p, &c1) <= r1 + 1e-9);
            prop_assert!(dist(&p, &c2) <= r2 + 1e-9);
            // variational inequality <x - p, z - p> <= 0 for feasible z
            for z in probes {
                let z = Vector::from_vec(z);
                let z = project_ball(&project_ball(&z, &c1, r1), &c2, r2);
                if dist(&z, &c1) <= r1 && dist(&z, &c2) <= r2 {
                    prop_assert!((&x - &p).dot(&(&z - &p)) <= 1e-6 * (1.0 + x.norm()));
                }
            }
        }
    }
}
