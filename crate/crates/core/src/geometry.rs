//! Small vector helpers shared across the crate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Vector = DVector<f64>;

/// Radially projects `x` onto the closed unit ball. The flag reports whether
/// a projection happened.
pub fn project_to_unit_ball(x: &Vector) -> (Vector, bool) {
    let norm = x.norm();
    if norm > 1.0 {
        (x / norm, true)
    } else {
        (x.clone(), false)
    }
}

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with
/// the sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

pub fn all_finite(x: &Vector) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Largest `alpha >= 0` with `||x + alpha * u|| <= 1`, for `||x|| <= 1` and unit `u`.
pub fn max_step_in_ball(x: &Vector, u: &Vector) -> f64 {
    let b = x.dot(u);
    let c = x.norm_squared() - 1.0;
    let disc = b * b - c;
    if disc <= 0.0 {
        return 0.0;
    }
    (-b + disc.sqrt()).max(0.0)
}
