//! Online ridge regression with ellipsoidal confidence sets.
//!
//! [`ArmEstimator`] keeps `V = λI + Σ x xᵀ`, `b = Σ x r`, and the inverse
//! `V⁻¹` (rank-one Sherman–Morrison updates, re-factorized from `V` every
//! [`REFACTOR_EVERY`] updates). The optimistic and pessimistic scores are
//! `⟨θ̂, x⟩ ± ρ ‖x‖_{V⁻¹}` with the radius `ρ` from [`radius`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{all_finite, Vector};

pub const REFACTOR_EVERY: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    Optimistic,
    Pessimistic,
}

/// `ρ = √(d · ln((1 + n/λ) / δ)) + √λ · S`.
///
/// No validation: `δ = 1` is allowed here so the degenerate boundary can be
/// exercised. [`ArmEstimator`] enforces `δ ∈ (0, 1)`.
pub fn radius(dim: usize, n: usize, lambda: f64, delta: f64, s_bound: f64) -> f64 {
    let log_term = ((1.0 + n as f64 / lambda) / delta).ln().max(0.0);
    (dim as f64 * log_term).sqrt() + lambda.sqrt() * s_bound
}

#[derive(Debug, Clone)]
pub struct ArmEstimator {
    dim: usize,
    lambda: f64,
    delta: f64,
    s_bound: f64,
    v: DMatrix<f64>,
    v_inv: DMatrix<f64>,
    b: Vector,
    theta_hat: Vector,
    n: usize,
}

impl ArmEstimator {
    pub fn new(dim: usize, lambda: f64, delta: f64, s_bound: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidDelta(delta));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(crate::error::invalid("lambda", "must be finite and positive"));
        }
        if !(s_bound.is_finite() && s_bound >= 0.0) {
            return Err(crate::error::invalid("s_bound", "must be finite and nonnegative"));
        }
        Ok(Self {
            dim,
            lambda,
            delta,
            s_bound,
            v: DMatrix::identity(dim, dim) * lambda,
            v_inv: DMatrix::identity(dim, dim) / lambda,
            b: Vector::zeros(dim),
            theta_hat: Vector::zeros(dim),
            n: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn theta_hat(&self) -> &Vector {
        &self.theta_hat
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn gram_inverse(&self) -> &DMatrix<f64> {
        &self.v_inv
    }

    pub fn response(&self) -> &Vector {
        &self.b
    }

    pub fn update(&mut self, x: &Vector, r: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !all_finite(x) {
            return Err(Error::NonFinite("context"));
        }
        if !r.is_finite() {
            return Err(Error::NonFinite("reward"));
        }
        self.v.ger(1.0, x, x, 1.0);
        self.b.axpy(r, x, 1.0);
        self.n += 1;
        if self.n.is_multiple_of(REFACTOR_EVERY) {
            self.refactor();
        } else {
            let vx = &self.v_inv * x;
            let denom = 1.0 + x.dot(&vx);
            self.v_inv.ger(-1.0 / denom, &vx, &vx, 1.0);
        }
        self.theta_hat = &self.v_inv * &self.b;
        Ok(())
    }

    fn refactor(&mut self) {
        // V is λI plus a PSD sum, so Cholesky cannot fail for λ > 0.
        let chol = self.v.clone().cholesky().expect("gram matrix is positive definite");
        self.v_inv = chol.inverse();
        // Symmetrize away round-off.
        self.v_inv = (&self.v_inv + self.v_inv.transpose()) * 0.5;
    }

    /// Radius `ρ` for the current pull count.
    pub fn confidence_radius(&self) -> f64 {
        radius(self.dim, self.n, self.lambda, self.delta, self.s_bound)
    }

    /// `‖x‖_{V⁻¹} = √(xᵀ V⁻¹ x)`.
    pub fn mahalanobis(&self, x: &Vector) -> f64 {
        x.dot(&(&self.v_inv * x)).max(0.0).sqrt()
    }

    pub fn score(&self, x: &Vector, mode: ScoreMode) -> Result<f64> {
        self.score_with_radius(x, mode, self.confidence_radius())
    }

    pub fn score_with_radius(&self, x: &Vector, mode: ScoreMode, rho: f64) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !all_finite(x) {
            return Err(Error::NonFinite("context"));
        }
        let mean = self.theta_hat.dot(x);
        let bonus = rho * self.mahalanobis(x);
        Ok(match mode {
            ScoreMode::Optimistic => mean + bonus,
            ScoreMode::Pessimistic => mean - bonus,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn fresh(dim: usize) -> ArmEstimator {
        ArmEstimator::new(dim, 1.0, 1e-4, 1.0).unwrap()
    }

    #[test]
    fn empty_estimator() {
        let est = fresh(3);
        assert_eq!(est.theta_hat(), &Vector::zeros(3));
        assert_eq!(est.gram(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn single_and_repeated_update() {
        let mut est = fresh(2);
        let x = Vector::from_vec(vec![1.0, 0.0]);
        est.update(&x, 1.0).unwrap();
        assert_eq!(est.gram(), &dmatrix![2.0, 0.0; 0.0, 1.0]);
        assert!((est.theta_hat() - Vector::from_vec(vec![0.5, 0.0])).norm() < 1e-15);
        est.update(&x, 1.0).unwrap();
        assert_eq!(est.gram(), &dmatrix![3.0, 0.0; 0.0, 1.0]);
        assert!((est.theta_hat() - Vector::from_vec(vec![2.0 / 3.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn radius_values() {
        // √(2 ln 1e4) + 1
        let rho = fresh(2).confidence_radius();
        assert!((rho - 5.291_932_052_578_694).abs() < 1e-9, "{rho}");
        assert_eq!(radius(1, 0, 1.0, 1.0, 1.0), 1.0);
        // √(5 ln(101e8)) + 1, evaluated independently with mpmath.
        let r = radius(5, 100, 1.0, 1e-8, 1.0);
        assert!((r - 11.732_148_261_367_252).abs() < 1e-9, "{r}");
    }

    #[test]
    fn invalid_delta() {
        assert!(matches!(ArmEstimator::new(2, 1.0, 0.0, 1.0), Err(Error::InvalidDelta(_))));
        assert!(matches!(ArmEstimator::new(2, 1.0, 1.0, 1.0), Err(Error::InvalidDelta(_))));
    }

    #[test]
    fn radius_grows_with_pulls() {
        let mut est = fresh(3);
        let mut last = est.confidence_radius();
        for k in 0..50 {
            est.update(&Vector::from_vec(vec![0.1 * (k % 3) as f64, 0.2, -0.3]), 0.1).unwrap();
            let r = est.confidence_radius();
            assert!(r >= last);
            last = r;
        }
    }

    #[test]
    fn score_cases() {
        let est = fresh(2);
        let x = Vector::from_vec(vec![1.0, 0.0]);
        assert_eq!(est.score_with_radius(&x, ScoreMode::Optimistic, 1.0).unwrap(), 1.0);
        assert_eq!(est.score_with_radius(&x, ScoreMode::Pessimistic, 1.0).unwrap(), -1.0);
        let zero = Vector::zeros(2);
        assert_eq!(est.score(&zero, ScoreMode::Optimistic).unwrap(), 0.0);
        assert_eq!(est.score(&zero, ScoreMode::Pessimistic).unwrap(), 0.0);

        let mut est = fresh(2);
        est.update(&x, 1.0).unwrap();
        let rho = est.confidence_radius();
        let up = est.score(&x, ScoreMode::Optimistic).unwrap();
        let lo = est.score(&x, ScoreMode::Pessimistic).unwrap();
        let half_width = rho / 2f64.sqrt();
        assert!((up - (0.5 + half_width)).abs() < 1e-12);
        assert!((lo - (0.5 - half_width)).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let mut est = fresh(2);
        assert!(est.update(&Vector::from_vec(vec![f64::NAN, 0.0]), 1.0).is_err());
        assert!(est.update(&Vector::from_vec(vec![0.0, 0.0]), f64::INFINITY).is_err());
        assert!(est.score(&Vector::from_vec(vec![f64::NAN, 0.0]), ScoreMode::Optimistic).is_err());
    }

    #[test]
    fn refactorization_keeps_inverse_accurate() {
        let mut est = fresh(3);
        for k in 0..(REFACTOR_EVERY + 10) {
            let a = (k as f64 * 0.37).sin();
            let b = (k as f64 * 0.11).cos();
            let x = Vector::from_vec(vec![a * 0.5, b * 0.5, 0.3]);
            est.update(&x, a).unwrap();
        }
        let err = (est.gram() * est.gram_inverse() - DMatrix::identity(3, 3)).norm();
        assert!(err < 1e-10, "{err}");
    }
}
