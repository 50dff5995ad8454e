//! Shrinking exponential reconstruction loss.
//!
//! The loss of a reconstruction `y` against its input `x` is
//! `(‖x − y‖²)^λ`, with the exponent λ decreasing linearly over training
//! epochs from `start` (≥ 1) to `end` (≤ 1). Early epochs magnify loss
//! gradients to speed convergence; late epochs exponentiate with λ < 1,
//! which shrinks the gradients of high-error examples so outliers lose
//! influence on the fit.

use crate::error::{Result, RraeError};
use crate::numeric::Vector;
use serde::{Deserialize, Serialize};

/// Clamp applied to the squared error before exponentiation in the
/// gradient. For λ < 1 the prefactor `e^(λ-1)` is singular at `e = 0`.
pub const GRAD_EPS_CLAMP: f64 = 1e-8;

/// Linear epoch schedule for the loss exponent λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSchedule {
    /// Exponent at epoch 0; must be ≥ 1.
    pub start: f64,
    /// Exponent at the final epoch; must be in (0, 1].
    pub end: f64,
    /// Total number of training epochs.
    pub total_epochs: usize,
}

impl LossSchedule {
    pub fn new(start: f64, end: f64, total_epochs: usize) -> Result<Self> {
        if !(start >= 1.0) {
            return Err(RraeError::config(format!(
                "schedule start exponent must be >= 1, got {start}"
            )));
        }
        if !(end > 0.0 && end <= 1.0) {
            return Err(RraeError::config(format!(
                "schedule end exponent must be in (0, 1], got {end}"
            )));
        }
        if total_epochs < 1 {
            return Err(RraeError::config("schedule needs at least 1 epoch"));
        }
        Ok(LossSchedule {
            start,
            end,
            total_epochs,
        })
    }

    /// A schedule that keeps λ fixed at the given value for every epoch.
    pub fn fixed(lambda: f64, total_epochs: usize) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(RraeError::config(format!(
                "fixed exponent must be positive, got {lambda}"
            )));
        }
        // Encode as a degenerate linear schedule. A fixed λ < 1 is allowed
        // (start == end), which slightly widens the constructor's ranges.
        Ok(LossSchedule {
            start: lambda,
            end: lambda,
            total_epochs,
        })
    }

    /// Exponent in effect at the given epoch:
    /// `start − epoch · (start − end) / total_epochs`.
    pub fn exponent_at(&self, epoch: usize) -> Result<f64> {
        if epoch > self.total_epochs {
            return Err(RraeError::config(format!(
                "epoch {epoch} out of range 0..={}",
                self.total_epochs
            )));
        }
        Ok(self.start - (epoch as f64) * (self.start - self.end) / (self.total_epochs as f64))
    }
}

fn check_dims(x: &Vector, y: &Vector) -> Result<()> {
    if x.len() != y.len() {
        return Err(RraeError::DimMismatch {
            op: "loss",
            left: format!("len {}", x.len()),
            right: format!("len {}", y.len()),
        });
    }
    Ok(())
}

/// `(‖x − y‖²)^λ`. Non-negative; zero iff `x == y`. Equals the plain
/// squared error when λ = 1.
pub fn loss(x: &Vector, y: &Vector, lambda: f64) -> Result<f64> {
    check_dims(x, y)?;
    if !(lambda > 0.0) {
        return Err(RraeError::config(format!(
            "loss exponent must be positive, got {lambda}"
        )));
    }
    let e = x.dist_sq(y)?;
    Ok(e.powf(lambda))
}

/// Exponentiates an already-computed squared error.
pub fn loss_of_error(err_sq: f64, lambda: f64) -> f64 {
    err_sq.powf(lambda)
}

/// Scalar prefactor of the loss gradient: `λ · max(e, clamp)^(λ−1)` for
/// squared error `e`. Finite for every input.
pub fn grad_prefactor(err_sq: f64, lambda: f64, eps_clamp: f64) -> f64 {
    lambda * err_sq.max(eps_clamp).powf(lambda - 1.0)
}

/// Gradient of [`loss`] with respect to `y`:
/// `λ · max(‖x−y‖², clamp)^(λ−1) · 2(y − x)`.
pub fn loss_grad(x: &Vector, y: &Vector, lambda: f64, eps_clamp: f64) -> Result<Vector> {
    check_dims(x, y)?;
    if !(eps_clamp > 0.0) {
        return Err(RraeError::config(format!(
            "gradient clamp must be positive, got {eps_clamp}"
        )));
    }
    let e = x.dist_sq(y)?;
    let pref = grad_prefactor(e, lambda, eps_clamp);
    let mut g = y.sub(x)?;
    for v in g.data_mut() {
        *v *= 2.0 * pref;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rng;

    fn random_pair(rng: &mut Rng, dim: usize) -> (Vector, Vector) {
        let x = Vector::from_vec((0..dim).map(|_| rng.normal(0.0, 1.0)).collect());
        let y = Vector::from_vec((0..dim).map(|_| rng.normal(0.0, 1.0)).collect());
        (x, y)
    }

    #[test]
    fn schedule_endpoints_and_midpoint() {
        let s = LossSchedule::new(2.0, 0.25, 100).unwrap();
        assert_eq!(s.exponent_at(0).unwrap(), 2.0);
        assert_eq!(s.exponent_at(100).unwrap(), 0.25);
        assert_eq!(s.exponent_at(50).unwrap(), 1.125);
        assert!(s.exponent_at(101).is_err());
    }

    #[test]
    fn schedule_monotone_non_increasing() {
        let s = LossSchedule::new(2.0, 0.25, 100).unwrap();
        let mut prev = f64::INFINITY;
        for epoch in 0..=100 {
            let l = s.exponent_at(epoch).unwrap();
            assert!(l <= prev);
            prev = l;
        }
    }

    #[test]
    fn schedule_rejects_bad_params() {
        assert!(LossSchedule::new(0.5, 0.25, 100).is_err());
        assert!(LossSchedule::new(2.0, 0.0, 100).is_err());
        assert!(LossSchedule::new(2.0, 1.5, 100).is_err());
        assert!(LossSchedule::new(2.0, 0.25, 0).is_err());
    }

    #[test]
    fn loss_zero_iff_equal() {
        let x = Vector::from_slice(&[1.0, -2.0, 3.0]);
        for lambda in [0.25, 0.5, 1.0, 2.0] {
            assert_eq!(loss(&x, &x, lambda).unwrap(), 0.0);
        }
        let y = Vector::from_slice(&[1.0, -2.0, 3.5]);
        assert!(loss(&x, &y, 0.5).unwrap() > 0.0);
    }

    #[test]
    fn loss_sqrt_case() {
        // ‖x−y‖² = 4, λ = 0.5 → 2.
        let x = Vector::from_slice(&[0.0, 0.0]);
        let y = Vector::from_slice(&[2.0, 0.0]);
        assert_eq!(loss(&x, &y, 0.5).unwrap(), 2.0);
    }

    #[test]
    fn lambda_one_is_plain_squared_error() {
        let mut rng = Rng::new(3);
        for _ in 0..20 {
            let (x, y) = random_pair(&mut rng, 6);
            let l = loss(&x, &y, 1.0).unwrap();
            let e = x.dist_sq(&y).unwrap();
            assert!((l - e).abs() <= 1e-12 * e.max(1.0));
        }
    }

    #[test]
    fn grad_zero_at_equal_points() {
        let x = Vector::from_slice(&[1.0, 2.0]);
        let g = loss_grad(&x, &x, 0.5, GRAD_EPS_CLAMP).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grad_prefactor_hand_case() {
        // e = 4, λ = 0.5 → λ·e^(λ−1) = 0.5 · 4^(−0.5) = 0.25.
        assert!((grad_prefactor(4.0, 0.5, GRAD_EPS_CLAMP) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grad_matches_central_differences() {
        let mut rng = Rng::new(17);
        for lambda in [0.25, 1.0, 2.0] {
            for _ in 0..10 {
                let (x, y) = random_pair(&mut rng, 5);
                let g = loss_grad(&x, &y, lambda, GRAD_EPS_CLAMP).unwrap();
                for i in 0..y.len() {
                    let h = 1e-6 * (1.0 + y.get(i).abs());
                    let mut yp = y.clone();
                    yp.set(i, y.get(i) + h);
                    let mut ym = y.clone();
                    ym.set(i, y.get(i) - h);
                    let fd =
                        (loss(&x, &yp, lambda).unwrap() - loss(&x, &ym, lambda).unwrap()) / (2.0 * h);
                    let denom = g.get(i).abs().max(fd.abs()).max(1e-6);
                    assert!(
                        (g.get(i) - fd).abs() / denom < 1e-6,
                        "lambda={lambda} i={i} analytic={} fd={fd}",
                        g.get(i)
                    );
                }
            }
        }
    }

    #[test]
    fn loss_monotone_in_lambda_by_error_regime() {
        // Above e = 1 the loss grows with λ; below e = 1 it shrinks.
        let x = Vector::from_slice(&[0.0]);
        let big = Vector::from_slice(&[2.0]); // e = 4
        let small = Vector::from_slice(&[0.5]); // e = 0.25
        let mut prev_big = 0.0;
        let mut prev_small = f64::INFINITY;
        for lambda in [0.25, 0.5, 1.0, 1.5, 2.0] {
            let lb = loss(&x, &big, lambda).unwrap();
            let ls = loss(&x, &small, lambda).unwrap();
            assert!(lb > prev_big);
            assert!(ls < prev_small);
            prev_big = lb;
            prev_small = ls;
        }
    }

    #[test]
    fn outlier_gradient_ratio_shrinks_with_lambda() {
        // The robustness mechanism: at λ = 0.25 the gradient-magnitude
        // ratio between a high-error and a low-error example is strictly
        // smaller than at λ = 1.
        let x = Vector::from_slice(&[0.0]);
        let far = Vector::from_slice(&[10.0]); // e = 100
        let near = Vector::from_slice(&[1.0]); // e = 1
        let ratio = |lambda: f64| {
            let gf = loss_grad(&x, &far, lambda, GRAD_EPS_CLAMP).unwrap().norm();
            let gn = loss_grad(&x, &near, lambda, GRAD_EPS_CLAMP).unwrap().norm();
            gf / gn
        };
        assert!(ratio(0.25) < ratio(1.0));
    }
}
