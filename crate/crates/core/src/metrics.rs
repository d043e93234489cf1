//! Error metrics for a computed least-squares solution: forward error,
//! residual suboptimality, and the Karlson–Waldén backward-error estimate.

use crate::error::{Error, Result};
use crate::la::{norm2, sub, DenseMatrix, SvdFactors};
use crate::scalar::Real;

/// The three error metrics of one computed solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorTriple<T> {
    pub forward: T,
    /// `None` for consistent systems (`r* = 0`), where the metric is undefined.
    pub residual: Option<T>,
    pub backward_kw: T,
}

impl<T: Real> ErrorTriple<T> {
    /// Evaluates all three metrics with `theta = 1`.
    pub fn evaluate(
        a: &DenseMatrix<T>,
        svd_a: &SvdFactors<T>,
        b: &[T],
        x_hat: &[T],
        x_star: &[T],
    ) -> Result<Self> {
        let forward = forward_error(x_hat, x_star)?;
        let residual = match residual_error(a, b, x_hat, x_star) {
            Ok(v) => Some(v),
            Err(Error::UndefinedMetric(_)) => None,
            Err(e) => return Err(e),
        };
        let backward_kw = kw_backward_error(a, svd_a, b, x_hat, T::one())?;
        Ok(Self { forward, residual, backward_kw })
    }
}

/// `||x* - x_hat|| / ||x*||`
pub fn forward_error<T: Real>(x_hat: &[T], x_star: &[T]) -> Result<T> {
    if x_hat.len() != x_star.len() {
        return Err(Error::ShapeMismatch(format!("solution lengths {} and {}", x_hat.len(), x_star.len())));
    }
    let scale = norm2(x_star);
    if scale == T::zero() {
        return Err(Error::UndefinedMetric("forward error with x* = 0".into()));
    }
    Ok(norm2(&sub(x_star, x_hat)) / scale)
}

/// `||A (x* - x_hat)|| / ||b - A x*||`
pub fn residual_error<T: Real>(a: &DenseMatrix<T>, b: &[T], x_hat: &[T], x_star: &[T]) -> Result<T> {
    check_shapes(a, b, x_hat)?;
    if x_star.len() != a.cols() {
        return Err(Error::ShapeMismatch(format!("x* of length {} for {} columns", x_star.len(), a.cols())));
    }
    let r_star = norm2(&sub(b, &a.mul_vec(x_star)));
    if r_star == T::zero() {
        return Err(Error::UndefinedMetric("residual error with zero optimal residual".into()));
    }
    Ok(norm2(&a.mul_vec(&sub(x_star, x_hat))) / r_star)
}

/// Karlson–Waldén estimate of the least-squares backward error of `x_hat`.
///
/// With `r = b - A x_hat` and `mu = theta^2 ||r||^2 / (1 + theta^2 ||x_hat||^2)`:
///
/// ```text
/// BE = theta / sqrt(1 + theta^2 ||x_hat||^2) * sqrt( sum_i sigma_i^2 (u_i^T r)^2 / (sigma_i^2 + mu) )
/// ```
///
/// The true backward error lies within `[BE, sqrt(2) BE]`.
pub fn kw_backward_error<T: Real>(
    a: &DenseMatrix<T>,
    svd_a: &SvdFactors<T>,
    b: &[T],
    x_hat: &[T],
    theta: T,
) -> Result<T> {
    check_shapes(a, b, x_hat)?;
    if svd_a.u.rows() != a.rows() || svd_a.sigma.len() != a.cols() {
        return Err(Error::ShapeMismatch("SVD factors do not match A".into()));
    }
    if !(theta > T::zero()) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    let r = sub(b, &a.mul_vec(x_hat));
    let nr2 = norm2(&r).powi(2);
    let nx2 = norm2(x_hat).powi(2);
    let denom = T::one() + theta * theta * nx2;
    let mu = theta * theta * nr2 / denom;
    let coeffs = svd_a.u.mul_t_vec(&r);
    let mut acc = T::zero();
    for (&s, &c) in svd_a.sigma.iter().zip(&coeffs) {
        let s2 = s * s;
        let d = s2 + mu;
        if d > T::zero() {
            acc = acc + s2 * c * c / d;
        }
    }
    Ok(theta / denom.sqrt() * acc.sqrt())
}

fn check_shapes<T: Real>(a: &DenseMatrix<T>, b: &[T], x_hat: &[T]) -> Result<()> {
    if b.len() != a.rows() || x_hat.len() != a.cols() {
        return Err(Error::ShapeMismatch(format!(
            "A is {}x{}, b has length {}, x has length {}",
            a.rows(),
            a.cols(),
            b.len(),
            x_hat.len()
        )));
    }
    Ok(())
}

/// Best attainable forward and residual errors of a backward-stable solver
/// (without the dimension factor).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WedinFloor<T> {
    /// `u (kappa ||x*|| + kappa^2 ||r*|| / ||A||)`
    pub forward_floor: T,
    /// `u (kappa ||r*|| + ||A|| ||x*||)`
    pub residual_floor: T,
}

pub fn wedin_floor<T: Real>(norm_a: T, kappa: T, x_star_norm: T, r_star_norm: T) -> WedinFloor<T> {
    debug_assert!(kappa >= T::one());
    let u = T::unit_roundoff();
    WedinFloor {
        forward_floor: u * (kappa * x_star_norm + kappa * kappa * r_star_norm / norm_a),
        residual_floor: u * (kappa * r_star_norm + norm_a * x_star_norm),
    }
}
