//! Asymptotic cross-covariances of the local Hill, moment and ratio
//! estimators at two locations.
//!
//! With `x₁ = c₁^{1/α}`, `x₂ = c₂^{1/α}`, `N = ν(x₁, x₂)` and
//!
//! ```text
//! I₁ = ∫_{x₁}^∞ ν(x, x₂) dx/x      I₂ = ∫_{x₂}^∞ ν(x₁, y) dy/y
//! ```
//!
//! the limits of `k₁·Cov(E⁽ⁱ⁾, F⁽ʲ⁾)` are `c₁c₂` times
//!
//! | pair | value |
//! |------|------------|
//! | H, H | `N/α²` |
//! | H, J | `(1/α) ∫_{x₁}^∞ ν(x₂, y) dy/y` |
//! | H, M | `I₁ + (1−α)/α² · N` |
//! | M, M | `I₁ + I₂ + (α−1)²/α² · N` |
//! | J, J | `(I₁ + I₂)/α` |
//! | M, J | `I₁ + I₂/α` |
//!
//! Reversed pairs use the transposed measure with `c₁` and `c₂` swapped.

use crate::tail::EstimatorKind;
use crate::{Error, Result};

use super::quadrature::{tail_integral, QUAD_TOL};
use super::PairMeasure;

struct Transposed<'a>(&'a dyn PairMeasure);

impl PairMeasure for Transposed<'_> {
    fn nu(&self, x: f64, y: f64) -> f64 {
        self.0.nu(y, x)
    }
}

fn check(alpha: f64, c1: f64, c2: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    if !(c1 > 0.0 && c1.is_finite() && c2 > 0.0 && c2.is_finite()) {
        return Err(Error::domain(format!("ratios must be positive, got ({c1}, {c2})")));
    }
    Ok(())
}

fn first_integral(nu: &dyn PairMeasure, alpha: f64, x1: f64, x2: f64) -> Result<f64> {
    tail_integral(|x| nu.nu(x, x2), x1, alpha, QUAD_TOL)
}

fn second_integral(nu: &dyn PairMeasure, alpha: f64, x1: f64, x2: f64) -> Result<f64> {
    tail_integral(|y| nu.nu(x1, y), x2, alpha, QUAD_TOL)
}

/// Limit of `k₁·Cov(a⁽ⁱ⁾, b⁽ʲ⁾)` for locations `i ≠ j` whose pair measure is
/// `nu`, with `c₁ = k₁/kᵢ` and `c₂ = k₁/kⱼ`.
pub fn asym_cov(
    a: EstimatorKind,
    b: EstimatorKind,
    nu: &dyn PairMeasure,
    alpha: f64,
    c1: f64,
    c2: f64,
) -> Result<f64> {
    use EstimatorKind::*;
    check(alpha, c1, c2)?;
    match (a, b) {
        (Ratio, Hill) | (Moment, Hill) | (Ratio, Moment) => {
            return asym_cov(b, a, &Transposed(nu), alpha, c2, c1);
        }
        _ => {}
    }
    let x1 = c1.powf(1.0 / alpha);
    let x2 = c2.powf(1.0 / alpha);
    let n = nu.nu(x1, x2);
    let a2 = alpha * alpha;
    let base = match (a, b) {
        (Hill, Hill) => n / a2,
        (Hill, Ratio) => tail_integral(|y| nu.nu(x2, y), x1, alpha, QUAD_TOL)? / alpha,
        (Hill, Moment) => first_integral(nu, alpha, x1, x2)? + (1.0 - alpha) / a2 * n,
        (Moment, Moment) => {
            first_integral(nu, alpha, x1, x2)?
                + second_integral(nu, alpha, x1, x2)?
                + (alpha - 1.0).powi(2) / a2 * n
        }
        (Ratio, Ratio) => {
            (first_integral(nu, alpha, x1, x2)? + second_integral(nu, alpha, x1, x2)?) / alpha
        }
        (Moment, Ratio) => {
            first_integral(nu, alpha, x1, x2)? + second_integral(nu, alpha, x1, x2)? / alpha
        }
        _ => unreachable!("reversed pairs are handled above"),
    };
    Ok(c1 * c2 * base)
}

/// Limit of `k₁·Var(E⁽ⁱ⁾)` for a single location with `c = k₁/kᵢ`:
/// `c/α²` (Hill), `c(1 + 1/α²)` (moment), `2c/α²` (ratio).
pub fn asym_variance(kind: EstimatorKind, alpha: f64, c: f64) -> Result<f64> {
    check(alpha, c, c)?;
    let a2 = alpha * alpha;
    Ok(match kind {
        EstimatorKind::Hill => c / a2,
        EstimatorKind::Moment => c * (1.0 + 1.0 / a2),
        EstimatorKind::Ratio => 2.0 * c / a2,
    })
}

/// Off-diagonal entry of the limit covariance of `√k₁(L⁽ⁱ⁾ − 2/α²)`:
/// `c₁c₂ [(8/α³)(I₁ + I₂) + 8N/α⁴]`.
pub fn theta_l(nu: &dyn PairMeasure, alpha: f64, c1: f64, c2: f64) -> Result<f64> {
    check(alpha, c1, c2)?;
    let x1 = c1.powf(1.0 / alpha);
    let x2 = c2.powf(1.0 / alpha);
    let integrals = first_integral(nu, alpha, x1, x2)? + second_integral(nu, alpha, x1, x2)?;
    Ok(c1 * c2 * (8.0 / alpha.powi(3) * integrals + 8.0 * nu.nu(x1, x2) / alpha.powi(4)))
}

/// Diagonal entry of the same matrix, `20c/α⁴`.
pub fn theta_l_diagonal(alpha: f64, c: f64) -> Result<f64> {
    check(alpha, c, c)?;
    Ok(20.0 * c / alpha.powi(4))
}
