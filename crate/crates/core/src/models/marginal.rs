use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::roots::{brent, expand_bracket};
use crate::{Error, Result};

/// Relative tolerance of the numerical inversions, in log-space.
const INVERSION_TOL: f64 = 1e-13;

/// Default shape of the log-Gamma family. Shape 1 is an exact Pareto law.
pub const DEFAULT_LOG_GAMMA_SHAPE: f64 = 2.0;

/// A parametric family with a regularly varying upper tail. The tail index is
/// carried by [`MarginalModel`]; the variants hold the remaining parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `F(x) = exp(-x^-α)` on `x > 0`.
    Frechet,
    /// Generalized Pareto with shape `ξ = 1/α` and location 0:
    /// `F̄(x) = (1 + ξx/scale)^(-1/ξ)`.
    Gpd { scale: f64 },
    /// Student-t with `α` degrees of freedom.
    StudentT,
    /// Burr XII with shapes `α` and 1: `F̄(x) = 1/(1 + x^α)`.
    Burr,
    /// `exp(Y)` with `Y ~ Gamma(shape, rate α)`.
    LogGamma { shape: f64 },
    /// `scale / G` with `G ~ Gamma(α, 1)`.
    InvGamma { scale: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Frechet => "frechet",
            Family::Gpd { .. } => "gpd",
            Family::StudentT => "student-t",
            Family::Burr => "burr",
            Family::LogGamma { .. } => "log-gamma",
            Family::InvGamma { .. } => "inv-gamma",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Parses a family name with default auxiliary parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "frechet" | "fréchet" => Ok(Family::Frechet),
            "gpd" => Ok(Family::Gpd { scale: 1.0 }),
            "student-t" | "student" | "t" => Ok(Family::StudentT),
            "burr" => Ok(Family::Burr),
            "log-gamma" | "loggamma" => Ok(Family::LogGamma {
                shape: DEFAULT_LOG_GAMMA_SHAPE,
            }),
            "inv-gamma" | "invgamma" | "inverse-gamma" => Ok(Family::InvGamma { scale: 1.0 }),
            other => Err(Error::invalid(format!("unknown marginal family '{other}'"))),
        }
    }
}

/// A heavy-tailed marginal law with tail index `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalModel {
    family: Family,
    alpha: f64,
}

impl MarginalModel {
    pub fn new(family: Family, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("tail index must be positive, got {alpha}")));
        }
        let aux_ok = match family {
            Family::Gpd { scale } | Family::InvGamma { scale } => scale > 0.0 && scale.is_finite(),
            Family::LogGamma { shape } => shape > 0.0 && shape.is_finite(),
            _ => true,
        };
        if !aux_ok {
            return Err(Error::domain(format!("invalid parameters for {family}")));
        }
        Ok(MarginalModel { family, alpha })
    }

    pub fn frechet(alpha: f64) -> Result<Self> {
        Self::new(Family::Frechet, alpha)
    }

    pub fn gpd(alpha: f64) -> Result<Self> {
        Self::new(Family::Gpd { scale: 1.0 }, alpha)
    }

    pub fn student_t(alpha: f64) -> Result<Self> {
        Self::new(Family::StudentT, alpha)
    }

    pub fn burr(alpha: f64) -> Result<Self> {
        Self::new(Family::Burr, alpha)
    }

    pub fn log_gamma(alpha: f64) -> Result<Self> {
        Self::new(
            Family::LogGamma {
                shape: DEFAULT_LOG_GAMMA_SHAPE,
            },
            alpha,
        )
    }

    pub fn inv_gamma(alpha: f64) -> Result<Self> {
        Self::new(Family::InvGamma { scale: 1.0 }, alpha)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The generalized inverse `F⁻¹(p)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("probability must lie in (0,1), got {p}")));
        }
        self.invert(p, 1.0 - p)
    }

    /// `F⁻¹(1 - q)`, accurate for upper-tail probabilities `q` far below the
    /// resolution of `1 - q`.
    pub fn upper_quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain(format!("probability must lie in (0,1), got {q}")));
        }
        self.invert(1.0 - q, q)
    }

    /// `F̄(x) = P(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        let a = self.alpha;
        match self.family {
            Family::StudentT => {
                if x >= 0.0 {
                    student_upper(a, x)
                } else {
                    1.0 - student_upper(a, -x)
                }
            }
            _ if x.is_nan() => f64::NAN,
            Family::Frechet => {
                if x <= 0.0 {
                    1.0
                } else {
                    -(-x.powf(-a)).exp_m1()
                }
            }
            Family::Gpd { scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-a * (x / (a * scale)).ln_1p()).exp()
                }
            }
            Family::Burr => {
                if x <= 0.0 {
                    1.0
                } else {
                    1.0 / (1.0 + x.powf(a))
                }
            }
            Family::LogGamma { shape } => {
                if x <= 1.0 {
                    1.0
                } else if x.is_infinite() {
                    0.0
                } else {
                    gamma_ur(shape, a * x.ln())
                }
            }
            Family::InvGamma { scale } => {
                if x <= 0.0 {
                    1.0
                } else if x.is_infinite() {
                    0.0
                } else {
                    gamma_lr(a, scale / x)
                }
            }
        }
    }

    /// `F(x) = P(X ≤ x)`, computed without going through `1 - F̄` where that
    /// would lose precision.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.family {
            Family::StudentT if x < 0.0 => student_upper(self.alpha, -x),
            Family::Frechet if x > 0.0 => (-x.powf(-self.alpha)).exp(),
            Family::Burr if x > 0.0 => {
                let t = x.powf(self.alpha);
                t / (1.0 + t)
            }
            Family::LogGamma { shape } if x > 1.0 && x.is_finite() => {
                gamma_lr(shape, self.alpha * x.ln())
            }
            Family::InvGamma { scale } if x > 0.0 && x.is_finite() => {
                gamma_ur(self.alpha, scale / x)
            }
            _ => 1.0 - self.survival(x),
        }
    }

    /// One draw by inversion of an open-interval uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let q: f64 = rng.sample(Open01);
        self.upper_quantile(q)
            .expect("open-interval uniform is always inside the quantile domain")
    }

    /// `p + q = 1`; whichever of the two is smaller carries the precision.
    pub(crate) fn invert(&self, p: f64, q: f64) -> Result<f64> {
        let a = self.alpha;
        // ln(1 - p) and ln(p), each from the more accurate side
        let ln_q = if q < 0.5 { q.ln() } else { (-p).ln_1p() };
        let ln_p = if p < 0.5 { p.ln() } else { (-q).ln_1p() };
        match self.family {
            Family::Frechet => Ok((-ln_p).powf(-1.0 / a)),
            Family::Gpd { scale } => {
                let xi = 1.0 / a;
                Ok(scale * (-xi * ln_q).exp_m1() / xi)
            }
            Family::Burr => Ok((ln_p - ln_q).exp().powf(1.0 / a)),
            Family::StudentT => {
                if p == 0.5 {
                    Ok(0.0)
                } else if p < 0.5 {
                    student_upper_quantile(a, p).map(|t| -t)
                } else {
                    student_upper_quantile(a, q)
                }
            }
            Family::LogGamma { shape } => Ok((gamma_quantile(shape, p, q)? / a).exp()),
            Family::InvGamma { scale } => Ok(scale / gamma_quantile(a, q, p)?),
        }
    }
}

/// `P(T > t)` for `t ≥ 0` and Student-t with `nu` degrees of freedom.
fn student_upper(nu: f64, t: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    if t == 0.0 {
        return 0.5;
    }
    let z = nu / (nu + t * t);
    0.5 * beta_reg(0.5 * nu, 0.5, z)
}

/// Solves `P(T > t) = q` for `0 < q < 1/2`.
fn student_upper_quantile(nu: f64, q: f64) -> Result<f64> {
    let ln_q = q.ln();
    // power-law tail approximation for the starting point
    let ln_c = ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * (nu * std::f64::consts::PI).ln()
        + 0.5 * (nu - 1.0) * nu.ln()
        - nu.ln();
    let u0 = ((ln_c - ln_q) / nu).clamp(-20.0, 700.0);
    let objective = |u: f64| {
        let t = u.exp();
        student_upper(nu, t).ln() - ln_q
    };
    solve_log_space(objective, u0)
}

/// Inverse of the regularized incomplete gamma function with shape `a`:
/// returns `x` with `P(a, x) = p` (and `Q(a, x) = q`).
fn gamma_quantile(a: f64, p: f64, q: f64) -> Result<f64> {
    let u0 = a.max(1e-3).ln();
    if p <= 0.5 {
        let ln_p = p.ln();
        solve_log_space(|u| ln_gamma_lower(a, u.exp()) - ln_p, u0)
    } else {
        let ln_q = q.ln();
        solve_log_space(|u| ln_gamma_upper(a, u.exp()) - ln_q, u0)
    }
}

fn ln_gamma_lower(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_lr(a, x).ln()
    }
}

fn ln_gamma_upper(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        f64::NEG_INFINITY
    } else {
        gamma_ur(a, x).ln()
    }
}

/// Root of a monotone function of `u = ln x`; returns `x`. The bracket grows
/// geometrically around `u0`.
fn solve_log_space<F: FnMut(f64) -> f64>(mut f: F, u0: f64) -> Result<f64> {
    let (lo, hi) = expand_bracket(&mut f, u0, 1.0)?;
    let u = brent(f, lo, hi, INVERSION_TOL)?;
    Ok(u.exp())
}
