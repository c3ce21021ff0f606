use std::f64::consts::PI;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::Exp1;

use crate::{Error, Result};

/// Dependence structure of a field. Only the Gumbel family is supported;
/// `beta = 1` is the independence copula and `beta → ∞` approaches
/// comonotonicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaModel {
    beta: f64,
}

impl CopulaModel {
    pub fn gumbel(beta: f64) -> Result<Self> {
        if !(beta >= 1.0 && beta.is_finite()) {
            return Err(Error::domain(format!(
                "Gumbel dependence coefficient must be >= 1, got {beta}"
            )));
        }
        Ok(CopulaModel { beta })
    }

    pub fn independence() -> Self {
        CopulaModel { beta: 1.0 }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `C_β(u₁,…,u_l) = exp(-(Σ(-ln uᵢ)^β)^{1/β})`.
    pub fn cdf(&self, us: &[f64]) -> f64 {
        let s: f64 = us.iter().map(|u| (-u.ln()).powf(self.beta)).sum();
        (-s.powf(1.0 / self.beta)).exp()
    }

    /// Kendall's τ of any bivariate margin, `1 - 1/β`.
    pub fn kendall_tau(&self) -> f64 {
        1.0 - 1.0 / self.beta
    }

    /// One row of the copula, returned as pairs `(u, 1 - u)` so callers can
    /// transform either tail without cancellation.
    pub(crate) fn sample_row_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [(f64, f64)]) {
        let theta = 1.0 / self.beta;
        let frailty = positive_stable(theta, rng);
        for slot in out.iter_mut() {
            let e: f64 = rng.sample(Exp1);
            // ψ(t) = exp(-t^θ) evaluated at E/S
            let t = (e / frailty).powf(theta);
            let u = (-t).exp().clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
            let v = (-(-t).exp_m1()).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
            *slot = (u, v);
        }
    }
}

/// Draws `S > 0` with Laplace transform `E[exp(-tS)] = exp(-t^θ)`.
///
/// Uses Kanter's representation (the Chambers–Mallows–Stuck construction for
/// totally skewed stable laws). `theta = 1` is the point mass at 1.
pub fn sample_positive_stable<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::domain(format!(
            "stability index must lie in (0,1], got {theta}"
        )));
    }
    Ok(positive_stable(theta, rng))
}

fn positive_stable<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> f64 {
    if theta == 1.0 {
        return 1.0;
    }
    let u = PI * rng.sample::<f64, _>(Open01);
    let w: f64 = rng.sample(Exp1);
    let ln_s = (theta * u).sin().ln() - u.sin().ln() / theta
        + (1.0 - theta) / theta * (((1.0 - theta) * u).sin().ln() - w.ln());
    ln_s.exp().max(f64::MIN_POSITIVE)
}

/// Draws an `n × l` matrix of uniforms with joint law `C_β`. Rows are
/// independent; the result is indexed `[row][location]`.
pub fn sample_gumbel_copula<R: Rng + ?Sized>(
    copula: &CopulaModel,
    l: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if l == 0 || n == 0 {
        return Err(Error::invalid("copula sample needs l >= 1 and n >= 1"));
    }
    let mut row = vec![(0.0, 0.0); l];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        copula.sample_row_into(rng, &mut row);
        out.push(row.iter().map(|&(u, _)| u).collect());
    }
    Ok(out)
}
