//! Optimal convex aggregation of local Hill estimators.
//!
//! Given the asymptotic covariance `Γ` of `√k₁(H⁽ⁱ⁾ − 1/α)`, the weights
//!
//! ```text
//! λ* = argmin { λᵀΓλ : λᵢ ≥ 0, Σλᵢ = 1 }
//! ```
//!
//! minimize the asymptotic mean squared error of `Σ λᵢ H⁽ⁱ⁾`. With `Γ`
//! replaced by its data-driven estimate this is the BEAR estimator.

use nalgebra::{DMatrix, DVector};

use crate::dependence::{gamma_hat, GammaMatrix, KVector};
use crate::tail::{hill, order_desc, TailEstimate};
use crate::{Error, Result, SampleMatrix};

const MAX_ITERATIONS: usize = 100_000;
const MOVE_TOL: f64 = 1e-12;
/// Largest accepted KKT residual, relative to the largest eigenvalue of `Γ`.
pub const KKT_TOL: f64 = 1e-8;

/// Convex weights: nonnegative and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::invalid("weights must not be empty"));
        }
        if lambdas.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(Error::domain("weights must lie in [0, 1]"));
        }
        let total: f64 = lambdas.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("weights sum to {total}, not 1")));
        }
        Ok(Weights(lambdas))
    }

    pub fn uniform(l: usize) -> Self {
        Weights(vec![1.0 / l as f64; l])
    }

    pub fn vertex(i: usize, l: usize) -> Self {
        let mut w = vec![0.0; l];
        w[i] = 1.0;
        Weights(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Output of [`solve_simplex_qp`].
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub weights: Weights,
    pub value: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// `max(maxᵢ |sᵢλᵢ|, maxᵢ (−sᵢ)⁺)` with `s = Γλ − (λᵀΓλ)·1`, divided by
/// `max(1, λ_max(Γ))`.
pub fn kkt_residual(gamma: &GammaMatrix, w: &[f64]) -> f64 {
    let g = gamma.apply(w);
    let mu: f64 = w.iter().zip(&g).map(|(a, b)| a * b).sum();
    let raw = g
        .iter()
        .zip(w)
        .map(|(gi, wi)| {
            let s = gi - mu;
            (s * wi).abs().max(-s)
        })
        .fold(0.0, f64::max);
    raw / gamma.max_eigenvalue().max(1.0)
}

/// Minimizes `λᵀΓλ` over the simplex.
///
/// Projected gradient descent from the uniform point with step
/// `1/(2λ_max(Γ))`, followed by an active-set refinement on the support
/// when the KKT conditions are not yet met to [`KKT_TOL`].
pub fn solve_simplex_qp(gamma: &GammaMatrix) -> Result<QpSolution> {
    let l = gamma.dim();
    if l == 1 {
        return Ok(QpSolution {
            weights: Weights(vec![1.0]),
            value: gamma.get(0, 0),
            iterations: 0,
            kkt_residual: 0.0,
        });
    }
    let lmax = gamma.max_eigenvalue();
    let lmin = gamma.min_eigenvalue();
    if lmin < -1e-10 * lmax.abs().max(1.0) {
        return Err(Error::domain(format!(
            "covariance matrix is not positive semidefinite (smallest eigenvalue {lmin:e})"
        )));
    }
    let mut x = vec![1.0 / l as f64; l];
    let mut iterations = 0;
    if lmax > 0.0 {
        // gradient 2Γx times step 1/(2λ_max)
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let g = gamma.apply(&x);
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - gi / lmax).collect();
            let next = project_simplex(&trial);
            let moved = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = next;
            if moved < MOVE_TOL {
                break;
            }
        }
    }
    let mut residual = kkt_residual(gamma, &x);
    if residual > KKT_TOL {
        if let Some(polished) = active_set(gamma, &x) {
            let r = kkt_residual(gamma, &polished);
            if r < residual && gamma.quadratic_form(&polished) <= gamma.quadratic_form(&x) + 1e-14 {
                x = polished;
                residual = r;
            }
        }
    }
    if residual > KKT_TOL {
        return Err(Error::numerical(format!(
            "simplex QP did not converge: KKT residual {residual:e} after {iterations} iterations"
        )));
    }
    let total: f64 = x.iter().sum();
    let x: Vec<f64> = x.iter().map(|v| (v / total).clamp(0.0, 1.0)).collect();
    Ok(QpSolution {
        value: gamma.quadratic_form(&x),
        weights: Weights(x),
        iterations,
        kkt_residual: residual,
    })
}

/// Primal active-set iterations started from a feasible point. Returns
/// `None` when an equality-constrained subproblem is singular.
fn active_set(gamma: &GammaMatrix, start: &[f64]) -> Option<Vec<f64>> {
    let l = start.len();
    let mut x = start.to_vec();
    let mut support: Vec<bool> = x.iter().map(|&v| v > 1e-12).collect();
    for _ in 0..(8 * l + 8) {
        let idx: Vec<usize> = (0..l).filter(|&i| support[i]).collect();
        let (cand, mu) = solve_on_support(gamma, &idx)?;
        let mut full = vec![0.0; l];
        for (a, &i) in idx.iter().enumerate() {
            full[i] = cand[a];
        }
        if idx.iter().any(|&i| full[i] < 0.0) {
            // ratio test: walk from x toward the candidate until a weight hits 0
            let mut t = 1.0;
            let mut blocking = idx[0];
            for &i in &idx {
                if full[i] < 0.0 {
                    let ti = x[i] / (x[i] - full[i]);
                    if ti < t {
                        t = ti;
                        blocking = i;
                    }
                }
            }
            for i in 0..l {
                x[i] += t * (full[i] - x[i]);
            }
            x[blocking] = 0.0;
            support[blocking] = false;
            continue;
        }
        x = full;
        let g = gamma.apply(&x);
        let entering = (0..l)
            .filter(|&i| !support[i])
            .map(|i| (i, g[i] - mu))
            .filter(|&(_, s)| s < -1e-14 * mu.abs().max(1e-300))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match entering {
            Some((i, _)) => support[i] = true,
            None => return Some(x),
        }
    }
    Some(x)
}

/// Solves `Γ_SS λ = μ1`, `1ᵀλ = 1`.
fn solve_on_support(gamma: &GammaMatrix, idx: &[usize]) -> Option<(Vec<f64>, f64)> {
    let m = idx.len();
    let mut a = DMatrix::zeros(m + 1, m + 1);
    let mut b = DVector::zeros(m + 1);
    for (p, &i) in idx.iter().enumerate() {
        for (q, &j) in idx.iter().enumerate() {
            a[(p, q)] = gamma.get(i, j);
        }
        a[(p, m)] = -1.0;
        a[(m, p)] = 1.0;
    }
    b[m] = 1.0;
    let sol = a.lu().solve(&b)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((sol.rows(0, m).iter().copied().collect(), sol[m]))
}

/// `λᵀΓλ`.
pub fn amse_of(weights: &Weights, gamma: &GammaMatrix) -> Result<f64> {
    if weights.len() != gamma.dim() {
        return Err(Error::invalid(format!(
            "{} weights for a {}x{} matrix",
            weights.len(),
            gamma.dim(),
            gamma.dim()
        )));
    }
    Ok(gamma.quadratic_form(weights.as_slice()).max(0.0))
}

/// k-weighted mean `Σ kᵢγ̂ᵢ / Σ kᵢ` of local estimates.
pub fn average_estimator(estimates: &[TailEstimate]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::invalid("average of an empty set of estimates"));
    }
    if estimates.iter().any(|e| e.k == 0) {
        return Err(Error::domain("every k must be >= 1"));
    }
    let num: f64 = estimates.iter().map(|e| e.k as f64 * e.gamma_hat).sum();
    let den: f64 = estimates.iter().map(|e| e.k as f64).sum();
    Ok(num / den)
}

/// Tail index used to build `Γ̂`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Pilot {
    /// `1 / average_estimator` of the local Hill estimates.
    #[default]
    Average,
    /// A value supplied by the caller.
    Fixed(f64),
}

/// The aggregated estimate together with every intermediate quantity.
#[derive(Debug, Clone)]
pub struct AggregationResult {
    weights: Weights,
    estimate_gamma: f64,
    amse: f64,
    solver_iterations: usize,
    kkt_residual: f64,
    local: Vec<TailEstimate>,
    pilot_alpha: f64,
    average_gamma: f64,
    gamma_hat: GammaMatrix,
}

impl AggregationResult {
    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Aggregated estimate of `1/α`.
    pub fn estimate_gamma(&self) -> f64 {
        self.estimate_gamma
    }

    pub fn estimate_alpha(&self) -> f64 {
        1.0 / self.estimate_gamma
    }

    /// `λᵀΓ̂λ`.
    pub fn amse(&self) -> f64 {
        self.amse
    }

    pub fn solver_iterations(&self) -> usize {
        self.solver_iterations
    }

    pub fn kkt_residual(&self) -> f64 {
        self.kkt_residual
    }

    pub fn local_estimates(&self) -> &[TailEstimate] {
        &self.local
    }

    pub fn pilot_alpha(&self) -> f64 {
        self.pilot_alpha
    }

    /// The Average baseline on the same local estimates.
    pub fn average_gamma(&self) -> f64 {
        self.average_gamma
    }

    /// `λᵀΓ̂λ` evaluated at the weights `kᵢ/Σk` of the Average estimator.
    pub fn average_amse(&self) -> f64 {
        let total: f64 = self.local.iter().map(|e| e.k as f64).sum();
        let w: Vec<f64> = self.local.iter().map(|e| e.k as f64 / total).collect();
        self.gamma_hat.quadratic_form(&w).max(0.0)
    }

    pub fn gamma_hat(&self) -> &GammaMatrix {
        &self.gamma_hat
    }

    /// Normal interval for `α`, `α̂ ± z·α̂²·√(λᵀΓ̂λ/k₁)`, from the delta method
    /// applied to `1/α`.
    pub fn alpha_interval(&self, z: f64) -> (f64, f64) {
        let a = self.estimate_alpha();
        let k1 = self.local[0].k as f64;
        let half = z * a * a * (self.amse / k1).sqrt();
        (a - half, a + half)
    }
}

fn local_hills(samples: &SampleMatrix, kv: &KVector) -> Result<Vec<TailEstimate>> {
    if kv.len() != samples.locations() {
        return Err(Error::invalid(format!(
            "{} sample fractions for {} locations",
            kv.len(),
            samples.locations()
        )));
    }
    samples
        .columns()
        .iter()
        .zip(kv.ks())
        .map(|(col, &k)| hill(&order_desc(col)?, k))
        .collect()
}

/// The BEAR estimator with the Average pilot.
pub fn bear(samples: &SampleMatrix, kv: &KVector) -> Result<AggregationResult> {
    bear_with_pilot(samples, kv, Pilot::Average)
}

/// The BEAR estimator with a chosen pilot tail index.
pub fn bear_with_pilot(samples: &SampleMatrix, kv: &KVector, pilot: Pilot) -> Result<AggregationResult> {
    let local = local_hills(samples, kv)?;
    let average_gamma = average_estimator(&local)?;
    let pilot_alpha = match pilot {
        Pilot::Average => 1.0 / average_gamma,
        Pilot::Fixed(a) => a,
    };
    if !(pilot_alpha > 0.0 && pilot_alpha.is_finite()) {
        return Err(Error::degenerate(format!(
            "pilot tail index {pilot_alpha} is not a positive number"
        )));
    }
    let g = gamma_hat(samples, kv, pilot_alpha)?;
    let qp = solve_simplex_qp(&g)?;
    let estimate_gamma = qp
        .weights
        .as_slice()
        .iter()
        .zip(&local)
        .map(|(w, e)| w * e.gamma_hat)
        .sum();
    Ok(AggregationResult {
        amse: qp.value.max(0.0),
        weights: qp.weights,
        estimate_gamma,
        solver_iterations: qp.iterations,
        kkt_residual: qp.kkt_residual,
        local,
        pilot_alpha,
        average_gamma,
        gamma_hat: g,
    })
}
