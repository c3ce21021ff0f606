//! Pairwise exponent measures and the asymptotic covariance `Γ` of the local
//! Hill estimators.
//!
//! For locations `i ≠ j` and per-location sample fractions `kᵢ`, with
//! `cᵢ = k₁/kᵢ`,
//!
//! ```text
//! Γᵢⱼ = cᵢcⱼ · νᵢⱼ(cᵢ^{1/α}, cⱼ^{1/α}) / α²        Γᵢᵢ = cᵢ / α²
//! ```
//!
//! is the limit covariance of `√k₁ (H⁽ⁱ⁾ − 1/α)`. `νᵢⱼ(x, y)` is the mass the
//! exponent measure puts on `{Xᵢ > x, Xⱼ > y}` after standardizing each margin
//! by its own high quantile.
//!
//! The factor `cᵢcⱼ` comes from normalizing by `√k₁` while location `i`
//! averages over `kᵢ` exceedances. It equals one when all `kᵢ` agree.

mod covariance;
mod quadrature;

pub use covariance::{asym_cov, asym_variance, theta_l, theta_l_diagonal};
pub use quadrature::{adaptive_simpson, tail_integral, QUAD_TOL};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result, SampleMatrix};

/// Where the values of a pair measure come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    GumbelClosedForm { beta: f64 },
    Empirical { k_ref: usize },
    Custom,
}

/// A bivariate exponent measure `(x, y) ↦ ν((x, ∞] × (y, ∞])`.
pub trait PairMeasure: Sync {
    fn nu(&self, x: f64, y: f64) -> f64;

    fn provenance(&self) -> Provenance {
        Provenance::Custom
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> PairMeasure for F {
    fn nu(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

/// Closed-form pair measure of the Gumbel copula with heavy-tailed margins:
/// `ν(x, y) = x^{-α} + y^{-α} − (x^{-αβ} + y^{-αβ})^{1/β}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelPair {
    alpha: f64,
    beta: f64,
}

impl GumbelPair {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(beta >= 1.0 && beta.is_finite()) {
            return Err(Error::domain(format!("beta must be >= 1, got {beta}")));
        }
        Ok(GumbelPair { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl PairMeasure for GumbelPair {
    fn nu(&self, x: f64, y: f64) -> f64 {
        gumbel_nu(self.alpha, self.beta, x, y)
    }

    fn provenance(&self) -> Provenance {
        Provenance::GumbelClosedForm { beta: self.beta }
    }
}

fn gumbel_nu(alpha: f64, beta: f64, x: f64, y: f64) -> f64 {
    if beta == 1.0 {
        return 0.0;
    }
    let a = x.powf(-alpha);
    let b = y.powf(-alpha);
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if hi == 0.0 {
        return 0.0;
    }
    if hi.is_infinite() {
        return lo;
    }
    // a + b − (a^β + b^β)^{1/β} rewritten to avoid cancellation when a ≪ b
    let r = lo / hi;
    (lo - hi * ((r.powf(beta)).ln_1p() / beta).exp_m1()).max(0.0)
}

/// `νᵢⱼ(x, y)` for Gumbel dependence. Zero for `β = 1`.
pub fn gumbel_pair_nu(alpha: f64, beta: f64, x: f64, y: f64) -> Result<f64> {
    GumbelPair::new(alpha, beta)?;
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::domain(format!("arguments must be positive, got ({x}, {y})")));
    }
    Ok(gumbel_nu(alpha, beta, x, y))
}

/// The full `l`-dimensional Gumbel exponent measure of `(x, ∞]`, by
/// inclusion–exclusion over the non-empty subsets of coordinates:
/// `Σ_S (−1)^{|S|+1} (Σ_{i∈S} xᵢ^{-αβ})^{1/β}`.
pub fn gumbel_full_nu(alpha: f64, beta: f64, xs: &[f64]) -> Result<f64> {
    GumbelPair::new(alpha, beta)?;
    if xs.is_empty() || xs.len() > 30 {
        return Err(Error::invalid("inclusion-exclusion needs 1 to 30 coordinates"));
    }
    if xs.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::domain("arguments must be positive"));
    }
    let powers: Vec<f64> = xs.iter().map(|x| x.powf(-alpha * beta)).collect();
    let l = xs.len();
    let mut total = 0.0;
    for mask in 1u64..(1u64 << l) {
        let s: f64 = (0..l).filter(|i| mask >> i & 1 == 1).map(|i| powers[i]).sum();
        let term = s.powf(1.0 / beta);
        if mask.count_ones() % 2 == 1 {
            total += term;
        } else {
            total -= term;
        }
    }
    Ok(total.max(0.0))
}

/// Empirical pair measure
/// `ν̂(x, y) = (1/k) Σₘ 1(Xₘ⁽ⁱ⁾/Xᵢ(k) > x, Xₘ⁽ʲ⁾/Xⱼ(k) > y)`,
/// where `Xᵢ(k)` is the `k`-th largest value of column `i`.
#[derive(Debug, Clone)]
pub struct EmpiricalPair {
    scaled_i: Vec<f64>,
    scaled_j: Vec<f64>,
    k_ref: usize,
}

impl EmpiricalPair {
    pub fn new(col_i: &[f64], col_j: &[f64], k_ref: usize) -> Result<Self> {
        if col_i.len() != col_j.len() {
            return Err(Error::invalid(format!(
                "columns differ in length ({} vs {})",
                col_i.len(),
                col_j.len()
            )));
        }
        let scaled_i = scale_by_order_stat(col_i, k_ref)?;
        let scaled_j = scale_by_order_stat(col_j, k_ref)?;
        Ok(EmpiricalPair {
            scaled_i,
            scaled_j,
            k_ref,
        })
    }

    fn from_scaled(scaled_i: &[f64], scaled_j: &[f64], k_ref: usize) -> Self {
        EmpiricalPair {
            scaled_i: scaled_i.to_vec(),
            scaled_j: scaled_j.to_vec(),
            k_ref,
        }
    }
}

impl PairMeasure for EmpiricalPair {
    fn nu(&self, x: f64, y: f64) -> f64 {
        count_joint(&self.scaled_i, &self.scaled_j, x, y) as f64 / self.k_ref as f64
    }

    fn provenance(&self) -> Provenance {
        Provenance::Empirical { k_ref: self.k_ref }
    }
}

fn count_joint(zi: &[f64], zj: &[f64], x: f64, y: f64) -> usize {
    zi.iter().zip(zj).filter(|(&a, &b)| a > x && b > y).count()
}

/// `col / X(k)` with `X(k)` the `k`-th largest value.
fn scale_by_order_stat(col: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = col.len();
    if k == 0 || k >= n {
        return Err(Error::domain(format!(
            "reference k must satisfy 1 <= k <= n-1 = {}, got {k}",
            n.saturating_sub(1)
        )));
    }
    let mut buf = col.to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    let threshold = *kth;
    if !(threshold > 0.0) {
        return Err(Error::domain(format!(
            "order statistic X({k}) = {threshold} is not positive"
        )));
    }
    Ok(col.iter().map(|x| x / threshold).collect())
}

/// `ν̂ᵢⱼ(x, y)` evaluated once.
pub fn empirical_pair_nu(col_i: &[f64], col_j: &[f64], k_ref: usize, x: f64, y: f64) -> Result<f64> {
    Ok(EmpiricalPair::new(col_i, col_j, k_ref)?.nu(x, y))
}

/// Per-location sample fractions and their ratios `cᵢ = k₁/kᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KVector {
    ks: Vec<usize>,
    cs: Vec<f64>,
}

impl KVector {
    pub fn new(ks: Vec<usize>) -> Result<Self> {
        if ks.is_empty() {
            return Err(Error::invalid("need at least one k"));
        }
        if let Some(pos) = ks.iter().position(|&k| k == 0) {
            return Err(Error::domain(format!("k at position {pos} must be >= 1")));
        }
        let k1 = ks[0] as f64;
        let cs = ks.iter().map(|&k| k1 / k as f64).collect();
        Ok(KVector { ks, cs })
    }

    pub fn ks(&self) -> &[usize] {
        &self.ks
    }

    pub fn cs(&self) -> &[f64] {
        &self.cs
    }

    pub fn k_ref(&self) -> usize {
        self.ks[0]
    }

    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    /// Same k at every location.
    pub fn uniform(k: usize, l: usize) -> Result<Self> {
        Self::new(vec![k; l])
    }
}

/// `cᵢ = k₁/kᵢ` for the given sample fractions.
pub fn c_ratios(ks: &[usize]) -> Result<KVector> {
    KVector::new(ks.to_vec())
}

/// A symmetric `l × l` covariance matrix of √k₁-normalized local estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    entries: DMatrix<f64>,
    alpha_used: f64,
    k_ref: usize,
    min_eigenvalue_before_repair: Option<f64>,
}

impl GammaMatrix {
    /// Wraps a user-supplied matrix. It must be square and symmetric up to
    /// `1e-12` relative; it is symmetrized exactly.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let l = rows.len();
        if l == 0 {
            return Err(Error::invalid("empty matrix"));
        }
        if rows.iter().any(|r| r.len() != l) {
            return Err(Error::invalid("matrix must be square"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let m = DMatrix::from_fn(l, l, |i, j| rows[i][j]);
        let scale = m.amax().max(1.0);
        for i in 0..l {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(GammaMatrix {
            entries: symmetrize(&m),
            alpha_used: f64::NAN,
            k_ref: 0,
            min_eigenvalue_before_repair: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.entries[(i, j)]).collect())
            .collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Tail index the matrix was built with (`NaN` for user-supplied matrices).
    pub fn alpha_used(&self) -> f64 {
        self.alpha_used
    }

    pub fn k_ref(&self) -> usize {
        self.k_ref
    }

    /// Smallest eigenvalue of the symmetrized estimate before negative
    /// eigenvalues were clipped, when a repair pass ran.
    pub fn min_eigenvalue_before_repair(&self) -> Option<f64> {
        self.min_eigenvalue_before_repair
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `λᵀΓλ`.
    pub fn quadratic_form(&self, w: &[f64]) -> f64 {
        let l = self.dim();
        let mut s = 0.0;
        for (i, wi) in w.iter().enumerate().take(l) {
            let row: f64 = w.iter().enumerate().take(l).map(|(j, wj)| self.entries[(i, j)] * wj).sum();
            s += wi * row;
        }
        s
    }

    /// `Γλ`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let l = self.dim();
        (0..l)
            .map(|i| (0..l).map(|j| self.entries[(i, j)] * w[j]).sum())
            .collect()
    }

    /// Same matrix with rows and columns reordered: entry `(a, b)` of the
    /// result is entry `(order[a], order[b])` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let l = order.len();
        GammaMatrix {
            entries: DMatrix::from_fn(l, l, |a, b| self.entries[(order[a], order[b])]),
            ..self.clone()
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        GammaMatrix {
            entries: &self.entries * t,
            ..self.clone()
        }
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `Γ` from a known pair measure (the same for every pair of locations).
pub fn gamma_theoretical(nu: &dyn PairMeasure, alpha: f64, kv: &KVector) -> Result<GammaMatrix> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    let l = kv.len();
    let a2 = alpha * alpha;
    let xs: Vec<f64> = kv.cs().iter().map(|c| c.powf(1.0 / alpha)).collect();
    let mut m = DMatrix::zeros(l, l);
    for i in 0..l {
        m[(i, i)] = kv.cs()[i] / a2;
        for j in 0..i {
            let v = kv.cs()[i] * kv.cs()[j] * nu.nu(xs[i], xs[j]) / a2;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(GammaMatrix {
        entries: m,
        alpha_used: alpha,
        k_ref: kv.k_ref(),
        min_eigenvalue_before_repair: None,
    })
}

/// Data-driven `Γ̂`: off-diagonals `cᵢcⱼ ν̂ᵢⱼ(cᵢ^{1/α̂}, cⱼ^{1/α̂})/α̂²` with the
/// empirical measure thresholded at `k₁`, diagonal `cᵢ/α̂²`. The result is
/// symmetrized and made positive semidefinite by clipping negative
/// eigenvalues at zero.
pub fn gamma_hat(samples: &SampleMatrix, kv: &KVector, alpha_pilot: f64) -> Result<GammaMatrix> {
    if !(alpha_pilot > 0.0 && alpha_pilot.is_finite()) {
        return Err(Error::domain(format!(
            "pilot tail index must be positive, got {alpha_pilot}"
        )));
    }
    let l = samples.locations();
    if kv.len() != l {
        return Err(Error::invalid(format!(
            "{} sample fractions for {l} locations",
            kv.len()
        )));
    }
    let k_ref = kv.k_ref();
    let scaled: Vec<Vec<f64>> = samples
        .columns()
        .iter()
        .map(|c| scale_by_order_stat(c, k_ref))
        .collect::<Result<_>>()?;
    let a2 = alpha_pilot * alpha_pilot;
    let xs: Vec<f64> = kv.cs().iter().map(|c| c.powf(1.0 / alpha_pilot)).collect();
    let mut m = DMatrix::zeros(l, l);
    for i in 0..l {
        m[(i, i)] = kv.cs()[i] / a2;
        for j in 0..i {
            let count = count_joint(&scaled[i], &scaled[j], xs[i], xs[j]);
            let v = kv.cs()[i] * kv.cs()[j] * count as f64 / k_ref as f64 / a2;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let (entries, min_eig) = repair_psd(m);
    Ok(GammaMatrix {
        entries,
        alpha_used: alpha_pilot,
        k_ref,
        min_eigenvalue_before_repair: Some(min_eig),
    })
}

/// Symmetrizes and clips negative eigenvalues; also returns the smallest
/// eigenvalue seen before clipping.
fn repair_psd(m: DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let sym = symmetrize(&m);
    let eig = SymmetricEigen::new(sym.clone());
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig >= 0.0 {
        return (sym, min_eig);
    }
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    (symmetrize(&rebuilt), min_eig)
}

/// Builds an [`EmpiricalPair`] for columns `i` and `j` of a sample with the
/// reference fraction of `kv`.
pub fn empirical_measure(samples: &SampleMatrix, i: usize, j: usize, k_ref: usize) -> Result<EmpiricalPair> {
    let zi = scale_by_order_stat(samples.column(i), k_ref)?;
    let zj = scale_by_order_stat(samples.column(j), k_ref)?;
    Ok(EmpiricalPair::from_scaled(&zi, &zj, k_ref))
}
