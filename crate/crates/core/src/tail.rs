//! Univariate tail-index estimators built on the upper order statistics of a
//! single location.
//!
//! With `X(1) ≥ … ≥ X(n)` the order statistics and `k` the number of upper
//! order statistics used:
//!
//! ```text
//! H = (1/k) Σᵢ₌₁..ₖ log(X(i)/X(k+1))            Hill, estimates 1/α
//! L = (1/k) Σᵢ₌₁..ₖ log²(X(i)/X(k+1))           second log-moment, estimates 2/α²
//! M = H + 1 - ½ (1 - H²/L)⁻¹                    Moment estimator
//! J = L / (2H)                                  Ratio estimator
//! ```
//!
//! All of them only look at the `k + 1` largest values and are invariant
//! under rescaling of the sample.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Below this an estimate of `1/α` is treated as zero and `α` is undefined.
pub const GAMMA_FLOOR: f64 = 1e-12;

/// Values of one location sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedColumn {
    values: Vec<f64>,
}

impl OrderedColumn {
    /// Stable descending sort; tied values keep their input order.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("cannot order an empty column"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("column contains NaN"));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(OrderedColumn { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The `i`-th largest value, 1-based.
    pub fn order_stat(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    /// `log(X(i)/X(k+1))` for `i = 1..=k`, after validating `k`.
    fn log_excesses(&self, k: usize) -> Result<impl Iterator<Item = f64> + '_> {
        let n = self.values.len();
        if k == 0 || k >= n {
            return Err(Error::domain(format!(
                "k must satisfy 1 <= k <= n-1 = {}, got {k}",
                n.saturating_sub(1)
            )));
        }
        let threshold = self.values[k];
        if threshold <= 0.0 {
            return Err(Error::domain(format!(
                "X(k+1) = {threshold} is not positive for k = {k}"
            )));
        }
        Ok(self.values[..k].iter().map(move |&x| (x / threshold).ln()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Hill,
    Moment,
    Ratio,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [EstimatorKind::Hill, EstimatorKind::Moment, EstimatorKind::Ratio];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Hill => "hill",
            EstimatorKind::Moment => "moment",
            EstimatorKind::Ratio => "ratio",
        }
    }

    /// Dispatches to [`hill`], [`moment_estimator`] or [`ratio_estimator`].
    pub fn estimate(&self, col: &OrderedColumn, k: usize) -> Result<TailEstimate> {
        match self {
            EstimatorKind::Hill => hill(col, k),
            EstimatorKind::Moment => moment_estimator(col, k),
            EstimatorKind::Ratio => ratio_estimator(col, k),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hill" => Ok(EstimatorKind::Hill),
            "moment" => Ok(EstimatorKind::Moment),
            "ratio" => Ok(EstimatorKind::Ratio),
            other => Err(Error::invalid(format!("unknown estimator '{other}'"))),
        }
    }
}

/// An estimate of the extreme-value index `γ = 1/α` from the `k` largest
/// observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub kind: EstimatorKind,
    pub k: usize,
    pub gamma_hat: f64,
}

impl TailEstimate {
    /// `1/γ̂`, or `None` when `γ̂` is not safely positive.
    pub fn alpha_hat(&self) -> Option<f64> {
        alpha_from_gamma(self.gamma_hat)
    }
}

pub fn alpha_from_gamma(gamma: f64) -> Option<f64> {
    (gamma > GAMMA_FLOOR).then(|| 1.0 / gamma)
}

/// Sorts a raw column in descending order.
pub fn order_desc(column: &[f64]) -> Result<OrderedColumn> {
    OrderedColumn::from_slice(column)
}

/// Hill estimator of `1/α` based on the `k` largest observations.
pub fn hill(col: &OrderedColumn, k: usize) -> Result<TailEstimate> {
    let sum: f64 = col.log_excesses(k)?.sum();
    Ok(TailEstimate {
        kind: EstimatorKind::Hill,
        k,
        gamma_hat: sum / k as f64,
    })
}

/// Second log-moment `L`, an estimator of `2/α²`.
pub fn log_moment2(col: &OrderedColumn, k: usize) -> Result<f64> {
    let sum: f64 = col.log_excesses(k)?.map(|e| e * e).sum();
    Ok(sum / k as f64)
}

/// Both log-moments `(H, L)` in one pass.
pub fn log_moments(col: &OrderedColumn, k: usize) -> Result<(f64, f64)> {
    let (s1, s2) = col
        .log_excesses(k)?
        .fold((0.0, 0.0), |(a, b), e| (a + e, b + e * e));
    Ok((s1 / k as f64, s2 / k as f64))
}

/// `M = H + 1 - ½(1 - H²/L)⁻¹` from given log-moments.
pub fn moment_from_log_moments(h: f64, l: f64) -> Result<f64> {
    // L ≥ H² always; equality (up to rounding) makes the correction blow up
    if !(l > 0.0) || l - h * h <= 4.0 * f64::EPSILON * l {
        return Err(Error::degenerate(format!(
            "moment estimator undefined: L = {l} equals H² = {}",
            h * h
        )));
    }
    Ok(h + 1.0 - 0.5 / (1.0 - h * h / l))
}

/// `J = L/(2H)` from given log-moments.
pub fn ratio_from_log_moments(h: f64, l: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::degenerate(format!(
            "ratio estimator undefined: H = {h}"
        )));
    }
    Ok(l / (2.0 * h))
}

/// Dekkers–Einmahl–de Haan moment estimator.
pub fn moment_estimator(col: &OrderedColumn, k: usize) -> Result<TailEstimate> {
    let (h, l) = log_moments(col, k)?;
    Ok(TailEstimate {
        kind: EstimatorKind::Moment,
        k,
        gamma_hat: moment_from_log_moments(h, l)?,
    })
}

/// Ratio-of-moments estimator `L/(2H)`.
pub fn ratio_estimator(col: &OrderedColumn, k: usize) -> Result<TailEstimate> {
    let (h, l) = log_moments(col, k)?;
    Ok(TailEstimate {
        kind: EstimatorKind::Ratio,
        k,
        gamma_hat: ratio_from_log_moments(h, l)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillPlotRow {
    pub k: usize,
    pub gamma_hat: f64,
    pub alpha_hat: Option<f64>,
}

/// Hill estimates for every `k` in `k_min..=k_max`, in increasing `k`.
pub fn hill_plot_series(col: &OrderedColumn, k_min: usize, k_max: usize) -> Result<Vec<HillPlotRow>> {
    if k_min == 0 || k_min > k_max || k_max >= col.len() {
        return Err(Error::domain(format!(
            "Hill plot range must satisfy 1 <= k_min <= k_max <= n-1 = {}, got [{k_min}, {k_max}]",
            col.len().saturating_sub(1)
        )));
    }
    (k_min..=k_max)
        .map(|k| {
            let est = hill(col, k)?;
            Ok(HillPlotRow {
                k,
                gamma_hat: est.gamma_hat,
                alpha_hat: est.alpha_hat(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn four() -> OrderedColumn {
        order_desc(&[2.0, 8.0, 4.0, 1.0]).unwrap()
    }

    // hand evaluation on [8, 4, 2, 1] with k = 2 (threshold X(3) = 2)
    fn h_four() -> f64 {
        (4f64.ln() + 2f64.ln()) / 2.0
    }
    fn l_four() -> f64 {
        (4f64.ln().powi(2) + 2f64.ln().powi(2)) / 2.0
    }

    #[test]
    fn sorting_examples() {
        assert_eq!(four().values(), &[8.0, 4.0, 2.0, 1.0]);
        assert_eq!(order_desc(&[5.0, 5.0, 1.0]).unwrap().values(), &[5.0, 5.0, 1.0]);
        let sorted = [9.0, 3.0, 3.0, -1.0];
        assert_eq!(order_desc(&sorted).unwrap().values(), &sorted);
        assert!(order_desc(&[]).is_err());
    }

    #[test]
    fn hill_example() {
        let h = hill(&four(), 2).unwrap();
        assert!((h.gamma_hat - h_four()).abs() < 1e-15);
        assert!((h.gamma_hat - 1.039721).abs() < 1e-6);
    }

    #[test]
    fn hill_of_constant_column_is_zero() {
        let c = order_desc(&[3.0; 10]).unwrap();
        for k in 1..10 {
            let h = hill(&c, k).unwrap();
            assert_eq!(h.gamma_hat, 0.0);
            assert_eq!(h.alpha_hat(), None);
        }
    }

    #[test]
    fn hill_is_scale_invariant_example() {
        let scaled = order_desc(&[2.0 * 7.3, 8.0 * 7.3, 4.0 * 7.3, 7.3]).unwrap();
        assert!((hill(&scaled, 2).unwrap().gamma_hat - h_four()).abs() < 1e-12);
    }

    #[test]
    fn k_out_of_range() {
        assert!(matches!(hill(&four(), 0), Err(Error::Domain(_))));
        assert!(matches!(hill(&four(), 4), Err(Error::Domain(_))));
        assert!(hill(&four(), 3).is_ok());
    }

    #[test]
    fn nonpositive_threshold_is_a_domain_error() {
        let c = order_desc(&[5.0, 3.0, 0.0, -1.0]).unwrap();
        assert!(hill(&c, 1).is_ok());
        assert!(matches!(hill(&c, 2), Err(Error::Domain(_))));
        assert!(matches!(log_moment2(&c, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn log_moment_example() {
        assert!((log_moment2(&four(), 2).unwrap() - l_four()).abs() < 1e-15);
        assert_eq!(log_moment2(&order_desc(&[2.0; 5]).unwrap(), 3).unwrap(), 0.0);
    }

    #[test]
    fn log_moment_of_exact_pareto_tends_to_two_over_alpha_squared() {
        // X(i) = (n/i)^{1/α} with α = 1
        let n = 200_000;
        let col = OrderedColumn::new((1..=n).map(|i| n as f64 / i as f64).collect()).unwrap();
        let l = log_moment2(&col, n - 1).unwrap();
        assert!((l - 2.0).abs() < 0.01, "{l}");
    }

    #[test]
    fn moment_examples() {
        assert!((moment_from_log_moments(0.5, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((moment_from_log_moments(0.5, 1.0).unwrap() - (1.5 - 0.5 / 0.75)).abs() < 1e-15);
        assert!((moment_from_log_moments(0.5, 1.0).unwrap() - 0.833333).abs() < 1e-6);
        let flat = order_desc(&[4.0; 6]).unwrap();
        assert!(matches!(moment_estimator(&flat, 3), Err(Error::Degenerate(_))));
    }

    #[test]
    fn moment_recovers_exact_log_moments() {
        for alpha in [0.5, 1.0, 2.0, 4.0] {
            let m = moment_from_log_moments(1.0 / alpha, 2.0 / (alpha * alpha)).unwrap();
            assert!((m - 1.0 / alpha).abs() < 1e-14);
        }
    }

    #[test]
    fn ratio_examples() {
        assert!((ratio_from_log_moments(0.5, 0.5).unwrap() - 0.5).abs() < 1e-15);
        let j = ratio_estimator(&four(), 2).unwrap();
        assert!((j.gamma_hat - l_four() / (2.0 * h_four())).abs() < 1e-15);
        let flat = order_desc(&[4.0; 6]).unwrap();
        assert!(matches!(ratio_estimator(&flat, 3), Err(Error::Degenerate(_))));
    }

    #[test]
    fn hill_plot_examples() {
        let rows = hill_plot_series(&four(), 2, 2).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].k, 2);
        assert!((rows[0].gamma_hat - h_four()).abs() < 1e-15);
        assert!((rows[0].alpha_hat.unwrap() - 1.0 / h_four()).abs() < 1e-15);
        assert!(hill_plot_series(&four(), 3, 2).is_err());
        assert!(hill_plot_series(&four(), 0, 2).is_err());
        assert!(hill_plot_series(&four(), 1, 4).is_err());
        let all = hill_plot_series(&four(), 1, 3).unwrap();
        for r in &all {
            assert_eq!(r.gamma_hat, hill(&four(), r.k).unwrap().gamma_hat);
        }
    }

    #[test]
    fn hill_plot_of_exact_pareto_is_flat() {
        let n = 5000;
        let alpha = 2.0;
        let col = OrderedColumn::new((1..=n).map(|i| (n as f64 / i as f64).powf(1.0 / alpha)).collect())
            .unwrap();
        let rows = hill_plot_series(&col, 100, 2000).unwrap();
        for r in rows {
            assert!((r.gamma_hat - 0.5).abs() < 0.03, "k={} gamma={}", r.k, r.gamma_hat);
        }
    }

    #[test]
    fn hill_matches_log_sum_on_exact_pareto() {
        let n = 150;
        for alpha in [0.5, 1.0, 3.0] {
            let xs: Vec<f64> = (1..=n).map(|i| (n as f64 / i as f64).powf(1.0 / alpha)).collect();
            let col = OrderedColumn::new(xs.clone()).unwrap();
            for k in [1, 10, 75, 149] {
                let brute: f64 =
                    xs[..k].iter().map(|x| x.ln()).sum::<f64>() / k as f64 - xs[k].ln();
                assert!((hill(&col, k).unwrap().gamma_hat - brute).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn estimator_names_parse() {
        for kind in EstimatorKind::ALL {
            assert_eq!(kind.name().parse::<EstimatorKind>().unwrap(), kind);
        }
        assert!("pickands".parse::<EstimatorKind>().is_err());
    }

    fn positive_sample() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1e3, 5..80)
    }

    proptest! {
        #[test]
        fn scale_invariance(xs in positive_sample(), c in 1e-3f64..1e3, kfrac in 0.05f64..0.95) {
            let k = ((xs.len() - 1) as f64 * kfrac).max(1.0) as usize;
            let a = OrderedColumn::new(xs.clone()).unwrap();
            let b = OrderedColumn::new(xs.iter().map(|x| x * c).collect()).unwrap();
            let (ha, la) = log_moments(&a, k).unwrap();
            let (hb, lb) = log_moments(&b, k).unwrap();
            prop_assert!((ha - hb).abs() <= 1e-12 * ha.abs().max(1.0));
            prop_assert!((la - lb).abs() <= 1e-12 * la.abs().max(1.0));
            for kind in EstimatorKind::ALL {
                match (kind.estimate(&a, k), kind.estimate(&b, k)) {
                    (Ok(ea), Ok(eb)) => prop_assert!(
                        (ea.gamma_hat - eb.gamma_hat).abs() <= 1e-9 * ea.gamma_hat.abs().max(1.0)
                    ),
                    (Err(_), Err(_)) => {}
                    (ra, rb) => prop_assert!(false, "{kind}: {ra:?} vs {rb:?}"),
                }
            }
        }

        #[test]
        fn top_k_locality(xs in positive_sample(), kfrac in 0.05f64..0.8, shrink in 0.0f64..1.0) {
            let a = OrderedColumn::new(xs).unwrap();
            let k = ((a.len() - 2) as f64 * kfrac).max(1.0) as usize;
            let threshold = a.order_stat(k + 1);
            // push every value strictly below X(k+1) further down
            let moved: Vec<f64> = a
                .values()
                .iter()
                .map(|&x| if x < threshold { x * shrink } else { x })
                .collect();
            let b = OrderedColumn::new(moved).unwrap();
            prop_assert_eq!(log_moments(&a, k).unwrap(), log_moments(&b, k).unwrap());
            for kind in EstimatorKind::ALL {
                prop_assert_eq!(kind.estimate(&a, k).ok(), kind.estimate(&b, k).ok());
            }
        }

        #[test]
        fn second_moment_dominates_squared_hill(xs in positive_sample(), kfrac in 0.05f64..0.95) {
            let col = OrderedColumn::new(xs).unwrap();
            let k = ((col.len() - 1) as f64 * kfrac).max(1.0) as usize;
            let (h, l) = log_moments(&col, k).unwrap();
            prop_assert!(l >= h * h * (1.0 - 1e-12));
        }
    }
}
