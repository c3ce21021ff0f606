//! Monte-Carlo checks of the limit covariances against simulated fields.

use bear_core::dependence::{asym_cov, gamma_hat, gamma_theoretical, theta_l, theta_l_diagonal, GumbelPair, KVector};
use bear_core::harness::replication_rng;
use bear_core::models::{CopulaModel, FieldModel, MarginalModel};
use bear_core::stats::covariance;
use bear_core::tail::{hill, log_moments, order_desc, EstimatorKind};
use rayon::prelude::*;

fn frechet_field(alpha: f64, beta: f64, l: usize) -> FieldModel {
    FieldModel::homogeneous(MarginalModel::frechet(alpha).unwrap(), l, CopulaModel::gumbel(beta).unwrap()).unwrap()
}

#[test]
fn gamma_hat_converges_to_closed_form() {
    let kv = KVector::uniform(1000, 2).unwrap();
    let s = frechet_field(1.0, 3.0, 2).sample(50_000, &mut replication_rng(41, 0)).unwrap();
    let g = gamma_hat(&s, &kv, 1.0).unwrap();
    let want = 2.0 - 2f64.cbrt();
    assert!((g.get(0, 1) - want).abs() < 0.05, "{} vs {want}", g.get(0, 1));

    let kv = KVector::uniform(500, 3).unwrap();
    let s = frechet_field(1.0, 1.0, 3).sample(50_000, &mut replication_rng(42, 0)).unwrap();
    let g = gamma_hat(&s, &kv, 1.0).unwrap();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        assert!(g.get(i, j).abs() < 0.05);
    }
}

#[test]
fn hill_ratio_near_the_comonotone_limit() {
    let g = GumbelPair::new(1.0, 50.0).unwrap();
    let v = asym_cov(EstimatorKind::Hill, EstimatorKind::Ratio, &g, 1.0, 1.0, 1.0).unwrap();
    assert!((v - 1.0).abs() < 0.02, "{v}");
}

/// `Cov(√k₁(H⁽¹⁾ − 1/α), √k₁(H⁽²⁾ − 1/α))` with per-location sample fractions.
fn simulated_hill_cov(field: &FieldModel, n: usize, ks: [usize; 2], reps: u64, seed: u64) -> f64 {
    let alpha = field.alpha();
    let sk = (ks[0] as f64).sqrt();
    let draws: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let s = field.sample(n, &mut replication_rng(seed, rep)).unwrap();
            let h = |j: usize| hill(&order_desc(s.column(j)).unwrap(), ks[j]).unwrap().gamma_hat;
            (sk * (h(0) - 1.0 / alpha), sk * (h(1) - 1.0 / alpha))
        })
        .collect();
    let (a, b): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
    covariance(&a, &b)
}

#[test]
fn unequal_sample_fractions_follow_gamma() {
    let field = frechet_field(2.0, 3.0, 2);
    let g = GumbelPair::new(2.0, 3.0).unwrap();
    for (ks, seed) in [([200, 50], 51), ([100, 300], 52)] {
        let kv = KVector::new(ks.to_vec()).unwrap();
        let want = gamma_theoretical(&g, 2.0, &kv).unwrap().get(0, 1);
        let got = simulated_hill_cov(&field, 10_000, ks, 2000, seed);
        assert!((got - want).abs() < 0.15 * want, "ks {ks:?}: simulated {got} vs {want}");
        // dropping the c₁c₂ factor puts the limit far from the simulation
        let cs = kv.cs();
        let unscaled = want / (cs[0] * cs[1]);
        assert!((got - unscaled).abs() > 0.5 * got);
    }
}

#[test]
fn second_log_moment_covariance() {
    let (alpha, k, n, reps) = (1.0, 200usize, 5000, 2000u64);
    let field = frechet_field(alpha, 3.0, 2);
    let sk = (k as f64).sqrt();
    let target = 2.0 / (alpha * alpha);
    let draws: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let s = field.sample(n, &mut replication_rng(61, rep)).unwrap();
            let l = |j: usize| log_moments(&order_desc(s.column(j)).unwrap(), k).unwrap().1;
            (sk * (l(0) - target), sk * (l(1) - target))
        })
        .collect();
    let (a, b): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
    let off = covariance(&a, &b);
    let g = GumbelPair::new(alpha, 3.0).unwrap();
    let want = theta_l(&g, alpha, 1.0, 1.0).unwrap();
    assert!((off - want).abs() < 0.20 * want, "off-diagonal {off} vs {want}");
    let var = covariance(&a, &a);
    let want = theta_l_diagonal(alpha, 1.0).unwrap();
    assert!((var - want).abs() < 0.20 * want, "diagonal {var} vs {want}");
}
