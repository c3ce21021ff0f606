//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line to
//! stderr (bypassing the test harness capture) and then asserts.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bear_core::aggregation::{kkt_residual, solve_simplex_qp, KKT_TOL};
use bear_core::dependence::{asym_cov, empirical_pair_nu, gamma_theoretical, GammaMatrix, GumbelPair, KVector};
use bear_core::harness::{amse_experiment, clt_validation, CltConfig, ExperimentConfig, KPolicy};
use bear_core::models::{sample_gumbel_copula, CopulaModel, Family, FieldModel, MarginalModel};
use bear_core::stats::kendall_tau;
use bear_core::tail::{hill, log_moments, order_desc, EstimatorKind};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use EstimatorKind::{Hill, Moment, Ratio};

fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {criterion}: {verdict} {detail}");
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// (1/k) Σ log(X(i)/X(k+1)) over a fresh descending sort, summed in order.
fn brute_hill(xs: &[f64], k: usize) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut s = 0.0;
    for x in &v[..k] {
        s += x.ln() - v[k].ln();
    }
    s / k as f64
}

#[test]
fn criterion_1_hill_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..=200);
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powf(-1.0 / rng.random_range(0.5..4.0)) * 10.0).collect();
        let k = rng.random_range(1..n);
        let got = hill(&order_desc(&xs).unwrap(), k).unwrap().gamma_hat;
        let want = brute_hill(&xs, k);
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12 && elapsed < Duration::from_secs(1);
    report(1, pass, &format!("max error {worst:.2e} (tol 1e-12), {}", secs(elapsed)));
    assert!(pass);
}

#[test]
fn criterion_2_clt_covariance() {
    let start = Instant::now();
    let field = FieldModel::homogeneous(MarginalModel::frechet(2.0).unwrap(), 2, CopulaModel::gumbel(3.0).unwrap()).unwrap();
    let r = clt_validation(&CltConfig {
        field,
        n: 5000,
        k: 200,
        replications: 2000,
        seed: 2,
        kinds: vec![Hill],
    })
    .unwrap();
    // closed-form Gumbel measure at (1, 1) for β = 3, divided by α²
    let off_target = (2.0 - 2f64.powf(1.0 / 3.0)) / 4.0;
    let off = r.entry(0, Hill, 1, Hill).unwrap().empirical;
    let d1 = r.entry(0, Hill, 0, Hill).unwrap().empirical;
    let d2 = r.entry(1, Hill, 1, Hill).unwrap().empirical;
    let elapsed = start.elapsed();
    let pass = rel(off, off_target) <= 0.20
        && rel(d1, 0.25) <= 0.15
        && rel(d2, 0.25) <= 0.15
        && elapsed < Duration::from_secs(300);
    report(
        2,
        pass,
        &format!(
            "off-diagonal {off:.4} vs {off_target:.4} ({:.1}%, tol 20%), diagonals {d1:.4}, {d2:.4} vs 0.25 (tol 15%), {}",
            100.0 * rel(off, off_target),
            secs(elapsed)
        ),
    );
    assert!(pass);
}

fn random_psd(rng: &mut ChaCha8Rng, l: usize) -> Vec<Vec<f64>> {
    let rank = rng.random_range(1..=l);
    let a: Vec<Vec<f64>> = (0..l).map(|_| (0..rank).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut g = vec![vec![0.0; l]; l];
    for i in 0..l {
        for j in 0..=i {
            let v: f64 = (0..rank).map(|r| a[i][r] * a[j][r]).sum();
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    g
}

fn quad(g: &[Vec<f64>], w: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..w.len() {
        for j in 0..w.len() {
            s += w[i] * g[i][j] * w[j];
        }
    }
    s
}

/// Minimum of `wᵀGw` over the simplex grid with spacing `1/m`.
fn grid_min(g: &[Vec<f64>], m: usize) -> f64 {
    fn walk(g: &[Vec<f64>], m: usize, w: &mut Vec<f64>, left: usize, best: &mut f64) {
        let l = g.len();
        if w.len() == l - 1 {
            w.push(left as f64 / m as f64);
            *best = best.min(quad(g, w));
            w.pop();
            return;
        }
        for c in 0..=left {
            w.push(c as f64 / m as f64);
            walk(g, m, w, left - c, best);
            w.pop();
        }
    }
    let mut best = f64::INFINITY;
    walk(g, m, &mut Vec::new(), m, &mut best);
    best
}

#[test]
fn criterion_3_qp_correctness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let resolution = |l: usize| match l {
        2 => 10_000,
        3 => 600,
        4 => 100,
        5 => 40,
        6 => 24,
        7 => 16,
        8 => 12,
        _ => 10,
    };
    let (mut worst_gap, mut worst_kkt) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..200 {
        let l = rng.random_range(2..=9);
        let g = random_psd(&mut rng, l);
        let sol = solve_simplex_qp(&GammaMatrix::from_rows(&g).unwrap()).unwrap();
        worst_gap = worst_gap.max(sol.value - grid_min(&g, resolution(l)));
        worst_kkt = worst_kkt.max(sol.kkt_residual);
    }
    let mut worst_closed = 0.0f64;
    let mut interior = 0;
    while interior < 200 {
        let g = random_psd(&mut rng, 2);
        let (a, b, c) = (g[0][0], g[0][1], g[1][1]);
        let denom = a + c - 2.0 * b;
        if denom <= 1e-6 {
            continue;
        }
        let w1 = (c - b) / denom;
        if !(0.01..=0.99).contains(&w1) {
            continue;
        }
        interior += 1;
        let sol = solve_simplex_qp(&GammaMatrix::from_rows(&g).unwrap()).unwrap();
        worst_closed = worst_closed.max((sol.weights.as_slice()[0] - w1).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst_gap <= 1e-3 && worst_kkt <= 1e-8 && worst_closed <= 1e-8 && elapsed < Duration::from_secs(30);
    report(
        3,
        pass,
        &format!(
            "max(value - grid min) {worst_gap:.2e} (tol 1e-3), max KKT {worst_kkt:.2e} (tol 1e-8), l=2 closed form {worst_closed:.2e} (tol 1e-8), {}",
            secs(elapsed)
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_bear_beats_average() {
    let start = Instant::now();
    let families = [Family::Frechet, Family::Gpd { scale: 1.0 }, Family::StudentT];
    let field = FieldModel::cycled(&families, 3.0, 9, CopulaModel::gumbel(3.0).unwrap()).unwrap();
    let config = ExperimentConfig::new(field, 5000, 500, 2024, KPolicy::RandomizedOracle);
    let r = amse_experiment(&config).unwrap();
    let elapsed = start.elapsed();
    let pass = r.bear_amse <= r.average_amse && r.improvement_significant() && elapsed < Duration::from_secs(900);
    report(
        4,
        pass,
        &format!(
            "Average AMSE {:.5}, BEAR AMSE {:.5}, improvement {:.2}% +/- {:.2}%, difference {:.5} vs 2 s.e. {:.5}, {}",
            r.average_amse,
            r.bear_amse,
            r.improvement_pct,
            r.improvement_pct_se,
            r.difference,
            2.0 * r.difference_se,
            secs(elapsed)
        ),
    );
    assert!(pass);
}

fn copula_tau(beta: f64, seed: u64) -> f64 {
    let c = CopulaModel::gumbel(beta).unwrap();
    let rows = sample_gumbel_copula(&c, 2, 20_000, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let a: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let b: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    kendall_tau(&a, &b).unwrap()
}

#[test]
fn criterion_5_gumbel_sampler() {
    // Archimedean identity for the Gumbel generator: τ = 1 − 1/β
    let target = 1.0 - 1.0 / 3.0;
    let t3 = copula_tau(3.0, 5);
    let t1 = copula_tau(1.0, 6);
    let pass = (t3 - target).abs() <= 0.02 && t1.abs() <= 0.02;
    report(5, pass, &format!("tau(beta=3) {t3:.4} vs {target:.4} (tol 0.02), tau(beta=1) {t1:.4} (tol 0.02)"));
    assert!(pass);
}

fn nu_hat(beta: f64, seed: u64) -> f64 {
    let field = FieldModel::homogeneous(MarginalModel::frechet(1.0).unwrap(), 2, CopulaModel::gumbel(beta).unwrap()).unwrap();
    let s = field.sample(50_000, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    empirical_pair_nu(s.column(0), s.column(1), 1000, 1.0, 1.0).unwrap()
}

#[test]
fn criterion_6_exponent_measure() {
    let target = 2.0 - 2f64.powf(1.0 / 3.0);
    let dep = nu_hat(3.0, 7);
    let ind = nu_hat(1.0, 8);
    let pass = (dep - target).abs() <= 0.05 && ind <= 0.05;
    report(6, pass, &format!("nu_hat(1,1) beta=3 {dep:.4} vs {target:.4} (tol 0.05), beta=1 {ind:.4} (max 0.05)"));
    assert!(pass);
}

#[test]
fn criterion_7_cross_covariances() {
    let start = Instant::now();
    // Hill–Hill against Γ at unequal k
    let g = GumbelPair::new(2.0, 3.0).unwrap();
    let kv = KVector::new(vec![200, 100, 400]).unwrap();
    let gamma = gamma_theoretical(&g, 2.0, &kv).unwrap();
    let cs = kv.cs();
    let mut hh_err = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let v = asym_cov(Hill, Hill, &g, 2.0, cs[i], cs[j]).unwrap();
                hh_err = hh_err.max((v - gamma.get(i, j)).abs());
            }
        }
    }
    // independence
    let ind = GumbelPair::new(1.5, 1.0).unwrap();
    let zeros = EstimatorKind::ALL
        .iter()
        .flat_map(|&a| EstimatorKind::ALL.map(move |b| (a, b)))
        .all(|(a, b)| asym_cov(a, b, &ind, 1.5, 1.0, 0.7).unwrap() == 0.0);
    // Monte Carlo
    let field = FieldModel::homogeneous(MarginalModel::frechet(1.0).unwrap(), 2, CopulaModel::gumbel(3.0).unwrap()).unwrap();
    let r = clt_validation(&CltConfig {
        field,
        n: 5000,
        k: 200,
        replications: 2000,
        seed: 7,
        kinds: vec![Hill, Moment, Ratio],
    })
    .unwrap();
    let mut worst = (0.0f64, String::new());
    for a in [Hill, Moment, Ratio] {
        for b in [Hill, Moment, Ratio] {
            if a == Hill && b == Hill {
                continue;
            }
            let e = r.entry(0, a, 1, b).unwrap();
            if e.rel_error() > worst.0 {
                worst = (e.rel_error(), format!("{a}/{b} {:.4} vs {:.4}", e.empirical, e.theoretical));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = hh_err <= 1e-9 && zeros && worst.0 <= 0.25 && elapsed < Duration::from_secs(600);
    report(
        7,
        pass,
        &format!(
            "Hill/Hill vs Gamma {hh_err:.1e} (tol 1e-9), beta=1 exact zeros {zeros}, worst MC entry {} ({:.1}%, tol 25%), {}",
            worst.1,
            100.0 * worst.0,
            secs(elapsed)
        ),
    );
    assert!(pass);
}

fn column() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1.0f64..1e6, 3..120)
}

fn gamma_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=6).prop_flat_map(|l| {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, l), l).prop_map(|a| {
            let l = a.len();
            let mut g = vec![vec![0.0; l]; l];
            for i in 0..l {
                for j in 0..l {
                    g[i][j] = (0..l).map(|r| a[i][r] * a[j][r]).sum::<f64>() + if i == j { 0.1 } else { 0.0 };
                }
            }
            g
        })
    })
}

fn check(name: &str, r: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>, failures: &mut Vec<String>) {
    if let Err(e) = r {
        failures.push(format!("{name}: {e}"));
    }
}

fn golden_cli(args: &[&str], golden: &str) -> bool {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let args: Vec<String> = args
        .iter()
        .map(|a| a.replace("{data}", data.to_str().unwrap()))
        .chain(["--output".to_string(), out.to_str().unwrap().to_string()])
        .collect();
    let ok = Command::new(env!("CARGO_BIN_EXE_bear")).args(&args).output().unwrap().status.success();
    ok && fs::read(&out).unwrap() == fs::read(data.join(golden)).unwrap()
}

#[test]
fn criterion_8_property_suites() {
    let mut failures = Vec::new();
    let runner = || TestRunner::new(Config { cases: 256, ..Config::default() });

    check(
        "scale invariance",
        runner().run(&(column(), 1e-3f64..1e3), |(xs, t)| {
            let k = xs.len() / 2;
            let a = hill(&order_desc(&xs).unwrap(), k).unwrap().gamma_hat;
            let scaled: Vec<f64> = xs.iter().map(|x| x * t).collect();
            let b = hill(&order_desc(&scaled).unwrap(), k).unwrap().gamma_hat;
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            Ok(())
        }),
        &mut failures,
    );
    check(
        "top-k locality",
        runner().run(&(column(), 0.0f64..1.0), |(xs, shrink)| {
            let k = xs.len() / 3 + 1;
            let ordered = order_desc(&xs).unwrap();
            let a = hill(&ordered, k).unwrap().gamma_hat;
            let mut v = ordered.values().to_vec();
            for x in &mut v[k + 1..] {
                *x *= shrink;
            }
            let b = hill(&order_desc(&v).unwrap(), k).unwrap().gamma_hat;
            prop_assert_eq!(a, b);
            Ok(())
        }),
        &mut failures,
    );
    check(
        "L >= H^2",
        runner().run(&column(), |xs| {
            let ordered = order_desc(&xs).unwrap();
            for k in 1..xs.len() {
                let (h, l) = log_moments(&ordered, k).unwrap();
                prop_assert!(l >= h * h * (1.0 - 1e-12));
            }
            Ok(())
        }),
        &mut failures,
    );
    check(
        "simplex feasibility",
        runner().run(&gamma_strategy(), |g| {
            let sol = solve_simplex_qp(&GammaMatrix::from_rows(&g).unwrap()).unwrap();
            let w = sol.weights.as_slice();
            prop_assert!(w.iter().all(|&x| x >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(sol.kkt_residual <= KKT_TOL);
            Ok(())
        }),
        &mut failures,
    );
    check(
        "permutation equivariance",
        runner().run(&(gamma_strategy(), any::<u64>()), |(g, seed)| {
            let gm = GammaMatrix::from_rows(&g).unwrap();
            let mut order: Vec<usize> = (0..g.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..order.len()).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            let a = solve_simplex_qp(&gm).unwrap();
            let b = solve_simplex_qp(&gm.permuted(&order)).unwrap();
            prop_assert!((a.value - b.value).abs() <= 1e-10 * a.value.max(1.0));
            for (pos, &src) in order.iter().enumerate() {
                prop_assert!((b.weights.as_slice()[pos] - a.weights.as_slice()[src]).abs() <= 1e-7);
            }
            Ok(())
        }),
        &mut failures,
    );
    check(
        "argmin scale invariance",
        runner().run(&(gamma_strategy(), 1e-3f64..1e3), |(g, t)| {
            let gm = GammaMatrix::from_rows(&g).unwrap();
            let a = solve_simplex_qp(&gm).unwrap();
            let b = solve_simplex_qp(&gm.scaled(t)).unwrap();
            for (x, y) in a.weights.as_slice().iter().zip(b.weights.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-7);
            }
            prop_assert!(kkt_residual(&gm.scaled(t), b.weights.as_slice()) <= KKT_TOL);
            Ok(())
        }),
        &mut failures,
    );

    let goldens = [
        (vec!["estimate", "--input", "{data}/four_rows.csv", "--k", "2"], "estimate_hill_k2.csv"),
        (vec!["hillplot", "--input", "{data}/four_rows.csv", "--column", "s1", "--k-min", "1", "--k-max", "3"], "hillplot_s1.csv"),
        (vec!["bear", "--input", "{data}/four_rows.csv", "--k", "2"], "bear_k2.csv"),
        (
            vec!["estimate", "--input", "{data}/with_flat_column.csv", "--k", "2", "--estimator", "moment"],
            "estimate_moment_flat.csv",
        ),
    ];
    for (args, golden) in &goldens {
        if !golden_cli(args, golden) {
            failures.push(format!("golden file {golden} differs"));
        }
    }

    let field = FieldModel::homogeneous(MarginalModel::frechet(2.0).unwrap(), 3, CopulaModel::gumbel(3.0).unwrap()).unwrap();
    let mut config = ExperimentConfig::new(field, 1000, 40, 99, KPolicy::RandomizedOracle);
    config.oracle_replications = 20;
    let first = amse_experiment(&config).unwrap();
    let second = amse_experiment(&config).unwrap();
    if first != second {
        failures.push("amse_experiment is not deterministic under a fixed seed".into());
    }

    let pass = failures.is_empty();
    let detail = if pass {
        "6 properties x 256 cases, 4 golden files, seeded determinism".to_string()
    } else {
        failures.join("; ")
    };
    report(8, pass, &detail);
    assert!(pass, "{detail}");
}
