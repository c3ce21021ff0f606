//! Monte-Carlo experiments: an oracle for the sample fraction `k`, the
//! randomized choice of `k` around it, AMSE comparisons of BEAR against the
//! Average estimator, and simulation checks of the limit covariances.
//!
//! Replication `r` of an experiment seeded with `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `r`, so results do not
//! depend on scheduling or on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aggregation::{bear_with_pilot, Pilot};
use crate::dependence::{asym_cov, asym_variance, GumbelPair, KVector, PairMeasure};
use crate::models::{FieldModel, MarginalModel};
use crate::stats::{covariance, covariance_std_error, mean, std_error};
use crate::tail::{order_desc, EstimatorKind};
use crate::{Error, Result};

/// Smallest sample fraction considered by the oracle and the random rule.
pub const K_FLOOR: usize = 30;
/// Ratio between consecutive points of the oracle grid.
pub const GRID_RATIO: f64 = 1.15;
/// Largest tolerated share of failed replications.
pub const MAX_FAILURE_SHARE: f64 = 0.01;

const ORACLE_STREAM_BASE: u64 = 1 << 62;

/// Random generator for replication `rep` of an experiment seeded with `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 * K_FLOOR {
        return Err(Error::domain(format!("sample size must be at least {}, got {n}", 3 * K_FLOOR)));
    }
    Ok(())
}

/// Geometric grid `round(30·1.15^m)` up to `⌊n/3⌋`, without duplicates.
pub fn k_grid(n: usize) -> Vec<usize> {
    let top = n / 3;
    let mut grid = Vec::new();
    let mut x = K_FLOOR as f64;
    loop {
        let k = x.round() as usize;
        if k > top {
            break;
        }
        if grid.last() != Some(&k) {
            grid.push(k);
        }
        x *= GRID_RATIO;
    }
    grid
}

/// Result of [`k_opt_oracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct KOracle {
    pub k_opt: usize,
    /// The minimum sits on the smallest admissible `k`, so the true optimum
    /// may lie below it.
    pub floor_bound: bool,
    pub grid: Vec<usize>,
    pub mse: Vec<f64>,
}

/// Hill estimates at every `k` in `grid` for one descending sample.
fn hill_path(desc: &[f64], grid: &[usize]) -> Vec<f64> {
    let top = *grid.last().expect("grid is non-empty");
    let mut prefix = Vec::with_capacity(top + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for x in &desc[..top] {
        acc += x.ln();
        prefix.push(acc);
    }
    grid.iter()
        .map(|&k| prefix[k] / k as f64 - desc[k].ln())
        .collect()
}

/// Sample fraction minimizing the simulated mean squared error of the Hill
/// estimator of `1/α` over [`k_grid`], using `reps` samples of size `n`
/// shared across all grid points.
pub fn k_opt_oracle<R: Rng + ?Sized>(model: &MarginalModel, n: usize, reps: usize, rng: &mut R) -> Result<KOracle> {
    check_n(n)?;
    if reps == 0 {
        return Err(Error::invalid("oracle needs at least one replication"));
    }
    let grid = k_grid(n);
    let target = 1.0 / model.alpha();
    let mut sse = vec![0.0; grid.len()];
    let mut buf = vec![0.0; n];
    for _ in 0..reps {
        for slot in buf.iter_mut() {
            *slot = model.sample(rng);
        }
        buf.sort_unstable_by(|a, b| b.total_cmp(a));
        for (s, h) in sse.iter_mut().zip(hill_path(&buf, &grid)) {
            *s += (h - target).powi(2);
        }
    }
    let mse: Vec<f64> = sse.iter().map(|s| s / reps as f64).collect();
    let best = mse
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::numerical("oracle produced no finite error estimate"))?;
    Ok(KOracle {
        k_opt: grid[best],
        floor_bound: best == 0,
        grid,
        mse,
    })
}

/// Result of [`random_k`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomK {
    pub k: usize,
    /// The interval was empty and `k` was clamped instead of drawn.
    pub degenerate: bool,
}

/// `[max(30, ⌈0.75 k_opt⌉), min(⌊n/3⌋, ⌊1.25 k_opt⌋)]`.
pub fn random_k_interval(k_opt: usize, n: usize) -> (usize, usize) {
    let lo = K_FLOOR.max((3 * k_opt).div_ceil(4));
    let hi = (n / 3).min(5 * k_opt / 4);
    (lo, hi)
}

/// Uniform draw from [`random_k_interval`]; when the interval is empty,
/// `k_opt` clamped to `[30, n/3]` is returned and flagged.
pub fn random_k<R: Rng + ?Sized>(k_opt: usize, n: usize, rng: &mut R) -> Result<RandomK> {
    check_n(n)?;
    let (lo, hi) = random_k_interval(k_opt, n);
    if lo > hi {
        return Ok(RandomK {
            k: k_opt.clamp(K_FLOOR, n / 3),
            degenerate: true,
        });
    }
    Ok(RandomK {
        k: rng.random_range(lo..=hi),
        degenerate: false,
    })
}

/// How sample fractions are chosen in each replication.
#[derive(Debug, Clone, PartialEq)]
pub enum KPolicy {
    /// The oracle `k` of each location, every replication.
    Oracle,
    /// The same `k`s every replication.
    Fixed(Vec<usize>),
    /// A fresh [`random_k`] draw around each location's oracle `k`.
    RandomizedOracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub field: FieldModel,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub k_policy: KPolicy,
    /// Samples per grid point for the oracle.
    pub oracle_replications: usize,
    pub pilot: Pilot,
}

impl ExperimentConfig {
    pub fn new(field: FieldModel, n: usize, replications: usize, seed: u64, k_policy: KPolicy) -> Self {
        ExperimentConfig {
            field,
            n,
            replications,
            seed,
            k_policy,
            oracle_replications: 200,
            pilot: Pilot::Average,
        }
    }

    pub fn grid_l(&self) -> usize {
        self.field.locations()
    }

    fn validate(&self) -> Result<()> {
        check_n(self.n)?;
        if self.replications == 0 {
            return Err(Error::invalid("replications must be >= 1"));
        }
        if let KPolicy::Fixed(ks) = &self.k_policy {
            if ks.len() != self.grid_l() {
                return Err(Error::invalid(format!(
                    "{} fixed ks for {} locations",
                    ks.len(),
                    self.grid_l()
                )));
            }
            if ks.iter().any(|&k| k == 0 || k >= self.n) {
                return Err(Error::domain(format!("fixed ks must lie in [1, {}]", self.n - 1)));
            }
        }
        if self.oracle_replications == 0 {
            return Err(Error::invalid("oracle replications must be >= 1"));
        }
        Ok(())
    }
}

/// Estimates kept from one successful replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub ks: Vec<usize>,
    pub hills: Vec<f64>,
    pub average_gamma: f64,
    pub bear_gamma: f64,
}

impl ReplicationRecord {
    pub fn k_ref(&self) -> usize {
        self.ks[0]
    }
}

/// Empirical AMSE of the Average and BEAR estimators, defined per
/// replication as `k₁·(γ̂ − 1/α)²` and averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct AmseReport {
    pub n: usize,
    pub l: usize,
    pub alpha: f64,
    pub replications: usize,
    pub failures: usize,
    pub average_amse: f64,
    pub average_amse_se: f64,
    pub bear_amse: f64,
    pub bear_amse_se: f64,
    /// Mean of the paired differences Average − BEAR.
    pub difference: f64,
    pub difference_se: f64,
    /// `(Ave − BEAR)/Ave · 100`.
    pub improvement_pct: f64,
    pub improvement_pct_se: f64,
    /// Plain mean squared errors of `1/α̂`, without the `k₁` factor.
    pub average_mse: f64,
    pub bear_mse: f64,
    pub oracle_ks: Vec<usize>,
    pub oracle_floor_bound: Vec<bool>,
    pub degenerate_k_draws: usize,
    pub records: Vec<ReplicationRecord>,
}

impl AmseReport {
    /// Improvement exceeds two Monte-Carlo standard errors of the paired
    /// difference.
    pub fn improvement_significant(&self) -> bool {
        self.difference > 2.0 * self.difference_se
    }

    pub fn csv_header() -> &'static [&'static str] {
        &[
            "n",
            "l",
            "alpha",
            "replications",
            "failures",
            "ave",
            "ave_se",
            "bear",
            "bear_se",
            "impr_pct",
            "impr_pct_se",
            "ave_mse",
            "bear_mse",
        ]
    }

    /// Values in the order of [`AmseReport::csv_header`], formatted as
    /// shortest round-trip decimals.
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.l.to_string(),
            self.alpha.to_string(),
            self.replications.to_string(),
            self.failures.to_string(),
            self.average_amse.to_string(),
            self.average_amse_se.to_string(),
            self.bear_amse.to_string(),
            self.bear_amse_se.to_string(),
            self.improvement_pct.to_string(),
            self.improvement_pct_se.to_string(),
            self.average_mse.to_string(),
            self.bear_mse.to_string(),
        ]
    }
}

fn oracle_ks(config: &ExperimentConfig) -> Result<(Vec<usize>, Vec<bool>)> {
    let mut cache: Vec<(MarginalModel, KOracle)> = Vec::new();
    let mut ks = Vec::new();
    let mut flags = Vec::new();
    for m in config.field.marginals() {
        let oracle = match cache.iter().find(|(c, _)| c == m) {
            Some((_, o)) => o.clone(),
            None => {
                let mut rng = replication_rng(config.seed, ORACLE_STREAM_BASE + cache.len() as u64);
                let o = k_opt_oracle(m, config.n, config.oracle_replications, &mut rng)?;
                cache.push((*m, o.clone()));
                o
            }
        };
        ks.push(oracle.k_opt);
        flags.push(oracle.floor_bound);
    }
    Ok((ks, flags))
}

fn run_replication(config: &ExperimentConfig, oracle: &[usize], rep: u64) -> Result<(ReplicationRecord, usize)> {
    let mut rng = replication_rng(config.seed, rep);
    let samples = config.field.sample(config.n, &mut rng)?;
    let mut degenerate = 0;
    let ks = match &config.k_policy {
        KPolicy::Fixed(ks) => ks.clone(),
        KPolicy::Oracle => oracle.to_vec(),
        KPolicy::RandomizedOracle => oracle
            .iter()
            .map(|&k| {
                let draw = random_k(k, config.n, &mut rng)?;
                degenerate += draw.degenerate as usize;
                Ok(draw.k)
            })
            .collect::<Result<_>>()?,
    };
    let kv = KVector::new(ks.clone())?;
    let result = bear_with_pilot(&samples, &kv, config.pilot)?;
    Ok((
        ReplicationRecord {
            ks,
            hills: result.local_estimates().iter().map(|e| e.gamma_hat).collect(),
            average_gamma: result.average_gamma(),
            bear_gamma: result.estimate_gamma(),
        },
        degenerate,
    ))
}

fn failure_budget(reps: usize) -> usize {
    (MAX_FAILURE_SHARE * reps as f64).floor() as usize
}

/// Runs the BEAR-versus-Average comparison described by `config`.
pub fn amse_experiment(config: &ExperimentConfig) -> Result<AmseReport> {
    config.validate()?;
    let (oracle, floor_flags) = match config.k_policy {
        KPolicy::Fixed(_) => (Vec::new(), Vec::new()),
        _ => oracle_ks(config)?,
    };
    let outcomes: Vec<Result<(ReplicationRecord, usize)>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| run_replication(config, &oracle, rep))
        .collect();
    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = 0;
    let mut degenerate = 0;
    let mut last_error = None;
    for o in outcomes {
        match o {
            Ok((r, d)) => {
                records.push(r);
                degenerate += d;
            }
            Err(e) => {
                failures += 1;
                last_error = Some(e);
            }
        }
    }
    if failures > failure_budget(config.replications) || records.is_empty() {
        let e = last_error.map(|e| e.to_string()).unwrap_or_default();
        return Err(Error::numerical(format!(
            "{failures} of {} replications failed (last error: {e})",
            config.replications
        )));
    }
    let target = 1.0 / config.field.alpha();
    let sq = |g: f64| (g - target).powi(2);
    let ave: Vec<f64> = records.iter().map(|r| r.k_ref() as f64 * sq(r.average_gamma)).collect();
    let br: Vec<f64> = records.iter().map(|r| r.k_ref() as f64 * sq(r.bear_gamma)).collect();
    let diff: Vec<f64> = ave.iter().zip(&br).map(|(a, b)| a - b).collect();
    let average_amse = mean(&ave);
    let difference = mean(&diff);
    let difference_se = std_error(&diff);
    Ok(AmseReport {
        n: config.n,
        l: config.grid_l(),
        alpha: config.field.alpha(),
        replications: config.replications,
        failures,
        average_amse,
        average_amse_se: std_error(&ave),
        bear_amse: mean(&br),
        bear_amse_se: std_error(&br),
        difference,
        difference_se,
        improvement_pct: difference / average_amse * 100.0,
        improvement_pct_se: difference_se / average_amse * 100.0,
        average_mse: mean(&records.iter().map(|r| sq(r.average_gamma)).collect::<Vec<_>>()),
        bear_mse: mean(&records.iter().map(|r| sq(r.bear_gamma)).collect::<Vec<_>>()),
        oracle_ks: oracle,
        oracle_floor_bound: floor_flags,
        degenerate_k_draws: degenerate,
        records,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltConfig {
    pub field: FieldModel,
    pub n: usize,
    pub k: usize,
    pub replications: usize,
    pub seed: u64,
    pub kinds: Vec<EstimatorKind>,
}

/// One covariance entry between estimator `kind_a` at location `loc_a` and
/// `kind_b` at `loc_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CltEntry {
    pub loc_a: usize,
    pub kind_a: EstimatorKind,
    pub loc_b: usize,
    pub kind_b: EstimatorKind,
    pub empirical: f64,
    pub std_error: f64,
    pub theoretical: f64,
}

impl CltEntry {
    pub fn rel_error(&self) -> f64 {
        (self.empirical - self.theoretical).abs() / self.theoretical.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub replications: usize,
    pub failures: usize,
    pub entries: Vec<CltEntry>,
}

impl CltReport {
    pub fn entry(&self, loc_a: usize, kind_a: EstimatorKind, loc_b: usize, kind_b: EstimatorKind) -> Option<&CltEntry> {
        self.entries
            .iter()
            .find(|e| e.loc_a == loc_a && e.kind_a == kind_a && e.loc_b == loc_b && e.kind_b == kind_b)
    }
}

/// Simulated covariance of `√k(Ê⁽ⁱ⁾ − 1/α)` over all locations and the
/// requested estimator kinds, beside the limit values. Within a location the
/// limit is taken with the comonotone measure `min(x^{-α}, y^{-α})`.
pub fn clt_validation(config: &CltConfig) -> Result<CltReport> {
    let n = config.n;
    if config.k == 0 || config.k >= n {
        return Err(Error::domain(format!("k must lie in [1, {}], got {}", n - 1, config.k)));
    }
    if config.replications < 2 {
        return Err(Error::invalid("need at least two replications"));
    }
    if config.kinds.is_empty() {
        return Err(Error::invalid("no estimator kinds requested"));
    }
    let l = config.field.locations();
    let alpha = config.field.alpha();
    let target = 1.0 / alpha;
    let sk = (config.k as f64).sqrt();
    let kinds = &config.kinds;
    let outcomes: Vec<Result<Vec<f64>>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(config.seed, rep);
            let s = config.field.sample(n, &mut rng)?;
            let mut out = Vec::with_capacity(l * kinds.len());
            for col in s.columns() {
                let ordered = order_desc(col)?;
                for kind in kinds {
                    out.push(sk * (kind.estimate(&ordered, config.k)?.gamma_hat - target));
                }
            }
            Ok(out)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = 0;
    for o in outcomes {
        match o {
            Ok(r) => rows.push(r),
            Err(_) => failures += 1,
        }
    }
    if failures > failure_budget(config.replications) || rows.len() < 2 {
        return Err(Error::numerical(format!(
            "{failures} of {} replications failed",
            config.replications
        )));
    }
    let gumbel = GumbelPair::new(alpha, config.field.copula().beta())?;
    let comonotone = move |x: f64, y: f64| x.powf(-alpha).min(y.powf(-alpha));
    let m = kinds.len();
    let series: Vec<Vec<f64>> = (0..l * m).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    let mut entries = Vec::new();
    for p in 0..l * m {
        for q in p..l * m {
            let (la, ka) = (p / m, kinds[p % m]);
            let (lb, kb) = (q / m, kinds[q % m]);
            let theoretical = if p == q {
                asym_variance(ka, alpha, 1.0)?
            } else {
                let measure: &dyn PairMeasure = if la == lb { &comonotone } else { &gumbel };
                asym_cov(ka, kb, measure, alpha, 1.0, 1.0)?
            };
            entries.push(CltEntry {
                loc_a: la,
                kind_a: ka,
                loc_b: lb,
                kind_b: kb,
                empirical: covariance(&series[p], &series[q]),
                std_error: covariance_std_error(&series[p], &series[q]),
                theoretical,
            });
        }
    }
    Ok(CltReport {
        n,
        k: config.k,
        alpha,
        replications: config.replications,
        failures,
        entries,
    })
}
