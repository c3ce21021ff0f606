//! The `bear` command-line tool.
//!
//! Every command reads or writes comma-separated files with a header row.
//! Numbers are written in their shortest round-trip decimal form, so output
//! files are byte-stable across runs with the same inputs and seed. Whenever a
//! command writes a file it also writes `<file>.manifest.toml` recording the
//! command, its configuration, the seed, the tool version, a 64-bit digest of
//! the input and timestamps.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bear_core::aggregation::{bear_with_pilot, Pilot};
use bear_core::dependence::KVector;
use bear_core::harness::{amse_experiment, clt_validation, replication_rng, AmseReport, CltConfig};
use bear_core::models::{CopulaModel, Family, FieldModel};
use bear_core::tail::{hill_plot_series, order_desc, EstimatorKind, TailEstimate};
use clap::{Args, Parser, Subcommand};

pub mod config;
pub mod dataset;
pub mod error;
pub mod manifest;

use config::ExperimentFile;
use dataset::{parse_csv, DatasetFile};
pub use error::{CliError, Result};
use manifest::{digest64, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "bear", version, about = "Aggregated tail-index estimation for heavy-tailed fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-column Hill, moment or ratio estimates.
    Estimate(EstimateArgs),
    /// Optimally weighted aggregate of the per-column Hill estimates.
    Bear(BearArgs),
    /// Hill estimates over a range of k for one column.
    Hillplot(HillplotArgs),
    /// Draw a sample from a Gumbel-copula field.
    Simulate(SimulateArgs),
    /// Run a Monte-Carlo AMSE comparison from a configuration file.
    Experiment(ExperimentArgs),
    /// Compare simulated estimator covariances with their limits.
    CltCheck(CltArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct KArgs {
    /// One k for every column.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    /// One k per column, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    pub ks: Option<Vec<u64>>,
}

impl KArgs {
    fn resolve(&self, columns: usize) -> Result<Vec<usize>> {
        match (&self.k, &self.ks) {
            (Some(k), _) => Ok(vec![*k as usize; columns]),
            (None, Some(ks)) if ks.len() == columns => Ok(ks.iter().map(|&k| k as usize).collect()),
            (None, Some(ks)) => Err(CliError::Usage(format!(
                "--ks has {} values for {columns} columns",
                ks.len()
            ))),
            (None, None) => Err(CliError::Usage("one of --k or --ks is required".into())),
        }
    }

    fn describe(&self) -> String {
        match (&self.k, &self.ks) {
            (Some(k), _) => k.to_string(),
            (None, Some(ks)) => join(ks),
            (None, None) => String::new(),
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub k: KArgs,
    #[arg(long, default_value = "hill", value_parser = parse_kind)]
    pub estimator: EstimatorKind,
    /// Write the table as CSV here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BearArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub k: KArgs,
    /// Tail index used to build the covariance estimate. Defaults to the
    /// inverse of the Average estimator.
    #[arg(long)]
    pub pilot: Option<f64>,
    /// Write the results as `name,value` CSV here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HillplotArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Column name or 1-based position.
    #[arg(long)]
    pub column: String,
    #[arg(long, default_value_t = 1)]
    pub k_min: usize,
    /// Defaults to n - 1.
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Marginal families, cycled over locations.
    #[arg(long, value_delimiter = ',', default_value = "frechet", value_parser = parse_family)]
    pub family: Vec<Family>,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Gumbel dependence parameter; 1 is independence.
    #[arg(long, default_value_t = 3.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 2)]
    pub locations: usize,
}

impl FieldArgs {
    fn field(&self) -> Result<FieldModel> {
        let copula = CopulaModel::gumbel(self.beta)?;
        Ok(FieldModel::cycled(&self.family, self.alpha, self.locations, copula)?)
    }

    fn record(&self, m: &mut RunManifest) {
        m.set("family", self.family.iter().map(Family::name).collect::<Vec<_>>().join(","))
            .set("alpha", self.alpha)
            .set("beta", self.beta)
            .set("locations", self.locations);
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=SEED_MAX))]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the configuration file.
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=SEED_MAX))]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CltArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    #[arg(long, default_value_t = 2000)]
    pub replications: usize,
    #[arg(long, value_delimiter = ',', default_value = "hill", value_parser = parse_kind)]
    pub estimator: Vec<EstimatorKind>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=SEED_MAX))]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_kind(s: &str) -> std::result::Result<EstimatorKind, String> {
    s.parse().map_err(|e: bear_core::Error| e.to_string())
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: bear_core::Error| e.to_string())
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Seeds are kept below 2⁶³ so that manifests stay valid TOML integers.
const SEED_MAX: u64 = i64::MAX as u64;

fn draw_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::random::<u64>() & SEED_MAX)
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Data(format!("writing CSV: {e}"));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(r).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Data(format!("writing CSV: {e}")))
}

/// Writes `bytes` to `path` with its manifest, or to `out` when no path is
/// given.
fn emit(path: Option<&Path>, bytes: &[u8], manifest: &mut RunManifest, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, bytes).map_err(|e| CliError::io(p, e))?;
            manifest.write_beside(p)?;
            Ok(())
        }
        None => out.write_all(bytes).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text).map_err(|e| CliError::io("<stdout>", e))
}

fn input_manifest(command: &str, data: &DatasetFile) -> RunManifest {
    let mut m = RunManifest::new(command);
    m.input_digest = Some(digest64(&data.bytes));
    m.set("input", data.path.display());
    m
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Estimate(a) => cmd_estimate(&a, out),
        Command::Bear(a) => cmd_bear(&a, out),
        Command::Hillplot(a) => cmd_hillplot(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out),
        Command::CltCheck(a) => cmd_clt_check(&a, out),
    }
}

/// One row of the `estimate` table: the estimate or the reason it failed.
pub fn estimate_columns(
    data: &DatasetFile,
    ks: &[usize],
    kind: EstimatorKind,
) -> Vec<std::result::Result<TailEstimate, CliError>> {
    data.samples
        .columns()
        .iter()
        .zip(ks)
        .map(|(col, &k)| Ok(kind.estimate(&order_desc(col)?, k)?))
        .collect()
}

pub fn cmd_estimate(a: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let data = parse_csv(&a.input)?;
    let ks = a.k.resolve(data.names.len())?;
    let n = data.samples.rows();
    if let Some(&k) = ks.iter().find(|&&k| k >= n) {
        return Err(CliError::Usage(format!("k = {k} must be below the number of rows ({n})")));
    }
    let results = estimate_columns(&data, &ks, a.estimator);

    say(out, format_args!("estimator: {}\n", a.estimator))?;
    let mut rows = Vec::new();
    for ((name, &k), r) in data.names.iter().zip(&ks).zip(&results) {
        match r {
            Ok(e) => {
                say(
                    out,
                    format_args!("{name}: k = {k}, 1/alpha = {}, alpha = {}\n", e.gamma_hat, fmt_opt(e.alpha_hat())),
                )?;
                rows.push(vec![
                    name.clone(),
                    k.to_string(),
                    a.estimator.to_string(),
                    e.gamma_hat.to_string(),
                    fmt_opt(e.alpha_hat()),
                    String::new(),
                ]);
            }
            Err(e) => {
                say(out, format_args!("{name}: k = {k}, error: {e}\n"))?;
                rows.push(vec![name.clone(), k.to_string(), a.estimator.to_string(), String::new(), String::new(), e.to_string()]);
            }
        }
    }
    if let Some(path) = &a.output {
        let bytes = csv_bytes(&["column", "k", "estimator", "gamma_hat", "alpha_hat", "error"], &rows)?;
        let mut m = input_manifest("estimate", &data);
        m.set("k", a.k.describe()).set("estimator", a.estimator);
        emit(Some(path), &bytes, &mut m, out)?;
    }
    if results.iter().all(|r| r.is_err()) {
        if let Some(Err(e)) = results.into_iter().next() {
            return Err(e.context("every column failed"));
        }
    }
    Ok(())
}

pub fn cmd_bear(a: &BearArgs, out: &mut dyn Write) -> Result<()> {
    let data = parse_csv(&a.input)?;
    let ks = a.k.resolve(data.names.len())?;
    let kv = KVector::new(ks)?;
    let pilot = a.pilot.map_or(Pilot::Average, Pilot::Fixed);
    let r = bear_with_pilot(&data.samples, &kv, pilot)?;
    let names = &data.names;
    let g = r.gamma_hat();
    let (lo, hi) = r.alpha_interval(1.96);

    say(out, format_args!("pilot alpha: {} ({})\n", r.pilot_alpha(), if a.pilot.is_some() { "fixed" } else { "Average" }))?;
    say(out, format_args!("Gamma hat:\n"))?;
    for (i, name) in names.iter().enumerate() {
        let row: Vec<String> = (0..g.dim()).map(|j| format!("{:.6}", g.get(i, j))).collect();
        say(out, format_args!("  {name:<8} {}\n", row.join("  ")))?;
    }
    say(out, format_args!("weights:\n"))?;
    for ((name, w), e) in names.iter().zip(r.weights().as_slice()).zip(r.local_estimates()) {
        say(out, format_args!("  {name:<8} {w:.6}  (k = {}, Hill 1/alpha = {})\n", e.k, e.gamma_hat))?;
    }
    say(out, format_args!("BEAR alpha: {}\n", r.estimate_alpha()))?;
    say(out, format_args!("AMSE: {}\n", r.amse()))?;
    say(
        out,
        format_args!(
            "Average alpha: {}, Average AMSE: {} (BEAR AMSE <= Average AMSE: {})\n",
            1.0 / r.average_gamma(),
            r.average_amse(),
            if r.amse() <= r.average_amse() * (1.0 + 1e-12) { "yes" } else { "no" }
        ),
    )?;
    say(
        out,
        format_args!("95% interval: [{lo}, {hi}] (alpha +/- 1.96 alpha^2 sqrt(AMSE/k1), delta method on 1/alpha)\n"),
    )?;

    if let Some(path) = &a.output {
        let mut rows = vec![
            vec!["pilot_alpha".to_string(), r.pilot_alpha().to_string()],
            vec!["bear_gamma".into(), r.estimate_gamma().to_string()],
            vec!["bear_alpha".into(), r.estimate_alpha().to_string()],
            vec!["amse".into(), r.amse().to_string()],
            vec!["average_gamma".into(), r.average_gamma().to_string()],
            vec!["average_amse".into(), r.average_amse().to_string()],
            vec!["interval_low".into(), lo.to_string()],
            vec!["interval_high".into(), hi.to_string()],
        ];
        for ((name, w), e) in names.iter().zip(r.weights().as_slice()).zip(r.local_estimates()) {
            rows.push(vec![format!("k.{name}"), e.k.to_string()]);
            rows.push(vec![format!("hill.{name}"), e.gamma_hat.to_string()]);
            rows.push(vec![format!("weight.{name}"), w.to_string()]);
        }
        for i in 0..g.dim() {
            for j in i..g.dim() {
                rows.push(vec![format!("gamma.{}.{}", names[i], names[j]), g.get(i, j).to_string()]);
            }
        }
        let bytes = csv_bytes(&["name", "value"], &rows)?;
        let mut m = input_manifest("bear", &data);
        m.set("k", a.k.describe()).set("pilot", fmt_opt(a.pilot));
        emit(Some(path), &bytes, &mut m, out)?;
    }
    Ok(())
}

pub fn cmd_hillplot(a: &HillplotArgs, out: &mut dyn Write) -> Result<()> {
    let data = parse_csv(&a.input)?;
    let j = data.column_index(&a.column)?;
    let col = order_desc(data.samples.column(j))?;
    let k_max = a.k_max.unwrap_or(col.len() - 1);
    let series = hill_plot_series(&col, a.k_min, k_max)?;
    let rows: Vec<Vec<String>> = series
        .iter()
        .map(|r| vec![r.k.to_string(), r.gamma_hat.to_string(), fmt_opt(r.alpha_hat)])
        .collect();
    let bytes = csv_bytes(&["k", "gamma_hat", "alpha_hat"], &rows)?;
    let mut m = input_manifest("hillplot", &data);
    m.set("column", &data.names[j]).set("k_min", a.k_min).set("k_max", k_max);
    emit(a.output.as_deref(), &bytes, &mut m, out)
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let field = a.field.field()?;
    let seed = draw_seed(a.seed);
    let samples = field.sample(a.n, &mut replication_rng(seed, 0))?;
    let names: Vec<String> = (1..=field.locations()).map(|i| format!("s{i}")).collect();
    let mut buf = Vec::new();
    dataset::write_csv(&mut buf, &names, &samples).map_err(|e| CliError::Data(format!("writing CSV: {e}")))?;
    let mut m = RunManifest::new("simulate");
    m.seed = Some(seed);
    a.field.record(&mut m);
    m.set("n", a.n);
    emit(a.output.as_deref(), &buf, &mut m, out)
}

pub fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(&a.config).map_err(|e| CliError::io(&a.config, e))?;
    let file = ExperimentFile::parse(&text)?;
    let seed = draw_seed(a.seed.or(file.seed));
    let mut header = vec!["distribution"];
    header.extend_from_slice(AmseReport::csv_header());
    let mut rows = Vec::new();
    for cell in file.cells(seed)? {
        let report = amse_experiment(&cell.config)?;
        let mut row = vec![cell.distribution];
        row.extend(report.csv_fields());
        rows.push(row);
    }
    let bytes = csv_bytes(&header, &rows)?;
    let mut m = RunManifest::new("experiment");
    m.seed = Some(seed);
    m.input_digest = Some(digest64(text.as_bytes()));
    m.set("config", a.config.display())
        .set("n", join(&file.ns))
        .set("replications", file.replications)
        .set("k_policy", format!("{:?}", file.policy))
        .set("k", file.k.map(|k| k.to_string()).unwrap_or_default())
        .set("oracle_replications", file.oracle_replications)
        .set("pilot", format!("{:?}", file.pilot))
        .set("families", file.distribution())
        .set("alpha", join(&file.alphas))
        .set("locations", file.locations)
        .set("beta", file.beta)
        .set("amse", "k1 * (estimate - 1/alpha)^2 averaged over replications");
    emit(a.output.as_deref(), &bytes, &mut m, out)
}

pub fn cmd_clt_check(a: &CltArgs, out: &mut dyn Write) -> Result<()> {
    let seed = draw_seed(a.seed);
    let config = CltConfig {
        field: a.field.field()?,
        n: a.n,
        k: a.k,
        replications: a.replications,
        seed,
        kinds: a.estimator.clone(),
    };
    let report = clt_validation(&config)?;
    let rows: Vec<Vec<String>> = report
        .entries
        .iter()
        .map(|e| {
            vec![
                (e.loc_a + 1).to_string(),
                e.kind_a.to_string(),
                (e.loc_b + 1).to_string(),
                e.kind_b.to_string(),
                e.empirical.to_string(),
                e.std_error.to_string(),
                e.theoretical.to_string(),
                e.rel_error().to_string(),
            ]
        })
        .collect();
    let bytes = csv_bytes(
        &["loc_a", "kind_a", "loc_b", "kind_b", "empirical", "std_error", "theoretical", "rel_error"],
        &rows,
    )?;
    let mut m = RunManifest::new("clt-check");
    m.seed = Some(seed);
    a.field.record(&mut m);
    m.set("n", a.n)
        .set("k", a.k)
        .set("replications", a.replications)
        .set("estimator", join(&a.estimator))
        .set("failures", report.failures);
    emit(a.output.as_deref(), &bytes, &mut m, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("bear").chain(args.iter().copied()))
    }

    #[test]
    fn k_zero_is_a_usage_error() {
        let e = parse(&["estimate", "--input", "x.csv", "--k", "0"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = parse(&["bear", "--input", "x.csv", "--ks", "3,0"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn k_and_ks_are_exclusive_and_required() {
        assert!(parse(&["estimate", "--input", "x.csv"]).is_err());
        assert!(parse(&["estimate", "--input", "x.csv", "--k", "2", "--ks", "2,2"]).is_err());
    }

    #[test]
    fn ks_must_match_columns() {
        let k = KArgs {
            k: None,
            ks: Some(vec![2, 3]),
        };
        assert_eq!(k.resolve(2).unwrap(), [2, 3]);
        assert_eq!(k.resolve(3).unwrap_err().exit_code(), 2);
        let k = KArgs { k: Some(4), ks: None };
        assert_eq!(k.resolve(3).unwrap(), [4, 4, 4]);
    }

    #[test]
    fn estimator_and_family_lists() {
        let cli = parse(&["clt-check", "--estimator", "hill,moment", "--family", "frechet,gpd"]).unwrap();
        let Command::CltCheck(a) = cli.command else { panic!() };
        assert_eq!(a.estimator, [EstimatorKind::Hill, EstimatorKind::Moment]);
        assert_eq!(a.field.family.len(), 2);
        assert!(parse(&["estimate", "--input", "x", "--k", "2", "--estimator", "pickands"]).is_err());
    }
}
