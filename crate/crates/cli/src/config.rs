//! Experiment configuration files.
//!
//! A configuration is TOML restricted to two flat sections:
//!
//! ```toml
//! [experiment]
//! n = [1000, 5000]          # one report row per value
//! replications = 500
//! seed = 2024               # optional; drawn from entropy when absent
//! k_policy = "randomized-oracle"   # "oracle", "randomized-oracle" or "fixed"
//! k = 200                   # required by "fixed"
//! oracle_replications = 200 # optional
//! pilot = "average"         # or a positive tail index
//!
//! [field]
//! families = ["frechet", "gpd", "student-t"]   # cycled over locations
//! alpha = 3.0               # a number or a list
//! locations = 9
//! beta = 3.0
//! ```

use bear_core::aggregation::Pilot;
use bear_core::harness::{ExperimentConfig, KPolicy};
use bear_core::models::{CopulaModel, Family, FieldModel};
use toml::{Table, Value};

use crate::error::{CliError, Result};

const EXPERIMENT_KEYS: [&str; 7] = ["n", "replications", "seed", "k_policy", "k", "oracle_replications", "pilot"];
const FIELD_KEYS: [&str; 4] = ["families", "alpha", "locations", "beta"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyName {
    Oracle,
    RandomizedOracle,
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentFile {
    pub ns: Vec<usize>,
    pub replications: usize,
    pub seed: Option<u64>,
    pub policy: PolicyName,
    pub k: Option<usize>,
    pub oracle_replications: usize,
    pub pilot: Pilot,
    pub families: Vec<Family>,
    pub alphas: Vec<f64>,
    pub locations: usize,
    pub beta: f64,
}

/// One report row: the distribution label and the harness configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub distribution: String,
    pub config: ExperimentConfig,
}

fn usage(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{key}: {msg}"))
}

fn section<'a>(root: &'a Table, name: &str, allowed: &[&str]) -> Result<&'a Table> {
    let t = root
        .get(name)
        .ok_or_else(|| usage(name, "missing section"))?
        .as_table()
        .ok_or_else(|| usage(name, "expected a section"))?;
    if let Some(k) = t.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(usage(&format!("{name}.{k}"), "unknown key"));
    }
    if let Some((k, _)) = t.iter().find(|(_, v)| v.is_table()) {
        return Err(usage(&format!("{name}.{k}"), "nested sections are not allowed"));
    }
    Ok(t)
}

fn as_count(key: &str, v: &Value) -> Result<usize> {
    match v.as_integer() {
        Some(i) if i > 0 => Ok(i as usize),
        _ => Err(usage(key, format!("expected a positive integer, got {v}"))),
    }
}

fn as_positive(key: &str, v: &Value) -> Result<f64> {
    let x = v
        .as_float()
        .or_else(|| v.as_integer().map(|i| i as f64))
        .ok_or_else(|| usage(key, format!("expected a number, got {v}")))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(usage(key, format!("must be positive, got {x}")))
    }
}

/// A scalar or an array of scalars, parsed element-wise.
fn one_or_many<T>(key: &str, v: &Value, f: impl Fn(&str, &Value) -> Result<T>) -> Result<Vec<T>> {
    match v.as_array() {
        Some(items) if items.is_empty() => Err(usage(key, "empty list")),
        Some(items) => items.iter().map(|x| f(key, x)).collect(),
        None => Ok(vec![f(key, v)?]),
    }
}

fn required<'a>(t: &'a Table, section: &str, key: &str) -> Result<(String, &'a Value)> {
    let full = format!("{section}.{key}");
    let v = t.get(key).ok_or_else(|| usage(&full, "missing key"))?;
    Ok((full, v))
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self> {
        let root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("config: {}", e.message())))?;
        if let Some(k) = root.keys().find(|k| *k != "experiment" && *k != "field") {
            return Err(usage(k, "unknown section"));
        }
        let ex = section(&root, "experiment", &EXPERIMENT_KEYS)?;
        let fd = section(&root, "field", &FIELD_KEYS)?;

        let (key, v) = required(ex, "experiment", "n")?;
        let ns = one_or_many(&key, v, as_count)?;
        let (key, v) = required(ex, "experiment", "replications")?;
        let replications = as_count(&key, v)?;
        let seed = match ex.get("seed") {
            None => None,
            Some(v) => Some(
                v.as_integer()
                    .filter(|&i| i >= 0)
                    .ok_or_else(|| usage("experiment.seed", format!("expected a non-negative integer, got {v}")))?
                    as u64,
            ),
        };
        let policy = match ex.get("k_policy").map(|v| v.as_str()) {
            None | Some(Some("randomized-oracle")) => PolicyName::RandomizedOracle,
            Some(Some("oracle")) => PolicyName::Oracle,
            Some(Some("fixed")) => PolicyName::Fixed,
            Some(_) => {
                return Err(usage(
                    "experiment.k_policy",
                    "expected \"oracle\", \"randomized-oracle\" or \"fixed\"",
                ))
            }
        };
        let k = ex.get("k").map(|v| as_count("experiment.k", v)).transpose()?;
        match (policy, k) {
            (PolicyName::Fixed, None) => return Err(usage("experiment.k", "required when k_policy = \"fixed\"")),
            (PolicyName::Oracle | PolicyName::RandomizedOracle, Some(_)) => {
                return Err(usage("experiment.k", "only valid with k_policy = \"fixed\""))
            }
            _ => {}
        }
        let oracle_replications = ex
            .get("oracle_replications")
            .map(|v| as_count("experiment.oracle_replications", v))
            .transpose()?
            .unwrap_or(200);
        let pilot = match ex.get("pilot") {
            None => Pilot::Average,
            Some(Value::String(s)) if s == "average" => Pilot::Average,
            Some(v) => Pilot::Fixed(as_positive("experiment.pilot", v)?),
        };

        let (key, v) = required(fd, "field", "families")?;
        let families = one_or_many(&key, v, |key, v| {
            v.as_str()
                .ok_or_else(|| usage(key, format!("expected a family name, got {v}")))?
                .parse::<Family>()
                .map_err(|e| usage(key, e))
        })?;
        let (key, v) = required(fd, "field", "alpha")?;
        let alphas = one_or_many(&key, v, as_positive)?;
        let (key, v) = required(fd, "field", "locations")?;
        let locations = as_count(&key, v)?;
        let (key, v) = required(fd, "field", "beta")?;
        let beta = as_positive(&key, v)?;
        if beta < 1.0 {
            return Err(usage("field.beta", format!("must be >= 1, got {beta}")));
        }

        Ok(ExperimentFile {
            ns,
            replications,
            seed,
            policy,
            k,
            oracle_replications,
            pilot,
            families,
            alphas,
            locations,
            beta,
        })
    }

    pub fn distribution(&self) -> String {
        self.families.iter().map(Family::name).collect::<Vec<_>>().join("/")
    }

    /// Expands the file into one cell per `(alpha, n)`, in file order.
    pub fn cells(&self, seed: u64) -> Result<Vec<Cell>> {
        let copula = CopulaModel::gumbel(self.beta).map_err(|e| usage("field.beta", e))?;
        let mut cells = Vec::new();
        for &alpha in &self.alphas {
            let field = FieldModel::cycled(&self.families, alpha, self.locations, copula)
                .map_err(|e| usage("field", e))?;
            for &n in &self.ns {
                let policy = match self.policy {
                    PolicyName::Oracle => KPolicy::Oracle,
                    PolicyName::RandomizedOracle => KPolicy::RandomizedOracle,
                    PolicyName::Fixed => KPolicy::Fixed(vec![self.k.unwrap_or_default(); self.locations]),
                };
                let mut config = ExperimentConfig::new(field.clone(), n, self.replications, seed, policy);
                config.oracle_replications = self.oracle_replications;
                config.pilot = self.pilot;
                cells.push(Cell {
                    distribution: self.distribution(),
                    config,
                });
            }
        }
        Ok(cells)
    }
}
