//! Config files: TOML with `schema`, `seed`, `[media.*]`, `[tolerances]`
//! and `[[jobs]]`, plus dotted-key overrides from the command line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use fpp_core::environment::EnvironmentConfig;
use fpp_core::validation::Tolerances;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::output::{Format, SCHEMA};

pub const DEFAULT_SEED: u64 = 20_261_016;

/// Anything that should exit with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// An empty config file: print usage and exit 2.
#[derive(Debug)]
pub struct EmptyConfig;

impl fmt::Display for EmptyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config has no jobs")
    }
}

impl std::error::Error for EmptyConfig {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SimulateFpp,
    EstimateM,
    SolveStationary,
    SolveHorizon,
    EstimateHbar,
    SymMinimize,
    DualNorm,
    LimitShape,
    CompareDistros,
    Validate,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::SimulateFpp => "simulate-fpp",
            Command::EstimateM => "estimate-m",
            Command::SolveStationary => "solve-stationary",
            Command::SolveHorizon => "solve-horizon",
            Command::EstimateHbar => "estimate-hbar",
            Command::SymMinimize => "sym-minimize",
            Command::DualNorm => "dual-norm",
            Command::LimitShape => "limit-shape",
            Command::CompareDistros => "compare-distros",
            Command::Validate => "validate",
        }
    }
}

/// Checks a scalar result against `value ± tol`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub value: f64,
    #[serde(default = "default_expect_tol")]
    pub tol: f64,
}

fn default_expect_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Deserialize)]
pub struct JobSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub command: Command,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub expect: Option<Expect>,
    /// Command-specific parameters, checked when the job is planned.
    #[serde(flatten)]
    pub params: toml::Table,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub media: BTreeMap<String, EnvironmentConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub jobs: Vec<JobSpec>,
}

/// A parsed config with overrides applied.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: Config,
    /// Effective TOML after overrides; this is what the digest covers.
    pub text: String,
    pub digest: String,
    pub base_dir: PathBuf,
}

impl Loaded {
    pub fn seed(&self) -> u64 {
        self.config.seed.unwrap_or(DEFAULT_SEED)
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets a dotted key such as `tolerances.stationary` or `jobs.0.n`.
pub fn apply_override(root: &mut toml::Value, assignment: &str) -> anyhow::Result<()> {
    let Some((key, raw)) = assignment.split_once('=') else {
        return Err(config_error(format!("override {assignment:?} is not key=value")));
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_error(format!("bad override key {key:?}")));
    }
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            toml::Value::Table(t) => {
                if last {
                    t.insert(part.to_string(), parse_value(raw.trim()));
                    return Ok(());
                }
                t.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()))
            }
            toml::Value::Array(a) => {
                let idx: usize =
                    part.parse().map_err(|_| config_error(format!("override {key:?}: {part:?} is not an index")))?;
                let len = a.len();
                let slot =
                    a.get_mut(idx).ok_or_else(|| config_error(format!("override {key:?}: index {idx} >= {len}")))?;
                if last {
                    *slot = parse_value(raw.trim());
                    return Ok(());
                }
                slot
            }
            _ => return Err(config_error(format!("override {key:?}: {part:?} is not a table"))),
        };
    }
    unreachable!("loop returns on the last segment")
}

pub fn load(path: &Path, overrides: &[String], seed: Option<u64>) -> anyhow::Result<Loaded> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_str(&text, &base_dir, overrides, seed)
}

pub fn load_str(text: &str, base_dir: &Path, overrides: &[String], seed: Option<u64>) -> anyhow::Result<Loaded> {
    let table: toml::Table = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
    if table.is_empty() {
        return Err(EmptyConfig.into());
    }
    let mut root = toml::Value::Table(table);
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    if let Some(s) = seed {
        apply_override(&mut root, &format!("seed={s}"))?;
    }
    let config: Config = root.clone().try_into().map_err(|e: toml::de::Error| config_error(e.to_string()))?;
    if config.schema != SCHEMA {
        return Err(config_error(format!("unsupported schema {}, expected {SCHEMA}", config.schema)));
    }
    config.tolerances.validate().map_err(|e| config_error(e.to_string()))?;
    let text = toml::to_string(&root).map_err(|e| config_error(e.to_string()))?;
    let digest = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded { config, text, digest, base_dir: base_dir.to_path_buf() })
}
