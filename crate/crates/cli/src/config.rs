//! Experiment configuration file (TOML).

use std::path::{Path, PathBuf};

use quasilin::solver::{SolverConfig, TwoSolutionOptions};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_scenario")]
    pub scenario: String,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub domain: DomainBlock,
    pub gamma: GammaBlock,
    pub reaction: ReactionBlock,
    pub h: Option<HBlock>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub two_solution: TwoSolutionOptions,
    #[serde(default)]
    pub mu: MuBlock,
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub oracle: OracleBlock,
}

fn default_scenario() -> String {
    "unnamed".to_string()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub dim: usize,
    pub extent: Vec<f64>,
    pub n: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaKindName {
    Constant,
    DoublePhase,
    RationalDecay,
    Tabulated,
}

/// Flat parameter table; which keys are legal depends on `kind`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaBlock {
    pub kind: GammaKindName,
    pub c: Option<f64>,
    #[serde(rename = "A")]
    pub big_a: Option<f64>,
    #[serde(rename = "B")]
    pub big_b: Option<f64>,
    pub p: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub t: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
    /// Upper end of the audit sample.
    pub tmax: Option<f64>,
    /// Number of audit sample points.
    pub samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionKindName {
    SublinearG,
    LinearGrowthF,
    PureLinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    SinA,
    PowerRatioAb,
    MinPowersAb,
    Log1p,
    ExpLogpowA,
    ExpLoglog,
    AsymlinearLambda,
    LinearLambda,
    UserTabulated,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionBlock {
    pub kind: ReactionKindName,
    pub family: Option<FamilyName>,
    pub nu: Option<f64>,
    pub a: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub shift: Option<f64>,
    pub lambda: Option<f64>,
    /// `λ = lambda_factor · γ(∞) · (1 + λ₁)`
    pub lambda_factor: Option<f64>,
    pub t: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
    #[serde(rename = "C_lin")]
    pub c_lin: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Plateau,
    Phi1,
    File,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Value(f64),
    /// Only `"auto"`: largest certified amplitude from the smallness search.
    Keyword(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HBlock {
    pub direction: Direction,
    pub amplitude: Amplitude,
    pub path: Option<PathBuf>,
    /// Plateau ramp width as a fraction of the extent.
    pub margin: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuBlock {
    pub alpha_j: f64,
}

impl Default for MuBlock {
    fn default() -> Self {
        Self {
            alpha_j: quasilin::functional::DEFAULT_ALPHA_J,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Log(LogGrid),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Log(g) if g.n == 0 => Vec::new(),
            GridSpec::Log(g) if g.n == 1 => vec![g.lo],
            GridSpec::Log(g) => quasilin::sample::logspace(g.lo, g.hi, g.n),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub nu_grid: Option<GridSpec>,
    pub mu_grid: Option<GridSpec>,
    pub h_grid: Option<GridSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleBlock {
    /// Points per axis of the exhaustive search on tiny grids.
    pub brute_steps: usize,
    /// Lower bound on the search box; it always covers 1.5 times the candidate's sup norm.
    pub brute_half_width: Option<f64>,
    pub fd_step: f64,
}

impl Default for OracleBlock {
    fn default() -> Self {
        Self {
            brute_steps: 201,
            brute_half_width: None,
            fd_step: 1e-5,
        }
    }
}

/// Parsed config plus the digest of the file it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub path: PathBuf,
    pub digest: String,
}

pub fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Config(format!("{} is not UTF-8: {e}", path.display())))?;
    let config = parse(text).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))?;
    Ok(LoadedConfig {
        config,
        path: path.to_path_buf(),
        digest: digest_hex(&bytes),
    })
}

/// Parses the TOML text; errors carry the line and column.
pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string().trim_end().to_string())
}
