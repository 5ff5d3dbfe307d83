//! The serializable description of a run. A saved `config.toml` plus its
//! seed reproduces the run.

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub precision_bits: usize,
    pub command: Command,
}

impl ExperimentConfig {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        Ok(toml::from_str(text)?)
    }
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Angles of the lattice points on a circle
    GenCircle(GenCircleArgs),
    /// Nearest-neighbour spacing histogram and KS distance to Exp(1)
    Spacing(SpacingArgs),
    /// Smoothed r-level correlation of one radius
    Correlate(CorrelateArgs),
    /// Monte Carlo moments of the random model
    RandomModel(RandomModelArgs),
    /// Family average against the predicted main term
    Family(FamilyArgs),
    /// Cell decomposition of Z^{r-1}
    Cells(CellsArgs),
    /// Repulsion bound for a relation among prime angles
    Repulsion(RepulsionArgs),
}

impl Command {
    pub fn default_precision_bits(&self) -> usize {
        match self {
            Command::Repulsion(_) => 256,
            _ => 64,
        }
    }
}

/// Where the radius comes from: exactly one source must be given.
#[derive(Clone, Debug, Default, Args, Serialize, Deserialize, PartialEq)]
pub struct RadiusArgs {
    /// Split primes, each optionally raised to a power as p^e (e.g. 5,13 or 5^2,13)
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub primes: Vec<String>,
    /// Product of M distinct split primes drawn with the run seed
    #[arg(long, value_name = "M")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_split: Option<usize>,
    /// Upper bound for primes drawn by --random-split
    #[arg(long, default_value_t = 1_000_000)]
    #[serde(default = "default_max_prime")]
    pub max_prime: u64,
    /// Product of the first K primes of the form m^2 + 1
    #[arg(long, value_name = "K")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2plus1_primes: Option<usize>,
    /// Skip the first S primes of the form m^2 + 1
    #[arg(long, value_name = "S", default_value_t = 0)]
    #[serde(default, skip_serializing_if = "is_zero")]
    pub m2plus1_skip: usize,
    /// Product of M consecutive split primes starting at --start
    #[arg(long, value_name = "M")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consecutive_split: Option<usize>,
    /// Smallest prime allowed by --consecutive-split
    #[arg(long, default_value_t = 5)]
    #[serde(default = "default_start")]
    pub start: u64,
    /// A small radius factored by trial division
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
}

impl RadiusArgs {
    pub fn is_given(&self) -> bool {
        !self.primes.is_empty()
            || self.random_split.is_some()
            || self.m2plus1_primes.is_some()
            || self.consecutive_split.is_some()
            || self.n.is_some()
    }
}

fn default_max_prime() -> u64 {
    1_000_000
}

fn default_start() -> u64 {
    5
}

fn is_zero(x: &usize) -> bool {
    *x == 0
}

#[derive(Clone, Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct GenCircleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub radius: RadiusArgs,
    /// Centre of the window extracts
    #[arg(long, default_value_t = 0.5390)]
    pub center: f64,
    /// Window widths around the centre
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.001, 0.0002])]
    pub widths: Vec<f64>,
    /// Also write a gnuplot script
    #[arg(long)]
    #[serde(default)]
    pub gnuplot: bool,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct SpacingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub radius: RadiusArgs,
    /// Read angles from a CSV or JSON file written by gen-circle
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<String>,
    /// Use N equally spaced angles
    #[arg(long, value_name = "N")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equally_spaced: Option<usize>,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    #[arg(long, default_value_t = 4.0)]
    pub max_spacing: f64,
    /// Random radii of the same size used for the typical KS value
    #[arg(long, default_value_t = 20)]
    pub reference_samples: usize,
    /// KS above this multiple of the typical median is flagged atypical
    #[arg(long, default_value_t = 2.0)]
    pub atypical_factor: f64,
    #[arg(long)]
    #[serde(default)]
    pub gnuplot: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    Gaussian,
    Fejer,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t = KernelFamily::Gaussian)]
    pub kernel: KernelFamily,
    /// Gaussian width
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Fejer support of fhat
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationMethod {
    Direct,
    Distinct,
    Fourier,
    All,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct CorrelateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub radius: RadiusArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    #[arg(long, value_enum, default_value_t = CorrelationMethod::Direct)]
    pub method: CorrelationMethod,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// prod_j lambda_{4(k_{j+1}-k_j)} against (2 alpha(k))^M
    Lambda,
    /// R_r over all tuples
    R,
    /// R_r over pairwise-distinct tuples
    RStar,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct RandomModelArgs {
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = Statistic::RStar)]
    pub statistic: Statistic,
    #[arg(long, default_value_t = 1)]
    pub moment: i32,
    /// k_1..k_{r-1} for the lambda statistic
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k: Vec<i64>,
    /// Shift the model by the angles of this n0
    #[arg(long, default_value_t = 1)]
    pub n0: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArgs,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct FamilyArgs {
    /// Upper bound for the family, e.g. 1e7
    #[arg(long)]
    pub x: String,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: usize,
    /// k_1..k_{r-1}
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Vec<i64>,
    #[arg(long, default_value_t = 1)]
    pub n0: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub prime_cutoff: u64,
    /// Also average R_2 and its square over the family
    #[arg(long)]
    #[serde(default)]
    pub correlation: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArgs,
    /// Write every member with its lambda product
    #[arg(long)]
    #[serde(default)]
    pub dump_terms: bool,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct CellsArgs {
    #[arg(long)]
    pub r: usize,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct RepulsionArgs {
    #[arg(long, value_delimiter = ',')]
    pub primes: Vec<u64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Vec<i64>,
}

/// Parses `1e7`, `10000000` or `10_000_000` as an exact integer.
pub fn parse_count(s: &str) -> CliResult<u64> {
    let t = s.replace('_', "");
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = t.parse().map_err(|_| CliError::Usage(format!("not a number: {s}")))?;
    if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < 1.8e19) {
        return Err(CliError::Usage(format!("not a nonnegative integer: {s}")));
    }
    Ok(v as u64)
}
