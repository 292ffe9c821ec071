//! Serialized shapes of every command's output.

use coalesce_core::analysis::{Check, FitReport};
use coalesce_core::montecarlo::{SamplerKind, SummaryStats};
use coalesce_core::{Arithmetic, Rational};
use serde::{Deserialize, Serialize};

use coalesce_core::exact::SplitSource;

/// Bumped whenever any payload or config shape changes.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord<C, P> {
    pub schema_version: String,
    pub command: String,
    pub config: C,
    pub payload: P,
}

impl<C, P> OutputRecord<C, P> {
    pub fn new(command: &str, config: C, payload: P) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            config,
            payload,
        }
    }
}

/// A probability that is either an exact `"p/q"` string or a float.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbValue {
    Exact(String),
    Float(f64),
}

impl ProbValue {
    pub fn exact(value: &Rational) -> Self {
        ProbValue::Exact(format!("{}/{}", value.numer(), value.denom()))
    }

}

/// Conversion of either arithmetic into its serialized form.
pub trait ToProbValue {
    fn to_value(&self) -> ProbValue;
}

impl ToProbValue for Rational {
    fn to_value(&self) -> ProbValue {
        ProbValue::exact(self)
    }
}

impl ToProbValue for f64 {
    fn to_value(&self) -> ProbValue {
        ProbValue::Float(*self)
    }
}

impl std::fmt::Display for ProbValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProbValue::Exact(s) => f.write_str(s),
            ProbValue::Float(x) => write!(f, "{x:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactConfig {
    pub n: usize,
    pub tail_tol: f64,
    pub arithmetic: Arithmetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfRow {
    pub t: u64,
    pub p: ProbValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitRow {
    pub m: usize,
    pub p: ProbValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPayload {
    pub arithmetic: Arithmetic,
    pub pmf: Vec<PmfRow>,
    pub tail_mass: ProbValue,
    pub expected_time: ProbValue,
    pub expected_visited: ProbValue,
    pub visit_probabilities: Vec<VisitRow>,
}

/// Simulation settings as echoed; the worker count is left out because it
/// cannot change the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub xi: usize,
    pub xi_source: SplitSource,
    pub emit_samples: Option<String>,
}

pub type SimulatePayload = SummaryStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LimitQuantity {
    Density,
    Cdf,
    Charfn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitConfig {
    pub what: LimitQuantity,
    pub points: Vec<f64>,
    pub tol: f64,
    pub x_min: f64,
    pub product_k: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub x: f64,
    pub value: f64,
    pub error_bound: f64,
    pub terms_used: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharfnRow {
    pub t: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LimitPayload {
    Series(Vec<SeriesRow>),
    Charfn(Vec<CharfnRow>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    #[serde(flatten)]
    pub simulation: SimulateConfig,
    pub alpha: f64,
    pub tol: f64,
    pub checks: Vec<Check>,
}

pub type ComparePayload = FitReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Usage,
    Config,
    Ceiling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub schema_version: String,
    pub command: Option<String>,
    pub error: ErrorBody,
}
