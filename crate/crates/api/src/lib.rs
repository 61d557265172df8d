//! Wire types for the HTTP/JSON interface.
//!
//! Every request body is a JSON object; unknown fields are rejected so typos
//! in option names fail loudly instead of silently using a default.

use ccb_core::irrq::TraceRow;
use ccb_core::{
    BalanceMode, CostKind, Graph, IrrqConfig, Metrics, PartitionK, StopReason, SweepFamily,
    SweepRow,
};
use serde::{Deserialize, Serialize};

pub use ccb_core::{AffinityParams, EigenOptions};

/// Edge list form of a graph: `n` vertices and `(i, j, w)` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphSpec {
    pub fn to_graph(&self) -> ccb_core::Result<Graph> {
        Graph::new(self.n, self.edges.iter().copied())
    }
}

impl From<&Graph> for GraphSpec {
    fn from(g: &Graph) -> Self {
        GraphSpec {
            n: g.n(),
            edges: g.edges().iter().map(|e| (e.i, e.j, e.w)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMethod {
    Multiway,
    Hierarchical,
    Brute,
}

impl std::str::FromStr for PartitionMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "multiway" => Ok(PartitionMethod::Multiway),
            "hierarchical" => Ok(PartitionMethod::Hierarchical),
            "brute" => Ok(PartitionMethod::Brute),
            _ => Err(format!(
                "unknown method `{s}` (multiway, hierarchical, brute)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionRequest {
    pub graph: GraphSpec,
    pub cost: CostKind,
    pub method: PartitionMethod,
    /// Solver settings; `config.k` is the number of blocks.
    #[serde(default)]
    pub config: IrrqConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResponse {
    pub labels: Vec<usize>,
    pub k: usize,
    /// The requested cost evaluated on `labels`.
    pub cost: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
}

impl PartitionResponse {
    pub fn partition(&self) -> ccb_core::Result<PartitionK> {
        PartitionK::new(self.labels.clone(), self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub alphas: Vec<f64>,
    /// `τ` values for the CCB family, `p` values for Bühler–Hein.
    pub params: Vec<f64>,
    pub family: SweepFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResponse {
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedRequest {
    pub graph: GraphSpec,
    pub mode: BalanceMode,
    /// `config.k` is the number of embedding columns.
    #[serde(default)]
    pub config: IrrqConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    /// Row-major `n × k`.
    pub rows: Vec<Vec<f64>>,
    pub trace: Vec<TraceRow>,
    pub stop: StopReason,
    pub theta_hat: usize,
    pub kappa: usize,
    pub floored_gammas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostRequest {
    pub graph: GraphSpec,
    pub labels: Vec<usize>,
    pub cost: CostKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostResponse {
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageMethod {
    Multiway,
    Hierarchical,
}

impl From<ImageMethod> for ccb_core::SegmentMethod {
    fn from(m: ImageMethod) -> Self {
        match m {
            ImageMethod::Multiway => ccb_core::SegmentMethod::Multiway,
            ImageMethod::Hierarchical => ccb_core::SegmentMethod::Hierarchical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRequest {
    /// Encoded image file (PNG or PNM), base64.
    pub image_base64: String,
    pub method: ImageMethod,
    pub mode: BalanceMode,
    #[serde(default)]
    pub affinity: AffinityParams,
    /// `config.k` is the number of segments.
    #[serde(default)]
    pub config: IrrqConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResponse {
    pub width: u32,
    pub height: u32,
    /// Row-major pixel labels.
    pub labels: Vec<u32>,
    pub sigma: f64,
    pub iterations: usize,
    pub degree_spread: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalRequest {
    pub segmentation: Vec<usize>,
    pub ground_truths: Vec<Vec<usize>>,
}

pub type EvalResponse = Metrics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionResponse {
    pub version: String,
    pub tau_domain: String,
    pub irrq: IrrqConfig,
    pub eigen: EigenOptions,
    pub affinity: AffinityParams,
}

impl VersionResponse {
    pub fn current() -> Self {
        VersionResponse {
            version: env!("CARGO_PKG_VERSION").to_string(),
            tau_domain: "(0, 2]".to_string(),
            irrq: IrrqConfig::default(),
            eigen: EigenOptions::default(),
            affinity: AffinityParams::default(),
        }
    }
}

/// Error classes; clients map them to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    /// Unreadable or undecodable input data.
    Io,
    /// Invalid parameters or inconsistent inputs.
    Config,
    /// Numerical failure inside a solver.
    Solver,
}

impl From<ccb_core::ErrorCategory> for ErrorKind {
    fn from(c: ccb_core::ErrorCategory) -> Self {
        match c {
            ccb_core::ErrorCategory::Io => ErrorKind::Io,
            ccb_core::ErrorCategory::Config => ErrorKind::Config,
            ccb_core::ErrorCategory::Solver => ErrorKind::Solver,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: ErrorKind,
    pub message: String,
}

impl From<&ccb_core::Error> for ErrorBody {
    fn from(e: &ccb_core::Error) -> Self {
        ErrorBody {
            kind: e.category().into(),
            message: e.to_string(),
        }
    }
}
