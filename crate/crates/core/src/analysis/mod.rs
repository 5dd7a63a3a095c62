//! Native delay analyses over output-port networks.
//!
//! * TFA bounds the delay of every server from the aggregate of the flows
//!   crossing it, then sums server delays along each path.
//! * SFA computes, per flow, the service left over by cross traffic at every
//!   hop, concatenates it along the path and bounds the flow in one step.
//!
//! Networks whose induced graph has a cycle are solved by iterating TFA
//! passes from zero delays until the delays stop changing.

mod fixed_point;
mod sfa;
mod tfa;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use thiserror::Error;

pub use fixed_point::{fixed_point, FixedPoint, ServerState};
pub use sfa::{analyze_sfa, analyze_sfa_with};
pub use tfa::{analyze_tfa, analyze_tfa_with};

use crate::minplus::CurveError;
use crate::model::{AnalysisOptions, ModelError, OutputPortNetwork, StabilityError};
use crate::Executor;

/// Relative change below which fixed-point iteration stops when delays are
/// not quantized.
pub const CONVERGENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Tfa,
    Sfa,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Tfa, Method::Sfa];

    /// Label used in reports, e.g. `native_TFA`.
    pub fn label(self) -> String {
        format!("native_{self}")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Tfa => "TFA",
            Method::Sfa => "SFA",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TFA" => Ok(Method::Tfa),
            "SFA" => Ok(Method::Sfa),
            _ => Err(format!("unknown method `{s}` (expected TFA or SFA)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("network is unstable: {0}")]
    Unstable(#[from] StabilityError),
    #[error(
        "no finite bound found: cyclic dependency among {} did not converge after {iterations} iterations",
        format_cycles(.cycles)
    )]
    Divergent {
        cycles: Vec<Vec<String>>,
        iterations: usize,
    },
    #[error("network has no servers or no flows to analyze")]
    EmptyNetwork,
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn format_cycles(cycles: &[Vec<String>]) -> String {
    cycles
        .iter()
        .map(|c| format!("[{}]", c.join(", ")))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub executor: Executor,
    /// Passes allowed before a cyclic network is declared divergent.
    pub max_iterations: usize,
    /// A cyclic network diverges once a propagated burst exceeds this many
    /// times its source burst (source bursts below one bit count as one).
    pub explosion_factor: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            executor: Executor::default(),
            max_iterations: 10_000,
            explosion_factor: 1e12,
        }
    }
}

impl AnalysisConfig {
    pub fn with_executor(executor: Executor) -> Self {
        Self {
            executor,
            ..Self::default()
        }
    }
}

/// Bounds computed by one method on one network. Delays are in seconds and
/// backlogs in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkResult {
    pub network: String,
    pub method: Method,
    pub label: String,
    pub options: AnalysisOptions,
    pub server_delays: IndexMap<String, f64>,
    pub server_backlogs: IndexMap<String, f64>,
    pub flow_delays: IndexMap<String, f64>,
    pub execution_time: Duration,
    /// TFA passes needed; 1 for acyclic networks.
    pub iterations: usize,
}

impl NetworkResult {
    fn new(net: &OutputPortNetwork, method: Method, options: AnalysisOptions) -> Self {
        Self {
            network: net.name().to_string(),
            method,
            label: method.label(),
            options,
            server_delays: IndexMap::new(),
            server_backlogs: IndexMap::new(),
            flow_delays: IndexMap::new(),
            execution_time: Duration::ZERO,
            iterations: 0,
        }
    }
}

pub fn analyze(
    net: &OutputPortNetwork,
    method: Method,
    options: &AnalysisOptions,
    config: &AnalysisConfig,
) -> Result<NetworkResult, AnalysisError> {
    match method {
        Method::Tfa => analyze_tfa_with(net, options, config),
        Method::Sfa => analyze_sfa_with(net, options, config),
    }
}

/// Runs every method on every network with the network's own options.
/// Networks are spread over the executor; results keep input order.
pub fn analyze_batch(
    nets: &[OutputPortNetwork],
    methods: &[Method],
    config: &AnalysisConfig,
) -> Vec<Vec<Result<NetworkResult, AnalysisError>>> {
    config.executor.map(nets, |net| {
        methods
            .iter()
            .map(|&m| analyze(net, m, net.options(), config))
            .collect()
    })
}

fn timed<T>(f: impl FnOnce() -> Result<T, AnalysisError>) -> Result<(T, Duration), AnalysisError> {
    let start = Instant::now();
    let value = f()?;
    Ok((value, start.elapsed()))
}
