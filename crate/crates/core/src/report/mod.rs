//! Reports over the results of one or more analyses of the same network.
//!
//! The JSON report keeps full precision; the Markdown report rounds every
//! table to three decimals in a unit picked from its smallest value.

mod json;
mod markdown;

use thiserror::Error;

pub use json::{export_json, parse_json_report, JsonReport, ReportUnits};
pub use markdown::{display_unit, export_markdown, TimeUnit};

use crate::analysis::NetworkResult;
use crate::model::OutputPortNetwork;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("a result labelled `{0}` is already in the set")]
    DuplicateLabel(String),
    #[error("result for network `{found}` does not belong to network `{expected}`")]
    WrongNetwork { expected: String, found: String },
}

/// Results of several methods on one network snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    network: OutputPortNetwork,
    results: Vec<NetworkResult>,
}

impl ResultSet {
    pub fn new(network: OutputPortNetwork) -> Self {
        Self {
            network,
            results: Vec::new(),
        }
    }

    pub fn push(&mut self, result: NetworkResult) -> Result<(), ReportError> {
        if result.network != self.network.name() {
            return Err(ReportError::WrongNetwork {
                expected: self.network.name().to_string(),
                found: result.network,
            });
        }
        if self.results.iter().any(|r| r.label == result.label) {
            return Err(ReportError::DuplicateLabel(result.label));
        }
        self.results.push(result);
        Ok(())
    }

    pub fn network(&self) -> &OutputPortNetwork {
        &self.network
    }

    pub fn results(&self) -> &[NetworkResult] {
        &self.results
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }
}
