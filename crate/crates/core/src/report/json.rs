use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::ResultSet;
use crate::formats::to_pretty;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportUnits {
    pub flow_delay: String,
    pub server_delay: String,
    pub execution_time: String,
}

/// Machine-readable report. Delays are in microseconds and execution times
/// in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonReport {
    pub name: String,
    pub flow_e2e_delay: IndexMap<String, IndexMap<String, f64>>,
    pub server_delay: IndexMap<String, IndexMap<String, f64>>,
    pub execution_time: IndexMap<String, f64>,
    pub units: ReportUnits,
}

impl From<&ResultSet> for JsonReport {
    fn from(rs: &ResultSet) -> Self {
        let net = rs.network();
        let mut flow_e2e_delay = IndexMap::new();
        for flow in net.flows() {
            let row: IndexMap<String, f64> = rs
                .results()
                .iter()
                .filter_map(|r| {
                    r.flow_delays
                        .get(&flow.name)
                        .map(|d| (r.label.clone(), d * 1e6))
                })
                .collect();
            flow_e2e_delay.insert(flow.name.clone(), row);
        }
        let mut server_delay = IndexMap::new();
        for server in net.servers() {
            let row: IndexMap<String, f64> = rs
                .results()
                .iter()
                .filter_map(|r| {
                    r.server_delays
                        .get(&server.name)
                        .map(|d| (r.label.clone(), d * 1e6))
                })
                .collect();
            if !row.is_empty() {
                server_delay.insert(server.name.clone(), row);
            }
        }
        let execution_time = rs
            .results()
            .iter()
            .map(|r| (r.label.clone(), r.execution_time.as_secs_f64() * 1e3))
            .collect();
        JsonReport {
            name: net.name().to_string(),
            flow_e2e_delay,
            server_delay,
            execution_time,
            units: ReportUnits {
                flow_delay: "us".into(),
                server_delay: "us".into(),
                execution_time: "ms".into(),
            },
        }
    }
}

pub fn export_json(rs: &ResultSet) -> String {
    to_pretty(&JsonReport::from(rs))
}

pub fn parse_json_report(text: &str) -> Result<JsonReport, serde_json::Error> {
    serde_json::from_str(text)
}
