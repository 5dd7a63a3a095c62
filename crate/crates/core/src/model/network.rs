use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;

use super::{InducedGraph, ModelError};
use crate::minplus::{ConcaveCurve, ConvexCurve, Shaper, TokenBucket};

/// Quantum used for CEIL rounding when none is given explicitly (seconds).
pub const DEFAULT_CEIL_PRECISION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Multiplexing {
    #[default]
    Fifo,
    Arbitrary,
}

impl fmt::Display for Multiplexing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Multiplexing::Fifo => "FIFO",
            Multiplexing::Arbitrary => "ARBITRARY",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalysisOptions {
    pub multiplexing: Multiplexing,
    /// Bound each server's input by the shaper of the upstream link.
    pub input_shaping: bool,
    /// Account for store-and-forward packetization.
    pub packetizer: bool,
    /// Quantum (seconds) to which delays are rounded up while iterating
    /// networks with cyclic dependencies.
    pub ceil_precision: Option<f64>,
}

impl AnalysisOptions {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self.ceil_precision {
            Some(q) if !(q.is_finite() && q > 0.0) => Err(ModelError::InvalidCeilPrecision(q)),
            _ => Ok(()),
        }
    }
}

/// An output port: a service curve plus the capacity of the attached link
/// (`None` when the link is not rate limited).
#[derive(Debug, Clone, PartialEq)]
pub struct Server {
    pub name: String,
    pub service: ConvexCurve,
    pub capacity: Option<f64>,
}

impl Server {
    pub fn new(name: impl Into<String>, service: ConvexCurve, capacity: Option<f64>) -> Self {
        Self {
            name: name.into(),
            service,
            capacity,
        }
    }

    /// Shaper `gamma_{C, L}` of the output link for packets up to `packet` bits.
    pub fn shaper(&self, packet: f64) -> Shaper {
        match self.capacity {
            Some(c) => TokenBucket::new(c, packet).map_or(Shaper::Unbounded, Shaper::Bucket),
            None => Shaper::Unbounded,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub name: String,
    pub path: Vec<String>,
    pub arrival: ConcaveCurve,
    pub max_packet_length: f64,
    pub min_packet_length: f64,
}

impl Flow {
    pub fn new(name: impl Into<String>, path: Vec<String>, arrival: ConcaveCurve) -> Self {
        Self {
            name: name.into(),
            path,
            arrival,
            max_packet_length: 0.0,
            min_packet_length: 0.0,
        }
    }

    pub fn with_packet_lengths(mut self, max: f64, min: f64) -> Self {
        self.max_packet_length = max;
        self.min_packet_length = min;
        self
    }
}

/// Servers and the flows crossing them. Validated on construction: names
/// are unique and every path is a non-repeating sequence of known servers.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPortNetwork {
    name: String,
    options: AnalysisOptions,
    servers: Vec<Server>,
    flows: Vec<Flow>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub server: String,
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("aggregate arrival rate reaches the service rate at {}", .violations.iter().map(|v| format!("{} ({:.3})", v.server, v.utilization)).collect::<Vec<_>>().join(", "))]
pub struct StabilityError {
    pub violations: Vec<Violation>,
}

impl OutputPortNetwork {
    pub fn new(
        name: impl Into<String>,
        options: AnalysisOptions,
        servers: Vec<Server>,
        flows: Vec<Flow>,
    ) -> Result<Self, ModelError> {
        options.validate()?;
        let mut index = HashMap::with_capacity(servers.len());
        for (i, s) in servers.iter().enumerate() {
            if index.insert(s.name.clone(), i).is_some() {
                return Err(ModelError::DuplicateName {
                    kind: "server",
                    name: s.name.clone(),
                });
            }
            if let Some(c) = s.capacity {
                if !(c.is_finite() && c > 0.0) {
                    return Err(ModelError::InvalidCapacity {
                        server: s.name.clone(),
                    });
                }
            }
        }
        let mut flow_names = HashMap::with_capacity(flows.len());
        for f in &flows {
            if flow_names.insert(f.name.as_str(), ()).is_some() {
                return Err(ModelError::DuplicateName {
                    kind: "flow",
                    name: f.name.clone(),
                });
            }
            if f.path.is_empty() {
                return Err(ModelError::EmptyPath {
                    flow: f.name.clone(),
                });
            }
            let mut seen = Vec::with_capacity(f.path.len());
            for hop in &f.path {
                if !index.contains_key(hop) {
                    return Err(ModelError::UnknownServer {
                        flow: f.name.clone(),
                        server: hop.clone(),
                    });
                }
                if seen.contains(&hop) {
                    return Err(ModelError::RepeatedServer {
                        flow: f.name.clone(),
                        server: hop.clone(),
                    });
                }
                seen.push(hop);
            }
            let lengths_ok = f.min_packet_length.is_finite()
                && f.max_packet_length.is_finite()
                && f.min_packet_length >= 0.0
                && f.max_packet_length >= f.min_packet_length;
            if !lengths_ok {
                return Err(ModelError::PacketLengths {
                    flow: f.name.clone(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            options,
            servers,
            flows,
            index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn options(&self) -> &AnalysisOptions {
        &self.options
    }

    pub fn servers(&self) -> &[Server] {
        &self.servers
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn server_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn server(&self, name: &str) -> Option<&Server> {
        self.server_index(name).map(|i| &self.servers[i])
    }

    /// Same network analysed under different options.
    pub fn with_options(&self, options: AnalysisOptions) -> Result<Self, ModelError> {
        options.validate()?;
        let mut net = self.clone();
        net.options = options;
        Ok(net)
    }

    /// Paths as server indices, in flow order.
    pub fn index_paths(&self) -> Vec<Vec<usize>> {
        self.flows
            .iter()
            .map(|f| f.path.iter().map(|h| self.index[h]).collect())
            .collect()
    }

    pub fn induced_graph(&self) -> InducedGraph {
        InducedGraph::new(
            self.servers.iter().map(|s| s.name.clone()),
            self.index_paths()
                .iter()
                .flat_map(|p| p.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>()),
        )
    }

    /// Aggregate long-run arrival rate over long-run service rate, per server.
    pub fn link_utilization(&self) -> IndexMap<String, f64> {
        let mut load = vec![0.0; self.servers.len()];
        for (flow, path) in self.flows.iter().zip(self.index_paths()) {
            for s in path {
                load[s] += flow.arrival.rate();
            }
        }
        self.servers
            .iter()
            .zip(load)
            .map(|(s, l)| (s.name.clone(), l / s.service.rate()))
            .collect()
    }

    /// Every server whose utilization is not strictly below one.
    pub fn check_stability(&self) -> Result<(), StabilityError> {
        let violations: Vec<_> = self
            .link_utilization()
            .into_iter()
            .filter(|(_, u)| u.partial_cmp(&1.0) != Some(std::cmp::Ordering::Less))
            .map(|(server, utilization)| Violation {
                server,
                utilization,
            })
            .collect();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(StabilityError { violations })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn server(name: &str, rate: f64) -> Server {
        Server::new(name, ConvexCurve::rate_latency(rate, 0.0).unwrap(), None)
    }

    fn flow(name: &str, path: &[&str], rate: f64) -> Flow {
        Flow::new(
            name,
            path.iter().map(|s| s.to_string()).collect(),
            ConcaveCurve::token_bucket(rate, 1.0).unwrap(),
        )
    }

    #[test]
    fn utilization_example() {
        let net = OutputPortNetwork::new(
            "u",
            AnalysisOptions::default(),
            vec![server("s", 10e3), server("idle", 1.0)],
            vec![flow("a", &["s"], 2e3), flow("b", &["s"], 3e3)],
        )
        .unwrap();
        let u = net.link_utilization();
        assert_eq!(u["s"], 0.5);
        assert_eq!(u["idle"], 0.0);
        assert!(net.check_stability().is_ok());
    }

    #[test]
    fn stability_boundary_fails() {
        let net = OutputPortNetwork::new(
            "u",
            AnalysisOptions::default(),
            vec![server("s", 10.0)],
            vec![flow("a", &["s"], 10.0)],
        )
        .unwrap();
        let err = net.check_stability().unwrap_err();
        assert_eq!(err.violations.len(), 1);
        assert_eq!(err.violations[0].server, "s");
    }

    #[test]
    fn validation_errors() {
        let servers = || vec![server("a", 1.0), server("b", 1.0)];
        let opts = AnalysisOptions::default();
        let err = OutputPortNetwork::new("n", opts, servers(), vec![flow("f", &[], 0.1)]);
        assert!(matches!(err, Err(ModelError::EmptyPath { .. })));
        let err = OutputPortNetwork::new("n", opts, servers(), vec![flow("f", &["a", "c"], 0.1)]);
        assert!(matches!(err, Err(ModelError::UnknownServer { .. })));
        let err =
            OutputPortNetwork::new("n", opts, servers(), vec![flow("f", &["a", "b", "a"], 0.1)]);
        assert!(matches!(err, Err(ModelError::RepeatedServer { .. })));
        let err =
            OutputPortNetwork::new("n", opts, vec![server("a", 1.0), server("a", 2.0)], vec![]);
        assert!(matches!(err, Err(ModelError::DuplicateName { .. })));
        let f = flow("f", &["a"], 0.1).with_packet_lengths(1.0, 2.0);
        let err = OutputPortNetwork::new("n", opts, servers(), vec![f]);
        assert!(matches!(err, Err(ModelError::PacketLengths { .. })));
        let bad = AnalysisOptions {
            ceil_precision: Some(0.0),
            ..opts
        };
        let err = OutputPortNetwork::new("n", bad, servers(), vec![]);
        assert!(matches!(err, Err(ModelError::InvalidCeilPrecision(_))));
    }

    #[test]
    fn induced_graph_of_single_hop() {
        let net = OutputPortNetwork::new(
            "n",
            AnalysisOptions::default(),
            vec![server("a", 1.0)],
            vec![flow("f", &["a"], 0.1)],
        )
        .unwrap();
        let g = net.induced_graph();
        assert_eq!(g.node_count(), 1);
        assert!(g.edges().is_empty());
    }
}
