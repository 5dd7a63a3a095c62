use std::collections::{HashMap, HashSet};

use super::{AnalysisOptions, ModelError};
use crate::minplus::{ConcaveCurve, ConvexCurve, RateLatency};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Station,
    Switch,
}

/// Output-port parameters that may be given on a link, on a node (default
/// for all its output links) or on the network (default for everything).
/// Service pieces pair latencies and rates by position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PortParams {
    pub service_latencies: Option<Vec<f64>>,
    pub service_rates: Option<Vec<f64>>,
    pub capacity: Option<f64>,
}

impl PortParams {
    pub fn is_empty(&self) -> bool {
        self.service_latencies.is_none() && self.service_rates.is_none() && self.capacity.is_none()
    }

    pub fn with_service(service: &ConvexCurve, capacity: Option<f64>) -> Self {
        Self {
            service_latencies: Some(service.pieces().iter().map(|p| p.latency()).collect()),
            service_rates: Some(service.pieces().iter().map(|p| p.rate()).collect()),
            capacity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkDefaults {
    pub port: PortParams,
    pub min_packet_length: Option<f64>,
    pub max_packet_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub port: PortParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub name: String,
    pub from: String,
    pub to: String,
    pub from_port: String,
    pub to_port: String,
    pub port: PortParams,
}

/// A flow from `source` along one node path per target; several targets
/// make a multicast flow.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalFlow {
    pub name: String,
    pub source: String,
    pub targets: Vec<Vec<String>>,
    pub arrival: ConcaveCurve,
    pub max_packet_length: Option<f64>,
    pub min_packet_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalNetwork {
    pub name: String,
    pub options: AnalysisOptions,
    pub defaults: NetworkDefaults,
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub flows: Vec<PhysicalFlow>,
}

impl PhysicalNetwork {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.options.validate()?;
        let mut names = HashSet::new();
        for n in &self.nodes {
            if !names.insert(n.name.as_str()) {
                return Err(ModelError::DuplicateName {
                    kind: "node",
                    name: n.name.clone(),
                });
            }
        }
        let mut ports = HashSet::new();
        let mut link_names = HashSet::new();
        for l in &self.links {
            if !link_names.insert(l.name.as_str()) {
                return Err(ModelError::DuplicateName {
                    kind: "link",
                    name: l.name.clone(),
                });
            }
            for end in [&l.from, &l.to] {
                if !names.contains(end.as_str()) {
                    return Err(ModelError::UndefinedNode {
                        link: l.name.clone(),
                        node: end.clone(),
                    });
                }
            }
            if !ports.insert((l.from.as_str(), l.from_port.as_str())) {
                return Err(ModelError::DuplicatePort {
                    node: l.from.clone(),
                    port: l.from_port.clone(),
                });
            }
        }
        let mut flow_names = HashSet::new();
        for f in &self.flows {
            if !flow_names.insert(f.name.as_str()) {
                return Err(ModelError::DuplicateName {
                    kind: "flow",
                    name: f.name.clone(),
                });
            }
            if !names.contains(f.source.as_str()) {
                return Err(ModelError::UndefinedNode {
                    link: format!("flow {}", f.name),
                    node: f.source.clone(),
                });
            }
            if f.targets.is_empty() || f.targets.iter().any(|t| t.is_empty()) {
                return Err(ModelError::NoTarget {
                    flow: f.name.clone(),
                });
            }
            for target in &f.targets {
                let mut prev = f.source.as_str();
                for hop in target {
                    if self.find_link(prev, hop).is_none() {
                        return Err(ModelError::NoLink {
                            flow: f.name.clone(),
                            from: prev.to_string(),
                            to: hop.clone(),
                        });
                    }
                    prev = hop;
                }
            }
            let (max, min) = self.packet_lengths(f);
            if !(min >= 0.0 && max >= min) {
                return Err(ModelError::PacketLengths {
                    flow: f.name.clone(),
                });
            }
        }
        for l in &self.links {
            self.resolve_service(l)?;
        }
        Ok(())
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// First link (document order) from `from` to `to`.
    pub fn find_link(&self, from: &str, to: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.from == from && l.to == to)
    }

    pub(crate) fn link_lookup(&self) -> HashMap<(&str, &str), usize> {
        let mut map = HashMap::new();
        for (i, l) in self.links.iter().enumerate() {
            map.entry((l.from.as_str(), l.to.as_str())).or_insert(i);
        }
        map
    }

    fn inherited<'a, T>(
        &'a self,
        link: &'a Link,
        pick: impl Fn(&'a PortParams) -> Option<T>,
    ) -> Option<T> {
        pick(&link.port)
            .or_else(|| self.node(&link.from).and_then(|n| pick(&n.port)))
            .or_else(|| pick(&self.defaults.port))
    }

    /// Service of the output port behind `link`, resolved link, then node,
    /// then network. `None` marks a dummy link.
    pub fn resolve_service(&self, link: &Link) -> Result<Option<ConvexCurve>, ModelError> {
        let Some(rates) = self.inherited(link, |p| p.service_rates.as_ref()) else {
            return Ok(None);
        };
        let latencies = self
            .inherited(link, |p| p.service_latencies.as_ref())
            .cloned()
            .unwrap_or_else(|| vec![0.0; rates.len()]);
        if latencies.len() != rates.len() || rates.is_empty() {
            return Err(ModelError::ServicePairing {
                link: link.name.clone(),
            });
        }
        let pieces = rates
            .iter()
            .zip(&latencies)
            .map(|(&r, &t)| RateLatency::new(r, t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some(ConvexCurve::new(pieces)?))
    }

    pub fn resolve_capacity(&self, link: &Link) -> Option<f64> {
        self.inherited(link, |p| p.capacity)
    }

    /// `(max, min)` packet lengths of a flow after network defaults. A missing
    /// maximum falls back to the minimum.
    pub fn packet_lengths(&self, flow: &PhysicalFlow) -> (f64, f64) {
        let min = flow
            .min_packet_length
            .or(self.defaults.min_packet_length)
            .unwrap_or(0.0);
        let max = flow
            .max_packet_length
            .or(self.defaults.max_packet_length)
            .unwrap_or(min);
        (max, min)
    }
}
