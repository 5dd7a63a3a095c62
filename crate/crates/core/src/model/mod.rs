//! Network models: the output-port form analyses run on, the physical form
//! users describe topologies in, and the conversion between them.

mod convert;
mod graph;
mod network;
mod physical;
pub mod quantity;

pub use convert::{output_port_to_physical, physical_to_output_port, server_name};
pub use graph::InducedGraph;
pub use network::{
    AnalysisOptions, Flow, Multiplexing, OutputPortNetwork, Server, StabilityError, Violation,
    DEFAULT_CEIL_PRECISION,
};
pub use physical::{
    Link, NetworkDefaults, Node, NodeKind, PhysicalFlow, PhysicalNetwork, PortParams,
};
pub use quantity::{parse_quantity, Dimension, QuantityInput, Unit};

use thiserror::Error;

use crate::minplus::CurveError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("`{text}` is not a {expected} quantity")]
    DimensionMismatch { text: String, expected: Dimension },
    #[error("bare number {value} has no {dimension} unit in scope")]
    MissingUnit { value: f64, dimension: Dimension },
    #[error("malformed quantity `{0}`")]
    InvalidQuantity(String),
    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("flow `{flow}` has an empty path")]
    EmptyPath { flow: String },
    #[error("flow `{flow}` visits unknown server `{server}`")]
    UnknownServer { flow: String, server: String },
    #[error("flow `{flow}` visits server `{server}` twice")]
    RepeatedServer { flow: String, server: String },
    #[error("flow `{flow}`: maximum packet length is below the minimum")]
    PacketLengths { flow: String },
    #[error("server `{server}`: capacity must be positive and finite")]
    InvalidCapacity { server: String },
    #[error("ceil precision must be positive, got {0}")]
    InvalidCeilPrecision(f64),
    #[error("link `{link}` references undefined node `{node}`")]
    UndefinedNode { link: String, node: String },
    #[error("output port `{port}` of node `{node}` is used by more than one link")]
    DuplicatePort { node: String, port: String },
    #[error("flow `{flow}`: no link from `{from}` to `{to}`")]
    NoLink {
        flow: String,
        from: String,
        to: String,
    },
    #[error("flow `{flow}` has no target path")]
    NoTarget { flow: String },
    #[error("link `{link}`: service latencies and rates do not pair up")]
    ServicePairing { link: String },
    #[error(transparent)]
    Curve(#[from] CurveError),
}
