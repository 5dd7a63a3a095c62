//! Synthetic output-port networks: interleave tandem, ring, mesh, and random
//! routing over a fixed switch topology.
//!
//! Randomness comes from `ChaCha8Rng` seeded with [`GenParams::seed`], so a
//! given seed produces the same network on every platform.

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::minplus::{ConcaveCurve, ConvexCurve};
use crate::model::{
    parse_quantity, AnalysisOptions, Dimension, Flow, ModelError, OutputPortNetwork, QuantityInput,
    Server,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("{topology} network: {reason}")]
    Size {
        topology: &'static str,
        reason: String,
    },
    #[error("{topology} network needs fixed parameter values, `{param}` is a range")]
    RangeNotAllowed {
        topology: &'static str,
        param: &'static str,
    },
    #[error("invalid range for `{param}`: {low} > {high}")]
    InvalidRange {
        param: &'static str,
        low: f64,
        high: f64,
    },
    #[error("`{param}` must be finite and non-negative")]
    Negative { param: &'static str },
    #[error("switch `{neighbor}` is listed as a neighbor of `{switch}` but has no entry")]
    UnknownNeighbor { switch: String, neighbor: String },
    #[error("connections are empty")]
    NoSwitches,
    #[error("at least one flow is required")]
    NoFlows,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A parameter value in base units, or an inclusive range sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Fixed(f64),
    Range(f64, f64),
}

impl Param {
    /// Parses `10B` or a range written `10B..1024B`.
    pub fn parse(text: &str, dim: Dimension) -> Result<Param, ModelError> {
        let q = |t: &str| parse_quantity(QuantityInput::Text(t.trim()), dim, None);
        match text.split_once("..") {
            Some((lo, hi)) => Ok(Param::Range(q(lo)?, q(hi)?)),
            None => Ok(Param::Fixed(q(text)?)),
        }
    }

    fn check(&self, param: &'static str) -> Result<(), GenError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        match *self {
            Param::Fixed(v) if !ok(v) => Err(GenError::Negative { param }),
            Param::Range(lo, hi) if !ok(lo) || !ok(hi) => Err(GenError::Negative { param }),
            Param::Range(low, high) if low > high => {
                Err(GenError::InvalidRange { param, low, high })
            }
            _ => Ok(()),
        }
    }

    fn fixed(&self, topology: &'static str, param: &'static str) -> Result<f64, GenError> {
        match *self {
            Param::Fixed(v) => Ok(v),
            Param::Range(..) => Err(GenError::RangeNotAllowed { topology, param }),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Param::Fixed(v) => v,
            Param::Range(lo, hi) => rng.random_range(lo..=hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub burst: Param,
    pub arrival_rate: Param,
    pub max_packet_length: Param,
    pub latency: Param,
    pub service_rate: Param,
    /// `None` leaves output links without a capacity limit.
    pub capacity: Option<Param>,
    pub seed: u64,
    pub options: AnalysisOptions,
}

impl GenParams {
    pub fn fixed(
        burst: f64,
        arrival_rate: f64,
        max_packet_length: f64,
        latency: f64,
        service_rate: f64,
        capacity: Option<f64>,
    ) -> Self {
        Self {
            burst: Param::Fixed(burst),
            arrival_rate: Param::Fixed(arrival_rate),
            max_packet_length: Param::Fixed(max_packet_length),
            latency: Param::Fixed(latency),
            service_rate: Param::Fixed(service_rate),
            capacity: capacity.map(Param::Fixed),
            seed: 0,
            options: AnalysisOptions::default(),
        }
    }

    fn check(&self) -> Result<(), GenError> {
        self.burst.check("burst")?;
        self.arrival_rate.check("arrival_rate")?;
        self.max_packet_length.check("max_packet_length")?;
        self.latency.check("latency")?;
        self.service_rate.check("service_rate")?;
        if let Some(c) = &self.capacity {
            c.check("capacity")?;
        }
        Ok(())
    }
}

/// Fixed server and flow parameters for the regular topologies.
struct Uniform {
    service: ConvexCurve,
    service_rate: f64,
    latency: f64,
    capacity: Option<f64>,
    arrival: ConcaveCurve,
    max_packet: f64,
}

impl Uniform {
    fn new(p: &GenParams, topology: &'static str) -> Result<Self, GenError> {
        p.check()?;
        let latency = p.latency.fixed(topology, "latency")?;
        let service_rate = p.service_rate.fixed(topology, "service_rate")?;
        Ok(Self {
            service: ConvexCurve::rate_latency(service_rate, latency).map_err(ModelError::from)?,
            service_rate,
            latency,
            capacity: p
                .capacity
                .map(|c| c.fixed(topology, "capacity"))
                .transpose()?,
            arrival: ConcaveCurve::token_bucket(
                p.arrival_rate.fixed(topology, "arrival_rate")?,
                p.burst.fixed(topology, "burst")?,
            )
            .map_err(ModelError::from)?,
            max_packet: p.max_packet_length.fixed(topology, "max_packet_length")?,
        })
    }

    fn server(&self, i: usize) -> Server {
        Server::new(format!("s{i}"), self.service.clone(), self.capacity)
    }

    fn flow(&self, i: usize, path: &[usize]) -> Flow {
        Flow::new(
            format!("f{i}"),
            path.iter().map(|s| format!("s{s}")).collect(),
            self.arrival.clone(),
        )
        .with_packet_lengths(self.max_packet, 0.0)
    }
}

fn size_error(topology: &'static str, reason: impl Into<String>) -> GenError {
    GenError::Size {
        topology,
        reason: reason.into(),
    }
}

/// `n` servers in a line; `f0` crosses all of them and `f_i` crosses
/// `s_{i-1}, s_i`.
pub fn gen_interleave(n: usize, p: &GenParams) -> Result<OutputPortNetwork, GenError> {
    if n < 2 {
        return Err(size_error(
            "interleave",
            format!("needs at least 2 servers, got {n}"),
        ));
    }
    let u = Uniform::new(p, "interleave")?;
    let servers = (0..n).map(|i| u.server(i)).collect();
    let mut flows = vec![u.flow(0, &(0..n).collect::<Vec<_>>())];
    flows.extend((1..n).map(|i| u.flow(i, &[i - 1, i])));
    Ok(OutputPortNetwork::new(
        format!("interleave-{n}"),
        p.options,
        servers,
        flows,
    )?)
}

/// `n` servers in a cycle; flow `i` starts at `s_i` and visits every server.
pub fn gen_ring(n: usize, p: &GenParams) -> Result<OutputPortNetwork, GenError> {
    if n < 2 {
        return Err(size_error(
            "ring",
            format!("needs at least 2 servers, got {n}"),
        ));
    }
    let u = Uniform::new(p, "ring")?;
    let servers = (0..n).map(|i| u.server(i)).collect();
    let flows = (0..n)
        .map(|i| u.flow(i, &(0..n).map(|k| (i + k) % n).collect::<Vec<_>>()))
        .collect();
    Ok(OutputPortNetwork::new(
        format!("ring-{n}"),
        p.options,
        servers,
        flows,
    )?)
}

/// `(n - 1) / 2` pairs of servers followed by `s_{n-1}`, which has twice the
/// service rate. One flow per way of picking a server from every pair, in
/// order, ending at `s_{n-1}`.
pub fn gen_mesh(n: usize, p: &GenParams) -> Result<OutputPortNetwork, GenError> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(size_error(
            "mesh",
            format!("needs an odd number of servers >= 3, got {n}"),
        ));
    }
    let u = Uniform::new(p, "mesh")?;
    let mut servers: Vec<Server> = (0..n - 1).map(|i| u.server(i)).collect();
    let last =
        ConvexCurve::rate_latency(2.0 * u.service_rate, u.latency).map_err(ModelError::from)?;
    servers.push(Server::new(format!("s{}", n - 1), last, u.capacity));

    let pairs = (n - 1) / 2;
    let count = 1usize
        .checked_shl(pairs as u32)
        .filter(|&c| c > 0)
        .ok_or_else(|| size_error("mesh", format!("{n} servers give too many flows")))?;
    let flows = (0..count)
        .map(|choice| {
            let mut path: Vec<usize> = (0..pairs)
                .map(|k| 2 * k + ((choice >> (pairs - 1 - k)) & 1))
                .collect();
            path.push(n - 1);
            u.flow(choice, &path)
        })
        .collect();
    Ok(OutputPortNetwork::new(
        format!("mesh-{n}"),
        p.options,
        servers,
        flows,
    )?)
}

/// Random flows over a fixed switch topology. `connections` maps each
/// switch to the switches it can forward to; every switch contributes one
/// server named after it.
///
/// Server parameters are drawn first, in key order. Each flow then starts at
/// a uniformly chosen switch and walks to uniformly chosen unvisited
/// neighbors, stopping with probability 1/2 before every hop after the
/// first, or when no unvisited neighbor is left; its burst, rate and
/// packet length are drawn after its path.
pub fn gen_fixed_topology(
    num_flows: usize,
    connections: &IndexMap<String, Vec<String>>,
    p: &GenParams,
) -> Result<OutputPortNetwork, GenError> {
    p.check()?;
    if num_flows == 0 {
        return Err(GenError::NoFlows);
    }
    if connections.is_empty() {
        return Err(GenError::NoSwitches);
    }
    for (switch, neighbors) in connections {
        if let Some(missing) = neighbors.iter().find(|n| !connections.contains_key(*n)) {
            return Err(GenError::UnknownNeighbor {
                switch: switch.clone(),
                neighbor: missing.clone(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut servers = Vec::with_capacity(connections.len());
    for name in connections.keys() {
        let latency = p.latency.sample(&mut rng);
        let rate = p.service_rate.sample(&mut rng);
        let capacity = p.capacity.map(|c| c.sample(&mut rng));
        let service = ConvexCurve::rate_latency(rate, latency).map_err(ModelError::from)?;
        servers.push(Server::new(name.clone(), service, capacity));
    }

    let mut flows = Vec::with_capacity(num_flows);
    for i in 0..num_flows {
        let mut path = vec![rng.random_range(0..connections.len())];
        loop {
            if path.len() > 1 && rng.random_bool(0.5) {
                break;
            }
            let here = &connections[path[path.len() - 1]];
            let open: Vec<usize> = here
                .iter()
                .map(|n| connections.get_index_of(n).expect("neighbors were checked"))
                .filter(|j| !path.contains(j))
                .collect();
            if open.is_empty() {
                break;
            }
            path.push(open[rng.random_range(0..open.len())]);
        }
        let burst = p.burst.sample(&mut rng);
        let rate = p.arrival_rate.sample(&mut rng);
        let max_packet = p.max_packet_length.sample(&mut rng);
        let names = path
            .iter()
            .map(|&j| connections.get_index(j).expect("index in range").0.clone())
            .collect();
        let arrival = ConcaveCurve::token_bucket(rate, burst).map_err(ModelError::from)?;
        flows.push(Flow::new(format!("f{i}"), names, arrival).with_packet_lengths(max_packet, 0.0));
    }
    Ok(OutputPortNetwork::new(
        format!("fixed-topology-{num_flows}"),
        p.options,
        servers,
        flows,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> GenParams {
        GenParams::fixed(80.0, 1e4, 400.0, 1e-5, 1e6, None)
    }

    fn paths(net: &OutputPortNetwork) -> Vec<Vec<&str>> {
        net.flows()
            .iter()
            .map(|f| f.path.iter().map(String::as_str).collect())
            .collect()
    }

    #[test]
    fn interleave_paths() {
        let net = gen_interleave(4, &params()).unwrap();
        assert_eq!(net.servers().len(), 4);
        assert_eq!(paths(&net)[0], ["s0", "s1", "s2", "s3"]);
        assert_eq!(paths(&net)[2], ["s1", "s2"]);
        let net = gen_interleave(2, &params()).unwrap();
        assert_eq!(paths(&net), [["s0", "s1"], ["s0", "s1"]]);
        assert!(gen_interleave(1, &params()).is_err());
    }

    #[test]
    fn ring_paths() {
        let net = gen_ring(2, &params()).unwrap();
        assert_eq!(paths(&net), [["s0", "s1"], ["s1", "s0"]]);
        let net = gen_ring(3, &params()).unwrap();
        assert!(net.induced_graph().is_cyclic());
        assert_eq!(paths(&net)[2], ["s2", "s0", "s1"]);
    }

    #[test]
    fn mesh_paths() {
        let net = gen_mesh(3, &params()).unwrap();
        assert_eq!(paths(&net), [["s0", "s2"], ["s1", "s2"]]);
        let net = gen_mesh(7, &params()).unwrap();
        assert_eq!(net.flows().len(), 8);
        assert_eq!(paths(&net)[5], ["s1", "s2", "s5", "s6"]);
        assert_eq!(net.servers()[6].service.rate(), 2e6);
        assert!(gen_mesh(4, &params()).is_err());
        assert!(gen_mesh(1, &params()).is_err());
    }

    #[test]
    fn regular_topologies_reject_ranges() {
        let mut p = params();
        p.burst = Param::Range(1.0, 2.0);
        assert!(matches!(
            gen_ring(3, &p),
            Err(GenError::RangeNotAllowed { param: "burst", .. })
        ));
        p.burst = Param::Range(3.0, 2.0);
        assert!(matches!(
            gen_ring(3, &p),
            Err(GenError::InvalidRange { .. })
        ));
    }

    #[test]
    fn param_parsing() {
        assert_eq!(
            Param::parse("10B", Dimension::Data).unwrap(),
            Param::Fixed(80.0)
        );
        assert_eq!(
            Param::parse("200bps..20kbps", Dimension::Rate).unwrap(),
            Param::Range(200.0, 2e4)
        );
        assert!(Param::parse("10us", Dimension::Data).is_err());
    }

    #[test]
    fn fixed_topology_errors() {
        let mut c = IndexMap::new();
        c.insert("A".to_string(), vec!["B".to_string()]);
        assert!(matches!(
            gen_fixed_topology(3, &c, &params()),
            Err(GenError::UnknownNeighbor { .. })
        ));
        c.insert("B".to_string(), vec![]);
        assert_eq!(gen_fixed_topology(0, &c, &params()), Err(GenError::NoFlows));
        assert_eq!(
            gen_fixed_topology(3, &IndexMap::new(), &params()),
            Err(GenError::NoSwitches)
        );
    }

    #[test]
    fn lone_switch_gives_single_hop_flows() {
        let mut c = IndexMap::new();
        c.insert("A".to_string(), vec![]);
        let net = gen_fixed_topology(5, &c, &params()).unwrap();
        assert!(net.flows().iter().all(|f| f.path == ["A"]));
    }
}
