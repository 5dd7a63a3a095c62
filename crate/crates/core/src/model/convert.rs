//! Conversion between the physical and output-port forms of a network.

use std::collections::{HashMap, HashSet};

use super::{
    Flow, Link, ModelError, NetworkDefaults, Node, NodeKind, OutputPortNetwork, PhysicalFlow,
    PhysicalNetwork, PortParams, Server,
};

/// Name of the server for output port `port` of `node`: `<node>-<port>`,
/// with hyphens inside either part doubled so distinct ports never collide.
pub fn server_name(node: &str, port: &str) -> String {
    format!("{}-{}", node.replace('-', "--"), port.replace('-', "--"))
}

/// Keeps only the output ports that carry flows and have service
/// parameters somewhere in the inheritance chain. Multicast flows become one
/// unicast flow per target, named `<flow>_<k>`.
pub fn physical_to_output_port(phys: &PhysicalNetwork) -> Result<OutputPortNetwork, ModelError> {
    phys.validate()?;
    let lookup = phys.link_lookup();
    let hop_link = |from: &str, to: &str| lookup[&(from, to)];

    let mut used = vec![false; phys.links.len()];
    for f in &phys.flows {
        for target in &f.targets {
            let mut prev = f.source.as_str();
            for hop in target {
                used[hop_link(prev, hop)] = true;
                prev = hop;
            }
        }
    }

    let mut servers = Vec::new();
    let mut link_server: Vec<Option<String>> = vec![None; phys.links.len()];
    for (i, link) in phys.links.iter().enumerate() {
        if !used[i] {
            continue;
        }
        if let Some(service) = phys.resolve_service(link)? {
            let name = server_name(&link.from, &link.from_port);
            link_server[i] = Some(name.clone());
            servers.push(Server::new(name, service, phys.resolve_capacity(link)));
        }
    }

    let mut flows = Vec::new();
    for f in &phys.flows {
        let (max, min) = phys.packet_lengths(f);
        for (k, target) in f.targets.iter().enumerate() {
            let mut path = Vec::new();
            let mut prev = f.source.as_str();
            for hop in target {
                if let Some(s) = &link_server[hop_link(prev, hop)] {
                    path.push(s.clone());
                }
                prev = hop;
            }
            let name = if f.targets.len() > 1 {
                format!("{}_{}", f.name, k)
            } else {
                f.name.clone()
            };
            if path.is_empty() {
                log::warn!(
                    "flow `{name}` only crosses dummy links and is left out of the analysis"
                );
                continue;
            }
            flows.push(Flow::new(name, path, f.arrival.clone()).with_packet_lengths(max, min));
        }
    }

    OutputPortNetwork::new(phys.name.clone(), phys.options, servers, flows)
}

struct Names(HashSet<String>);

impl Names {
    fn fresh(&mut self, base: String) -> String {
        let mut name = base.clone();
        let mut n = 1;
        while self.0.contains(&name) {
            name = format!("{base}_{n}");
            n += 1;
        }
        self.0.insert(name.clone());
        name
    }
}

/// Builds a physical network with one switch per server. The server's
/// service and capacity sit on the link leaving its port `o0`. Each flow
/// starts at its own source station and ends at a sink station shared by
/// the flows that leave the network at the same server. When a server feeds
/// more than one next node, its port leads to a service-less hub switch that
/// fans out, since a physical port carries a single link.
pub fn output_port_to_physical(net: &OutputPortNetwork) -> PhysicalNetwork {
    let graph = net.induced_graph();
    let mut names = Names(net.servers().iter().map(|s| s.name.clone()).collect());
    let paths = net.index_paths();

    let mut is_last = vec![false; net.servers().len()];
    for p in &paths {
        is_last[*p.last().expect("paths are non-empty")] = true;
    }

    let mut nodes: Vec<Node> = net
        .servers()
        .iter()
        .map(|s| Node {
            name: s.name.clone(),
            kind: NodeKind::Switch,
            port: PortParams::default(),
        })
        .collect();
    let station = |name: &str| Node {
        name: name.to_string(),
        kind: NodeKind::Station,
        port: PortParams::default(),
    };

    let sinks: Vec<Option<String>> = net
        .servers()
        .iter()
        .zip(&is_last)
        .map(|(s, &last)| last.then(|| names.fresh(format!("sink-{}", s.name))))
        .collect();
    let next_nodes: Vec<Vec<String>> = (0..net.servers().len())
        .map(|i| {
            let mut next: Vec<String> = graph
                .successors(i)
                .into_iter()
                .map(|j| net.servers()[j].name.clone())
                .collect();
            next.extend(sinks[i].clone());
            next
        })
        .collect();
    let hubs: Vec<Option<String>> = net
        .servers()
        .iter()
        .zip(&next_nodes)
        .map(|(s, next)| (next.len() > 1).then(|| names.fresh(format!("hub-{}", s.name))))
        .collect();
    let sources: Vec<String> = net
        .flows()
        .iter()
        .map(|f| names.fresh(format!("src-{}", f.name)))
        .collect();

    nodes.extend(hubs.iter().flatten().map(|h| Node {
        name: h.clone(),
        kind: NodeKind::Switch,
        port: PortParams::default(),
    }));
    nodes.extend(sources.iter().map(|s| station(s)));
    nodes.extend(sinks.iter().flatten().map(|s| station(s)));

    let mut in_ports: HashMap<String, usize> = HashMap::new();
    let mut links = Vec::new();
    let mut connect = |from: &str, from_port: String, to: &str, port: PortParams| {
        let k = in_ports.entry(to.to_string()).or_insert(0);
        links.push(Link {
            name: format!("lk:{from}-{to}"),
            from: from.to_string(),
            to: to.to_string(),
            from_port,
            to_port: format!("i{k}"),
            port,
        });
        *k += 1;
    };

    for (f, src) in net.flows().iter().zip(&sources) {
        connect(src, "o0".into(), &f.path[0], PortParams::default());
    }
    for (i, server) in net.servers().iter().enumerate() {
        let params = PortParams::with_service(&server.service, server.capacity);
        match (&hubs[i], next_nodes[i].as_slice()) {
            (_, []) => {}
            (None, [only]) => connect(&server.name, "o0".into(), only, params),
            (Some(hub), next) => {
                connect(&server.name, "o0".into(), hub, params);
                for (k, n) in next.iter().enumerate() {
                    connect(hub, format!("o{k}"), n, PortParams::default());
                }
            }
            (None, _) => unreachable!("fan-out without hub"),
        }
    }

    let flows = net
        .flows()
        .iter()
        .zip(paths)
        .zip(sources)
        .map(|((f, path), source)| {
            let mut target = Vec::new();
            for &s in &path {
                target.push(net.servers()[s].name.clone());
                target.extend(hubs[s].clone());
            }
            let last = *path.last().expect("paths are non-empty");
            target.extend(sinks[last].clone());
            PhysicalFlow {
                name: f.name.clone(),
                source,
                targets: vec![target],
                arrival: f.arrival.clone(),
                max_packet_length: Some(f.max_packet_length),
                min_packet_length: Some(f.min_packet_length),
            }
        })
        .collect();

    PhysicalNetwork {
        name: net.name().to_string(),
        options: *net.options(),
        defaults: NetworkDefaults::default(),
        nodes,
        links,
        flows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minplus::{ConcaveCurve, ConvexCurve};
    use crate::model::AnalysisOptions;

    #[test]
    fn server_names_escape_hyphens() {
        assert_eq!(server_name("s0", "o0"), "s0-o0");
        assert_eq!(server_name("a-b", "c"), "a--b-c");
        assert_ne!(server_name("a-b", "c"), server_name("a", "b-c"));
    }

    fn opnet(paths: &[&[&str]], servers: &[&str]) -> OutputPortNetwork {
        OutputPortNetwork::new(
            "t",
            AnalysisOptions::default(),
            servers
                .iter()
                .map(|s| Server::new(*s, ConvexCurve::rate_latency(1e6, 1e-5).unwrap(), Some(1e7)))
                .collect(),
            paths
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    Flow::new(
                        format!("f{i}"),
                        p.iter().map(|s| s.to_string()).collect(),
                        ConcaveCurve::token_bucket(1e3, 100.0).unwrap(),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn fan_out_uses_a_hub() {
        let net = opnet(&[&["a", "b"], &["a", "c"], &["b"]], &["a", "b", "c"]);
        let phys = output_port_to_physical(&net);
        phys.validate().unwrap();
        let switches = phys
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Switch)
            .count();
        let stations = phys
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Station)
            .count();
        assert_eq!(switches, 4);
        assert_eq!(stations, 3 + 2);
        let back = physical_to_output_port(&phys).unwrap();
        let names: Vec<_> = back.servers().iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["a-o0", "b-o0", "c-o0"]);
        assert_eq!(back.flows()[0].path, ["a-o0", "b-o0"]);
        assert_eq!(back.flows()[1].path, ["a-o0", "c-o0"]);
        assert_eq!(
            back.link_utilization().values().collect::<Vec<_>>(),
            net.link_utilization().values().collect::<Vec<_>>()
        );
    }

    #[test]
    fn no_flows_means_no_links() {
        let net = opnet(&[], &["a", "b"]);
        let phys = output_port_to_physical(&net);
        assert_eq!(phys.nodes.len(), 2);
        assert!(phys.links.is_empty());
        assert!(physical_to_output_port(&phys).unwrap().servers().is_empty());
    }

    #[test]
    fn conversion_is_deterministic() {
        let net = opnet(&[&["a", "b", "c"], &["c", "a"]], &["a", "b", "c"]);
        assert_eq!(output_port_to_physical(&net), output_port_to_physical(&net));
        let phys = output_port_to_physical(&net);
        assert_eq!(
            physical_to_output_port(&phys),
            physical_to_output_port(&phys)
        );
    }
}
