use petgraph::algo::{tarjan_scc, toposort};
use petgraph::graph::{DiGraph, NodeIndex};

/// Directed graph over servers with an edge `A -> B` whenever some flow
/// visits `B` right after `A`. Node `i` is server `i` of the network.
#[derive(Debug, Clone)]
pub struct InducedGraph {
    graph: DiGraph<String, ()>,
}

impl InducedGraph {
    pub(crate) fn new(
        nodes: impl IntoIterator<Item = String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut graph = DiGraph::new();
        for n in nodes {
            graph.add_node(n);
        }
        for (a, b) in edges {
            let (a, b) = (NodeIndex::new(a), NodeIndex::new(b));
            if graph.find_edge(a, b).is_none() {
                graph.add_edge(a, b, ());
            }
        }
        Self { graph }
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.graph[NodeIndex::new(i)]
    }

    /// Edges as name pairs, sorted by source then target server order.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut idx: Vec<(usize, usize)> = self
            .graph
            .edge_indices()
            .filter_map(|e| self.graph.edge_endpoints(e))
            .map(|(a, b)| (a.index(), b.index()))
            .collect();
        idx.sort_unstable();
        idx.into_iter()
            .map(|(a, b)| (self.name(a).to_string(), self.name(b).to_string()))
            .collect()
    }

    /// Successor indices in server order.
    pub fn successors(&self, i: usize) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .graph
            .neighbors(NodeIndex::new(i))
            .map(|n| n.index())
            .collect();
        s.sort_unstable();
        s
    }

    pub fn is_cyclic(&self) -> bool {
        self.topological_order().is_none()
    }

    /// Server indices in a topological order, `None` if there is a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        toposort(&self.graph, None)
            .ok()
            .map(|order| order.into_iter().map(|n| n.index()).collect())
    }

    /// Topological levels: every server's predecessors sit in earlier levels.
    pub fn levels(&self) -> Option<Vec<Vec<usize>>> {
        let order = self.topological_order()?;
        let mut depth = vec![0usize; self.node_count()];
        for &n in &order {
            for s in self.successors(n) {
                depth[s] = depth[s].max(depth[n] + 1);
            }
        }
        let max = depth.iter().copied().max().unwrap_or(0);
        let mut levels = vec![Vec::new(); if self.node_count() == 0 { 0 } else { max + 1 }];
        for (n, d) in depth.into_iter().enumerate() {
            levels[d].push(n);
        }
        Some(levels)
    }

    /// Servers of the strongly connected components that contain a cycle.
    pub fn cycles(&self) -> Vec<Vec<String>> {
        let mut comps: Vec<Vec<usize>> = tarjan_scc(&self.graph)
            .into_iter()
            .filter(|c| c.len() > 1)
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                v.sort_unstable();
                v
            })
            .collect();
        comps.sort();
        comps
            .into_iter()
            .map(|c| c.into_iter().map(|i| self.name(i).to_string()).collect())
            .collect()
    }
}
