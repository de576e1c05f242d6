use petgraph::algo::astar;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};

use super::geometry::Point;
use super::WorldError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavNode {
    pub id: String,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavEdge {
    pub from: String,
    pub to: String,
    /// Defaults to the straight-line distance between the endpoints.
    #[serde(default)]
    pub length: Option<f64>,
}

/// Undirected navigation graph with metric edge lengths.
#[derive(Debug, Clone)]
pub struct NavGraph {
    nodes: Vec<NavNode>,
    graph: UnGraph<usize, f64>,
}

/// A route: node indices and the length of each leg.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub nodes: Vec<usize>,
    pub legs: Vec<f64>,
}

impl Route {
    pub fn length(&self) -> f64 {
        self.legs.iter().sum()
    }
}

impl NavGraph {
    pub fn new(nodes: Vec<NavNode>, edges: &[NavEdge]) -> Result<Self, WorldError> {
        let mut graph = UnGraph::new_undirected();
        for i in 0..nodes.len() {
            graph.add_node(i);
        }
        let index = |id: &str| {
            nodes
                .iter()
                .position(|n| n.id == id)
                .ok_or_else(|| WorldError::UnknownNode(id.to_string()))
        };
        for e in edges {
            let (a, b) = (index(&e.from)?, index(&e.to)?);
            let len = e
                .length
                .unwrap_or_else(|| nodes[a].position.distance(nodes[b].position));
            if !(len > 0.0) {
                return Err(WorldError::InvalidGeometry(format!(
                    "edge {}-{} has no length",
                    e.from, e.to
                )));
            }
            graph.add_edge(NodeIndex::new(a), NodeIndex::new(b), len);
        }
        Ok(NavGraph { nodes, graph })
    }

    pub fn nodes(&self) -> &[NavNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &NavNode {
        &self.nodes[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Shortest route by edge length.
    pub fn shortest_route(&self, from: usize, to: usize) -> Option<Route> {
        let (_, path) = astar(
            &self.graph,
            NodeIndex::new(from),
            |n| n.index() == to,
            |e| *e.weight(),
            |_| 0.0,
        )?;
        let nodes: Vec<usize> = path.iter().map(|n| n.index()).collect();
        let legs = nodes
            .windows(2)
            .map(|w| {
                let e = self
                    .graph
                    .find_edge(NodeIndex::new(w[0]), NodeIndex::new(w[1]))
                    .expect("route follows graph edges");
                self.graph[e]
            })
            .collect();
        Some(Route { nodes, legs })
    }
}
