//! Building topology: nodes carry a service capacity, directed edges carry a
//! walking length and a free-flow transit time.
//!
//! Graphs are validated on construction and immutable afterwards, so a single
//! instance can be shared across planner and simulator replications.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::search;

/// Index of a node inside a [`BuildingGraph`] (document order).
pub type NodeIx = usize;

/// Nominal walking speed used when an edge omits its transit time.
pub const NOMINAL_SPEED: f64 = 1.4;

/// Reference period used for `service_capacity` when the document omits it.
pub const DEFAULT_CAPACITY_STEP_S: f64 = 1.0;

/// Label prefix marking staircase nodes; the suffix names the staircase.
pub const STAIR_LABEL_PREFIX: &str = "stair:";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("malformed graph document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("edge {from} -> {to} references missing node `{missing}`")]
    DanglingEdge {
        from: String,
        to: String,
        missing: String,
    },
    #[error("node `{0}` has a service capacity of zero")]
    ZeroCapacity(String),
    #[error("edge {from} -> {to} has non-positive length or transit time")]
    NonPositiveEdge { from: String, to: String },
    #[error("capacity step must be positive, got {0}")]
    BadCapacityStep(f64),
    #[error("graph has no exit")]
    NoExit,
    #[error("no exit reachable from node `{0}`")]
    Unreachable(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub label: String,
    pub floor: i32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Persons admitted per capacity step (see [`BuildingGraph::capacity_step_s`]).
    pub service_capacity: u32,
    pub is_exit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: NodeIx,
    pub to: NodeIx,
    pub length: f64,
    pub free_transit_time: f64,
}

/// Free-flow route from a node to its nearest exit.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub nodes: Vec<NodeIx>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    // outgoing edge indices per node, sorted by head node
    out: Vec<Vec<usize>>,
    exits: Vec<NodeIx>,
    index: HashMap<String, NodeIx>,
    capacity_step_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GraphDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacity_step_s: Option<f64>,
    nodes: Vec<Node>,
    edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EdgeDoc {
    from: String,
    to: String,
    length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    free_transit_time: Option<f64>,
}

/// Edge description used by builders: endpoints are node indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpec {
    pub from: NodeIx,
    pub to: NodeIx,
    pub length: f64,
    pub free_transit_time: Option<f64>,
}

impl EdgeSpec {
    pub fn new(from: NodeIx, to: NodeIx, length: f64) -> Self {
        Self {
            from,
            to,
            length,
            free_transit_time: None,
        }
    }
}

impl BuildingGraph {
    /// Builds and validates a graph from in-memory parts.
    pub fn new(
        nodes: Vec<Node>,
        edges: Vec<EdgeSpec>,
        capacity_step_s: f64,
    ) -> Result<Self, GraphError> {
        if !(capacity_step_s > 0.0) || !capacity_step_s.is_finite() {
            return Err(GraphError::BadCapacityStep(capacity_step_s));
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateNode(n.id.clone()));
            }
            if n.service_capacity == 0 {
                return Err(GraphError::ZeroCapacity(n.id.clone()));
            }
        }
        let mut built = Vec::with_capacity(edges.len());
        for e in edges {
            let name = |ix: NodeIx| {
                nodes
                    .get(ix)
                    .map(|n| n.id.clone())
                    .unwrap_or_else(|| format!("#{ix}"))
            };
            for end in [e.from, e.to] {
                if end >= nodes.len() {
                    return Err(GraphError::DanglingEdge {
                        from: name(e.from),
                        to: name(e.to),
                        missing: name(end),
                    });
                }
            }
            let free = e.free_transit_time.unwrap_or(e.length / NOMINAL_SPEED);
            if !(e.length > 0.0) || !(free > 0.0) || !e.length.is_finite() || !free.is_finite() {
                return Err(GraphError::NonPositiveEdge {
                    from: name(e.from),
                    to: name(e.to),
                });
            }
            built.push(Edge {
                from: e.from,
                to: e.to,
                length: e.length,
                free_transit_time: free,
            });
        }
        let mut out = vec![Vec::new(); nodes.len()];
        for (k, e) in built.iter().enumerate() {
            out[e.from].push(k);
        }
        for list in &mut out {
            list.sort_by_key(|&k| (built[k].to, k));
        }
        let exits: Vec<NodeIx> = (0..nodes.len()).filter(|&i| nodes[i].is_exit).collect();
        let g = Self {
            nodes,
            edges: built,
            out,
            exits,
            index,
            capacity_step_s,
        };
        g.validate_reachability()?;
        Ok(g)
    }

    fn validate_reachability(&self) -> Result<(), GraphError> {
        if self.exits.is_empty() {
            return Err(GraphError::NoExit);
        }
        // reverse BFS from all exits
        let mut incoming = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            incoming[e.to].push(e.from);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = self.exits.clone();
        for &x in &self.exits {
            seen[x] = true;
        }
        while let Some(v) = stack.pop() {
            for &u in &incoming[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(GraphError::Unreachable(self.nodes[i].id.clone())),
            None => Ok(()),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, ix: NodeIx) -> &Node {
        &self.nodes[ix]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn exits(&self) -> &[NodeIx] {
        &self.exits
    }

    pub fn is_exit(&self, ix: NodeIx) -> bool {
        self.nodes[ix].is_exit
    }

    /// Period (seconds) over which `service_capacity` persons are admitted.
    pub fn capacity_step_s(&self) -> f64 {
        self.capacity_step_s
    }

    pub fn lookup(&self, id: &str) -> Result<NodeIx, GraphError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    /// Outgoing edges of `v`, ordered by head node index. The position in this
    /// slice is the edge's local id at `v`.
    pub fn out_edges(&self, v: NodeIx) -> impl ExactSizeIterator<Item = &Edge> + '_ {
        self.out[v].iter().map(move |&k| &self.edges[k])
    }

    pub fn out_degree(&self, v: NodeIx) -> usize {
        self.out[v].len()
    }

    pub fn successors(&self, v: NodeIx) -> impl Iterator<Item = NodeIx> + '_ {
        self.out_edges(v).map(|e| e.to)
    }

    pub fn edge_between(&self, from: NodeIx, to: NodeIx) -> Option<&Edge> {
        self.out_edges(from).find(|e| e.to == to)
    }

    /// Mean time between two admissions at `v`.
    pub fn service_interval(&self, v: NodeIx) -> f64 {
        self.capacity_step_s / f64::from(self.nodes[v].service_capacity)
    }

    /// Admissions allowed at `v` within one planning step of `delta` seconds.
    pub fn step_capacity(&self, v: NodeIx, delta: f64) -> u32 {
        let per = f64::from(self.nodes[v].service_capacity) * delta / self.capacity_step_s;
        (per + 1e-9).floor().max(1.0) as u32
    }

    /// Staircase node sets keyed by name, derived from `stair:<name>` labels.
    pub fn staircases(&self) -> BTreeMap<String, Vec<NodeIx>> {
        let mut sets: BTreeMap<String, Vec<NodeIx>> = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(name) = n.label.strip_prefix(STAIR_LABEL_PREFIX) {
                sets.entry(name.to_string()).or_default().push(i);
            }
        }
        sets
    }

    /// Shortest free-flow route from `from` to any exit. Ties between equal-cost
    /// routes go to the lexicographically smallest node sequence.
    pub fn free_flow_shortest_path(&self, from: NodeIx) -> Result<Route, GraphError> {
        if from >= self.nodes.len() {
            return Err(GraphError::UnknownNode(format!("#{from}")));
        }
        search::earliest_arrival(self, from, 0.0, |_, e, t| t + e.free_transit_time)
            .map(|(nodes, times)| Route {
                cost: *times.last().expect("non-empty route"),
                nodes,
            })
            .ok_or_else(|| GraphError::Unreachable(self.nodes[from].id.clone()))
    }

    /// Shortest walking distance (meters) from `from` to any exit.
    pub fn distance_to_exit(&self, from: NodeIx) -> Option<f64> {
        search::earliest_arrival(self, from, 0.0, |_, e, t| t + e.length)
            .map(|(_, d)| *d.last().expect("non-empty route"))
    }

    /// Parses and validates a JSON graph document.
    pub fn load<R: Read>(source: R) -> Result<Self, GraphError> {
        let doc: GraphDoc = serde_json::from_reader(source)?;
        Self::from_doc(doc)
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        Self::from_doc(serde_json::from_str(text)?)
    }

    fn from_doc(doc: GraphDoc) -> Result<Self, GraphError> {
        let mut index = HashMap::new();
        for (i, n) in doc.nodes.iter().enumerate() {
            if index.insert(n.id.as_str(), i).is_some() {
                return Err(GraphError::DuplicateNode(n.id.clone()));
            }
        }
        let mut edges = Vec::with_capacity(doc.edges.len());
        for e in &doc.edges {
            let resolve = |id: &str| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| GraphError::DanglingEdge {
                        from: e.from.clone(),
                        to: e.to.clone(),
                        missing: id.to_string(),
                    })
            };
            edges.push(EdgeSpec {
                from: resolve(&e.from)?,
                to: resolve(&e.to)?,
                length: e.length,
                free_transit_time: e.free_transit_time,
            });
        }
        Self::new(
            doc.nodes,
            edges,
            doc.capacity_step_s.unwrap_or(DEFAULT_CAPACITY_STEP_S),
        )
    }

    fn to_doc(&self) -> GraphDoc {
        GraphDoc {
            capacity_step_s: Some(self.capacity_step_s),
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    from: self.nodes[e.from].id.clone(),
                    to: self.nodes[e.to].id.clone(),
                    length: e.length,
                    free_transit_time: Some(e.free_transit_time),
                })
                .collect(),
        }
    }

    /// Writes the graph as a JSON document accepted by [`BuildingGraph::load`].
    pub fn save<W: Write>(&self, mut sink: W) -> Result<(), GraphError> {
        serde_json::to_writer_pretty(&mut sink, &self.to_doc())?;
        sink.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }
}
