//! Undirected mesh topologies, one-hop neighborhoods and two-hop degrees.
//!
//! Node IDs are dense indices `0..node_count`. Neighbor lists are kept in
//! ascending order so that every iteration over a neighborhood is
//! deterministic.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// An undirected, unweighted mesh. Immutable after construction.
#[derive(Clone, PartialEq, Eq)]
pub struct Topology {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
    // dense n*n membership for O(1) `is_neighbor`
    linked: Vec<bool>,
}

/// Serialized form: an explicit edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeList {
    pub nodes: usize,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl Topology {
    /// Builds a topology from an edge list. Duplicate edges (in either
    /// orientation) are merged. Self-loops, out-of-range endpoints and
    /// isolated nodes are rejected.
    pub fn new(node_count: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Topology("topology needs at least one node".into()));
        }
        let mut canonical = BTreeSet::new();
        for &(u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::Topology(format!(
                    "edge ({u}, {v}) references a node outside 0..{node_count}"
                )));
            }
            if u == v {
                return Err(Error::Topology(format!("self-loop on node {u}")));
            }
            canonical.insert((u.min(v), u.max(v)));
        }

        let mut adjacency = vec![Vec::new(); node_count];
        let mut linked = vec![false; node_count * node_count];
        for &(u, v) in &canonical {
            adjacency[u].push(v);
            adjacency[v].push(u);
            linked[u * node_count + v] = true;
            linked[v * node_count + u] = true;
        }
        for (node, nbrs) in adjacency.iter_mut().enumerate() {
            if nbrs.is_empty() {
                return Err(Error::Topology(format!(
                    "node {node} has no neighbor and therefore no destination"
                )));
            }
            nbrs.sort_unstable();
        }

        Ok(Self {
            node_count,
            edges: canonical.into_iter().collect(),
            adjacency,
            linked,
        })
    }

    pub fn from_edge_list(list: &EdgeList) -> Result<Self> {
        Self::new(list.nodes, &list.edges)
    }

    pub fn to_edge_list(&self) -> EdgeList {
        EdgeList {
            nodes: self.node_count,
            edges: self.edges.clone(),
        }
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn line(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::new(n, &edges)
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Self::new(n, &edges)
    }

    /// Star with node 0 at the center.
    pub fn star(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|v| (0, v)).collect();
        Self::new(n, &edges)
    }

    /// Ring `0 - 1 - ... - (n-1) - 0`.
    pub fn ring(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|v| (v, (v + 1) % n)).collect();
        Self::new(n, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.node_count
    }

    /// One-hop neighbors of `node`, ascending.
    pub fn neighbors(&self, node: NodeId) -> Result<&[NodeId]> {
        self.check_node(node)?;
        Ok(&self.adjacency[node])
    }

    /// Like [`Topology::neighbors`] for callers that already validated `node`.
    ///
    /// Panics if `node` is out of range.
    pub fn neighbors_of(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn is_neighbor(&self, u: NodeId, v: NodeId) -> bool {
        u < self.node_count && v < self.node_count && self.linked[u * self.node_count + v]
    }

    /// Whether a transmission by `sender` is audible at `receiver`: either
    /// they are the same node or they share an edge.
    pub fn hears(&self, receiver: NodeId, sender: NodeId) -> bool {
        receiver == sender || self.is_neighbor(receiver, sender)
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if node < self.node_count {
            Ok(())
        } else {
            Err(Error::UnknownNode {
                node,
                node_count: self.node_count,
            })
        }
    }

    /// Number of distinct nodes other than `node` within two hops.
    pub fn two_hop_degree(&self, node: NodeId) -> usize {
        let mut seen = vec![false; self.node_count];
        seen[node] = true;
        let mut count = 0;
        for &v in &self.adjacency[node] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
            }
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                }
            }
        }
        count
    }

    pub fn max_two_hop_degree(&self) -> usize {
        self.nodes()
            .map(|u| self.two_hop_degree(u))
            .max()
            .unwrap_or(0)
    }

    /// Hop distances from `source` (`None` for unreachable nodes).
    pub fn hop_distances(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Returns the same graph with node `u` renamed to `perm[u]`.
    pub fn permuted(&self, perm: &[NodeId]) -> Result<Self> {
        if perm.len() != self.node_count {
            return Err(Error::Topology("permutation length mismatch".into()));
        }
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Self::new(self.node_count, &edges)
    }

    /// Looks up a named preset. See [`PRESETS`].
    pub fn preset(name: &str) -> Result<Self> {
        let preset = PRESETS
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Config(format!("unknown topology preset `{name}`")))?;
        Self::new(preset.nodes, preset.edges)
    }
}

impl fmt::Debug for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Topology")
            .field("node_count", &self.node_count)
            .field("edges", &self.edges)
            .finish()
    }
}

/// A named, statically described topology.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub nodes: usize,
    pub edges: &'static [(NodeId, NodeId)],
    /// Whether the edge list is a reconstruction (only the node count and
    /// maximum two-hop degree of the original are known).
    pub reconstructed: bool,
}

impl Preset {
    pub fn topology(&self) -> Topology {
        Topology::new(self.nodes, self.edges).expect("preset topologies are valid")
    }
}

/// Named topologies. The `mesh*` entries are reconstructions: they match the
/// published node count and maximum two-hop degree, not a published drawing.
pub const PRESETS: &[Preset] = &[
    Preset { name: "line3", nodes: 3, edges: &[(0, 1), (1, 2)], reconstructed: false },
    Preset { name: "line4", nodes: 4, edges: &[(0, 1), (1, 2), (2, 3)], reconstructed: false },
    Preset {
        name: "full4",
        nodes: 4,
        edges: &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        reconstructed: false,
    },
    Preset { name: "star5", nodes: 5, edges: &[(0, 1), (0, 2), (0, 3), (0, 4)], reconstructed: false },
    // five-node meshes; every connected 5-node graph has max two-hop degree 4
    Preset {
        name: "mesh5a",
        nodes: 5,
        edges: &[(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)],
        reconstructed: true,
    },
    Preset {
        name: "mesh5b",
        nodes: 5,
        edges: &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)],
        reconstructed: true,
    },
    Preset {
        name: "mesh5c",
        nodes: 5,
        edges: &[(0, 1), (1, 2), (2, 3), (3, 4)],
        reconstructed: true,
    },
    // 2x4 ladder plus one diagonal
    Preset {
        name: "mesh8-d7",
        nodes: 8,
        edges: &[
            (0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7),
            (0, 4), (1, 5), (2, 6), (3, 7), (1, 6),
        ],
        reconstructed: true,
    },
    // 9-ring with a pendant on node 0
    Preset {
        name: "mesh10-d5",
        nodes: 10,
        edges: &[
            (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 0), (0, 9),
        ],
        reconstructed: true,
    },
    Preset {
        name: "mesh10-d9",
        nodes: 10,
        edges: &[
            (0, 1), (0, 3), (0, 6), (1, 4), (1, 7), (1, 9), (2, 6), (2, 7), (3, 6),
            (3, 8), (4, 6), (4, 7), (5, 6), (5, 8), (5, 9), (6, 9), (7, 8), (7, 9),
        ],
        reconstructed: true,
    },
    // 2x6 ladder
    Preset {
        name: "mesh12-d7",
        nodes: 12,
        edges: &[
            (0, 1), (1, 2), (2, 3), (3, 4), (4, 5),
            (6, 7), (7, 8), (8, 9), (9, 10), (10, 11),
            (0, 6), (1, 7), (2, 8), (3, 9), (4, 10), (5, 11),
        ],
        reconstructed: true,
    },
    Preset {
        name: "mesh12-d9",
        nodes: 12,
        edges: &[
            (0, 1), (0, 3), (0, 8), (1, 2), (1, 7), (1, 8), (1, 9), (2, 10), (3, 7),
            (3, 9), (3, 11), (4, 9), (4, 10), (5, 10), (5, 11), (6, 10), (6, 11), (7, 11),
        ],
        reconstructed: true,
    },
    Preset {
        name: "mesh12-d10",
        nodes: 12,
        edges: &[
            (0, 2), (0, 6), (0, 7), (0, 10), (0, 11), (1, 5), (1, 8), (1, 10),
            (2, 6), (2, 8), (3, 5), (3, 7), (3, 10), (4, 6), (4, 7), (5, 8),
            (6, 8), (6, 9), (6, 11), (7, 11), (8, 9), (9, 11), (10, 11),
        ],
        reconstructed: true,
    },
    Preset {
        name: "mesh12-d11",
        nodes: 12,
        edges: &[
            (0, 4), (0, 5), (0, 9), (0, 10), (1, 8), (1, 10), (1, 11), (2, 3), (2, 5),
            (2, 7), (2, 10), (3, 4), (3, 6), (3, 8), (4, 8), (4, 9), (4, 10), (5, 7),
            (5, 11), (6, 10), (6, 11), (7, 8), (7, 10), (8, 10), (9, 10), (10, 11),
        ],
        reconstructed: true,
    },
];

/// Topologies used by the density-degradation study, ordered by node count.
pub const DENSITY_STUDY: &[&str] = &[
    "mesh8-d7",
    "mesh10-d5",
    "mesh10-d9",
    "mesh12-d7",
    "mesh12-d9",
    "mesh12-d10",
    "mesh12-d11",
];
