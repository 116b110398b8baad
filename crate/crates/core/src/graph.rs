//! Communication topology.
//!
//! Edges are undirected and stored once as `(i, j)` with `i < j`. In dynamic
//! mode the neighbourhood test runs in gradient space: agents `i` and `j`
//! are neighbours while `r - ‖X_j - X_i‖ > 0`.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{FlockError, Result};
use crate::types::Vec2;

pub type Edge = (usize, usize);

/// Orders an index pair as `(min, max)`.
pub fn canonical(i: usize, j: usize) -> Edge {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopologyMode {
    Static,
    /// Range-limited; `r` is the sensing range in gradient units.
    Dynamic { r: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    mode: TopologyMode,
    n_agents: usize,
    edges: BTreeSet<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeEventKind {
    Added,
    RemovedViolation,
}

impl EdgeEventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeEventKind::Added => "added",
            EdgeEventKind::RemovedViolation => "removed_violation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeEvent {
    pub time: f64,
    pub edge: Edge,
    pub kind: EdgeEventKind,
}

impl Topology {
    /// Static topology from an explicit edge list. Duplicates in either
    /// orientation collapse to one edge.
    pub fn from_edges(n_agents: usize, edges: &[Edge]) -> Result<Self> {
        if n_agents == 0 {
            return Err(FlockError::InvalidArgument("topology needs at least one agent".into()));
        }
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            if i == j {
                return Err(FlockError::InvalidArgument(format!("self-loop ({i}, {j})")));
            }
            if i >= n_agents || j >= n_agents {
                return Err(FlockError::InvalidArgument(format!(
                    "edge ({i}, {j}) out of range for {n_agents} agents"
                )));
            }
            set.insert(canonical(i, j));
        }
        Ok(Topology { mode: TopologyMode::Static, n_agents, edges: set })
    }

    pub fn complete(n_agents: usize) -> Result<Self> {
        let edges: Vec<Edge> = (0..n_agents)
            .flat_map(|i| (i + 1..n_agents).map(move |j| (i, j)))
            .collect();
        Topology::from_edges(n_agents, &edges)
    }

    /// Dynamic topology whose initial edge set is every pair in range.
    pub fn dynamic(r: f64, gradients: &[Vec2]) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(FlockError::InvalidArgument(format!("sensing range r = {r} must be positive")));
        }
        if gradients.is_empty() {
            return Err(FlockError::InvalidArgument("topology needs at least one agent".into()));
        }
        let n = gradients.len();
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| r - mu(gradients[i], gradients[j]) > 0.0)
            .collect();
        Ok(Topology { mode: TopologyMode::Dynamic { r }, n_agents: n, edges })
    }

    pub fn mode(&self) -> TopologyMode {
        self.mode
    }

    pub fn range(&self) -> Option<f64> {
        match self.mode {
            TopologyMode::Static => None,
            TopologyMode::Dynamic { r } => Some(r),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&canonical(i, j))
    }

    /// Current neighbours of `i` from the stored edge set, ascending.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Adjacency lists for all agents.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_agents];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        adj
    }
}

/// Gradient-space gap `‖X_j - X_i‖`.
pub fn mu(xi: Vec2, xj: Vec2) -> f64 {
    (xj - xi).norm()
}

/// Neighbour set of agent `i`. Static mode reads the adjacency; dynamic mode
/// applies the strict range test to the supplied gradients.
pub fn neighbor_set(i: usize, gradients: &[Vec2], topo: &Topology) -> Result<BTreeSet<usize>> {
    if i >= topo.n_agents {
        return Err(FlockError::InvalidArgument(format!(
            "agent {i} out of range for {} agents",
            topo.n_agents
        )));
    }
    match topo.mode {
        TopologyMode::Static => Ok(topo.neighbors(i).into_iter().collect()),
        TopologyMode::Dynamic { r } => {
            if gradients.len() != topo.n_agents {
                return Err(FlockError::InvalidArgument(format!(
                    "expected {} gradients, got {}",
                    topo.n_agents,
                    gradients.len()
                )));
            }
            Ok((0..topo.n_agents)
                .filter(|&j| j != i && r - mu(gradients[i], gradients[j]) > 0.0)
                .collect())
        }
    }
}

/// Re-evaluates the dynamic edge set at time `t`.
///
/// Pairs newly in range are added. Stored edges that fail the range test are
/// removed and reported as [`EdgeEventKind::RemovedViolation`]; the caller
/// decides how to treat them.
pub fn update_edges(topo: &mut Topology, gradients: &[Vec2], t: f64) -> Result<Vec<EdgeEvent>> {
    let r = match topo.mode {
        TopologyMode::Static => {
            return Err(FlockError::InvalidArgument("update_edges called on a static topology".into()))
        }
        TopologyMode::Dynamic { r } => r,
    };
    if gradients.len() != topo.n_agents {
        return Err(FlockError::InvalidArgument(format!(
            "expected {} gradients, got {}",
            topo.n_agents,
            gradients.len()
        )));
    }
    let mut events = Vec::new();
    let n = topo.n_agents;
    for i in 0..n {
        for j in i + 1..n {
            let in_range = r - mu(gradients[i], gradients[j]) > 0.0;
            let present = topo.edges.contains(&(i, j));
            if in_range && !present {
                topo.edges.insert((i, j));
                events.push(EdgeEvent { time: t, edge: (i, j), kind: EdgeEventKind::Added });
            } else if !in_range && present {
                topo.edges.remove(&(i, j));
                events.push(EdgeEvent { time: t, edge: (i, j), kind: EdgeEventKind::RemovedViolation });
            }
        }
    }
    Ok(events)
}

/// Breadth-first reachability from agent 0.
pub fn is_connected(topo: &Topology) -> bool {
    let n = topo.n_agents;
    if n <= 1 {
        return true;
    }
    let adj = topo.adjacency();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}
