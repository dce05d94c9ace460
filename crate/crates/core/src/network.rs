//! Directed road network with a single network-wide speed and
//! deterministic shortest-path routing.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{total_cmp, Scalar};

/// 36 km/h.
pub const DEFAULT_SPEED_MPS: f64 = 10.0;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node<S> {
    pub id: NodeId,
    /// Metric easting in meters.
    pub x: S,
    /// Metric northing in meters.
    pub y: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<S> {
    pub from: NodeId,
    pub to: NodeId,
    /// Meters, strictly positive.
    pub length: S,
}

/// A routed path. `duration` is always `length / speed`.
#[derive(Clone, Debug, PartialEq)]
pub struct Route<S> {
    pub nodes: Vec<NodeId>,
    pub length: S,
    pub duration: S,
}

/// Validated, strongly connected directed graph.
///
/// Nodes are stored sorted by id so that adjacency order equals id order,
/// which is what the shortest-path tie-break relies on. Distance rows towards
/// a target are computed on first use and memoised; the structure is
/// otherwise immutable and can be shared between threads.
pub struct Network<S: Scalar = f64> {
    nodes: Vec<Node<S>>,
    index: HashMap<NodeId, usize>,
    out: Vec<Vec<(usize, S)>>,
    inc: Vec<Vec<(usize, S)>>,
    speed: S,
    dist_to: Vec<OnceLock<Vec<S>>>,
}

impl<S: Scalar> Clone for Network<S> {
    fn clone(&self) -> Self {
        Self {
            nodes: self.nodes.clone(),
            index: self.index.clone(),
            out: self.out.clone(),
            inc: self.inc.clone(),
            speed: self.speed,
            dist_to: self.dist_to.clone(),
        }
    }
}

impl<S: Scalar> fmt::Debug for Network<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Network")
            .field("nodes", &self.nodes.len())
            .field("edges", &self.edge_count())
            .field("speed", &self.speed)
            .finish()
    }
}

impl<S: Scalar> Network<S> {
    /// Builds and validates a network. Parallel edges are collapsed keeping
    /// the shorter one; self-loops are dropped.
    pub fn new(nodes: Vec<Node<S>>, edges: Vec<Edge<S>>, speed: S) -> Result<Self> {
        if !(speed > S::zero() && speed.is_finite()) {
            return Err(Error::invalid(format!("speed must be positive, got {speed}")));
        }
        if nodes.is_empty() {
            return Err(Error::validation("network has no nodes"));
        }
        let mut nodes = nodes;
        nodes.sort_by_key(|n| n.id);
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(Error::validation(format!("duplicate node id {}", n.id)));
            }
        }

        let mut best: HashMap<(usize, usize), S> = HashMap::with_capacity(edges.len());
        for e in &edges {
            let from = *index
                .get(&e.from)
                .ok_or_else(|| Error::validation(format!("edge references missing node {}", e.from)))?;
            let to = *index
                .get(&e.to)
                .ok_or_else(|| Error::validation(format!("edge references missing node {}", e.to)))?;
            if !(e.length > S::zero() && e.length.is_finite()) {
                return Err(Error::validation(format!(
                    "edge {}->{} has non-positive length {}",
                    e.from, e.to, e.length
                )));
            }
            if from == to {
                log::warn!("dropping self-loop at node {}", e.from);
                continue;
            }
            best.entry((from, to))
                .and_modify(|l| {
                    if e.length < *l {
                        *l = e.length
                    }
                })
                .or_insert(e.length);
        }

        let n = nodes.len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for (&(from, to), &len) in &best {
            out[from].push((to, len));
            inc[to].push((from, len));
        }
        for adj in out.iter_mut().chain(inc.iter_mut()) {
            adj.sort_by_key(|&(j, _)| j);
        }

        let net = Self {
            nodes,
            index,
            out,
            inc,
            speed,
            dist_to: (0..n).map(|_| OnceLock::new()).collect(),
        };
        if !net.strongly_connected() {
            return Err(Error::validation("network is not strongly connected"));
        }
        Ok(net)
    }

    /// Bidirectional `rows` x `cols` lattice with node id `r * cols + c`
    /// at `(c * edge_len, r * edge_len)`, travelled at 36 km/h.
    pub fn grid(rows: usize, cols: usize, edge_len: S) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::invalid(format!(
                "grid needs at least 2 rows and 2 columns, got {rows}x{cols}"
            )));
        }
        if !(edge_len > S::zero() && edge_len.is_finite()) {
            return Err(Error::invalid(format!("edge length must be positive, got {edge_len}")));
        }
        let id = |r: usize, c: usize| NodeId((r * cols + c) as u64);
        let mut nodes = Vec::with_capacity(rows * cols);
        let mut edges = Vec::with_capacity(2 * (rows * (cols - 1) + cols * (rows - 1)));
        for r in 0..rows {
            for c in 0..cols {
                nodes.push(Node {
                    id: id(r, c),
                    x: S::lit(c as f64) * edge_len,
                    y: S::lit(r as f64) * edge_len,
                });
                let mut link = |a: NodeId, b: NodeId| {
                    edges.push(Edge { from: a, to: b, length: edge_len });
                    edges.push(Edge { from: b, to: a, length: edge_len });
                };
                if c + 1 < cols {
                    link(id(r, c), id(r, c + 1));
                }
                if r + 1 < rows {
                    link(id(r, c), id(r + 1, c));
                }
            }
        }
        Self::new(nodes, edges, S::lit(DEFAULT_SPEED_MPS))
    }

    /// Replaces the network-wide speed (meters per second).
    pub fn with_speed(mut self, speed: S) -> Result<Self> {
        if !(speed > S::zero() && speed.is_finite()) {
            return Err(Error::invalid(format!("speed must be positive, got {speed}")));
        }
        self.speed = speed;
        Ok(self)
    }

    pub fn speed(&self) -> S {
        self.speed
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn nodes(&self) -> &[Node<S>] {
        &self.nodes
    }

    pub fn node_ids(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    /// All directed edges, ordered by (from, to).
    pub fn edges(&self) -> Vec<Edge<S>> {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| {
                adj.iter().map(move |&(j, length)| Edge {
                    from: self.nodes[i].id,
                    to: self.nodes[j].id,
                    length,
                })
            })
            .collect()
    }

    fn idx(&self, id: NodeId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::NotFound(id))
    }

    /// Minimal-length route. Among equal-length routes the lexicographically
    /// smallest node sequence is returned.
    pub fn shortest_path(&self, from: NodeId, to: NodeId) -> Result<Route<S>> {
        let mut nodes = vec![from];
        let length = self.walk(from, to, |j| nodes.push(self.nodes[j].id))?;
        Ok(Route { nodes, length, duration: length / self.speed })
    }

    /// Length of [`Network::shortest_path`] without materialising the node
    /// sequence.
    pub fn distance(&self, from: NodeId, to: NodeId) -> Result<S> {
        self.walk(from, to, |_| ())
    }

    /// Duration of [`Network::shortest_path`].
    pub fn travel_time(&self, from: NodeId, to: NodeId) -> Result<S> {
        Ok(self.distance(from, to)? / self.speed)
    }

    fn walk(&self, from: NodeId, to: NodeId, mut visit: impl FnMut(usize)) -> Result<S> {
        let (src, dst) = (self.idx(from)?, self.idx(to)?);
        let row = self.row_to(dst);
        if row[src].is_infinite() {
            return Err(Error::Unreachable { from, to });
        }
        let tol = S::lit(64.0) * S::epsilon();
        let mut length = S::zero();
        let mut u = src;
        while u != dst {
            let remaining = row[u];
            let slack = tol * remaining.max(S::one());
            // adjacency is sorted by id, so the first tight edge gives the
            // lexicographically smallest continuation
            let &(v, len) = self.out[u]
                .iter()
                .find(|&&(v, len)| row[v].is_finite() && (len + row[v] - remaining).abs() <= slack)
                .ok_or_else(|| Error::Internal(format!("broken distance row towards {to}")))?;
            length = length + len;
            visit(v);
            u = v;
        }
        Ok(length)
    }

    /// Distances from every node to `target` (reverse Dijkstra).
    fn row_to(&self, target: usize) -> &[S] {
        self.dist_to[target].get_or_init(|| {
            let mut dist = vec![S::infinity(); self.nodes.len()];
            let mut heap = BinaryHeap::new();
            dist[target] = S::zero();
            heap.push(Reverse(HeapItem(S::zero(), target)));
            while let Some(Reverse(HeapItem(d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &(v, len) in &self.inc[u] {
                    let nd = d + len;
                    if nd < dist[v] {
                        dist[v] = nd;
                        heap.push(Reverse(HeapItem(nd, v)));
                    }
                }
            }
            dist
        })
    }

    fn strongly_connected(&self) -> bool {
        let reach = |adj: &Vec<Vec<(usize, S)>>| {
            let mut seen = vec![false; self.nodes.len()];
            let mut stack = vec![0];
            seen[0] = true;
            let mut count = 1;
            while let Some(u) = stack.pop() {
                for &(v, _) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        count += 1;
                        stack.push(v);
                    }
                }
            }
            count == self.nodes.len()
        };
        reach(&self.out) && reach(&self.inc)
    }
}

struct HeapItem<S>(S, usize);

impl<S: Scalar> PartialEq for HeapItem<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Scalar> Eq for HeapItem<S> {}
impl<S: Scalar> PartialOrd for HeapItem<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for HeapItem<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        total_cmp(self.0, other.0).then(self.1.cmp(&other.1))
    }
}

/// Reads a network from a nodes file (`node_id,x_m,y_m`) and an edges file
/// (`from_id,to_id,length_m`), both with header rows.
pub fn load_network<S: Scalar>(
    nodes_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
    speed: S,
) -> Result<Network<S>> {
    let nodes_path = nodes_path.as_ref();
    let edges_path = edges_path.as_ref();

    let mut nodes = Vec::new();
    let mut ids: HashMap<NodeId, u64> = HashMap::new();
    crate::io::read_table(nodes_path, &["node_id", "x_m", "y_m"], |line, row| {
        let id = NodeId(row.parse(0)?);
        if let Some(prev) = ids.insert(id, line) {
            return Err(format!("duplicate node id {id} (first defined on line {prev})"));
        }
        nodes.push(Node { id, x: S::lit(row.parse(1)?), y: S::lit(row.parse(2)?) });
        Ok(())
    })?;

    let mut edges = Vec::new();
    crate::io::read_table(edges_path, &["from_id", "to_id", "length_m"], |_, row| {
        let from = NodeId(row.parse(0)?);
        let to = NodeId(row.parse(1)?);
        for id in [from, to] {
            if !ids.contains_key(&id) {
                return Err(format!("edge references unknown node {id}"));
            }
        }
        let length: f64 = row.parse(2)?;
        if !(length > 0.0 && length.is_finite()) {
            return Err(format!("edge length must be positive, got {length}"));
        }
        edges.push(Edge { from, to, length: S::lit(length) });
        Ok(())
    })?;

    Network::new(nodes, edges, speed)
}
