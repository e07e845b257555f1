//! Topology learning: single-source multi-packet (SSMP) and multi-source
//! single-packet (MSSP) embedding, and recovery with mutual reinforcement at
//! the destination.

use crate::error::{Error, Result};
use crate::filter::BloomFilter;
use crate::identity::IdentitySource;
use crate::topology::{Node, Topology};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LearningPacket {
    pub source: Node,
    pub seq: u32,
    pub bloom: BloomFilter,
    /// Nodes that have already embedded into this packet (MSSP only).
    pub visited: Vec<bool>,
    /// Directed edge identities inserted so far.
    pub embedded: usize,
    /// Nodes the packet travelled through, destination last (MSSP only).
    pub route: Vec<Node>,
}

impl LearningPacket {
    pub fn hops(&self) -> usize {
        self.route.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    cells: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, cells: vec![false; n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: Node, j: Node) -> bool {
        self.cells[i * self.n + j]
    }

    pub fn set(&mut self, i: Node, j: Node, v: bool) {
        self.cells[i * self.n + j] = v;
    }

    /// Clears every entry whose mirror disagrees.
    pub fn reinforce(&mut self) {
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.get(i, j) != self.get(j, i) {
                    self.set(i, j, false);
                    self.set(j, i, false);
                }
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Per-node filter sizes and hash counts, indexed by embedder slot (the
/// non-destination nodes in ascending order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SsmpParams {
    pub m: Vec<usize>,
    pub k: Vec<usize>,
}

impl SsmpParams {
    pub fn new(m: Vec<usize>, k: Vec<usize>) -> Result<Self> {
        if m.len() != k.len() {
            return Err(Error::Domain("m and k vectors differ in length".into()));
        }
        if let Some((&mi, &ki)) = m.iter().zip(&k).find(|(&mi, &ki)| ki == 0 || ki > mi) {
            return Err(Error::InvalidBloomParams { m: mi, k: ki });
        }
        Ok(Self { m, k })
    }

    pub fn uniform(nodes: usize, m: usize, k: usize) -> Result<Self> {
        Self::new(vec![m; nodes], vec![k; nodes])
    }

    pub fn m_sum(&self) -> usize {
        self.m.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// Position of node `v` among the non-destination nodes.
pub fn embedder_slot(destination: Node, v: Node) -> usize {
    if v > destination {
        v - 1
    } else {
        v
    }
}

fn slot_params(t: &Topology, params: &SsmpParams, node: Node) -> Result<(usize, usize)> {
    if params.len() + 1 != t.node_count() {
        return Err(Error::Domain(format!(
            "parameter vectors cover {} nodes, topology has {} embedders",
            params.len(),
            t.node_count() - 1
        )));
    }
    let s = embedder_slot(t.destination(), node);
    Ok((params.m[s], params.k[s]))
}

/// What the destination knows before recovery: the node count and its own
/// neighbours from neighbour discovery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DestinationView {
    pub n: usize,
    pub destination: Node,
    pub neighbors: Vec<Node>,
}

impl DestinationView {
    pub fn of(t: &Topology) -> Self {
        Self { n: t.node_count(), destination: t.destination(), neighbors: t.neighbors(t.destination()).to_vec() }
    }
}

pub fn ssmp_embed(
    t: &Topology,
    ids: &impl IdentitySource,
    node: Node,
    params: &SsmpParams,
    seq: u32,
) -> Result<LearningPacket> {
    if node >= t.node_count() || node == t.destination() {
        return Err(Error::Domain(format!("node {node} cannot originate a learning packet")));
    }
    let (m, k) = slot_params(t, params, node)?;
    let mut bloom = BloomFilter::new(m, k)?;
    for &j in t.neighbors(node) {
        bloom.insert_item(ids.edge_id(node, j)?.as_bytes(), seq);
    }
    let mut visited = vec![false; t.node_count()];
    visited[node] = true;
    Ok(LearningPacket { source: node, seq, bloom, visited, embedded: t.degree(node), route: vec![node] })
}

fn finish_recovery(view: &DestinationView, mut adj: AdjacencyMatrix) -> Result<(Topology, AdjacencyMatrix)> {
    adj.reinforce();
    let d = view.destination;
    let mut edges: Vec<(Node, Node)> = Vec::new();
    for i in (0..view.n).filter(|&i| i != d) {
        for j in (i + 1..view.n).filter(|&j| j != d) {
            if adj.get(i, j) {
                edges.push((i, j));
            }
        }
    }
    edges.extend(view.neighbors.iter().map(|&v| (v, d)));
    let learned = Topology::new_unchecked_connectivity(view.n, d, edges)?;
    Ok((learned, adj))
}

/// Rebuilds the topology from one SSMP packet per non-destination node.
/// `packets` may arrive in any order.
pub fn ssmp_recover(
    packets: &[LearningPacket],
    ids: &impl IdentitySource,
    params: &SsmpParams,
    view: &DestinationView,
) -> Result<(Topology, AdjacencyMatrix)> {
    let (n, d) = (view.n, view.destination);
    if params.len() + 1 != n {
        return Err(Error::Domain("parameter vectors do not match node count".into()));
    }
    let mut by_node: Vec<Option<&LearningPacket>> = vec![None; n];
    for p in packets {
        if p.source < n {
            by_node[p.source] = Some(p);
        }
    }
    let mut adj = AdjacencyMatrix::new(n);
    for i in (0..n).filter(|&i| i != d) {
        let p = by_node[i].ok_or(Error::MissingPacket(i))?;
        let s = embedder_slot(d, i);
        if p.bloom.m() != params.m[s] || p.bloom.k() != params.k[s] {
            return Err(Error::InvalidBloomParams { m: p.bloom.m(), k: p.bloom.k() });
        }
        for j in (0..n).filter(|&j| j != i && j != d) {
            if p.bloom.contains_item(ids.edge_id(i, j)?.as_bytes(), p.seq) {
                adj.set(i, j, true);
            }
        }
    }
    finish_recovery(view, adj)
}

/// Node order and route of the single MSSP packet.
///
/// The packet starts at the non-destination node farthest from the
/// destination, visits nodes in depth-first preorder of a BFS spanning tree
/// rooted there (children ascending), moving between consecutive targets
/// along shortest paths, and finally heads to the destination.
pub fn mssp_walk(t: &Topology) -> Result<Vec<Node>> {
    let d = t.destination();
    let dist = t.hops_to_destination();
    if let Some(v) = dist.iter().position(Option::is_none) {
        return Err(Error::Disconnected(v));
    }
    let start = t
        .embedders()
        .max_by(|&a, &b| dist[a].cmp(&dist[b]).then(b.cmp(&a)))
        .expect("at least one embedder");

    // BFS tree rooted at start
    let n = t.node_count();
    let mut parent = vec![usize::MAX; n];
    let mut children: Vec<Vec<Node>> = vec![Vec::new(); n];
    parent[start] = start;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in t.neighbors(u) {
            if parent[v] == usize::MAX {
                parent[v] = u;
                children[u].push(v);
                queue.push_back(v);
            }
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        if u != d {
            order.push(u);
        }
        stack.extend(children[u].iter().rev());
    }

    let mut route = vec![start];
    for &target in order.iter().skip(1).chain(std::iter::once(&d)) {
        let cur = *route.last().unwrap();
        let leg = t.shortest_path(cur, target).expect("connected");
        route.extend_from_slice(&leg[1..]);
    }
    Ok(route)
}

pub fn mssp_embed_walk(
    t: &Topology,
    ids: &impl IdentitySource,
    m: usize,
    k: usize,
    seq: u32,
) -> Result<LearningPacket> {
    let route = mssp_walk(t)?;
    let mut bloom = BloomFilter::new(m, k)?;
    let mut visited = vec![false; t.node_count()];
    let mut embedded = 0;
    for &v in &route {
        if v == t.destination() || visited[v] {
            continue;
        }
        visited[v] = true;
        for &j in t.neighbors(v) {
            bloom.insert_item(ids.edge_id(v, j)?.as_bytes(), seq);
            embedded += 1;
        }
    }
    Ok(LearningPacket { source: route[0], seq, bloom, visited, embedded, route })
}

pub fn mssp_recover(
    packet: &LearningPacket,
    ids: &impl IdentitySource,
    view: &DestinationView,
) -> Result<(Topology, AdjacencyMatrix)> {
    let (n, d) = (view.n, view.destination);
    let mut adj = AdjacencyMatrix::new(n);
    for i in (0..n).filter(|&i| i != d) {
        for j in (0..n).filter(|&j| j != i && j != d) {
            if packet.bloom.contains_item(ids.edge_id(i, j)?.as_bytes(), packet.seq) {
                adj.set(i, j, true);
            }
        }
    }
    finish_recovery(view, adj)
}

/// Shortest-path hop count of each embedder's SSMP packet, in slot order.
pub fn ssmp_route_schedule(t: &Topology) -> Result<Vec<usize>> {
    let dist = t.hops_to_destination();
    t.embedders().map(|v| dist[v].ok_or(Error::Disconnected(v))).collect()
}

/// Edges of `learned` that are absent from `truth`.
pub fn surplus_edges(truth: &Topology, learned: &Topology) -> Vec<(Node, Node)> {
    learned.edges().filter(|&(u, v)| !truth.has_edge(u, v)).collect()
}
