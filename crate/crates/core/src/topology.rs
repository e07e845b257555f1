//! Undirected network graph with a distinguished destination (the road-side
//! unit). Nodes are dense indices `0..n`; by convention the destination is
//! the highest index, although any index is accepted.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Node = usize;

/// Default ceiling on the number of paths returned by [`Topology::enumerate_paths`].
pub const DEFAULT_PATH_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    destination: Node,
    edges: BTreeSet<(Node, Node)>,
    adjacency: Vec<Vec<Node>>,
}

/// Neighbour counts as reported to the destination before learning starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborProfile {
    /// Degrees of the non-destination nodes, in ascending node order.
    pub gamma: Vec<usize>,
    pub gamma_rsu: usize,
}

impl NeighborProfile {
    pub fn new(gamma: Vec<usize>, gamma_rsu: usize) -> Self {
        Self { gamma, gamma_rsu }
    }

    /// Number of nodes including the destination.
    pub fn node_count(&self) -> usize {
        self.gamma.len() + 1
    }

    pub fn degree_sum(&self) -> usize {
        self.gamma_rsu + self.gamma.iter().sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectedPath {
    nodes: Vec<Node>,
}

impl DirectedPath {
    /// Checks that `nodes` is a simple path of `t` ending at the destination.
    pub fn new(t: &Topology, nodes: Vec<Node>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidPath("a path needs at least one hop".into()));
        }
        if *nodes.last().unwrap() != t.destination() {
            return Err(Error::InvalidPath("path does not end at the destination".into()));
        }
        let mut seen = vec![false; t.node_count()];
        for &v in &nodes {
            if v >= t.node_count() {
                return Err(Error::InvalidPath(format!("node {v} out of range")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidPath(format!("node {v} repeated")));
            }
        }
        for w in nodes.windows(2) {
            if !t.has_edge(w[0], w[1]) {
                return Err(Error::InvalidPath(format!("no edge {}-{}", w[0], w[1])));
            }
        }
        Ok(Self { nodes })
    }

    pub(crate) fn from_nodes_unchecked(nodes: Vec<Node>) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn source(&self) -> Node {
        self.nodes[0]
    }

    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Directed edges in travel order.
    pub fn edges(&self) -> impl Iterator<Item = (Node, Node)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }
}

impl Topology {
    pub fn new(n: usize, destination: Node, edges: impl IntoIterator<Item = (Node, Node)>) -> Result<Self> {
        let t = Self::new_unchecked_connectivity(n, destination, edges)?;
        t.check_connected()?;
        Ok(t)
    }

    /// Builds a graph without requiring connectivity. Used for learned
    /// topologies and intermediate fixtures.
    pub fn new_unchecked_connectivity(
        n: usize,
        destination: Node,
        edges: impl IntoIterator<Item = (Node, Node)>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidTopology(format!("need at least 2 nodes, got {n}")));
        }
        if destination >= n {
            return Err(Error::InvalidTopology(format!("destination {destination} out of range")));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidTopology(format!("self-loop at {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidTopology(format!("edge {u}-{v} out of range")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &set {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        Ok(Self { n, destination, edges: set, adjacency })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Self::new(n, n.saturating_sub(1), edges)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn destination(&self) -> Node {
        self.destination
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Unordered edges with `u < v`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (Node, Node)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: Node, v: Node) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// Sorted neighbour list.
    pub fn neighbors(&self, v: Node) -> &[Node] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: Node) -> usize {
        self.adjacency[v].len()
    }

    /// Non-destination nodes in ascending order.
    pub fn embedders(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.n).filter(move |&v| v != self.destination)
    }

    pub fn neighbor_profile(&self) -> NeighborProfile {
        NeighborProfile {
            gamma: self.embedders().map(|v| self.degree(v)).collect(),
            gamma_rsu: self.degree(self.destination),
        }
    }

    /// Node pairs absent from the graph, excluding pairs touching the
    /// destination. These are the only pairs a learning run can misreport.
    pub fn complement_edges(&self) -> Vec<(Node, Node)> {
        let d = self.destination;
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in u + 1..self.n {
                if u != d && v != d && !self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Hop distance from every node to the destination (`None` if unreachable).
    pub fn hops_to_destination(&self) -> Vec<Option<usize>> {
        self.bfs_from(self.destination)
    }

    pub(crate) fn bfs_from(&self, root: Node) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Shortest path `from -> to`, breaking ties toward lower node indices.
    pub(crate) fn shortest_path(&self, from: Node, to: Node) -> Option<Vec<Node>> {
        let dist = self.bfs_from(to);
        dist[from]?;
        let mut path = vec![from];
        let mut cur = from;
        while cur != to {
            let dc = dist[cur].unwrap();
            cur = *self.adjacency[cur]
                .iter()
                .find(|&&w| dist[w] == Some(dc - 1))
                .expect("bfs layer has a predecessor");
            path.push(cur);
        }
        Some(path)
    }

    pub fn is_connected(&self) -> bool {
        self.check_connected().is_ok()
    }

    fn check_connected(&self) -> Result<()> {
        match self.hops_to_destination().iter().position(Option::is_none) {
            Some(v) => Err(Error::Disconnected(v)),
            None => Ok(()),
        }
    }

    /// All simple paths from `source` to the destination with exactly `h`
    /// hops, in lexicographic order of node sequence.
    pub fn enumerate_paths(&self, source: Node, h: usize) -> Result<Vec<DirectedPath>> {
        self.enumerate_paths_capped(source, h, DEFAULT_PATH_CAP)
    }

    pub fn enumerate_paths_capped(&self, source: Node, h: usize, cap: usize) -> Result<Vec<DirectedPath>> {
        if source >= self.n || source == self.destination {
            return Err(Error::InvalidPath(format!("bad source {source}")));
        }
        if h == 0 {
            return Err(Error::InvalidPath("hop count must be at least 1".into()));
        }
        let dist = self.hops_to_destination();
        let mut out = Vec::new();
        let mut stack = vec![source];
        let mut on_path = vec![false; self.n];
        on_path[source] = true;
        self.paths_rec(h, &dist, &mut stack, &mut on_path, &mut out, cap)?;
        Ok(out)
    }

    fn paths_rec(
        &self,
        h: usize,
        dist: &[Option<usize>],
        stack: &mut Vec<Node>,
        on_path: &mut [bool],
        out: &mut Vec<DirectedPath>,
        cap: usize,
    ) -> Result<()> {
        let u = *stack.last().unwrap();
        let remaining = h + 1 - stack.len();
        if remaining == 0 {
            if u == self.destination {
                if out.len() == cap {
                    return Err(Error::CapExceeded { what: "path enumeration", needed: cap as u128 + 1, cap: cap as u128 });
                }
                out.push(DirectedPath::from_nodes_unchecked(stack.clone()));
            }
            return Ok(());
        }
        for &v in &self.adjacency[u] {
            if on_path[v] || (v == self.destination) != (remaining == 1) {
                continue;
            }
            // prune branches that cannot reach the destination in time
            match dist[v] {
                Some(d) if d < remaining => {}
                _ => continue,
            }
            on_path[v] = true;
            stack.push(v);
            self.paths_rec(h, dist, stack, on_path, out, cap)?;
            stack.pop();
            on_path[v] = false;
        }
        Ok(())
    }

    /// Connected graph with exactly `e` edges: a random recursive spanning tree
    /// followed by uniformly chosen extra edges. Deterministic per seed; the
    /// destination is node `n - 1`.
    pub fn random_sparse(n: usize, e: usize, seed: u64) -> Result<Self> {
        let max_edges = n * n.saturating_sub(1) / 2;
        if n < 2 || e < n - 1 || e > max_edges {
            return Err(Error::InfeasibleDimensions { n, e });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<Node> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut edges = BTreeSet::new();
        for i in 1..n {
            let parent = order[rng.random_range(0..i)];
            let child = order[i];
            edges.insert((parent.min(child), parent.max(child)));
        }
        let mut rest: Vec<(Node, Node)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|p| !edges.contains(p))
            .collect();
        rest.shuffle(&mut rng);
        edges.extend(rest.into_iter().take(e - (n - 1)));
        Self::new(n, n - 1, edges)
    }

    /// A connected graph realizing the given profile (destination = last
    /// node), found by Havel-Hakimi with seeded random tie-breaking.
    pub fn realize_profile(profile: &NeighborProfile, seed: u64) -> Result<Self> {
        let n = profile.node_count();
        let mut degrees = profile.gamma.clone();
        degrees.push(profile.gamma_rsu);
        if profile.degree_sum() % 2 == 1 {
            return Err(Error::Parity(profile.degree_sum()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10_000 {
            if let Some(edges) = havel_hakimi(&degrees, &mut rng) {
                let t = Self::new_unchecked_connectivity(n, n - 1, edges)?;
                if t.is_connected() {
                    return Ok(t);
                }
            } else {
                break;
            }
        }
        Err(Error::InvalidTopology(format!("no connected realization of degrees {degrees:?}")))
    }

    /// Plain-text edge list: `n <count> dest <index>` then one `u v` per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("n {} dest {}\n", self.n, self.destination);
        for (u, v) in self.edges() {
            writeln!(s, "{u} {v}").unwrap();
        }
        s
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let bad = |line: usize, msg: &str| Error::InvalidTopology(format!("line {line}: {msg}"));
        let (hl, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (n, dest) = match parts.as_slice() {
            ["n", n, "dest", d] => (
                n.parse::<usize>().map_err(|_| bad(hl, "bad node count"))?,
                d.parse::<usize>().map_err(|_| bad(hl, "bad destination"))?,
            ),
            _ => return Err(bad(hl, "expected `n <count> dest <index>`")),
        };
        let mut edges = Vec::new();
        for (ln, line) in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
                _ => return Err(bad(ln, "expected `u v`")),
            }
        }
        Self::new(n, dest, edges)
    }
}

fn havel_hakimi(degrees: &[usize], rng: &mut ChaCha8Rng) -> Option<Vec<(Node, Node)>> {
    let mut residual: Vec<(usize, u32, Node)> = degrees.iter().enumerate().map(|(v, &d)| (d, 0, v)).collect();
    let mut edges = Vec::new();
    loop {
        for r in residual.iter_mut() {
            r.1 = rng.random();
        }
        residual.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let (d, _, v) = residual[0];
        if d == 0 {
            return Some(edges);
        }
        if d >= residual.len() {
            return None;
        }
        residual[0].0 = 0;
        for r in residual.iter_mut().skip(1).take(d) {
            if r.0 == 0 {
                return None;
            }
            r.0 -= 1;
            edges.push((v, r.2));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path4() -> Topology {
        Topology::new(4, 3, [(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn profile_of_small_graphs() {
        let p = path4().neighbor_profile();
        assert_eq!(p.gamma, vec![1, 2, 2]);
        assert_eq!(p.gamma_rsu, 1);

        let p = Topology::complete(4).unwrap().neighbor_profile();
        assert_eq!(p.gamma, vec![3, 3, 3]);
        assert_eq!(p.gamma_rsu, 3);

        let star = Topology::new(5, 4, [(0, 4), (1, 4), (2, 4), (3, 4)]).unwrap();
        let p = star.neighbor_profile();
        assert_eq!(p.gamma, vec![1, 1, 1, 1]);
        assert_eq!(p.gamma_rsu, 4);
    }

    #[test]
    fn complement_of_square() {
        let t = Topology::new(4, 3, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!(t.complement_edges(), vec![(0, 2)]);
        assert!(Topology::complete(6).unwrap().complement_edges().is_empty());
    }

    #[test]
    fn complement_matches_witness_profile() {
        // gamma = [2,1,1], gamma_rsu = 2
        let t = Topology::new(4, 3, [(0, 1), (0, 3), (2, 3)]).unwrap();
        assert_eq!(t.neighbor_profile(), NeighborProfile::new(vec![2, 1, 1], 2));
        assert_eq!(t.complement_edges().len(), 2);
    }

    #[test]
    fn paths_on_small_graphs() {
        let t = path4();
        let ps = t.enumerate_paths(0, 3).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].nodes(), &[0, 1, 2, 3]);
        assert!(t.enumerate_paths(0, 2).unwrap().is_empty());
        let ps = t.enumerate_paths(2, 1).unwrap();
        assert_eq!(ps[0].nodes(), &[2, 3]);
    }

    #[test]
    fn path_cap_is_enforced() {
        let t = Topology::complete(8).unwrap();
        assert!(matches!(t.enumerate_paths_capped(0, 4, 10), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn rejects_malformed_graphs() {
        assert!(Topology::new(3, 2, [(0, 0)]).is_err());
        assert!(Topology::new(3, 2, [(0, 3)]).is_err());
        assert!(matches!(Topology::new(3, 2, [(0, 1)]), Err(Error::Disconnected(_))));
        assert!(Topology::random_sparse(5, 3, 1).is_err());
        assert!(Topology::random_sparse(5, 11, 1).is_err());
    }

    #[test]
    fn random_graphs_are_deterministic_and_sized() {
        let a = Topology::random_sparse(8, 14, 7).unwrap();
        let b = Topology::random_sparse(8, 14, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edge_count(), 14);
        assert!(a.is_connected());
        for (n, e) in [(20, 34), (20, 54)] {
            let t = Topology::random_sparse(n, e, 3).unwrap();
            assert_eq!(t.edge_count(), e);
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let t = Topology::random_sparse(10, 17, 5).unwrap();
        assert_eq!(Topology::parse_edge_list(&t.to_edge_list()).unwrap(), t);
        assert!(Topology::parse_edge_list("n 3\n0 1\n").is_err());
        assert!(Topology::parse_edge_list("n 3 dest 2\n0 1 2\n").is_err());
    }

    #[test]
    fn realizes_profile() {
        let profile = NeighborProfile::new(vec![5, 3, 4, 1, 4, 2, 4], 5);
        let t = Topology::realize_profile(&profile, 0).unwrap();
        assert_eq!(t.neighbor_profile(), profile);
        assert_eq!(t.edge_count(), 14);
        assert!(Topology::realize_profile(&NeighborProfile::new(vec![1, 1], 1), 0).is_err());
    }

    #[test]
    fn validates_directed_paths() {
        let t = path4();
        assert!(DirectedPath::new(&t, vec![0, 1, 2, 3]).is_ok());
        assert!(DirectedPath::new(&t, vec![0, 2, 3]).is_err());
        assert!(DirectedPath::new(&t, vec![0, 1, 2]).is_err());
        assert!(DirectedPath::new(&t, vec![3]).is_err());
    }
}
