//! Payload-phase provenance: deterministic edge (DE) and double-edge (DDE)
//! embedding with an in-packet hash-chain, and bounded DFS recovery at the
//! destination.

use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::filter::BloomFilter;
use crate::identity::{HashChain, IdentitySource};
use crate::topology::{DirectedPath, Node, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbedMode {
    /// Every relay embeds its outgoing edge.
    De,
    /// Relays at odd offsets embed the (previous, self, next) triple.
    Dde,
}

impl EmbedMode {
    /// Identities embedded for an `h`-hop path.
    pub fn embeddings(self, h: usize) -> usize {
        match self {
            EmbedMode::De => h,
            EmbedMode::Dde => h / 2,
        }
    }
}

impl std::str::FromStr for EmbedMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "de" | "DE" => Ok(Self::De),
            "dde" | "DDE" => Ok(Self::Dde),
            _ => Err(Error::Domain(format!("unknown embedding mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadPacket {
    pub source: Node,
    pub seq: u32,
    pub hop_counter: usize,
    pub bloom: BloomFilter,
    pub chain: HashChain,
}

impl PayloadPacket {
    /// `source:u16 seq:u32 hop:u16`, the filter, then the 32-byte chain.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.source as u16).to_be_bytes());
        out.extend_from_slice(&self.seq.to_be_bytes());
        out.extend_from_slice(&(self.hop_counter as u16).to_be_bytes());
        out.extend_from_slice(&self.bloom.to_bytes());
        out.extend_from_slice(&self.chain.0);
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        if data.len() < 8 {
            return Err(Error::Decode("packet header truncated".into()));
        }
        let source = u16::from_be_bytes([data[0], data[1]]) as usize;
        let seq = u32::from_be_bytes(data[2..6].try_into().unwrap());
        let hop_counter = u16::from_be_bytes([data[6], data[7]]) as usize;
        let (bloom, used) = BloomFilter::from_bytes(&data[8..])?;
        let rest = &data[8 + used..];
        let chain: [u8; 32] = rest.try_into().map_err(|_| Error::Decode("chain must be exactly 32 bytes".into()))?;
        Ok(Self { source, seq, hop_counter, bloom, chain: HashChain(chain) })
    }
}

fn check_path(t: &Topology, path: &DirectedPath) -> Result<()> {
    DirectedPath::new(t, path.nodes().to_vec()).map(|_| ())
}

pub fn de_transmit(
    t: &Topology,
    ids: &impl IdentitySource,
    path: &DirectedPath,
    m: usize,
    k: usize,
    seq: u32,
) -> Result<PayloadPacket> {
    check_path(t, path)?;
    let mut bloom = BloomFilter::new(m, k)?;
    let mut chain = HashChain::seed();
    for (u, v) in path.edges() {
        let id = ids.edge_id(u, v)?;
        bloom.insert_item(id.as_bytes(), seq);
        chain = chain.update(id.as_bytes(), seq);
    }
    Ok(PayloadPacket { source: path.source(), seq, hop_counter: path.hops(), bloom, chain })
}

pub fn dde_transmit(
    t: &Topology,
    ids: &impl IdentitySource,
    path: &DirectedPath,
    m: usize,
    k: usize,
    seq: u32,
) -> Result<PayloadPacket> {
    check_path(t, path)?;
    if path.hops() < 2 {
        return Err(Error::InvalidPath("double-edge embedding needs at least two hops".into()));
    }
    let mut bloom = BloomFilter::new(m, k)?;
    let mut chain = HashChain::seed();
    let nodes = path.nodes();
    for c in (1..nodes.len() - 1).step_by(2) {
        let id = ids.double_edge_id(nodes[c - 1], nodes[c], nodes[c + 1])?;
        bloom.insert_item(id.as_bytes(), seq);
        chain = chain.update(id.as_bytes(), seq);
    }
    Ok(PayloadPacket { source: path.source(), seq, hop_counter: path.hops(), bloom, chain })
}

pub fn transmit(
    mode: EmbedMode,
    t: &Topology,
    ids: &impl IdentitySource,
    path: &DirectedPath,
    m: usize,
    k: usize,
    seq: u32,
) -> Result<PayloadPacket> {
    match mode {
        EmbedMode::De => de_transmit(t, ids, path, m, k, seq),
        EmbedMode::Dde => dde_transmit(t, ids, path, m, k, seq),
    }
}

/// Hash-chain value the destination expects for a candidate path.
pub fn chain_for_path(mode: EmbedMode, ids: &impl IdentitySource, nodes: &[Node], seq: u32) -> Result<HashChain> {
    let mut chain = HashChain::seed();
    match mode {
        EmbedMode::De => {
            for w in nodes.windows(2) {
                chain = chain.update(ids.edge_id(w[0], w[1])?.as_bytes(), seq);
            }
        }
        EmbedMode::Dde => {
            for c in (1..nodes.len().saturating_sub(1)).step_by(2) {
                chain = chain.update(ids.double_edge_id(nodes[c - 1], nodes[c], nodes[c + 1])?.as_bytes(), seq);
            }
        }
    }
    Ok(chain)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyMode {
    /// Candidate edges restricted to a learned topology.
    Learned(Topology),
    /// No topology knowledge: every node pair is a candidate edge.
    CompleteGraph,
}

/// How the verification budget is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaRule {
    /// At most `beta` chain verifications; the search gives up after the
    /// `beta`-th mismatch.
    #[default]
    Attempts,
    /// `beta` mismatches are tolerated and one further candidate may still
    /// be verified.
    MismatchesOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainMode {
    #[default]
    Verify,
    /// Legacy rule without hash-chains: more than one candidate is a failure.
    NoChain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryContext {
    pub topology_mode: TopologyMode,
    pub n: usize,
    pub destination: Node,
    pub beta: usize,
    pub h: usize,
    pub beta_rule: BetaRule,
    pub chain_mode: ChainMode,
}

impl RecoveryContext {
    pub fn learned(t: &Topology, beta: usize, h: usize) -> Self {
        Self {
            topology_mode: TopologyMode::Learned(t.clone()),
            n: t.node_count(),
            destination: t.destination(),
            beta,
            h,
            beta_rule: BetaRule::default(),
            chain_mode: ChainMode::default(),
        }
    }

    pub fn complete(n: usize, destination: Node, beta: usize, h: usize) -> Self {
        Self {
            topology_mode: TopologyMode::CompleteGraph,
            n,
            destination,
            beta,
            h,
            beta_rule: BetaRule::default(),
            chain_mode: ChainMode::default(),
        }
    }

    fn allows_edge(&self, u: Node, v: Node) -> bool {
        match &self.topology_mode {
            TopologyMode::Learned(t) => t.has_edge(u, v),
            TopologyMode::CompleteGraph => true,
        }
    }

    fn failure_limit(&self) -> usize {
        match self.beta_rule {
            BetaRule::Attempts => self.beta,
            BetaRule::MismatchesOnly => self.beta + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Recovered(DirectedPath),
    FalsePositive,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryResult {
    pub outcome: Outcome,
    /// Chain verifications performed.
    pub paths_checked: usize,
    /// Candidates the DFS produced before it stopped.
    pub candidate_paths: usize,
}

impl RecoveryResult {
    pub fn is_failure(&self) -> bool {
        !matches!(self.outcome, Outcome::Recovered(_))
    }
}

/// Lazy membership oracle over the packet's filter with memoized answers.
struct Membership<'a, I: IdentitySource> {
    packet: &'a PayloadPacket,
    ids: &'a I,
    n: usize,
    memo: Vec<u8>,
}

impl<'a, I: IdentitySource> Membership<'a, I> {
    fn new(packet: &'a PayloadPacket, ids: &'a I, n: usize, mode: EmbedMode) -> Self {
        let size = match mode {
            EmbedMode::De => n * n,
            EmbedMode::Dde => n * n * n,
        };
        Self { packet, ids, n, memo: vec![0; size] }
    }

    fn lookup(&mut self, slot: usize, id: impl FnOnce() -> Result<[u8; 32]>) -> Result<bool> {
        match self.memo[slot] {
            1 => Ok(true),
            2 => Ok(false),
            _ => {
                let hit = self.packet.bloom.contains_item(&id()?, self.packet.seq);
                self.memo[slot] = if hit { 1 } else { 2 };
                Ok(hit)
            }
        }
    }

    fn edge(&mut self, u: Node, v: Node) -> Result<bool> {
        let ids = self.ids;
        self.lookup(u * self.n + v, || Ok(ids.edge_id(u, v)?.0))
    }

    fn double_edge(&mut self, a: Node, b: Node, c: Node) -> Result<bool> {
        let ids = self.ids;
        self.lookup((a * self.n + b) * self.n + c, || Ok(ids.double_edge_id(a, b, c)?.0))
    }
}

/// Depth-first enumeration of `h`-hop candidate paths from `source` to the
/// destination whose embedded identities all test positive, visiting
/// neighbours in ascending index order.
fn search<I: IdentitySource>(
    ctx: &RecoveryContext,
    mode: EmbedMode,
    source: Node,
    membership: &mut Membership<'_, I>,
    visit: &mut dyn FnMut(&[Node]) -> Result<ControlFlow<()>>,
) -> Result<()> {
    let dist = match &ctx.topology_mode {
        TopologyMode::Learned(t) => Some(t.hops_to_destination()),
        TopologyMode::CompleteGraph => None,
    };
    let mut stack = vec![source];
    let mut on_path = vec![false; ctx.n];
    on_path[source] = true;
    dfs(ctx, mode, dist.as_deref(), membership, &mut stack, &mut on_path, visit).map(|_| ())
}

fn dfs<I: IdentitySource>(
    ctx: &RecoveryContext,
    mode: EmbedMode,
    dist: Option<&[Option<usize>]>,
    membership: &mut Membership<'_, I>,
    stack: &mut Vec<Node>,
    on_path: &mut [bool],
    visit: &mut dyn FnMut(&[Node]) -> Result<ControlFlow<()>>,
) -> Result<ControlFlow<()>> {
    let pos = stack.len(); // index the next node will occupy
    if pos == ctx.h + 1 {
        return visit(stack);
    }
    let u = *stack.last().unwrap();
    let last = pos == ctx.h;
    for v in 0..ctx.n {
        if on_path[v] || (v == ctx.destination) != last || !ctx.allows_edge(u, v) {
            continue;
        }
        if let Some(dist) = dist {
            match dist[v] {
                Some(d) if d <= ctx.h - pos => {}
                _ => continue,
            }
        }
        let present = match mode {
            EmbedMode::De => membership.edge(u, v)?,
            // a triple closes at every even position
            EmbedMode::Dde if pos.is_multiple_of(2) => membership.double_edge(stack[pos - 2], u, v)?,
            EmbedMode::Dde => true,
        };
        if !present {
            continue;
        }
        on_path[v] = true;
        stack.push(v);
        let flow = dfs(ctx, mode, dist, membership, stack, on_path, visit)?;
        stack.pop();
        on_path[v] = false;
        if flow.is_break() {
            return Ok(flow);
        }
    }
    Ok(ControlFlow::Continue(()))
}

/// Every candidate path the filter admits, up to `cap` of them.
pub fn candidate_paths(
    packet: &PayloadPacket,
    ids: &impl IdentitySource,
    ctx: &RecoveryContext,
    mode: EmbedMode,
    cap: usize,
) -> Result<Vec<DirectedPath>> {
    let mut membership = Membership::new(packet, ids, ctx.n, mode);
    let mut out = Vec::new();
    let mut overflow = false;
    search(ctx, mode, packet.source, &mut membership, &mut |nodes| {
        if out.len() == cap {
            overflow = true;
            return Ok(ControlFlow::Break(()));
        }
        out.push(DirectedPath::from_nodes_unchecked(nodes.to_vec()));
        Ok(ControlFlow::Continue(()))
    })?;
    if overflow {
        return Err(Error::CapExceeded { what: "candidate paths", needed: cap as u128 + 1, cap: cap as u128 });
    }
    Ok(out)
}

/// Recovers the packet's path: membership tests, DFS over admitted
/// identities, then hash-chain checks within the verification budget. A lone
/// candidate is accepted without a chain check.
pub fn recover(
    packet: &PayloadPacket,
    ids: &impl IdentitySource,
    ctx: &RecoveryContext,
    mode: EmbedMode,
) -> Result<RecoveryResult> {
    if ctx.beta == 0 {
        return Err(Error::Domain("beta must be at least 1".into()));
    }
    if ctx.h != packet.hop_counter {
        return Err(Error::Domain(format!("context expects {} hops, packet carries {}", ctx.h, packet.hop_counter)));
    }
    if mode == EmbedMode::Dde && ctx.h < 2 {
        return Err(Error::Domain("double-edge recovery needs at least two hops".into()));
    }
    let limit = ctx.failure_limit();
    let mut membership = Membership::new(packet, ids, ctx.n, mode);
    let mut first: Option<Vec<Node>> = None;
    let mut count = 0usize;
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    let mut outcome: Option<Outcome> = None;

    let verify = |nodes: &[Node], checked: &mut usize, mismatches: &mut usize| -> Result<Option<Outcome>> {
        *checked += 1;
        if chain_for_path(mode, ids, nodes, packet.seq)? == packet.chain {
            return Ok(Some(Outcome::Recovered(DirectedPath::from_nodes_unchecked(nodes.to_vec()))));
        }
        *mismatches += 1;
        Ok((*mismatches >= limit).then_some(Outcome::FalsePositive))
    };

    search(ctx, mode, packet.source, &mut membership, &mut |nodes| {
        count += 1;
        if count == 1 {
            first = Some(nodes.to_vec());
            return Ok(ControlFlow::Continue(()));
        }
        if ctx.chain_mode == ChainMode::NoChain {
            outcome = Some(Outcome::FalsePositive);
            return Ok(ControlFlow::Break(()));
        }
        if count == 2 {
            if let Some(o) = verify(first.as_deref().unwrap(), &mut checked, &mut mismatches)? {
                outcome = Some(o);
                return Ok(ControlFlow::Break(()));
            }
        }
        if let Some(o) = verify(nodes, &mut checked, &mut mismatches)? {
            outcome = Some(o);
            return Ok(ControlFlow::Break(()));
        }
        Ok(ControlFlow::Continue(()))
    })?;

    let outcome = match (outcome, count) {
        (Some(o), _) => o,
        (None, 1) => Outcome::Recovered(DirectedPath::from_nodes_unchecked(first.unwrap())),
        (None, _) => Outcome::Exhausted,
    };
    Ok(RecoveryResult { outcome, paths_checked: checked, candidate_paths: count })
}

/// Where the true path falls in the destination's search order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateRank {
    /// Chain mismatches seen before the first match, capped at the limit.
    pub mismatches_before_match: usize,
    /// Candidates produced before the search stopped; exact when it is 0 or 1.
    pub candidates: usize,
    pub matched: bool,
}

impl CandidateRank {
    /// Whether [`recover`] would report a failure under `beta`.
    pub fn fails(&self, beta: usize, rule: BetaRule, chain: ChainMode) -> bool {
        if self.candidates == 0 {
            return true;
        }
        if self.candidates == 1 {
            return false;
        }
        if chain == ChainMode::NoChain {
            return true;
        }
        let limit = match rule {
            BetaRule::Attempts => beta,
            BetaRule::MismatchesOnly => beta + 1,
        };
        !self.matched || self.mismatches_before_match >= limit
    }
}

/// Runs the recovery search once and records how many false candidates
/// precede the true one, giving up after `limit` mismatches. One call
/// answers [`recover`] for every `beta` up to `limit`.
pub fn rank_candidates(
    packet: &PayloadPacket,
    ids: &impl IdentitySource,
    ctx: &RecoveryContext,
    mode: EmbedMode,
    limit: usize,
) -> Result<CandidateRank> {
    if ctx.h != packet.hop_counter {
        return Err(Error::Domain(format!("context expects {} hops, packet carries {}", ctx.h, packet.hop_counter)));
    }
    let mut membership = Membership::new(packet, ids, ctx.n, mode);
    let mut rank = CandidateRank { mismatches_before_match: 0, candidates: 0, matched: false };
    search(ctx, mode, packet.source, &mut membership, &mut |nodes| {
        rank.candidates += 1;
        if rank.matched {
            // the match came first; this only proves it was not alone
            return Ok(ControlFlow::Break(()));
        }
        if chain_for_path(mode, ids, nodes, packet.seq)? == packet.chain {
            rank.matched = true;
            return Ok(if rank.candidates > 1 { ControlFlow::Break(()) } else { ControlFlow::Continue(()) });
        }
        rank.mismatches_before_match += 1;
        // a lone candidate is accepted unverified, so keep looking for a second
        let stop = rank.mismatches_before_match >= limit && rank.candidates > 1;
        Ok(if stop { ControlFlow::Break(()) } else { ControlFlow::Continue(()) })
    })?;
    Ok(rank)
}

/// Every directed double-edge `(a, b, c)` of `t` a relay could embed: both
/// edges present, `a != c`, and neither `a` nor `b` is the destination.
pub fn directed_double_edges(t: &Topology) -> Vec<(Node, Node, Node)> {
    let d = t.destination();
    let mut out = Vec::new();
    for b in t.embedders() {
        for &a in t.neighbors(b).iter().filter(|&&a| a != d) {
            for &c in t.neighbors(b).iter().filter(|&&c| c != a) {
                out.push((a, b, c));
            }
        }
    }
    out
}

/// Directed edges a relay could embed (the destination never forwards).
pub fn directed_edges(t: &Topology) -> Vec<(Node, Node)> {
    t.embedders().flat_map(|u| t.neighbors(u).iter().map(move |&v| (u, v))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::KeyRing;

    fn path(t: &Topology, nodes: &[Node]) -> DirectedPath {
        DirectedPath::new(t, nodes.to_vec()).unwrap()
    }

    #[test]
    fn de_embeds_each_hop() {
        let t = Topology::new(4, 3, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let keys = KeyRing::from_seed(4, 1);
        let p = de_transmit(&t, &keys, &path(&t, &[2, 3]), 32, 3, 4).unwrap();
        assert_eq!(p.hop_counter, 1);
        assert_eq!(p.chain, HashChain::seed().update(keys.edge_id(2, 3).unwrap().as_bytes(), 4));

        let p = de_transmit(&t, &keys, &path(&t, &[0, 1, 2, 3]), 32, 3, 4).unwrap();
        assert!(p.bloom.popcount() <= 9);
        assert!(p.bloom.contains_item(keys.edge_id(0, 1).unwrap().as_bytes(), 4));
        let expected = HashChain::seed()
            .update(keys.edge_id(0, 1).unwrap().as_bytes(), 4)
            .update(keys.edge_id(1, 2).unwrap().as_bytes(), 4)
            .update(keys.edge_id(2, 3).unwrap().as_bytes(), 4);
        assert_eq!(p.chain, expected);
    }

    #[test]
    fn dde_embeds_alternate_triples() {
        let t = Topology::complete(6).unwrap();
        let keys = KeyRing::from_seed(6, 2);
        let chain = |triples: &[(Node, Node, Node)]| {
            triples.iter().fold(HashChain::seed(), |hc, &(a, b, c)| {
                hc.update(keys.double_edge_id(a, b, c).unwrap().as_bytes(), 7)
            })
        };
        let p = dde_transmit(&t, &keys, &path(&t, &[0, 1, 2, 3, 5]), 64, 2, 7).unwrap();
        assert_eq!(p.chain, chain(&[(0, 1, 2), (2, 3, 5)]));
        let p = dde_transmit(&t, &keys, &path(&t, &[0, 5]), 64, 2, 7);
        assert!(p.is_err());
        let p = dde_transmit(&t, &keys, &path(&t, &[0, 1, 5]), 64, 2, 7).unwrap();
        assert_eq!(p.chain, chain(&[(0, 1, 5)]));
        let p = dde_transmit(&t, &keys, &path(&t, &[0, 1, 2, 3, 4, 5]), 64, 2, 7).unwrap();
        assert_eq!(p.chain, chain(&[(0, 1, 2), (2, 3, 4)]));
        assert_eq!(EmbedMode::Dde.embeddings(5), 2);
    }

    #[test]
    fn rejects_paths_outside_topology() {
        let t = Topology::new(4, 3, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let other = Topology::complete(4).unwrap();
        let keys = KeyRing::from_seed(4, 3);
        let bad = DirectedPath::new(&other, vec![0, 3]).unwrap();
        assert!(de_transmit(&t, &keys, &bad, 16, 2, 0).is_err());
    }

    #[test]
    fn lone_candidate_needs_no_chain_check() {
        let t = Topology::new(4, 3, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let keys = KeyRing::from_seed(4, 4);
        let p = de_transmit(&t, &keys, &path(&t, &[0, 1, 2, 3]), 64, 3, 1).unwrap();
        let r = recover(&p, &keys, &RecoveryContext::learned(&t, 1, 3), EmbedMode::De).unwrap();
        assert_eq!(r.outcome, Outcome::Recovered(path(&t, &[0, 1, 2, 3])));
        assert_eq!(r.paths_checked, 0);
        assert_eq!(r.candidate_paths, 1);
    }

    /// Source 0 reaches the destination 5 through relay pairs (1|2|3|4 then
    /// 4 or so) in a layered graph; a saturated filter admits every path.
    fn layered() -> Topology {
        Topology::new(6, 5, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4), (4, 5)]).unwrap()
    }

    #[test]
    fn saturated_worst_case_ordering_is_false_positive() {
        let t = layered();
        let keys = KeyRing::from_seed(6, 5);
        // three 3-hop paths: 0-1-4-5, 0-2-4-5, 0-3-4-5; the true one is last
        let truth = path(&t, &[0, 3, 4, 5]);
        let mut p = de_transmit(&t, &keys, &truth, 32, 2, 9).unwrap();
        p.bloom.saturate();
        let ctx = RecoveryContext::learned(&t, 2, 3);
        let r = recover(&p, &keys, &ctx, EmbedMode::De).unwrap();
        assert_eq!(r.outcome, Outcome::FalsePositive);
        assert_eq!(r.paths_checked, 2);

        let ctx = RecoveryContext { beta: 3, ..ctx };
        let r = recover(&p, &keys, &ctx, EmbedMode::De).unwrap();
        assert_eq!(r.outcome, Outcome::Recovered(truth.clone()));
        assert_eq!(r.paths_checked, 3);

        let ctx = RecoveryContext { beta: 2, beta_rule: BetaRule::MismatchesOnly, ..ctx };
        assert_eq!(recover(&p, &keys, &ctx, EmbedMode::De).unwrap().outcome, Outcome::Recovered(truth));

        let ctx = RecoveryContext { beta: 5, chain_mode: ChainMode::NoChain, ..ctx };
        assert_eq!(recover(&p, &keys, &ctx, EmbedMode::De).unwrap().outcome, Outcome::FalsePositive);
    }

    #[test]
    fn full_budget_always_recovers() {
        let t = layered();
        let keys = KeyRing::from_seed(6, 6);
        for truth in t.enumerate_paths(0, 3).unwrap() {
            let mut p = de_transmit(&t, &keys, &truth, 16, 1, 2).unwrap();
            p.bloom.saturate();
            let r = recover(&p, &keys, &RecoveryContext::learned(&t, 3, 3), EmbedMode::De).unwrap();
            assert_eq!(r.outcome, Outcome::Recovered(truth));
        }
    }

    #[test]
    fn complete_graph_candidates_superset_of_learned() {
        let t = layered();
        let keys = KeyRing::from_seed(6, 7);
        let truth = path(&t, &[0, 1, 4, 5]);
        let p = de_transmit(&t, &keys, &truth, 24, 2, 3).unwrap();
        let learned = candidate_paths(&p, &keys, &RecoveryContext::learned(&t, 1, 3), EmbedMode::De, 1000).unwrap();
        let complete = candidate_paths(&p, &keys, &RecoveryContext::complete(6, 5, 1, 3), EmbedMode::De, 1000).unwrap();
        assert!(learned.contains(&truth));
        assert!(learned.iter().all(|c| complete.contains(c)));
    }

    #[test]
    fn dde_recovery_round_trip() {
        let t = Topology::random_sparse(10, 18, 4).unwrap();
        let keys = KeyRing::from_seed(10, 8);
        let paths = t.enumerate_paths(0, 4).unwrap();
        for truth in paths.iter().take(5) {
            let p = dde_transmit(&t, &keys, truth, 64, 3, 11).unwrap();
            let ctx = RecoveryContext::learned(&t, paths.len(), 4);
            let r = recover(&p, &keys, &ctx, EmbedMode::Dde).unwrap();
            assert_eq!(r.outcome, Outcome::Recovered(truth.clone()));
        }
    }

    #[test]
    fn context_must_match_packet() {
        let t = layered();
        let keys = KeyRing::from_seed(6, 9);
        let p = de_transmit(&t, &keys, &path(&t, &[0, 1, 4, 5]), 16, 1, 0).unwrap();
        assert!(recover(&p, &keys, &RecoveryContext::learned(&t, 1, 2), EmbedMode::De).is_err());
        assert!(recover(&p, &keys, &RecoveryContext::learned(&t, 0, 3), EmbedMode::De).is_err());
    }

    #[test]
    fn rank_agrees_with_recover() {
        let t = Topology::random_sparse(12, 26, 8).unwrap();
        let keys = KeyRing::from_seed(12, 10);
        let paths = t.enumerate_paths(0, 4).unwrap();
        for (seq, truth) in paths.iter().enumerate().take(40) {
            for (mode, m, k) in [(EmbedMode::De, 12, 2), (EmbedMode::Dde, 10, 2), (EmbedMode::De, 24, 1)] {
                let p = transmit(mode, &t, &keys, truth, m, k, seq as u32).unwrap();
                for ctx in [RecoveryContext::learned(&t, 1, 4), RecoveryContext::complete(12, 11, 1, 4)] {
                    let rank = rank_candidates(&p, &keys, &ctx, mode, 3).unwrap();
                    for beta in 1..=3 {
                        for rule in [BetaRule::Attempts, BetaRule::MismatchesOnly] {
                            for chain in [ChainMode::Verify, ChainMode::NoChain] {
                                if rule == BetaRule::MismatchesOnly && beta == 3 {
                                    continue;
                                }
                                let c = RecoveryContext { beta, beta_rule: rule, chain_mode: chain, ..ctx.clone() };
                                let r = recover(&p, &keys, &c, mode).unwrap();
                                assert_eq!(r.is_failure(), rank.fails(beta, rule, chain), "{beta} {rule:?} {chain:?}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn packet_golden_bytes() {
        let mut bloom = BloomFilter::new(8, 1).unwrap();
        bloom.set_bit(7).unwrap();
        let p = PayloadPacket { source: 3, seq: 258, hop_counter: 4, bloom, chain: HashChain([0xab; 32]) };
        let bytes = p.to_bytes();
        assert_eq!(&bytes[..15], &[0, 3, 0, 0, 1, 2, 0, 4, 0, 0, 0, 8, 0, 1, 0x01]);
        assert_eq!(bytes.len(), 15 + 32);
        assert_eq!(PayloadPacket::from_bytes(&bytes).unwrap(), p);
        assert!(PayloadPacket::from_bytes(&bytes[..40]).is_err());
    }

    #[test]
    fn directed_identity_counts() {
        let t = Topology::complete(6).unwrap();
        assert_eq!(directed_edges(&t).len(), 2 * 15 - 5);
        assert_eq!(directed_double_edges(&t).len(), 6 * 20 - 2 * 5 * 4);
    }
}
