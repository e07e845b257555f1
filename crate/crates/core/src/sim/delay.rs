//! Analytic timing model for both learning protocols and payload recovery.

use crate::error::{Error, Result};
use crate::learning::{embedder_slot, mssp_walk, ssmp_route_schedule, SsmpParams};
use crate::provenance::{directed_double_edges, directed_edges, EmbedMode};
use crate::sim::ContextKind;
use crate::topology::{Node, Topology};
use crate::analysis::complete_like;

/// Per-operation durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayParams {
    /// One hash at a node.
    pub t_h_n: f64,
    /// One hash at the destination.
    pub t_h_r: f64,
    /// Queueing at a node.
    pub t_q_n: f64,
    /// Queueing at the destination.
    pub t_q_r: f64,
    /// One hop of propagation.
    pub t_pr: f64,
}

impl DelayParams {
    /// Hardware timings used for the published delay figures.
    pub fn reference() -> Self {
        Self { t_h_n: 42e-6, t_h_r: 10e-6, t_q_n: 70e-6, t_q_r: 70e-6, t_pr: 0.5e-3 }
    }

    pub fn zero() -> Self {
        Self { t_h_n: 0.0, t_h_r: 0.0, t_q_n: 0.0, t_q_r: 0.0, t_pr: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.t_h_n, self.t_h_r, self.t_q_n, self.t_q_r, self.t_pr];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("delay parameters must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            t_h_n: self.t_h_n * factor,
            t_h_r: self.t_h_r * factor,
            t_q_n: self.t_q_n * factor,
            t_q_r: self.t_q_r * factor,
            t_pr: self.t_pr * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTiming {
    pub node: Node,
    pub embed: f64,
    pub transit: f64,
    pub rsu_start: f64,
    pub rsu_done: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsmpDelay {
    pub nodes: Vec<NodeTiming>,
    /// Longest embedding time over nodes.
    pub node_processing: f64,
    /// Longest transit time over nodes.
    pub propagation: f64,
    /// Busy time of the destination.
    pub rsu_processing: f64,
    /// Pairwise comparisons of the reinforcement pass (not charged in time).
    pub reinforcement_comparisons: usize,
    /// Completion time of the last verification.
    pub total: f64,
}

/// SSMP schedule: every node embeds and forwards in parallel; the
/// destination verifies packets one at a time in arrival order.
pub fn delay_ssmp(t: &Topology, params: &SsmpParams, d: &DelayParams) -> Result<SsmpDelay> {
    d.validate()?;
    let n = t.node_count();
    if params.len() + 1 != n {
        return Err(Error::Domain("parameter vectors do not match node count".into()));
    }
    let hops = ssmp_route_schedule(t)?;
    let mut nodes: Vec<NodeTiming> = t
        .embedders()
        .map(|v| {
            let s = embedder_slot(t.destination(), v);
            let embed = d.t_h_n * (params.k[s] * t.degree(v)) as f64;
            let transit = hops[s] as f64 * (d.t_q_n + d.t_pr);
            NodeTiming { node: v, embed, transit, rsu_start: 0.0, rsu_done: 0.0 }
        })
        .collect();
    nodes.sort_by(|a, b| (a.embed + a.transit).total_cmp(&(b.embed + b.transit)).then(a.node.cmp(&b.node)));
    let mut free_at = 0.0f64;
    let mut busy = 0.0;
    for nt in &mut nodes {
        let s = embedder_slot(t.destination(), nt.node);
        let service = d.t_q_r + d.t_h_r * (n * params.k[s]) as f64;
        nt.rsu_start = free_at.max(nt.embed + nt.transit);
        nt.rsu_done = nt.rsu_start + service;
        free_at = nt.rsu_done;
        busy += service;
    }
    nodes.sort_by_key(|nt| nt.node);
    Ok(SsmpDelay {
        node_processing: nodes.iter().map(|x| x.embed).fold(0.0, f64::max),
        propagation: nodes.iter().map(|x| x.transit).fold(0.0, f64::max),
        rsu_processing: busy,
        reinforcement_comparisons: n * (n - 1) / 2,
        total: free_at,
        nodes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsspDelay {
    /// Edge traversals of the single packet.
    pub h_max: usize,
    pub node_processing: f64,
    pub propagation: f64,
    pub rsu_processing: f64,
    pub total: f64,
}

/// MSSP: embedding, walk and verification happen strictly in sequence.
pub fn delay_mssp(t: &Topology, k: usize, d: &DelayParams) -> Result<MsspDelay> {
    d.validate()?;
    let n = t.node_count();
    let h_max = mssp_walk(t)?.len() - 1;
    let degree_sum: usize = t.embedders().map(|v| t.degree(v)).sum();
    let node_processing = d.t_h_n * (k * degree_sum) as f64;
    let propagation = h_max as f64 * d.t_pr;
    let rsu_processing = d.t_h_r * (n * (n - 1) * k) as f64;
    Ok(MsspDelay { h_max, node_processing, propagation, rsu_processing, total: node_processing + propagation + rsu_processing })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayloadDelay {
    pub transmit: f64,
    /// Membership hashes the destination may compute.
    pub recovery_hashes: usize,
    pub recover: f64,
    pub total: f64,
}

/// Payload timing. Recovery charges one membership test of `k` hashes per
/// identity a relay could have embedded, plus up to `beta` chain
/// recomputations.
pub fn delay_payload(
    mode: EmbedMode,
    h: usize,
    k: usize,
    beta: usize,
    context: ContextKind,
    t: &Topology,
    d: &DelayParams,
) -> Result<PayloadDelay> {
    d.validate()?;
    if beta == 0 {
        return Err(Error::Domain("beta must be at least 1".into()));
    }
    if h == 0 || (mode == EmbedMode::Dde && h < 2) {
        return Err(Error::Domain(format!("hop count {h} too small for {mode:?}")));
    }
    let embeds = mode.embeddings(h);
    let transmit = embeds as f64 * ((k + 1) as f64 * d.t_h_n + d.t_pr);
    let graph = match context {
        ContextKind::Learned => t.clone(),
        ContextKind::Complete => complete_like(t),
    };
    let identities = match mode {
        EmbedMode::De => directed_edges(&graph).len(),
        EmbedMode::Dde => directed_double_edges(&graph).len(),
    };
    let recovery_hashes = identities * k;
    let recover = recovery_hashes as f64 * d.t_h_r + (beta * embeds) as f64 * d.t_h_r;
    Ok(PayloadDelay { transmit, recovery_hashes, recover, total: transmit + recover })
}
