//! Parameter selection for the two learning protocols: a single `k` for the
//! shared MSSP filter, and per-node `(m_i, k_i)` for SSMP under a total bit
//! budget.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::analysis::{mssp_fpr, p_edge_recovered, ssmp_bound_from_factors, ssmp_fpr_bound, Prob};
use crate::error::{Error, Result};
use crate::learning::SsmpParams;
use crate::topology::NeighborProfile;

/// Largest number of hash functions any scan considers.
pub const K_MAX: usize = 32;

/// Compositions above this count switch the variable search to the local
/// heuristic.
pub const DEFAULT_COMPOSITION_CAP: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SsmpBudget {
    pub m_sum: usize,
    pub granularity: usize,
    pub min_per_node: usize,
}

impl SsmpBudget {
    pub fn new(m_sum: usize) -> Self {
        Self { m_sum, granularity: 16, min_per_node: 16 }
    }

    pub fn with_granularity(self, granularity: usize) -> Self {
        Self { granularity, ..self }
    }

    pub fn with_min_per_node(self, min_per_node: usize) -> Self {
        Self { min_per_node, ..self }
    }

    fn check(&self, nodes: usize) -> Result<()> {
        if nodes == 0 {
            return Err(Error::InfeasibleBudget("no embedding nodes".into()));
        }
        if self.granularity == 0 {
            return Err(Error::InfeasibleBudget("granularity must be positive".into()));
        }
        if self.m_sum < nodes * self.min_per_node.max(1) {
            return Err(Error::InfeasibleBudget(format!(
                "m_sum {} cannot give {} nodes at least {} bits each",
                self.m_sum,
                nodes,
                self.min_per_node.max(1)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    /// One entry per embedding node (a single entry for MSSP).
    pub m: Vec<usize>,
    pub k: Vec<usize>,
    pub objective: Prob,
    /// Budget bits left unassigned because of rounding to the granularity.
    pub unallocated: usize,
    /// `(k, objective)` pairs visited by a shared-`k` scan.
    pub scan: Vec<(usize, Prob)>,
    /// Whether the variable search covered every composition.
    pub exhaustive: bool,
}

impl Optimum {
    pub fn ssmp_params(&self) -> Result<SsmpParams> {
        SsmpParams::new(self.m.clone(), self.k.clone())
    }
}

/// Scans `k` in `1..=min(m, K_MAX)`; the first strict minimum wins, so ties
/// go to the smaller `k`.
fn scan_k(m: usize, f: impl Fn(usize) -> Result<Prob>) -> Result<(usize, Prob, Vec<(usize, Prob)>)> {
    let mut scan = Vec::new();
    let mut best: Option<(usize, Prob)> = None;
    for k in 1..=m.min(K_MAX) {
        let p = f(k)?;
        scan.push((k, p));
        if best.is_none_or(|(_, b)| p.raw() < b.raw()) {
            best = Some((k, p));
        }
    }
    let (k, p) = best.ok_or(Error::InvalidBloomParams { m, k: 0 })?;
    Ok((k, p, scan))
}

pub fn solve_mssp(profile: &NeighborProfile, n: usize, m: usize) -> Result<Optimum> {
    let (k, objective, scan) = scan_k(m, |k| mssp_fpr(profile, n, m, k))?;
    Ok(Optimum { m: vec![m], k: vec![k], objective, unallocated: 0, scan, exhaustive: true })
}

fn check_profile(profile: &NeighborProfile, n: usize) -> Result<usize> {
    if profile.node_count() != n {
        return Err(Error::Domain(format!("profile describes {} nodes, expected {n}", profile.node_count())));
    }
    Ok(n - 1)
}

/// Equal filter sizes with one shared `k`, minimizing the profile bound.
pub fn solve_ssmp_equal(profile: &NeighborProfile, n: usize, budget: SsmpBudget) -> Result<Optimum> {
    let nodes = check_profile(profile, n)?;
    budget.check(nodes)?;
    let mi = if budget.m_sum.is_multiple_of(nodes) {
        budget.m_sum / nodes
    } else {
        budget.m_sum / nodes / budget.granularity * budget.granularity
    };
    if mi == 0 || mi < budget.min_per_node {
        return Err(Error::InfeasibleBudget(format!("equal share {mi} is below the per-node minimum")));
    }
    let (k, objective, scan) = scan_k(mi, |k| ssmp_fpr_bound(profile, &SsmpParams::uniform(nodes, mi, k)?))?;
    Ok(Optimum {
        m: vec![mi; nodes],
        k: vec![k; nodes],
        objective,
        unallocated: budget.m_sum - mi * nodes,
        scan,
        exhaustive: true,
    })
}

/// Best `k` and the resulting false-positive factor of one node for every
/// filter size `units * granularity (+ extra)`.
struct NodeTable {
    /// Indexed by unit count.
    best: Vec<Option<(usize, f64)>>,
}

impl NodeTable {
    fn build(gamma: usize, max_units: usize, granularity: usize, extra: usize) -> Result<Self> {
        let mut best = vec![None; max_units + 1];
        for (u, slot) in best.iter_mut().enumerate().skip(1) {
            let m = u * granularity + extra;
            let (k, p, _) = scan_k(m, |k| p_edge_recovered(m, k, gamma))?;
            *slot = Some((k, p.raw()));
        }
        Ok(Self { best })
    }
}

struct Search<'a> {
    profile: &'a NeighborProfile,
    tables: Vec<NodeTable>,
    min_units: usize,
}

impl Search<'_> {
    fn objective(&self, units: &[usize]) -> f64 {
        let f: Vec<f64> = units.iter().zip(&self.tables).map(|(&u, t)| t.best[u].unwrap().1).collect();
        ssmp_bound_from_factors(self.profile, &f)
    }

    /// Lowest objective, ties to the lexicographically smallest allocation.
    fn better(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> Ordering {
        a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1))
    }

    fn exhaustive(&self, total_units: usize) -> (f64, Vec<usize>) {
        let nodes = self.tables.len();
        if nodes == 1 {
            return (self.objective(&[total_units]), vec![total_units]);
        }
        let first_max = total_units - (nodes - 1) * self.min_units;
        (self.min_units..=first_max)
            .into_par_iter()
            .map(|first| {
                let mut units = vec![0; nodes];
                units[0] = first;
                let mut best = (f64::INFINITY, Vec::new());
                self.fill(&mut units, 1, total_units - first, &mut best);
                best
            })
            .reduce(|| (f64::INFINITY, Vec::new()), |a, b| if Self::better(&b, &a).is_lt() { b } else { a })
    }

    fn fill(&self, units: &mut [usize], idx: usize, left: usize, best: &mut (f64, Vec<usize>)) {
        let nodes = units.len();
        if idx == nodes - 1 {
            units[idx] = left;
            let cand = (self.objective(units), units.to_vec());
            if best.1.is_empty() || Self::better(&cand, best).is_lt() {
                *best = cand;
            }
            return;
        }
        let reserve = (nodes - idx - 1) * self.min_units;
        for u in self.min_units..=left - reserve {
            units[idx] = u;
            self.fill(units, idx + 1, left - u, best);
        }
    }

    /// Largest-remainder split proportional to `gamma`, then steepest
    /// single-unit transfers until none improves.
    fn local(&self, total_units: usize) -> (f64, Vec<usize>) {
        let nodes = self.tables.len();
        let free = total_units - nodes * self.min_units;
        let weight: usize = self.profile.gamma.iter().sum::<usize>().max(1);
        let shares: Vec<f64> = self.profile.gamma.iter().map(|&g| free as f64 * g as f64 / weight as f64).collect();
        let mut units: Vec<usize> = shares.iter().map(|s| self.min_units + s.floor() as usize).collect();
        let mut order: Vec<usize> = (0..nodes).collect();
        order.sort_by(|&a, &b| (shares[b] - shares[b].floor()).total_cmp(&(shares[a] - shares[a].floor())).then(a.cmp(&b)));
        let mut missing = total_units - units.iter().sum::<usize>();
        for &i in order.iter().cycle() {
            if missing == 0 {
                break;
            }
            units[i] += 1;
            missing -= 1;
        }
        let mut best = (self.objective(&units), units);
        loop {
            let mut step: Option<(f64, Vec<usize>)> = None;
            for from in 0..nodes {
                if best.1[from] == self.min_units {
                    continue;
                }
                for to in (0..nodes).filter(|&to| to != from) {
                    let mut cand = best.1.clone();
                    cand[from] -= 1;
                    cand[to] += 1;
                    let c = (self.objective(&cand), cand);
                    if step.as_ref().is_none_or(|s| Self::better(&c, s).is_lt()) {
                        step = Some(c);
                    }
                }
            }
            match step {
                Some(s) if s.0 < best.0 => best = s,
                _ => return best,
            }
        }
    }
}

fn composition_count(free: usize, parts: usize) -> u128 {
    // C(free + parts - 1, parts - 1)
    let (n, r) = ((free + parts - 1) as u128, (parts - 1) as u128);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Per-node sizes and hash counts minimizing the profile bound. Each
/// node's `k` minimizes its own factor, which the bound is monotone in.
pub fn solve_ssmp_variable(profile: &NeighborProfile, n: usize, budget: SsmpBudget) -> Result<Optimum> {
    solve_ssmp_variable_capped(profile, n, budget, DEFAULT_COMPOSITION_CAP)
}

pub fn solve_ssmp_variable_capped(
    profile: &NeighborProfile,
    n: usize,
    budget: SsmpBudget,
    cap: u128,
) -> Result<Optimum> {
    let nodes = check_profile(profile, n)?;
    budget.check(nodes)?;
    let g = budget.granularity;
    let total_units = budget.m_sum / g;
    let remainder = budget.m_sum % g;
    let min_units = budget.min_per_node.div_ceil(g).max(1);
    if total_units < nodes * min_units {
        return Err(Error::InfeasibleBudget(format!(
            "{total_units} units of {g} bits cannot cover {nodes} nodes at {min_units} units each"
        )));
    }
    // leftover bits below one unit go to the busiest node
    let heavy = (0..nodes).max_by(|&a, &b| profile.gamma[a].cmp(&profile.gamma[b]).then(b.cmp(&a))).unwrap();
    let max_units = total_units - (nodes - 1) * min_units;
    let tables = (0..nodes)
        .map(|i| NodeTable::build(profile.gamma[i], max_units, g, if i == heavy { remainder } else { 0 }))
        .collect::<Result<Vec<_>>>()?;
    let search = Search { profile, tables, min_units };
    let exhaustive = composition_count(total_units - nodes * min_units, nodes) <= cap;
    let (_, units) = if exhaustive { search.exhaustive(total_units) } else { search.local(total_units) };

    let m: Vec<usize> = units.iter().enumerate().map(|(i, &u)| u * g + if i == heavy { remainder } else { 0 }).collect();
    let k: Vec<usize> = units.iter().zip(&search.tables).map(|(&u, t)| t.best[u].unwrap().0).collect();
    let params = SsmpParams::new(m.clone(), k.clone())?;
    debug_assert_eq!(params.m_sum(), budget.m_sum);
    // re-evaluate through the public path so the reported value is never stale
    let objective = ssmp_fpr_bound(profile, &params)?;
    Ok(Optimum { m, k, objective, unallocated: 0, scan: Vec::new(), exhaustive })
}
