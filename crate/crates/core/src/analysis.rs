//! Closed-form false-positive expressions for topology learning and payload
//! recovery, plus the combinatorial helpers they are built from.
//!
//! Counting quantities (binomials, surjections, powers) are computed exactly
//! with big integers and only the final ratios are converted to `f64`.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::learning::{embedder_slot, SsmpParams};
use crate::provenance::EmbedMode;
use crate::topology::{DirectedPath, NeighborProfile, Node, Topology};

/// Default ceiling on the number of path combinations enumerated for the
/// payload bound.
pub const DEFAULT_COMBINATION_CAP: u128 = 1_000_000;

/// A probability with its raw value kept around, so that bounds above one
/// and numerical overshoot stay visible.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Prob {
    raw: f64,
}

impl Prob {
    pub fn new(raw: f64) -> Self {
        Self { raw }
    }

    pub fn zero() -> Self {
        Self { raw: 0.0 }
    }

    /// Value clamped into `[0, 1]`.
    pub fn value(&self) -> f64 {
        self.raw.clamp(0.0, 1.0)
    }

    /// Unclamped value. Union bounds may exceed one.
    pub fn raw(&self) -> f64 {
        self.raw
    }

    /// Amount by which the raw value left `[0, 1]`.
    pub fn excess(&self) -> f64 {
        if self.raw > 1.0 {
            self.raw - 1.0
        } else if self.raw < 0.0 {
            -self.raw
        } else {
            0.0
        }
    }
}

impl std::fmt::Display for Prob {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:e}", self.raw)
    }
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// Stirling number of the second kind `S(k, n)`: partitions of `k` labelled
/// items into `n` non-empty blocks.
pub fn stirling2(k: usize, n: usize) -> BigUint {
    surjections(k, n) / factorial(n)
}

/// Onto maps from `k` draws to `n` labelled cells, by inclusion–exclusion.
fn surjections(k: usize, n: usize) -> BigUint {
    let mut acc = BigInt::zero();
    for i in 0..=n {
        let term = BigInt::from(binomial(n, i)) * BigInt::from(BigUint::from(n - i).pow(k as u32));
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc.to_biguint().expect("surjection count is non-negative")
}

/// `num / den` as the nearest `f64`, including ratios far below `f64`'s
/// normal range (they round toward zero).
fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = 64 - (num.bits() as i64 - den.bits() as i64);
    let q = if shift >= 0 { (num << shift as u64) / den } else { num / (den << (-shift) as u64) };
    let q = q.to_f64().expect("quotient fits in f64");
    // split the scaling so an intermediate power of two cannot underflow early
    let half = shift / 2;
    q * 2f64.powi(-half as i32) * 2f64.powi(-(shift - half) as i32)
}

/// Distribution of the number of set bits after `draws` uniform index draws
/// into `m` bits; entry `i` is `P(S_i)`.
fn occupancy_exact(m: usize, draws: usize) -> Vec<f64> {
    let mut out = vec![0.0; m + 1];
    if draws == 0 {
        out[0] = 1.0;
        return out;
    }
    let top = m.min(draws);
    let pow: Vec<BigUint> = (0..=top).map(|x| BigUint::from(x).pow(draws as u32)).collect();
    let den = BigUint::from(m).pow(draws as u32);
    for i in 1..=top {
        // surj(draws, i) = sum_j (-1)^j C(i, j) (i - j)^draws
        let mut pos = BigUint::zero();
        let mut neg = BigUint::zero();
        let mut c = BigUint::one();
        for j in 0..=i {
            let term = &c * &pow[i - j];
            if j % 2 == 0 {
                pos += term;
            } else {
                neg += term;
            }
            c = c * (i - j) / (j + 1);
        }
        let num = binomial(m, i) * (pos - neg);
        out[i] = ratio_to_f64(&num, &den);
    }
    out
}

type OccupancyCache = Mutex<HashMap<(usize, usize), Arc<Vec<f64>>>>;

/// Memoized [`P(S_i)`](p_set_bits) for every `i in 0..=m`.
pub fn occupancy_distribution(m: usize, draws: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<OccupancyCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&(m, draws)) {
        return hit.clone();
    }
    let dist = Arc::new(occupancy_exact(m, draws));
    cache.lock().unwrap().insert((m, draws), dist.clone());
    dist
}

/// Probability that exactly `i` of `m` bits are set after `inserted` draws.
pub fn p_set_bits(i: usize, m: usize, inserted: usize) -> Result<Prob> {
    if i == 0 || i > m.min(inserted) {
        return Err(Error::Domain(format!("need 1 <= i <= min(m, inserted), got i={i}, m={m}, inserted={inserted}")));
    }
    Ok(Prob::new(occupancy_distribution(m, inserted)[i]))
}

fn check_bloom(m: usize, k: usize) -> Result<()> {
    if m == 0 || k == 0 || k > m {
        return Err(Error::InvalidBloomParams { m, k });
    }
    Ok(())
}

/// Chance that a never-inserted item tests positive in an `(m, k)` filter
/// holding `gamma` items.
pub fn p_edge_recovered(m: usize, k: usize, gamma: usize) -> Result<Prob> {
    check_bloom(m, k)?;
    if gamma == 0 {
        return Ok(Prob::zero());
    }
    let dist = occupancy_distribution(m, gamma * k);
    let p = dist.iter().enumerate().skip(1).map(|(i, &ps)| (i as f64 / m as f64).powi(k as i32) * ps).sum();
    Ok(Prob::new(p))
}

fn ssmp_factors(gamma: &[usize], params: &SsmpParams) -> Result<Vec<f64>> {
    if gamma.len() != params.len() {
        return Err(Error::Domain(format!("profile has {} nodes, parameters {}", gamma.len(), params.len())));
    }
    gamma
        .iter()
        .zip(params.m.iter().zip(&params.k))
        .map(|(&g, (&m, &k))| p_edge_recovered(m, k, g).map(|p| p.raw()))
        .collect()
}

/// Exact SSMP false-positive probability under per-pair independence.
pub fn ssmp_fpr_exact(t: &Topology, params: &SsmpParams) -> Result<Prob> {
    let f = ssmp_factors(&t.neighbor_profile().gamma, params)?;
    let d = t.destination();
    let f_of = |v: Node| f[embedder_slot(d, v)];
    let survive: f64 = t.complement_edges().iter().map(|&(a, b)| 1.0 - f_of(a) * f_of(b)).product();
    Ok(Prob::new(1.0 - survive))
}

/// Topology-free upper bound built from the neighbour profile alone.
pub fn ssmp_fpr_bound(profile: &NeighborProfile, params: &SsmpParams) -> Result<Prob> {
    let f = ssmp_factors(&profile.gamma, params)?;
    Ok(Prob::new(ssmp_bound_from_factors(profile, &f)))
}

pub(crate) fn ssmp_bound_from_factors(profile: &NeighborProfile, f: &[f64]) -> f64 {
    let n = profile.node_count();
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
    let mut total = 0.0;
    for (x, &g) in profile.gamma.iter().enumerate() {
        let partners = n.saturating_sub(g + 2);
        total += order.iter().rev().filter(|&&y| y != x).take(partners).map(|&y| f[x] * f[y]).sum::<f64>();
    }
    total
}

/// Directed edges embedded during MSSP (`2|E| - gamma_rsu`) and the size of
/// the complement edge set, both from the profile alone.
pub fn complement_count(profile: &NeighborProfile, n: usize) -> Result<(usize, usize)> {
    if profile.node_count() != n {
        return Err(Error::Domain(format!("profile describes {} nodes, expected {n}", profile.node_count())));
    }
    let sum = profile.degree_sum();
    if sum % 2 == 1 {
        return Err(Error::Parity(sum));
    }
    let pairs = n * (n - 1) / 2;
    let complement = (pairs + profile.gamma_rsu + 1)
        .checked_sub(sum / 2 + n)
        .ok_or_else(|| Error::Domain("profile has more edges than node pairs".into()))?;
    Ok((sum - profile.gamma_rsu, complement))
}

fn mssp_inputs(profile: &NeighborProfile, n: usize, m: usize, k: usize) -> Result<(Arc<Vec<f64>>, usize)> {
    check_bloom(m, k)?;
    let (embedded, complement) = complement_count(profile, n)?;
    Ok((occupancy_distribution(m, embedded * k), complement))
}

/// MSSP false-positive probability.
pub fn mssp_fpr(profile: &NeighborProfile, n: usize, m: usize, k: usize) -> Result<Prob> {
    let (dist, complement) = mssp_inputs(profile, n, m, k)?;
    if complement == 0 {
        return Ok(Prob::zero());
    }
    let c = complement as f64;
    let p = dist
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &ps)| {
            let delta = (j as f64 / m as f64).powi(2 * k as i32);
            let hit = if delta >= 1.0 { 1.0 } else { -(c * (-delta).ln_1p()).exp_m1() };
            ps * hit
        })
        .sum();
    Ok(Prob::new(p))
}

/// The same quantity as [`mssp_fpr`] summed term by term over the number of
/// complement pairs that misfire.
pub fn mssp_fpr_double_sum(profile: &NeighborProfile, n: usize, m: usize, k: usize) -> Result<Prob> {
    let (dist, complement) = mssp_inputs(profile, n, m, k)?;
    let binoms: Vec<f64> = (0..=complement).map(|i| binomial(complement, i).to_f64().unwrap()).collect();
    let mut total = 0.0;
    for (j, &ps) in dist.iter().enumerate().skip(1) {
        let delta = (j as f64 / m as f64).powi(2 * k as i32);
        let inner: f64 = (1..=complement)
            .map(|i| binoms[i] * delta.powi(i as i32) * (1.0 - delta).powi((complement - i) as i32))
            .sum();
        total += ps * inner;
    }
    Ok(Prob::new(total))
}

/// Lower bound on the success rate of an attacker who sets `k` random bits
/// in an MSSP filter to forge an absent edge.
pub fn impersonation_success_bound(n: usize, m: usize, k: usize, profile: &NeighborProfile) -> Result<Prob> {
    check_bloom(m, k)?;
    let (embedded, _) = complement_count(profile, n)?;
    if embedded == 0 {
        return Err(Error::Domain("network embeds no edges".into()));
    }
    let dist = occupancy_distribution(m, embedded * k);
    let den = BigUint::from(m).pow(2 * k as u32);
    let mut total = 0.0;
    for (i, &pc) in dist.iter().enumerate().skip(1) {
        if pc == 0.0 {
            continue;
        }
        let mut num = BigUint::zero();
        for j in 0..=k.min(m - i) {
            let matched = binomial(k, j) * factorial(j) * BigUint::from(i).pow((k - j) as u32);
            num += binomial(m - i, j) * &matched * &matched;
        }
        total += pc * ratio_to_f64(&num, &den);
    }
    Ok(Prob::new(total))
}

/// Identities a path contributes to a payload filter.
pub fn path_items(mode: EmbedMode, nodes: &[Node]) -> Vec<(Node, Node, Node)> {
    match mode {
        EmbedMode::De => nodes.windows(2).map(|w| (w[0], w[1], usize::MAX)).collect(),
        EmbedMode::Dde => {
            (1..nodes.len().saturating_sub(1)).step_by(2).map(|c| (nodes[c - 1], nodes[c], nodes[c + 1])).collect()
        }
    }
}

/// Distribution of `|E_i|` (items outside the true path covered by a
/// `beta`-subset of alternative paths), over all such subsets. The payload
/// bound at any `(m, k)` is a weighted sum over this histogram, so sweeps
/// over `k` reuse it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnionHistogram {
    pub mode: EmbedMode,
    pub h: usize,
    /// `counts[s]` = number of subsets whose union holds `s` items.
    pub counts: Vec<u64>,
}

impl UnionHistogram {
    pub fn combinations(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bound value for an `(m, k)` filter.
    pub fn bound(&self, m: usize, k: usize) -> Result<Prob> {
        let theta = self.mode.embeddings(self.h);
        let p = p_edge_recovered(m, k, theta)?.raw();
        Ok(Prob::new(self.counts.iter().enumerate().map(|(s, &c)| c as f64 * p.powi(s as i32)).sum()))
    }
}

/// Builds the [`UnionHistogram`] for one true path among `paths` (all
/// `h`-hop candidates).
pub fn union_histogram(
    paths: &[DirectedPath],
    actual: &DirectedPath,
    beta: usize,
    mode: EmbedMode,
    cap: u128,
) -> Result<UnionHistogram> {
    if beta == 0 {
        return Err(Error::Domain("beta must be at least 1".into()));
    }
    let h = actual.hops();
    if !paths.contains(actual) {
        return Err(Error::InvalidPath("actual path is not among the candidates".into()));
    }
    let alternatives: Vec<&DirectedPath> = paths.iter().filter(|p| *p != actual).collect();
    let needed = binomial(alternatives.len(), beta).to_u128().unwrap_or(u128::MAX);
    if needed > cap {
        return Err(Error::CapExceeded { what: "path combinations", needed, cap });
    }
    let on_actual: BTreeSet<_> = path_items(mode, actual.nodes()).into_iter().collect();
    let mut index = HashMap::new();
    let sets: Vec<Vec<usize>> = alternatives
        .iter()
        .map(|p| {
            path_items(mode, p.nodes())
                .into_iter()
                .filter(|it| !on_actual.contains(it))
                .map(|it| {
                    let next = index.len();
                    *index.entry(it).or_insert(next)
                })
                .collect()
        })
        .collect();
    let words = index.len().div_ceil(64).max(1);
    let bitsets: Vec<Vec<u64>> = sets
        .iter()
        .map(|s| {
            let mut b = vec![0u64; words];
            for &i in s {
                b[i / 64] |= 1 << (i % 64);
            }
            b
        })
        .collect();
    let mut counts = vec![0u64; index.len() + 1];
    let mut acc = vec![vec![0u64; words]; beta + 1];
    combine(&bitsets, beta, 0, 0, &mut acc, &mut counts);
    while counts.len() > 1 && *counts.last().unwrap() == 0 {
        counts.pop();
    }
    Ok(UnionHistogram { mode, h, counts })
}

fn combine(sets: &[Vec<u64>], beta: usize, depth: usize, start: usize, acc: &mut [Vec<u64>], counts: &mut [u64]) {
    if depth == beta {
        let size: u32 = acc[depth].iter().map(|w| w.count_ones()).sum();
        counts[size as usize] += 1;
        return;
    }
    for i in start..=sets.len().saturating_sub(beta - depth) {
        if i >= sets.len() {
            break;
        }
        let (lo, hi) = acc.split_at_mut(depth + 1);
        for (dst, (a, b)) in hi[0].iter_mut().zip(lo[depth].iter().zip(&sets[i])) {
            *dst = a | b;
        }
        combine(sets, beta, depth + 1, i + 1, acc, counts);
    }
}

/// Upper bound on the payload recovery failure probability for one true
/// path.
#[allow(clippy::too_many_arguments)]
pub fn de_dde_fpr_bound(
    t: &Topology,
    source: Node,
    h: usize,
    m: usize,
    k: usize,
    beta: usize,
    mode: EmbedMode,
    actual: &DirectedPath,
) -> Result<Prob> {
    let paths = t.enumerate_paths(source, h)?;
    union_histogram(&paths, actual, beta, mode, DEFAULT_COMBINATION_CAP)?.bound(m, k)
}

/// Payload bound averaged over a uniformly chosen true path of `t`, with
/// alternatives drawn from `candidates` (the learned graph or the complete
/// graph on the same nodes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AveragedPayloadBound {
    histograms: Vec<UnionHistogram>,
}

impl AveragedPayloadBound {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        t: &Topology,
        candidates: &Topology,
        source: Node,
        h: usize,
        beta: usize,
        mode: EmbedMode,
        cap: u128,
    ) -> Result<Self> {
        let actual = t.enumerate_paths(source, h)?;
        if actual.is_empty() {
            return Err(Error::InvalidPath(format!("no {h}-hop path from {source}")));
        }
        let pool = candidates.enumerate_paths(source, h)?;
        let alternatives = pool.len().saturating_sub(1);
        let needed = binomial(alternatives, beta).to_u128().unwrap_or(u128::MAX);
        if needed > cap {
            return Err(Error::CapExceeded { what: "path combinations", needed, cap });
        }
        let histograms = actual.iter().map(|a| union_histogram(&pool, a, beta, mode, cap)).collect::<Result<_>>()?;
        Ok(Self { histograms })
    }

    pub fn bound(&self, m: usize, k: usize) -> Result<Prob> {
        let mut sum = 0.0;
        for h in &self.histograms {
            sum += h.bound(m, k)?.raw();
        }
        Ok(Prob::new(sum / self.histograms.len() as f64))
    }
}

/// Same graph with an edge between every pair, keeping the destination.
pub fn complete_like(t: &Topology) -> Topology {
    let n = t.node_count();
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Topology::new(n, t.destination(), edges).expect("complete graph is connected")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn stirling_examples() {
        assert_eq!(stirling2(5, 1), BigUint::one());
        assert_eq!(stirling2(3, 3), BigUint::one());
        assert_eq!(stirling2(4, 2), BigUint::from(7u32));
        assert_eq!(stirling2(0, 0), BigUint::one());
        assert_eq!(stirling2(3, 4), BigUint::zero());
    }

    #[test]
    fn set_bit_examples() {
        assert_eq!(p_set_bits(1, 7, 1).unwrap().value(), 1.0);
        assert_eq!(p_set_bits(1, 2, 2).unwrap().value(), 0.5);
        assert_eq!(p_set_bits(2, 2, 2).unwrap().value(), 0.5);
        assert!(p_set_bits(0, 2, 2).is_err());
        assert!(p_set_bits(3, 2, 2).is_err());
        assert!(p_set_bits(2, 4, 1).is_err());
    }

    #[test]
    fn tiny_probabilities_survive_conversion() {
        // all 600 draws in one bit of 224
        let p = occupancy_distribution(224, 600)[1];
        let expected = (224f64.ln() * (1.0 - 600.0)).exp() * 224.0;
        assert!(p == 0.0 || close(p / expected, 1.0, 1e-9));
        let r = ratio_to_f64(&BigUint::from(3u32), &(BigUint::one() << 1000u32));
        assert!(close(r / (3.0 * 2f64.powi(-1000)), 1.0, 1e-12));
    }

    #[test]
    fn edge_recovery_examples() {
        assert_eq!(p_edge_recovered(2, 1, 1).unwrap().value(), 0.5);
        assert_eq!(p_edge_recovered(16, 3, 0).unwrap().value(), 0.0);
        assert!(p_edge_recovered(2, 3, 1).is_err());
    }

    #[test]
    fn proposition_one_examples() {
        let p = NeighborProfile::new(vec![2, 1, 1], 2);
        assert_eq!(complement_count(&p, 4).unwrap(), (4, 2));
        let star = NeighborProfile::new(vec![1; 4], 4);
        assert_eq!(complement_count(&star, 5).unwrap().1, 6);
        let complete = Topology::complete(6).unwrap().neighbor_profile();
        assert_eq!(complement_count(&complete, 6).unwrap().1, 0);
        assert!(matches!(complement_count(&NeighborProfile::new(vec![2, 1, 1], 1), 4), Err(Error::Parity(5))));
    }

    #[test]
    fn mssp_empty_complement_is_zero() {
        let p = Topology::complete(5).unwrap().neighbor_profile();
        assert_eq!(mssp_fpr(&p, 5, 64, 3).unwrap().value(), 0.0);
        assert_eq!(mssp_fpr_double_sum(&p, 5, 64, 3).unwrap().value(), 0.0);
    }

    #[test]
    fn ssmp_single_complement_edge() {
        // path 0-1-2 plus dest 3 attached to 2: complement {(0,2)}
        let t = Topology::new(4, 3, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let params = SsmpParams::uniform(3, 16, 2).unwrap();
        let exact = ssmp_fpr_exact(&t, &params).unwrap().value();
        let f0 = p_edge_recovered(16, 2, 1).unwrap().value();
        let f2 = p_edge_recovered(16, 2, 2).unwrap().value();
        assert!(close(exact, f0 * f2, 1e-15));
        assert_eq!(ssmp_fpr_exact(&Topology::complete(5).unwrap(), &SsmpParams::uniform(4, 8, 1).unwrap()).unwrap().value(), 0.0);
    }

    #[test]
    fn ssmp_bound_zero_when_fully_connected() {
        let profile = Topology::complete(5).unwrap().neighbor_profile();
        let params = SsmpParams::uniform(4, 16, 3).unwrap();
        assert_eq!(ssmp_fpr_bound(&profile, &params).unwrap().raw(), 0.0);
    }

    #[test]
    fn impersonation_bound_positive_and_shrinking() {
        let t = Topology::random_sparse(8, 14, 1).unwrap();
        let p = t.neighbor_profile();
        let mut last = f64::INFINITY;
        for m in [16, 32, 64, 128, 256, 512] {
            let b = impersonation_success_bound(8, m, 4, &p).unwrap().value();
            assert!(b > 0.0 && b < last, "m={m} b={b}");
            last = b;
        }
    }

    #[test]
    fn payload_bound_examples() {
        // a unique 2-hop path has no alternatives
        let t = Topology::new(3, 2, [(0, 1), (1, 2)]).unwrap();
        let only = DirectedPath::new(&t, vec![0, 1, 2]).unwrap();
        assert_eq!(de_dde_fpr_bound(&t, 0, 2, 16, 2, 1, EmbedMode::De, &only).unwrap().value(), 0.0);

        // two disjoint 2-hop routes: the alternative contributes p^2
        let t = Topology::new(4, 3, [(0, 1), (1, 3), (0, 2), (2, 3)]).unwrap();
        let actual = DirectedPath::new(&t, vec![0, 1, 3]).unwrap();
        let b = de_dde_fpr_bound(&t, 0, 2, 16, 2, 1, EmbedMode::De, &actual).unwrap().value();
        let p = p_edge_recovered(16, 2, 2).unwrap().value();
        assert!(close(b, p * p, 1e-15));
        let d = de_dde_fpr_bound(&t, 0, 2, 16, 2, 1, EmbedMode::Dde, &actual).unwrap().value();
        assert!(close(d, p_edge_recovered(16, 2, 1).unwrap().value(), 1e-15));
    }

    #[test]
    fn histogram_counts_every_subset() {
        let t = Topology::random_sparse(12, 30, 3).unwrap();
        let paths = t.enumerate_paths(0, 4).unwrap();
        assert!(paths.len() > 5);
        for beta in 1..=3 {
            let h = union_histogram(&paths, &paths[2], beta, EmbedMode::De, DEFAULT_COMBINATION_CAP).unwrap();
            assert_eq!(h.combinations() as u128, binomial(paths.len() - 1, beta).to_u128().unwrap());
        }
        let err = union_histogram(&paths, &paths[0], 3, EmbedMode::De, 2).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }
}
