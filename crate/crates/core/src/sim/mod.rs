//! Monte Carlo harness for learning and payload false-positive rates, the
//! impersonation attack, and (in [`delay`]) the analytic timing model.
//!
//! Trials are split into fixed-size chunks, each with its own ChaCha stream
//! derived from the plan seed, so results do not depend on thread count.

pub mod delay;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::BloomFilter;
use crate::identity::{IdentityCache, IdentitySource, KeyRing};
use crate::learning::{mssp_embed_walk, mssp_recover, ssmp_embed, ssmp_recover, surplus_edges, DestinationView, SsmpParams};
use crate::provenance::{rank_candidates, transmit, BetaRule, ChainMode, EmbedMode, RecoveryContext};
use crate::topology::{DirectedPath, Node, Topology};

const CHUNK: u64 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FprEstimate {
    pub errors: u64,
    pub trials: u64,
}

impl FprEstimate {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.errors as f64 / self.trials as f64
        }
    }

    /// Binomial standard error of the empirical rate.
    pub fn stderr(&self) -> f64 {
        Self::stderr_at(self.rate(), self.trials)
    }

    /// Standard error of a rate estimated from `trials` runs when the true
    /// rate is `p`.
    pub fn stderr_at(p: f64, trials: u64) -> f64 {
        if trials == 0 {
            return 0.0;
        }
        (p * (1.0 - p) / trials as f64).sqrt()
    }

    /// Whether `expected` lies within `sigmas` standard errors, using the
    /// standard error implied by `expected` itself.
    pub fn agrees_with(&self, expected: f64, sigmas: f64) -> bool {
        (self.rate() - expected).abs() <= sigmas * Self::stderr_at(expected, self.trials)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathSampling {
    /// A fresh path, uniform over all `h`-hop paths, for every packet.
    Uniform,
    /// One path drawn once from the plan seed.
    Fixed,
}

impl std::str::FromStr for PathSampling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "fixed" => Ok(Self::Fixed),
            _ => Err(Error::Domain(format!("unknown path sampling `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextKind {
    Learned,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadSpec {
    pub mode: EmbedMode,
    pub source: Node,
    pub h: usize,
    pub m: usize,
    pub k: usize,
    pub beta: usize,
    pub context: ContextKind,
    pub sampling: PathSampling,
    pub beta_rule: BetaRule,
    pub chain_mode: ChainMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scheme {
    Ssmp(SsmpParams),
    Mssp { m: usize, k: usize },
    Payload(PayloadSpec),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialPlan {
    pub topology: Topology,
    pub scheme: Scheme,
    pub trials: u64,
    pub seed: u64,
}

/// Keys every plan with this seed uses.
pub fn plan_keys(n: usize, seed: u64) -> KeyRing {
    KeyRing::from_seed(n, seed ^ 0x6b65_7972_696e_6700)
}

fn chunks(trials: u64) -> impl ParallelIterator<Item = (u64, std::ops::Range<u64>)> {
    (0..trials.div_ceil(CHUNK)).into_par_iter().map(move |c| (c, c * CHUNK..((c + 1) * CHUNK).min(trials)))
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn seq_of(trial: u64) -> Result<u32> {
    u32::try_from(trial).map_err(|_| Error::Domain("more trials than sequence numbers".into()))
}

/// Runs every trial of `plan` and counts protocol failures: any surplus
/// edge for learning schemes, a false positive or exhausted search for
/// payload schemes.
pub fn run_trials(plan: &TrialPlan) -> Result<FprEstimate> {
    if plan.trials == 0 {
        return Err(Error::Domain("a plan needs at least one trial".into()));
    }
    let t = &plan.topology;
    let n = t.node_count();
    let keys = plan_keys(n, plan.seed);
    match &plan.scheme {
        Scheme::Ssmp(params) => {
            let ids = IdentityCache::new(&keys, n, false)?;
            let view = DestinationView::of(t);
            count(plan.trials, plan.seed, |trial, _| {
                let seq = seq_of(trial)?;
                let packets = t.embedders().map(|v| ssmp_embed(t, &ids, v, params, seq)).collect::<Result<Vec<_>>>()?;
                let (learned, _) = ssmp_recover(&packets, &ids, params, &view)?;
                Ok(!surplus_edges(t, &learned).is_empty())
            })
        }
        Scheme::Mssp { m, k } => {
            let ids = IdentityCache::new(&keys, n, false)?;
            let view = DestinationView::of(t);
            count(plan.trials, plan.seed, |trial, _| {
                let packet = mssp_embed_walk(t, &ids, *m, *k, seq_of(trial)?)?;
                let (learned, _) = mssp_recover(&packet, &ids, &view)?;
                Ok(!surplus_edges(t, &learned).is_empty())
            })
        }
        Scheme::Payload(spec) => {
            let tallies = run_payload_sweep(t, spec, &[spec.beta], &[spec.context], plan.trials, plan.seed)?;
            Ok(tallies[0].estimate)
        }
    }
}

fn count(trials: u64, seed: u64, run: impl Fn(u64, &mut ChaCha8Rng) -> Result<bool> + Sync) -> Result<FprEstimate> {
    let errors = chunks(trials)
        .map(|(c, range)| {
            let mut rng = chunk_rng(seed, c);
            let mut errors = 0u64;
            for trial in range {
                errors += run(trial, &mut rng)? as u64;
            }
            Ok::<_, Error>(errors)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(FprEstimate { errors, trials })
}

/// Failure count for one `(beta, context)` pair of a payload sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PayloadTally {
    pub beta: usize,
    pub context: ContextKind,
    pub estimate: FprEstimate,
}

/// Runs payload trials once and scores every packet under each `beta` and
/// recovery context, so all combinations see identical packets.
/// `spec.beta` and `spec.context` are ignored.
pub fn run_payload_sweep(
    t: &Topology,
    spec: &PayloadSpec,
    betas: &[usize],
    contexts: &[ContextKind],
    trials: u64,
    seed: u64,
) -> Result<Vec<PayloadTally>> {
    if betas.is_empty() || contexts.is_empty() || betas.contains(&0) {
        return Err(Error::Domain("need at least one context and betas >= 1".into()));
    }
    let paths = t.enumerate_paths(spec.source, spec.h)?;
    if paths.is_empty() {
        return Err(Error::InvalidPath(format!("no {}-hop path from {}", spec.h, spec.source)));
    }
    let fixed = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        paths[rng.random_range(0..paths.len())].clone()
    };
    let n = t.node_count();
    let keys = plan_keys(n, seed);
    let ids = IdentityCache::new(&keys, n, spec.mode == EmbedMode::Dde)?;
    let limit = *betas.iter().max().unwrap() + 1;
    let ctxs: Vec<RecoveryContext> = contexts
        .iter()
        .map(|c| match c {
            ContextKind::Learned => RecoveryContext::learned(t, 1, spec.h),
            ContextKind::Complete => RecoveryContext::complete(n, t.destination(), 1, spec.h),
        })
        .collect();
    let cells = betas.len() * contexts.len();
    let errors = chunks(trials)
        .map(|(c, range)| {
            let mut rng = chunk_rng(seed, c);
            let mut errors = vec![0u64; cells];
            for trial in range {
                let path: &DirectedPath = match spec.sampling {
                    PathSampling::Uniform => &paths[rng.random_range(0..paths.len())],
                    PathSampling::Fixed => &fixed,
                };
                let packet = transmit(spec.mode, t, &ids, path, spec.m, spec.k, seq_of(trial)?)?;
                for (ci, ctx) in ctxs.iter().enumerate() {
                    let rank = rank_candidates(&packet, &ids, ctx, spec.mode, limit)?;
                    for (bi, &beta) in betas.iter().enumerate() {
                        errors[ci * betas.len() + bi] += rank.fails(beta, spec.beta_rule, spec.chain_mode) as u64;
                    }
                }
            }
            Ok::<_, Error>(errors)
        })
        .try_reduce(
            || vec![0u64; cells],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    let mut out = Vec::with_capacity(cells);
    for (ci, &context) in contexts.iter().enumerate() {
        for (bi, &beta) in betas.iter().enumerate() {
            out.push(PayloadTally { beta, context, estimate: FprEstimate { errors: errors[ci * betas.len() + bi], trials } });
        }
    }
    Ok(out)
}

/// Payload run where every packet's budget equals the number of candidate
/// paths of its source, the regime in which recovery cannot fail.
pub fn run_payload_full_budget(t: &Topology, spec: &PayloadSpec, trials: u64, seed: u64) -> Result<FprEstimate> {
    let paths = t.enumerate_paths(spec.source, spec.h)?;
    if paths.is_empty() {
        return Err(Error::InvalidPath(format!("no {}-hop path from {}", spec.h, spec.source)));
    }
    let n = t.node_count();
    let keys = plan_keys(n, seed);
    let ids = IdentityCache::new(&keys, n, spec.mode == EmbedMode::Dde)?;
    let lambda = paths.len();
    let ctx = RecoveryContext::learned(t, lambda, spec.h);
    count(trials, seed, |trial, rng| {
        let path = &paths[rng.random_range(0..paths.len())];
        let packet = transmit(spec.mode, t, &ids, path, spec.m, spec.k, seq_of(trial)?)?;
        let rank = rank_candidates(&packet, &ids, &ctx, spec.mode, lambda)?;
        Ok(rank.fails(lambda, spec.beta_rule, spec.chain_mode))
    })
}

/// Absent edge an attacker tries to forge, and the attacker itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackTarget {
    pub x: Node,
    pub y: Node,
    pub attacker: Node,
}

impl AttackTarget {
    /// Lowest complement pair, attacked by the lowest other embedder.
    pub fn default_for(t: &Topology) -> Result<Self> {
        let &(x, y) = t.complement_edges().first().ok_or_else(|| Error::Domain("no absent edge to forge".into()))?;
        let attacker = t
            .embedders()
            .find(|&v| v != x && v != y)
            .ok_or_else(|| Error::Domain("no node left to act as attacker".into()))?;
        Ok(Self { x, y, attacker })
    }
}

/// Edge-insertion attack on MSSP. Each trial builds the legitimate filter,
/// lets `y` also embed `(y, x)` (it was fooled during neighbour discovery),
/// then the attacker sets `attacker_bits` uniformly random bits. Success
/// means the destination accepts `(x, y)` under mutual reinforcement.
pub fn run_impersonation_attack(
    t: &Topology,
    keys: &KeyRing,
    m: usize,
    k: usize,
    attacker_bits: usize,
    trials: u64,
    seed: u64,
) -> Result<FprEstimate> {
    let target = AttackTarget::default_for(t)?;
    run_attack_on(t, keys, target, m, k, attacker_bits, trials, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn run_attack_on(
    t: &Topology,
    keys: &KeyRing,
    target: AttackTarget,
    m: usize,
    k: usize,
    attacker_bits: usize,
    trials: u64,
    seed: u64,
) -> Result<FprEstimate> {
    if t.has_edge(target.x, target.y) {
        return Err(Error::Domain(format!("edge {}-{} already exists", target.x, target.y)));
    }
    BloomFilter::new(m, k)?;
    let n = t.node_count();
    let ids = IdentityCache::new(keys, n, false)?;
    let forged = ids.edge_id(target.x, target.y)?;
    let fooled = ids.edge_id(target.y, target.x)?;
    count(trials, seed, |trial, rng| {
        let seq = seq_of(trial)?;
        let mut packet = mssp_embed_walk(t, &ids, m, k, seq)?;
        packet.bloom.insert_item(fooled.as_bytes(), seq);
        for _ in 0..attacker_bits {
            packet.bloom.set_bit(rng.random_range(0..m))?;
        }
        Ok(packet.bloom.contains_item(forged.as_bytes(), seq) && packet.bloom.contains_item(fooled.as_bytes(), seq))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{occupancy_distribution, p_edge_recovered};

    fn fixture() -> Topology {
        Topology::random_sparse(8, 14, 3).unwrap()
    }

    #[test]
    fn replay_is_deterministic() {
        let plan = TrialPlan {
            topology: fixture(),
            scheme: Scheme::Ssmp(SsmpParams::uniform(7, 16, 2).unwrap()),
            trials: 3000,
            seed: 5,
        };
        let a = run_trials(&plan).unwrap();
        assert_eq!(a, run_trials(&plan).unwrap());
        assert!(a.errors > 0);
    }

    #[test]
    fn stderr_shrinks_with_trials() {
        let small = FprEstimate { errors: 100, trials: 1000 };
        let large = FprEstimate { errors: 10_000, trials: 100_000 };
        assert!((small.stderr() / large.stderr() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn single_item_false_positive_matches_formula() {
        // gamma items inserted, one fresh item tested
        let (m, k, gamma) = (16, 3, 4);
        let trials = 100_000u64;
        let est = count(trials, 9, |trial, _| {
            let mut bf = BloomFilter::new(m, k)?;
            let seq = trial as u32;
            for j in 0..gamma as u32 {
                bf.insert_item(&j.to_be_bytes(), seq);
            }
            Ok(bf.contains_item(b"absent", seq))
        })
        .unwrap();
        let p = p_edge_recovered(m, k, gamma).unwrap().value();
        assert!(est.agrees_with(p, 3.0), "rate {} vs {}", est.rate(), p);
    }

    #[test]
    fn full_budget_never_fails() {
        let t = Topology::random_sparse(12, 24, 2).unwrap();
        let spec = PayloadSpec {
            mode: EmbedMode::De,
            source: 0,
            h: 4,
            m: 8,
            k: 1,
            beta: 1,
            context: ContextKind::Learned,
            sampling: PathSampling::Uniform,
            beta_rule: BetaRule::Attempts,
            chain_mode: ChainMode::Verify,
        };
        assert_eq!(run_payload_full_budget(&t, &spec, 2000, 1).unwrap().errors, 0);
    }

    #[test]
    fn payload_sweep_matches_single_runs() {
        let t = Topology::random_sparse(12, 24, 2).unwrap();
        let spec = PayloadSpec {
            mode: EmbedMode::De,
            source: 0,
            h: 4,
            m: 12,
            k: 2,
            beta: 2,
            context: ContextKind::Complete,
            sampling: PathSampling::Uniform,
            beta_rule: BetaRule::Attempts,
            chain_mode: ChainMode::Verify,
        };
        let sweep = run_payload_sweep(&t, &spec, &[1, 2, 3], &[ContextKind::Learned, ContextKind::Complete], 1500, 4)
            .unwrap();
        let single = run_trials(&TrialPlan { topology: t, scheme: Scheme::Payload(spec), trials: 1500, seed: 4 }).unwrap();
        let cell = sweep.iter().find(|c| c.beta == 2 && c.context == ContextKind::Complete).unwrap();
        assert_eq!(cell.estimate, single);
        for ctx in [ContextKind::Learned, ContextKind::Complete] {
            let rates: Vec<u64> = sweep.iter().filter(|c| c.context == ctx).map(|c| c.estimate.errors).collect();
            assert!(rates.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn zero_bit_attack_is_plain_false_positive() {
        let t = fixture();
        let keys = plan_keys(8, 1);
        let (m, k) = (32, 2);
        let est = run_impersonation_attack(&t, &keys, m, k, 0, 40_000, 3).unwrap();
        // the fooled node adds one identity to the legitimate load
        let draws = (2 * t.edge_count() - t.degree(t.destination()) + 1) * k;
        let dist = occupancy_distribution(m, draws);
        let p: f64 = dist.iter().enumerate().map(|(j, &ps)| ps * (j as f64 / m as f64).powi(k as i32)).sum();
        assert!(est.agrees_with(p, 3.0), "rate {} vs {}", est.rate(), p);
    }

    #[test]
    fn large_filters_resist_the_attack() {
        let t = fixture();
        let keys = plan_keys(8, 2);
        assert_eq!(run_impersonation_attack(&t, &keys, 4096, 4, 4, 20_000, 1).unwrap().errors, 0);
    }
}
