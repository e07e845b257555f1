use proptest::prelude::*;

use topoprov::analysis::{
    complement_count, mssp_fpr, mssp_fpr_double_sum, occupancy_distribution, p_edge_recovered, ssmp_fpr_bound,
    ssmp_fpr_exact,
};
use topoprov::filter::BloomFilter;
use topoprov::identity::{IdentityCache, KeyRing};
use topoprov::learning::{
    mssp_embed_walk, mssp_recover, ssmp_embed, ssmp_recover, surplus_edges, DestinationView, SsmpParams,
};
use topoprov::provenance::{candidate_paths, transmit, EmbedMode, PayloadPacket, RecoveryContext};
use topoprov::topology::{NeighborProfile, Topology};

fn topology() -> impl Strategy<Value = Topology> {
    (3usize..12, any::<u64>(), 0.0f64..1.0).prop_map(|(n, seed, density)| {
        let max = n * (n - 1) / 2;
        let e = n - 1 + ((max - (n - 1)) as f64 * density) as usize;
        Topology::random_sparse(n, e, seed).unwrap()
    })
}

fn sparse_topology() -> impl Strategy<Value = Topology> {
    (6usize..12, any::<u64>(), 0usize..8).prop_map(|(n, seed, extra)| {
        let max = n * (n - 1) / 2;
        Topology::random_sparse(n, (n - 1 + extra).min(max), seed).unwrap()
    })
}

/// Sparse graphs of the size the protocols target: average degree at most
/// three.
fn field_topology() -> impl Strategy<Value = Topology> {
    (8usize..24, any::<u64>(), 0.0f64..1.0).prop_map(|(n, seed, density)| {
        let e = n - 1 + (n as f64 / 2.0 * density) as usize;
        Topology::random_sparse(n, e, seed).unwrap()
    })
}

#[test]
fn profile_bound_undercounts_destination_neighbours() {
    // two leaves hanging off the destination: one complement pair, but the
    // formula grants each leaf 3 - 1 - 2 = 0 partners
    let t = Topology::new(3, 2, [(0, 2), (1, 2)]).unwrap();
    let params = SsmpParams::uniform(2, 16, 2).unwrap();
    assert!(ssmp_fpr_exact(&t, &params).unwrap().raw() > 0.0);
    assert_eq!(ssmp_fpr_bound(&t.neighbor_profile(), &params).unwrap().raw(), 0.0);
}

#[test]
fn bound_dominates_exact_on_profile_realizations() {
    let profile = NeighborProfile::new(vec![5, 3, 4, 1, 4, 2, 4], 5);
    for seed in 0..500 {
        let t = Topology::realize_profile(&profile, seed).unwrap();
        for m in [24, 32, 40] {
            for k in 1..=16 {
                let params = SsmpParams::uniform(7, m, k).unwrap();
                let exact = ssmp_fpr_exact(&t, &params).unwrap().raw();
                assert!(ssmp_fpr_bound(&profile, &params).unwrap().raw() >= exact, "seed {seed} m {m} k {k}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bloom_has_no_false_negatives(
        items in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..40), 1..60),
        m in 1usize..256,
        k_frac in 0.0f64..1.0,
        seq in any::<u32>(),
    ) {
        let k = 1 + ((m.min(16) - 1) as f64 * k_frac) as usize;
        let mut f = BloomFilter::new(m, k).unwrap();
        for it in &items {
            f.insert_item(it, seq);
        }
        for it in &items {
            prop_assert!(f.contains_item(it, seq));
        }
        let (back, used) = BloomFilter::from_bytes(&f.to_bytes()).unwrap();
        prop_assert_eq!(used, f.to_bytes().len());
        prop_assert_eq!(back, f);
    }

    #[test]
    fn occupancy_is_a_distribution(m in 1usize..96, draws in 0usize..400) {
        let d = occupancy_distribution(m, draws);
        let total: f64 = d.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "sum {}", total);
        prop_assert!(d.iter().all(|&p| (0.0..=1.0 + 1e-15).contains(&p)));
        // no more set bits than draws
        prop_assert!(d.iter().skip(draws + 1).all(|&p| p == 0.0));
    }

    #[test]
    fn edge_recovery_grows_with_load(m in 4usize..64, k_frac in 0.0f64..1.0, g in 1usize..12) {
        let k = 1 + ((m.min(12) - 1) as f64 * k_frac) as usize;
        let a = p_edge_recovered(m, k, g).unwrap().raw();
        let b = p_edge_recovered(m, k, g + 1).unwrap().raw();
        prop_assert!(b >= a - 1e-15);
    }

    // The profile bound charges each node n - gamma - 2 partners, one fewer
    // than it really has when it neighbours the destination; on dense graphs
    // that undercount can outweigh the double counting of pairs (see
    // `profile_bound_undercounts_destination_neighbours`).
    #[test]
    fn ssmp_bound_dominates_exact_on_sparse_graphs(t in field_topology(), m in 8usize..64, k_frac in 0.0f64..1.0) {
        let k = 1 + ((m.min(12) - 1) as f64 * k_frac) as usize;
        let params = SsmpParams::uniform(t.node_count() - 1, m, k).unwrap();
        let exact = ssmp_fpr_exact(&t, &params).unwrap().raw();
        let bound = ssmp_fpr_bound(&t.neighbor_profile(), &params).unwrap().raw();
        prop_assert!(bound >= exact - 1e-15, "bound {} < exact {}", bound, exact);
    }

    #[test]
    fn complement_count_matches_enumeration(t in topology()) {
        let (embedded, comp) = complement_count(&t.neighbor_profile(), t.node_count()).unwrap();
        prop_assert_eq!(comp, t.complement_edges().len());
        let direct: usize = t.embedders().map(|v| t.degree(v)).sum();
        prop_assert_eq!(embedded, direct);
    }

    #[test]
    fn mssp_forms_agree(t in topology(), m in 8usize..96, k_frac in 0.0f64..1.0) {
        let k = 1 + ((m.min(10) - 1) as f64 * k_frac) as usize;
        let p = t.neighbor_profile();
        let a = mssp_fpr(&p, t.node_count(), m, k).unwrap().raw();
        let b = mssp_fpr_double_sum(&p, t.node_count(), m, k).unwrap().raw();
        prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn learning_never_loses_true_edges(t in topology(), seed in any::<u64>(), seq in any::<u32>(), m in 4usize..40) {
        let n = t.node_count();
        let keys = KeyRing::from_seed(n, seed);
        let ids = IdentityCache::new(&keys, n, false).unwrap();
        let view = DestinationView::of(&t);
        let params = SsmpParams::uniform(n - 1, m, 2.min(m)).unwrap();
        let packets: Vec<_> = t.embedders().map(|v| ssmp_embed(&t, &ids, v, &params, seq).unwrap()).collect();
        let (learned, adj) = ssmp_recover(&packets, &ids, &params, &view).unwrap();
        prop_assert!(adj.is_symmetric());
        for (u, v) in t.edges() {
            prop_assert!(learned.has_edge(u, v));
        }
        prop_assert_eq!(learned.edge_count(), t.edge_count() + surplus_edges(&t, &learned).len());

        let packet = mssp_embed_walk(&t, &ids, 4 * m, 3, seq).unwrap();
        prop_assert!(packet.visited.iter().enumerate().all(|(v, &seen)| seen || v == t.destination()));
        let (learned, _) = mssp_recover(&packet, &ids, &view).unwrap();
        for (u, v) in t.edges() {
            prop_assert!(learned.has_edge(u, v));
        }
    }

    #[test]
    fn edge_list_round_trips(t in topology()) {
        prop_assert_eq!(Topology::parse_edge_list(&t.to_edge_list()).unwrap(), t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn learned_candidates_subset_of_complete(
        t in sparse_topology(),
        seed in any::<u64>(),
        seq in any::<u32>(),
        m in 6usize..24,
        k in 1usize..4,
        dde in any::<bool>(),
        pick in any::<prop::sample::Index>(),
    ) {
        let mode = if dde { EmbedMode::Dde } else { EmbedMode::De };
        let n = t.node_count();
        let h = 4;
        let all: Vec<_> = t.embedders().flat_map(|v| t.enumerate_paths(v, h).unwrap()).collect();
        prop_assume!(!all.is_empty());
        let path = pick.get(&all);
        let keys = KeyRing::from_seed(n, seed);
        let ids = IdentityCache::new(&keys, n, dde).unwrap();
        let packet = transmit(mode, &t, &ids, path, m, k.min(m), seq).unwrap();
        prop_assert_eq!(PayloadPacket::from_bytes(&packet.to_bytes()).unwrap(), packet.clone());

        let learned = candidate_paths(&packet, &ids, &RecoveryContext::learned(&t, 1, h), mode, 1_000_000).unwrap();
        let complete =
            candidate_paths(&packet, &ids, &RecoveryContext::complete(n, t.destination(), 1, h), mode, 1_000_000).unwrap();
        prop_assert!(learned.contains(path));
        for p in &learned {
            prop_assert!(complete.contains(p));
        }
    }
}
