use proptest::prelude::*;

use scopegnn_core::cost::{
    cost_gat_layer, cost_gcn_layer, cost_sage_layer, hop_expansion, inference_cost, scope_composition, LayerScope,
    Regime, ScopeStats,
};
use scopegnn_core::extract::{extract_batch, ExtractConfig, ExtractMethod};
use scopegnn_core::fixtures;
use scopegnn_core::graph::{Adjacency, GraphBundle};
use scopegnn_core::model::Arch;

/// Per-target mean number of nodes at each exact hop distance.
fn bfs_hop_counts(g: &GraphBundle, targets: &[u32], depth: usize) -> Vec<f64> {
    let mut counts = vec![0.0; depth + 1];
    for &t in targets {
        for d in g.bfs_distances(t as usize) {
            if (d as usize) <= depth {
                counts[d as usize] += 1.0;
            }
        }
    }
    counts.iter().map(|c| c / targets.len() as f64).collect()
}

#[test]
fn hand_formulas() {
    assert_eq!(cost_gcn_layer(0, 0, 4, 8), 0);
    assert_eq!(cost_gcn_layer(10, 5, 4, 8), 200);
    assert_eq!(cost_gcn_layer(1, 1, 1, 1), 2);
    assert_eq!(cost_sage_layer(10, 5, 4, 8), 360);
    assert_eq!(cost_sage_layer(0, 0, 4, 8), 0);
    // Doubling d_out doubles the dense term only.
    assert_eq!(cost_sage_layer(10, 5, 4, 16) - 40, 2 * (360 - 40));
    assert_eq!(cost_gat_layer(10, 12, 4, 8), 624);
    assert_eq!(cost_gat_layer(0, 0, 4, 8), 0);
}

#[test]
fn shadow_hand_example() {
    let stats = ScopeStats::Shadow { n: 200, m: 1000, targets: 1 };
    let r = inference_cost(Arch::Gcn, 3, 256, 5, &stats).unwrap();
    assert_eq!(r.regime, Regime::Shadow);
    assert_eq!(r.total_macs, 3 * (1000 * 256 + 200 * 256 * 256));
    assert_eq!(r.total_macs, r.layers.iter().map(|l| l.macs).sum::<u128>());
    assert!(inference_cost(Arch::Gin, 3, 256, 5, &stats).is_err());
}

#[test]
fn hop_counts_match_bfs() {
    let g = fixtures::figure1();
    let e = hop_expansion(&g, &[0], 2, None, 0).unwrap();
    assert_eq!(e.profile.counts, vec![1.0, 3.0, 4.0]);
    let star = fixtures::star(6);
    assert_eq!(hop_expansion(&star, &[0], 1, None, 0).unwrap().profile.counts, vec![1.0, 6.0]);
    let lonely = GraphBundle::from_edges(3, [(1, 2)]).unwrap();
    let e = hop_expansion(&lonely, &[0], 3, None, 0).unwrap();
    assert_eq!(e.profile.fractions, vec![1.0, 0.0, 0.0, 0.0]);

    let r = fixtures::random_regular(5000, 10, 1);
    let targets: Vec<u32> = (0..50).map(|i| i * 97).collect();
    let e = hop_expansion(&r, &targets, 3, None, 0).unwrap();
    assert_eq!(e.profile.counts, bfs_hop_counts(&r, &targets, 3));
    // Growth is close to (r - 1) per hop before saturation.
    let c = &e.profile.counts;
    assert_eq!(c[1], 10.0);
    assert!(c[2] / c[1] > 8.0 && c[3] / c[2] > 8.0);
    assert!(hop_expansion(&r, &[5000], 2, None, 0).is_err());
}

#[test]
fn composition_over_ppr_scopes() {
    let g = fixtures::karate();
    let targets: Vec<u32> = (0..34).collect();
    let subs = extract_batch(&g, &targets, &ExtractConfig::new(ExtractMethod::ppr(8), 0)).unwrap();
    let p = scope_composition(&g, &subs);
    assert!((p.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(p.counts[0], 1.0);
}

#[test]
fn normal_exceeds_shadow_on_dense_regular_graphs() {
    for degree in [10, 12] {
        let g = fixtures::random_regular(20_000, degree, 3);
        let targets: Vec<u32> = (0..40).map(|i| i * 331).collect();
        let subs = extract_batch(&g, &targets, &ExtractConfig::new(ExtractMethod::ppr(200), 0)).unwrap();
        let shadow = ScopeStats::from_subgraphs(&subs);
        // Recursive minibatch scopes shrink towards the output layer, so at
        // three layers the normal scopes (about 113 node-rows per target at
        // degree 10) are still smaller than three 200-node subgraphs.
        let three = hop_expansion(&g, &targets, 3, None, 0).unwrap().scope;
        let n3 = inference_cost(Arch::Gcn, 3, 64, 4, &three).unwrap();
        assert!(n3.total_macs < inference_cost(Arch::Gcn, 3, 64, 4, &shadow).unwrap().total_macs);
        for depth in [4, 5] {
            let normal = hop_expansion(&g, &targets, depth, None, 0).unwrap().scope;
            for arch in [Arch::Gcn, Arch::Sage, Arch::Gat] {
                let n = inference_cost(arch, depth, 64, 4, &normal).unwrap();
                let s = inference_cost(arch, depth, 64, 4, &shadow).unwrap();
                assert!(n.total_macs >= s.total_macs, "{arch:?} deg {degree} L {depth}");
                assert_eq!(n.head_macs, s.head_macs);
            }
        }
    }
}

#[test]
fn rejects_inconsistent_normal_scopes() {
    let stats = ScopeStats::Normal {
        layers: vec![LayerScope { n_in: 3, n_out: 5, m: 2 }],
        targets: 1,
    };
    assert!(inference_cost(Arch::Gcn, 1, 8, 2, &stats).is_err());
    assert!(inference_cost(Arch::Gcn, 2, 8, 2, &stats).is_err());
}

proptest! {
    #[test]
    fn shadow_cost_is_affine_in_depth(n in 1u64..10_000, m in 0u64..100_000, d in 1u64..512, c in 1u64..50, l in 1usize..12) {
        let stats = ScopeStats::Shadow { n, m, targets: 3 };
        for arch in [Arch::Gcn, Arch::Sage, Arch::Gat] {
            let one = inference_cost(arch, 1, d, c, &stats).unwrap();
            let many = inference_cost(arch, l, d, c, &stats).unwrap();
            prop_assert_eq!(many.total_macs, l as u128 * one.total_macs);
            prop_assert_eq!(many.head_macs, one.head_macs);
            prop_assert_eq!(many.total_macs, many.layers.iter().map(|x| x.macs).sum::<u128>());
        }
    }

    #[test]
    fn formulas_never_overflow(m in 0..=u64::MAX >> 1, n in 0..=u64::MAX >> 1, d in 0..=u64::MAX >> 1) {
        let big = cost_gcn_layer(m, n, d, 1);
        prop_assert_eq!(big, m as u128 * d as u128 + n as u128 * d as u128);
    }
}
