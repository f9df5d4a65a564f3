use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use scopegnn_core::extract::{extract_batch, ExtractConfig, ExtractMethod};
use scopegnn_core::fixtures;
use scopegnn_core::graph::{induced_subgraph, Adjacency, GraphBundle, Subgraph};
use scopegnn_core::theory::{
    lambda2_abs, limit_aggregation, limit_vectors, markov_error, power_limit, scope_distinctness, sgc_sweep,
    shadow_wl, target_function, wl_refine, LogisticConfig, PhiMode,
};

fn arb_graph() -> impl Strategy<Value = GraphBundle> {
    (1usize..16).prop_flat_map(|n| {
        prop::collection::vec((0..n as u32, 0..n as u32), 0..3 * n)
            .prop_map(move |edges| GraphBundle::from_edges(n, edges).unwrap())
    })
}

fn component(g: &GraphBundle, t: u32) -> Subgraph {
    Subgraph::full_graph(g, t).unwrap()
}

/// Same partition of `0..n`, regardless of the ids used.
fn same_partition(a: &[u32], b: &[u32]) -> bool {
    let n = a.len();
    (0..n).all(|i| (0..n).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

fn relabel(g: &GraphBundle, perm: &[u32]) -> GraphBundle {
    let mut edges = Vec::new();
    for u in 0..g.num_nodes() {
        for &w in g.neighbors(u) {
            edges.push((perm[u], perm[w as usize]));
        }
    }
    GraphBundle::from_edges(g.num_nodes(), edges).unwrap()
}

#[test]
fn hand_limits() {
    let x = Array2::from_shape_vec((3, 1), vec![1.0, 2.0, 6.0]).unwrap();
    let tri = component(&fixtures::triangle(), 0);
    assert!((limit_aggregation(&tri, &x).limit_m[0] - 3.0).abs() < 1e-12);
    assert!((target_function(&tri, &x)[0] - 3.0).abs() < 1e-12);
    assert!((power_limit(&tri, &x, 50)[0] - 3.0).abs() < 1e-10);
    assert_eq!(power_limit(&tri, &x, 0)[0], 1.0);
    let pair = component(&fixtures::path(2), 0);
    let x2 = Array2::from_shape_vec((2, 1), vec![1.0, 3.0]).unwrap();
    assert!((power_limit(&pair, &x2, 1)[0] - 2.0).abs() < 1e-15);
    assert!((target_function(&pair, &x2)[0] - 2.0).abs() < 1e-15);
    assert_eq!(markov_error(&tri, 1), 0.0);
    let single = component(&fixtures::path(1), 0);
    assert_eq!(markov_error(&single, 7), 0.0);
    assert_eq!(lambda2_abs(&single), 0.0);
}

#[test]
fn distinct_node_sets_give_distinct_limits() {
    let g = fixtures::path(7);
    let cfg = ExtractConfig::new(ExtractMethod::khop(1, None), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for phi in [PhiMode::Identity, PhiMode::InvSqrtDegree] {
        let r = scope_distinctness(&g, &cfg, &mut rng, phi, 100, 3, 1e-9).unwrap();
        assert_eq!((r.collisions, r.min_distinct), (0, 7));
    }
}

#[test]
fn regular_full_scope_carries_only_degree() {
    let g = fixtures::two_component_2regular();
    let subs: Vec<Subgraph> = (0..3).map(|t| component(&g, t)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = Array2::from_shape_simple_fn((g.num_nodes(), 2), || rng.sample(StandardNormal));
    let v = limit_vectors(&subs, &x, PhiMode::Identity);
    assert!(v.iter().all(|r| r.iter().zip(&v[0]).all(|(a, b)| (a - b).abs() < 1e-12)));
}

#[test]
fn shadow_wl_separates_what_global_wl_cannot() {
    let g = fixtures::figure1();
    let cfg = ExtractConfig::new(ExtractMethod::khop(1, None), 0);
    assert_eq!(wl_refine(&g, None, 50).num_classes(), 1);
    let labels = shadow_wl(&g, &cfg, 2).unwrap();
    assert_ne!(labels[0], labels[2]);
    let k4 = fixtures::complete(4);
    let labels = shadow_wl(&k4, &cfg, 3).unwrap();
    assert!(labels.iter().all(|&c| c == labels[0]));
}

#[test]
fn sgc_without_propagation_matches() {
    let g = fixtures::sbm(&fixtures::SbmParams::small_test(), 1);
    let cfg = LogisticConfig {
        epochs: 10,
        restarts: 1,
        ..LogisticConfig::default()
    };
    let rows = sgc_sweep(&g, &ExtractConfig::new(ExtractMethod::ppr(8), 0), &[0], &cfg).unwrap();
    assert_eq!(rows[0].full_acc, rows[0].shadow_acc);
}

#[test]
fn karate_ppr_scopes_never_collide() {
    let g = fixtures::karate();
    let cfg = ExtractConfig::new(ExtractMethod::ppr(16), 0);
    let subs = extract_batch(&g, &(0..34).collect::<Vec<_>>(), &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = Array2::from_shape_simple_fn((34, 3), || rng.sample(StandardNormal));
    let v = limit_vectors(&subs, &x, PhiMode::InvSqrtDegree);
    for i in 0..34 {
        for j in i + 1..34 {
            if subs[i].globals() != subs[j].globals() {
                let d: f64 = v[i].iter().zip(&v[j]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(d > 1e-9, "{i} vs {j}");
            }
        }
    }
}

proptest! {
    #[test]
    fn profile_invariants_and_power_bound(g in arb_graph(), t in 0usize..16, l in 0usize..60, seed in 0u64..100) {
        let s = component(&g, (t % g.num_nodes()) as u32);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_simple_fn((s.num_nodes(), 2), || rng.sample(StandardNormal));
        let p = limit_aggregation(&s, &x);
        prop_assert!((p.e_vec.dot(&p.e_vec) - 1.0).abs() < 1e-9);
        prop_assert!((p.delta_hat.sum() - 1.0).abs() < 1e-12);
        let lam = lambda2_abs(&s);
        prop_assert!(lam < 1.0);
        let approx = power_limit(&s, &x, l);
        for c in 0..2 {
            let norm = x.column(c).dot(&x.column(c)).sqrt();
            prop_assert!((approx[c] - p.limit_m[c]).abs() <= lam.powi(l as i32) * norm + 1e-10);
        }
    }

    #[test]
    fn wl_is_permutation_equivariant(g in arb_graph(), seed in 0u64..1000) {
        let n = g.num_nodes();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<u32> = (0..n as u32).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let a = wl_refine(&g, None, 20).colors;
        let b = wl_refine(&relabel(&g, &perm), None, 20).colors;
        let pulled: Vec<u32> = (0..n).map(|u| b[perm[u] as usize]).collect();
        prop_assert!(same_partition(&a, &pulled));
    }

    #[test]
    fn shadow_wl_refines_global_wl(g in arb_graph(), rounds in 1usize..4) {
        let global = wl_refine(&g, None, rounds).colors;
        let local = shadow_wl(&g, &ExtractConfig::new(ExtractMethod::khop(rounds, None), 0), rounds).unwrap();
        for u in 0..g.num_nodes() {
            for v in 0..g.num_nodes() {
                if global[u] != global[v] {
                    prop_assert_ne!(local[u], local[v], "{} vs {}", u, v);
                }
            }
        }
    }

    #[test]
    fn removing_a_node_changes_the_limit(g in arb_graph(), seed in 0u64..100) {
        // Pairwise-distinct node sets along a path of nested balls.
        let s = component(&g, 0);
        prop_assume!(s.num_nodes() >= 2);
        let far = *s.globals().iter().max_by_key(|&&u| s.bfs_distances(s.target_local())[s.local_of(u).unwrap()]).unwrap();
        let keep: Vec<u32> = s.globals().iter().copied().filter(|&u| u != far).collect();
        let t = induced_subgraph(&g, &keep, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_simple_fn((g.num_nodes(), 2), || rng.sample(StandardNormal));
        let v = limit_vectors(&[s, t], &x, PhiMode::Identity);
        prop_assert!(v[0].iter().zip(&v[1]).any(|(a, b)| (a - b).abs() > 1e-9));
    }
}
