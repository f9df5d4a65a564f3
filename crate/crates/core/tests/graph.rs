use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use scopegnn_core::fixtures;
use scopegnn_core::graph::{
    induced_subgraph, load_graph, normalize, save_bundle, subgraph_depth, Adjacency, GraphBundle, NormKind, SplitTag,
};

fn arb_graph() -> impl Strategy<Value = GraphBundle> {
    (1usize..24).prop_flat_map(|n| {
        prop::collection::vec((0..n as u32, 0..n as u32), 0..3 * n)
            .prop_map(move |edges| GraphBundle::from_edges(n, edges).unwrap())
    })
}

fn arb_graph_with_set() -> impl Strategy<Value = (GraphBundle, Vec<u32>, u32)> {
    arb_graph().prop_flat_map(|g| {
        let n = g.num_nodes() as u32;
        (Just(g), prop::collection::vec(0..n, 1..12), 0..n).prop_map(|(g, mut set, t)| {
            set.push(t);
            (g, set, t)
        })
    })
}

#[test]
fn two_node_path_csr() {
    let g = GraphBundle::from_edges(2, [(0, 1)]).unwrap();
    assert_eq!(g.indptr(), &[0, 1, 2]);
    assert_eq!(g.indices(), &[1, 0]);
}

#[test]
fn directed_input_is_symmetrised() {
    let g = GraphBundle::from_csr(2, vec![0, 1, 1], vec![1], true).unwrap();
    assert_eq!(g.indices(), &[1, 0]);
    assert_eq!(g.num_edges(), 1);
}

#[test]
fn figure1_is_three_regular() {
    let g = fixtures::figure1();
    assert_eq!(g.num_nodes(), 8);
    assert!((0..8).all(|u| g.degree(u) == 3));
}

#[test]
fn figure1_one_hop_subgraphs() {
    let g = fixtures::figure1();
    let u = induced_subgraph(&g, &[0, 1, 7, 4], 0).unwrap();
    assert_eq!(u.global_edge_set(), vec![(0, 1), (0, 4), (0, 7), (1, 7)]);
    assert_eq!(subgraph_depth(&u), 1);
    let v = induced_subgraph(&g, &[2, 1, 3, 5], 2).unwrap();
    assert_eq!(v.global_edge_set(), vec![(1, 2), (2, 3), (2, 5)]);
}

#[test]
fn singleton_and_path_depth() {
    let g = fixtures::path(5);
    let single = induced_subgraph(&g, &[3], 3).unwrap();
    assert_eq!((single.num_nodes(), single.num_edges(), subgraph_depth(&single)), (1, 0, 0));
    let whole = induced_subgraph(&g, &[0, 1, 2, 3, 4], 0).unwrap();
    assert_eq!(subgraph_depth(&whole), 4);
}

#[test]
fn hand_normalisations() {
    let single = normalize(&fixtures::path(1), NormKind::Sym);
    assert_eq!(single.to_dense()[[0, 0]], 1.0);
    assert_eq!(normalize(&fixtures::path(1), NormKind::Rw).to_dense()[[0, 0]], 1.0);
    for kind in [NormKind::Sym, NormKind::Rw] {
        let t = normalize(&fixtures::triangle(), kind).to_dense();
        assert!(t.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }
    let p = normalize(&fixtures::path(2), NormKind::Sym).to_dense();
    assert!(p.iter().all(|&v| (v - 0.5).abs() < 1e-15));
}

#[test]
fn bundle_round_trip_is_bit_exact() {
    let g = fixtures::sbm(&fixtures::SbmParams::small_test(), 4);
    let dir = tempfile::tempdir().unwrap();
    save_bundle(&g, dir.path()).unwrap();
    let back = load_graph(dir.path()).unwrap();
    assert_eq!(back, g);
    let again = tempfile::tempdir().unwrap();
    save_bundle(&back, again.path()).unwrap();
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            std::fs::read(dir.path().join(&name)).unwrap(),
            std::fs::read(again.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn tsv_loading_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    std::fs::write(p("edges.tsv"), "0\t1\n1\t2\n").unwrap();
    std::fs::write(p("feats.tsv"), "1\t0\n0\t1\n1\t1\n").unwrap();
    std::fs::write(p("labels.tsv"), "0\n1\n0\n").unwrap();
    std::fs::write(p("split.tsv"), "train\nval\ntest\n").unwrap();
    let g = load_graph(dir.path()).unwrap();
    assert_eq!((g.num_nodes(), g.num_edges(), g.feature_dim(), g.num_classes()), (3, 2, 2, 2));
    assert_eq!(g.split_nodes(SplitTag::Test), vec![2]);

    std::fs::write(p("feats.tsv"), "1\t0\n0\t1\n").unwrap();
    assert!(load_graph(dir.path()).is_err());
    std::fs::write(p("feats.tsv"), "1\t0\n0\tNaN\n1\t1\n").unwrap();
    assert!(load_graph(dir.path()).is_err());
    assert!(load_graph(dir.path().join("missing")).is_err());
}

proptest! {
    #[test]
    fn storage_invariants(g in arb_graph()) {
        let ip = g.indptr();
        prop_assert_eq!(ip[g.num_nodes()] as usize, g.indices().len());
        for u in 0..g.num_nodes() {
            let row = g.neighbors(u);
            prop_assert!(row.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(!row.contains(&(u as u32)));
            for &w in row {
                prop_assert!(g.neighbors(w as usize).binary_search(&(u as u32)).is_ok());
            }
        }
    }

    #[test]
    fn induced_subgraph_invariants((g, set, t) in arb_graph_with_set()) {
        let s = induced_subgraph(&g, &set, t).unwrap();
        prop_assert_eq!(s.target_global(), t);
        prop_assert_eq!(s.globals().iter().filter(|&&x| x == t).count(), 1);
        prop_assert!(s.globals().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.bfs_distances(s.target_local()).iter().all(|&d| d != u32::MAX));
        // Edge set equals the induced edges of the parent on the kept nodes.
        let mut expected = Vec::new();
        for &a in s.globals() {
            for &b in g.neighbors(a as usize) {
                if a < b && s.local_of(b).is_some() {
                    expected.push((a, b));
                }
            }
        }
        prop_assert_eq!(s.global_edge_set(), expected);
        // Re-inducing on its own node set reproduces it.
        prop_assert_eq!(induced_subgraph(&g, s.globals(), t).unwrap(), s);
    }

    #[test]
    fn normalisation_invariants((g, set, t) in arb_graph_with_set()) {
        let s = induced_subgraph(&g, &set, t).unwrap();
        let n = s.num_nodes();
        let rw = normalize(&s, NormKind::Rw).to_dense();
        for r in rw.rows() {
            prop_assert!((r.sum() - 1.0).abs() < 1e-9);
        }
        let sym = normalize(&s, NormKind::Sym).to_dense();
        let m = DMatrix::from_fn(n, n, |i, j| sym[[i, j]]);
        prop_assert!((&m - m.transpose()).amax() < 1e-15);
        let eig = SymmetricEigen::new(m);
        let (top, _) = eig.eigenvalues.iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        prop_assert!((eig.eigenvalues[top] - 1.0).abs() < 1e-9);
        prop_assert!(eig.eigenvalues.iter().all(|v| v.abs() <= 1.0 + 1e-9));
        // Leading eigenvector is proportional to sqrt(degree + 1).
        let v = eig.eigenvectors.column(top);
        let sqrt_deg: Vec<f64> = (0..n).map(|u| (s.degree_plus_one(u) as f64).sqrt()).collect();
        let norm = sqrt_deg.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sign = v[0].signum();
        for u in 0..n {
            prop_assert!((sign * v[u] - sqrt_deg[u] / norm).abs() < 1e-8);
        }
    }
}
