//! Acceptance battery: one line per criterion, non-zero exit if any fails.
//!
//! Oracles here are independent of the library code paths where practical:
//! dense matrix powers built straight from the adjacency lists, eigenvalues
//! from a dense solver, and finite differences computed locally.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use scopegnn_core::cost::{
    cost_gat_layer, cost_gcn_layer, cost_sage_layer, hop_expansion, inference_cost, ScopeStats,
};
use scopegnn_core::extract::{extract_batch, ExtractConfig, ExtractMethod};
use scopegnn_core::fixtures::{self, sbm, SbmParams};
use scopegnn_core::model::{
    cross_entropy, evaluate, loss_and_grad, model_forward, train, Activation, Arch, BranchInput, ModelConfig,
    ParamSet, TrainConfig,
};
use scopegnn_core::theory::{
    limit_aggregation, markov_curve, power_limit, scope_distinctness, sgc_sweep, shadow_wl, wl_refine,
    LogisticConfig, PhiMode,
};
use scopegnn_core::{GraphBundle, SplitTag, Subgraph};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// Dense `D^{-1/2}(A+I)D^{-1/2}` or `D^{-1}(A+I)` built from the local CSR.
fn dense_operator(s: &Subgraph, sym: bool) -> DMatrix<f64> {
    let n = s.num_nodes();
    let mut a = DMatrix::<f64>::identity(n, n);
    for u in 0..n {
        for &w in &s.indices()[s.indptr()[u] as usize..s.indptr()[u + 1] as usize] {
            a[(u, w as usize)] = 1.0;
        }
    }
    let deg: Vec<f64> = (0..n).map(|u| a.row(u).sum()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        if sym {
            a[(i, j)] / (deg[i] * deg[j]).sqrt()
        } else {
            a[(i, j)] / deg[i]
        }
    })
}

fn second_eigen_magnitude(s: &Subgraph) -> f64 {
    let mut ev: Vec<f64> = SymmetricEigen::new(dense_operator(s, true)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev[1..].iter().map(|v| v.abs()).fold(0.0, f64::max)
}

fn full(g: &GraphBundle, t: u32) -> Subgraph {
    Subgraph::full_graph(g, t).unwrap()
}

fn criterion_1() -> Outcome {
    let mut subs = vec![
        full(&fixtures::triangle(), 0),
        full(&fixtures::star(3), 0),
        full(&fixtures::star(3), 2),
        full(&fixtures::path(5), 0),
        full(&fixtures::path(5), 2),
    ];
    let karate = fixtures::karate();
    let targets: Vec<u32> = (0..34).collect();
    subs.extend(extract_batch(&karate, &targets, &ExtractConfig::new(ExtractMethod::ppr(16), 0)).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_lib: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for s in &subs {
        assert!(s.num_nodes() <= 64);
        let x = gaussian(s.num_nodes(), 3, &mut rng);
        let m = limit_aggregation(s, &x).limit_m;
        let p = power_limit(s, &x, 200);
        worst_lib = worst_lib.max((&p - &m).iter().fold(0.0, |a, v| a.max(v.abs())));
        // Closed form from degrees against a dense 200-th power.
        let a = dense_operator(s, true);
        let mut pow = DMatrix::<f64>::identity(s.num_nodes(), s.num_nodes());
        for _ in 0..200 {
            pow = &pow * &a;
        }
        let deg: Vec<f64> = (0..s.num_nodes()).map(|u| s.degree_plus_one(u) as f64).collect();
        let total: f64 = deg.iter().sum();
        let e: Vec<f64> = deg.iter().map(|d| (d / total).sqrt()).collect();
        let t = s.target_local();
        for c in 0..x.ncols() {
            let closed: f64 = e[t] * (0..s.num_nodes()).map(|u| e[u] * x[[u, c]]).sum::<f64>();
            let dense: f64 = (0..s.num_nodes()).map(|u| pow[(t, u)] * x[[u, c]]).sum();
            worst_oracle = worst_oracle.max((closed - m[c]).abs()).max((dense - closed).abs());
        }
    }
    outcome(
        worst_lib <= 1e-8 && worst_oracle <= 1e-8,
        format!(
            "{} subgraphs, max |power_limit(200) - m| = {worst_lib:.2e}, oracle gap {worst_oracle:.2e}",
            subs.len()
        ),
    )
}

fn criterion_2() -> Outcome {
    let ppr16 = ExtractConfig::new(ExtractMethod::ppr(16), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, g) in [("karate", fixtures::karate()), ("sbm500", sbm(&SbmParams::medium(), 3))] {
        assert_eq!(g.num_nodes(), if name == "karate" { 34 } else { 500 });
        for phi in [PhiMode::Identity, PhiMode::InvSqrtDegree] {
            let r = scope_distinctness(&g, &ppr16, &mut rng, phi, 100, 4, 1e-9).unwrap();
            ok &= r.collisions == 0;
            parts.push(format!("{name}/{phi:?} collisions {}", r.collisions));
        }
    }
    let g = fixtures::figure1();
    let whole = ExtractConfig::new(ExtractMethod::khop(8, None), 0);
    let r = scope_distinctness(&g, &whole, &mut rng, PhiMode::Identity, 100, 4, 1e-9).unwrap();
    ok &= r.max_pair_distance <= 1e-12 && r.min_distinct == 1;
    parts.push(format!("figure1 full-scope spread {:.1e}", r.max_pair_distance));
    for (name, g) in [("karate", fixtures::karate()), ("sbm500", sbm(&SbmParams::medium(), 3))] {
        let capped = ExtractConfig::new(ExtractMethod::ppr(8), 0);
        let r = scope_distinctness(&g, &capped, &mut rng, PhiMode::Identity, 20, 4, 1e-9).unwrap();
        let bound = g.num_nodes().div_ceil(8);
        ok &= r.min_distinct >= bound;
        parts.push(format!("{name} cap-8 distinct {} >= {bound}", r.min_distinct));
    }
    outcome(ok, parts.join(", "))
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, s) in [
        ("path4", full(&fixtures::path(4), 0)),
        ("path8", full(&fixtures::path(8), 0)),
        ("star4", full(&fixtures::star(3), 1)),
        ("star8", full(&fixtures::star(7), 1)),
    ] {
        let lib = markov_curve(&s, 40);
        // Dense oracle: row of P^L against the degree distribution.
        let p = dense_operator(&s, false);
        let n = s.num_nodes();
        let deg: Vec<f64> = (0..n).map(|u| s.degree_plus_one(u) as f64).collect();
        let total: f64 = deg.iter().sum();
        let mut row = DMatrix::<f64>::zeros(1, n);
        row[(0, s.target_local())] = 1.0;
        let mut oracle = Vec::new();
        for _ in 0..=40 {
            oracle.push((0..n).map(|u| (row[(0, u)] - deg[u] / total).abs()).sum::<f64>());
            row = &row * &p;
        }
        let gap = lib.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // Least squares on ln(error) over L' in [5, 40].
        let xs: Vec<f64> = (5..=40).map(|l| l as f64).collect();
        let ys: Vec<f64> = lib[5..=40].iter().map(|e| e.ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let slope = sxy / sxx;
        let r2 = sxy * sxy / (sxx * syy);
        let bound = second_eigen_magnitude(&s).ln() + 0.05;
        ok &= slope <= bound && r2 >= 0.98 && gap < 1e-12;
        parts.push(format!("{name} slope {slope:.3}<={bound:.3} R2 {r2:.4}"));
    }
    outcome(ok, parts.join(", "))
}

fn criterion_4() -> Outcome {
    let one_hop = ExtractConfig::new(ExtractMethod::khop(1, None), 0);
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, g, u, v) in [
        ("figure1", fixtures::figure1(), 0, 2),
        ("2-regular", fixtures::two_component_2regular(), 0, 6),
    ] {
        let global = wl_refine(&g, None, 100);
        let single = global.colors.iter().all(|&c| c == 0);
        let labels = shadow_wl(&g, &one_hop, 2).unwrap();
        ok &= single && labels[u] != labels[v];
        parts.push(format!(
            "{name}: global classes {}, subgraph labels {} vs {}",
            global.num_classes(),
            labels[u],
            labels[v]
        ));
    }
    outcome(ok, parts.join(", "))
}

fn total_loss(batch: &[Vec<BranchInput<f64>>], labels: &[u32], cfg: &ModelConfig, params: &ParamSet<f64>) -> f64 {
    let mut sum = 0.0;
    for (inputs, &y) in batch.iter().zip(labels) {
        let (logits, _) = model_forward(inputs, cfg, params, None).unwrap();
        sum += cross_entropy(&logits, y as usize).0;
    }
    sum / labels.len() as f64
}

fn central_differences(
    batch: &[Vec<BranchInput<f64>>],
    labels: &[u32],
    cfg: &ModelConfig,
    params: &mut ParamSet<f64>,
    h: f64,
) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for ti in 0..params.tensors().len() {
        let mut tensor = Vec::new();
        for k in 0..params.tensors()[ti].len() {
            let orig = params.tensors()[ti].as_slice().unwrap()[k];
            params.tensors_mut()[ti].as_slice_mut().unwrap()[k] = orig + h;
            let plus = total_loss(batch, labels, cfg, params);
            params.tensors_mut()[ti].as_slice_mut().unwrap()[k] = orig - h;
            let minus = total_loss(batch, labels, cfg, params);
            params.tensors_mut()[ti].as_slice_mut().unwrap()[k] = orig;
            tensor.push((plus - minus) / (2.0 * h));
        }
        out.push(tensor);
    }
    out
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest `||a - n|| / max(||a||, ||n||)` over parameter tensors.
fn tensor_rel_error(analytic: &[Vec<f64>], numeric: &[Vec<f64>]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| {
            let diff = norm(a.iter().zip(n).map(|(x, y)| x - y));
            diff / norm(a.iter().copied()).max(norm(n.iter().copied())).max(1e-12)
        })
        .fold(0.0, f64::max)
}

fn entry_rel_error(analytic: &[Vec<f64>], numeric: &[Vec<f64>]) -> f64 {
    analytic
        .iter()
        .flatten()
        .zip(numeric.iter().flatten())
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-7))
        .fold(0.0, f64::max)
}

fn criterion_5() -> Outcome {
    let g = GraphBundle::from_edges(5, [(0u32, 1u32), (1, 2), (2, 0), (2, 3), (3, 4)]).unwrap();
    let subs: Vec<Subgraph> = (0..5).map(|t| full(&g, t)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let x = gaussian(5, 8, &mut rng);
    let xs: Vec<Array2<f64>> = subs.iter().map(|s| s.gather_rows(&x)).collect();
    let batch: Vec<Vec<BranchInput<f64>>> = subs.iter().zip(&xs).map(|(s, x)| vec![BranchInput::new(s, x)]).collect();
    let labels = [1, 0, 1, 2, 0];
    let mut ok = true;
    let mut parts = Vec::new();
    for arch in [Arch::Gcn, Arch::Sage, Arch::Gin] {
        let mut cfg = ModelConfig::new(arch, 8, 3, 2, 8);
        cfg.activation = Activation::Elu;
        let mut params = ParamSet::<f64>::init(&cfg, 5);
        let tapes: Vec<_> = batch.iter().map(|b| model_forward(b, &cfg, &params, None).unwrap().1).collect();
        let (_, grads) = loss_and_grad(&tapes, &labels, &cfg, &params).unwrap();
        let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.iter().copied().collect()).collect();
        let coarse = central_differences(&batch, &labels, &cfg, &mut params, 1e-3);
        let fine = central_differences(&batch, &labels, &cfg, &mut params, 1e-4);
        let per_tensor = tensor_rel_error(&analytic, &coarse);
        // Per-entry error at h=1e-3 is dominated by O(h^2) truncation on
        // near-zero entries; a tenfold smaller step must shrink it a hundredfold.
        let (entry_coarse, entry_fine) = (entry_rel_error(&analytic, &coarse), entry_rel_error(&analytic, &fine));
        ok &= per_tensor <= 1e-4 && entry_fine <= 1e-4;
        parts.push(format!(
            "{arch:?}: tensor rel {per_tensor:.1e}, entry rel {entry_coarse:.1e} (h=1e-3) / {entry_fine:.1e} (h=1e-4)"
        ));
    }
    outcome(ok, parts.join(", "))
}

fn criterion_6() -> Outcome {
    let hand = cost_gcn_layer(0, 0, 4, 8) == 0
        && cost_gcn_layer(10, 5, 4, 8) == 200
        && cost_gcn_layer(1, 1, 1, 1) == 2
        && cost_sage_layer(10, 5, 4, 8) == 360
        && cost_gat_layer(10, 12, 4, 8) == 624;
    let stats = ScopeStats::Shadow {
        n: 200,
        m: 1000,
        targets: 1,
    };
    let mut affine = true;
    for arch in [Arch::Gcn, Arch::Sage, Arch::Gat] {
        let c = |l| inference_cost(arch, l, 256, 7, &stats).unwrap();
        affine &= c(6).total_macs == 2 * c(3).total_macs && c(3).head_macs == c(6).head_macs;
    }
    affine &= inference_cost(Arch::Gcn, 3, 256, 2, &stats).unwrap().total_macs == 3 * (1000 * 256 + 200 * 256 * 256);

    let g = fixtures::random_regular(100_000, 10, 6);
    let targets: Vec<u32> = (0..200u32).map(|i| i * 499 + 7).collect();
    let normal = hop_expansion(&g, &targets, 5, None, 0).unwrap();
    let subs = extract_batch(&g, &targets, &ExtractConfig::new(ExtractMethod::ppr(200), 0)).unwrap();
    let sizes_ok = subs.iter().all(|s| s.num_nodes() == 200);
    let shadow = ScopeStats::from_subgraphs(&subs);
    let ratio = |d| {
        let n = inference_cost(Arch::Gcn, 5, d, 2, &normal.scope).unwrap();
        let s = inference_cost(Arch::Gcn, 5, d, 2, &shadow).unwrap();
        n.per_target() / s.per_target()
    };
    let (r32, r64, r256) = (ratio(32), ratio(64), ratio(256));
    outcome(
        hand && affine && sizes_ok && r32 >= 10.0,
        format!(
            "hand MACs {hand}, affine {affine}; normal/shadow per-node ratio {r32:.2}x at d=32 ({r64:.2}x at d=64, {r256:.2}x at d=256)"
        ),
    )
}

fn criterion_7() -> Outcome {
    let g = sbm(&SbmParams::separable(), 7);
    assert_eq!(g.num_nodes(), 2000);
    let rows = sgc_sweep(&g, &ExtractConfig::new(ExtractMethod::ppr(32), 0), &[0, 3, 40], &LogisticConfig::default()).unwrap();
    let (k0, k3, k40) = (&rows[0], &rows[1], &rows[2]);
    let same_at_zero = k0.full_acc == k0.shadow_acc;
    let full_drop = k3.full_acc - k40.full_acc;
    let shadow_kept = k40.shadow_acc >= k3.shadow_acc - 0.01;
    outcome(
        same_at_zero && full_drop >= 0.10 && shadow_kept,
        format!(
            "full-graph {:.3} -> {:.3} (drop {full_drop:.3}), subgraph {:.3} -> {:.3}, class separation at K=40 {:.1e} vs {:.1e}",
            k3.full_acc, k40.full_acc, k3.shadow_acc, k40.shadow_acc, k40.full_separation, k40.shadow_separation
        ),
    )
}

fn criterion_8() -> Outcome {
    let g = sbm(&SbmParams::separable(), 8);
    let hyper = TrainConfig {
        lr: 0.005,
        ..TrainConfig::new(60, 17)
    };
    let mut shadow_cfg = ModelConfig::new(Arch::Gcn, g.feature_dim(), 2, 3, 32);
    shadow_cfg.dropout = 0.1;
    let shadow_ex = ExtractConfig::new(ExtractMethod::ppr(32), 0);
    let a = train(&g, &shadow_cfg, &shadow_ex, &hyper).unwrap();
    let b = train(&g, &shadow_cfg, &shadow_ex, &hyper).unwrap();
    let deterministic = a.params == b.params && a.history == b.history;
    let shadow_acc = evaluate(&g, &shadow_cfg, &a.params, &shadow_ex, SplitTag::Test).unwrap();

    let mut base_cfg = ModelConfig::new(Arch::Gcn, g.feature_dim(), 2, 2, 32);
    base_cfg.dropout = 0.1;
    let base_ex = ExtractConfig::new(ExtractMethod::khop(2, None), 0);
    let base = train(&g, &base_cfg, &base_ex, &hyper).unwrap();
    let base_acc = evaluate(&g, &base_cfg, &base.params, &base_ex, SplitTag::Test).unwrap();
    outcome(
        shadow_acc >= 0.95 && shadow_acc >= base_acc - 0.02 && deterministic,
        format!("subgraph GCN test {shadow_acc:.4}, 2-hop GCN baseline {base_acc:.4}, rerun identical {deterministic}"),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("closed-form limit aggregation", Duration::from_secs(1), criterion_1),
        ("distinct limit aggregations", Duration::from_secs(30), criterion_2),
        ("exponential Markov convergence", Duration::from_secs(1), criterion_3),
        ("1-WL versus subgraph 1-WL", Duration::from_secs(1), criterion_4),
        ("gradient oracle", Duration::from_secs(10), criterion_5),
        ("inference cost model", Duration::from_secs(60), criterion_6),
        ("SGC oversmoothing sweep", Duration::from_secs(300), criterion_7),
        ("end-to-end training", Duration::from_secs(600), criterion_8),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let passed = out.passed && took < *limit;
        failures += usize::from(!passed);
        println!(
            "criterion {} [{name}]: {} ({:.2}s, limit {}s) {}",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs(),
            out.detail
        );
    }
    println!("criterion 9 [Flickr reproduction]: SKIPPED (optional; needs the Flickr dataset and CPU hours)");
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all required criteria passed");
}

