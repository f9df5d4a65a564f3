//! Fixed battery of numerical checks with pass/fail verdicts and the curves
//! behind them.

use std::io::Write;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{
    fit_log_linear, lambda2_abs, limit_aggregation, markov_curve, power_limit, scope_distinctness, sgc_sweep,
    shadow_wl, wl_refine, LogisticConfig, PhiMode, TheoryError,
};
use crate::cost::{hop_expansion, inference_cost, ScopeStats};
use crate::extract::{extract_batch, ExtractConfig, ExtractMethod};
use crate::fixtures::{self, sbm, SbmParams};
use crate::graph::{GraphBundle, Subgraph};
use crate::model::gradcheck::check_gradients;
use crate::model::{Activation, Arch, BranchInput, ModelConfig, ParamSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub curve: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub checks: Vec<CheckResult>,
    pub curves: Vec<CurvePoint>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            detail,
        });
    }

    fn curve(&mut self, curve: &str, x: f64, y: f64) {
        self.curves.push(CurvePoint { curve: curve.into(), x, y });
    }

    /// `curve,x,y` rows.
    pub fn write_curves_csv<W: Write>(&self, out: W) -> Result<(), TheoryError> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.curves {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SuiteOptions {
    /// Also run the large cost comparison and the SGC depth sweep.
    pub full: bool,
    pub seed: u64,
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

fn full(g: &GraphBundle, target: u32) -> Subgraph {
    Subgraph::full_graph(g, target).expect("fixture target in range")
}

/// Small connected subgraphs used by the closed-form checks.
pub fn limit_fixtures() -> Vec<(String, Subgraph)> {
    let mut out = vec![
        ("triangle".to_string(), full(&fixtures::triangle(), 0)),
        ("star3_center".to_string(), full(&fixtures::star(3), 0)),
        ("star3_leaf".to_string(), full(&fixtures::star(3), 1)),
        ("path5_end".to_string(), full(&fixtures::path(5), 0)),
        ("path5_mid".to_string(), full(&fixtures::path(5), 2)),
    ];
    let karate = fixtures::karate();
    let targets = [0u32, 5, 16, 33];
    let subs = extract_batch(&karate, &targets, &ExtractConfig::new(ExtractMethod::ppr(16), 0)).expect("karate extraction");
    out.extend(targets.iter().zip(subs).map(|(t, s)| (format!("karate_ppr16_{t}"), s)));
    out
}

fn limit_check(report: &mut SuiteReport, rng: &mut ChaCha8Rng) {
    let mut worst: f64 = 0.0;
    for (name, s) in limit_fixtures() {
        let x = gaussian(s.num_nodes(), 4, rng);
        let m = limit_aggregation(&s, &x).limit_m;
        let err = |l: usize| (&power_limit(&s, &x, l) - &m).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for l in (0..=200).step_by(10) {
            report.curve(&format!("power_limit_error/{name}"), l as f64, err(l));
        }
        worst = worst.max(err(200));
    }
    report.check("limit_closed_form", worst <= 1e-8, format!("max |A^200 X - m| = {worst:.3e} (tol 1e-8)"));
}

fn distinct_check(report: &mut SuiteReport, seed: u64) -> Result<(), TheoryError> {
    let ppr16 = ExtractConfig::new(ExtractMethod::ppr(16), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut collisions = 0;
    for g in [fixtures::karate(), sbm(&SbmParams::medium(), seed)] {
        collisions += scope_distinctness(&g, &ppr16, &mut rng, PhiMode::Identity, 100, 4, 1e-9)?.collisions;
    }
    report.check("distinct_scopes_never_collide", collisions == 0, format!("{collisions} collisions over 100 draws"));

    let g = fixtures::figure1();
    let whole = ExtractConfig::new(ExtractMethod::khop(g.num_nodes(), None), seed);
    let r = scope_distinctness(&g, &whole, &mut rng, PhiMode::Identity, 10, 4, 1e-9)?;
    report.check(
        "full_scope_regular_graph_collapses",
        r.max_pair_distance <= 1e-12,
        format!("max pairwise distance {:.3e} (tol 1e-12)", r.max_pair_distance),
    );

    let g = fixtures::karate();
    let capped = ExtractConfig::new(ExtractMethod::ppr(8), seed);
    let r = scope_distinctness(&g, &capped, &mut rng, PhiMode::InvSqrtDegree, 20, 4, 1e-9)?;
    let bound = g.num_nodes().div_ceil(8);
    report.check(
        "capped_scope_distinct_count",
        r.min_distinct >= bound,
        format!("{} distinct aggregations (bound {bound})", r.min_distinct),
    );
    Ok(())
}

/// Fixtures for the exponential-decay check.
pub fn markov_fixtures() -> Vec<(String, Subgraph)> {
    vec![
        ("path4_end".into(), full(&fixtures::path(4), 0)),
        ("path8_end".into(), full(&fixtures::path(8), 0)),
        ("star3_leaf".into(), full(&fixtures::star(3), 1)),
        ("star7_leaf".into(), full(&fixtures::star(7), 1)),
    ]
}

fn markov_check(report: &mut SuiteReport) {
    let mut ok = true;
    let mut details = Vec::new();
    for (name, s) in markov_fixtures() {
        let curve = markov_curve(&s, 40);
        for (l, e) in curve.iter().enumerate() {
            report.curve(&format!("markov_error/{name}"), l as f64, *e);
        }
        let xs: Vec<f64> = (5..=40).map(|l| l as f64).collect();
        let fit = fit_log_linear(&xs, &curve[5..=40]);
        let bound = lambda2_abs(&s).ln() + 0.05;
        ok &= fit.slope <= bound && fit.r_squared >= 0.98;
        details.push(format!("{name}: slope {:.4} <= {bound:.4}, R2 {:.4}", fit.slope, fit.r_squared));
    }
    report.check("markov_exponential_decay", ok, details.join("; "));
}

fn wl_check(report: &mut SuiteReport) -> Result<(), TheoryError> {
    let one_hop = ExtractConfig::new(ExtractMethod::khop(1, None), 0);
    for (name, g, u, v) in [
        ("figure1", fixtures::figure1(), 0usize, 2usize),
        ("two_component_2regular", fixtures::two_component_2regular(), 0, 6),
    ] {
        let global = wl_refine(&g, None, g.num_nodes());
        let labels = shadow_wl(&g, &one_hop, 2)?;
        report.check(
            &format!("wl_vs_shadow_wl/{name}"),
            global.num_classes() == 1 && labels[u] != labels[v],
            format!(
                "global classes {}, subgraph labels u={} v={}",
                global.num_classes(),
                labels[u],
                labels[v]
            ),
        );
    }
    Ok(())
}

/// The 5-node graph used by the gradient check: a 4-cycle with a pendant.
pub fn gradient_fixture() -> GraphBundle {
    GraphBundle::from_edges(5, [(0u32, 1u32), (1, 2), (2, 3), (3, 0), (3, 4)]).expect("valid edges")
}

fn gradient_check(report: &mut SuiteReport, rng: &mut ChaCha8Rng) -> Result<(), TheoryError> {
    let g = gradient_fixture();
    let subs: Vec<Subgraph> = (0..5).map(|t| full(&g, t)).collect();
    let x = gaussian(5, 8, rng);
    let xs: Vec<Array2<f64>> = subs.iter().map(|s| s.gather_rows(&x)).collect();
    let batch: Vec<Vec<BranchInput<f64>>> = subs.iter().zip(&xs).map(|(s, x)| vec![BranchInput::new(s, x)]).collect();
    let labels = [0, 1, 2, 1, 0];
    for arch in [Arch::Gcn, Arch::Sage, Arch::Gin] {
        let mut cfg = ModelConfig::new(arch, 8, 3, 2, 8);
        cfg.activation = Activation::Elu;
        let params = ParamSet::<f64>::init(&cfg, rng.random());
        let r = check_gradients(&batch, &labels, &cfg, &params, 1e-3)?;
        report.check(
            &format!("gradient_oracle/{arch:?}"),
            r.max_rel_error <= 1e-4,
            format!("{} scalars, max relative error {:.3e}", r.checked, r.max_rel_error),
        );
    }
    Ok(())
}

fn cost_check(report: &mut SuiteReport, full_scale: bool, seed: u64) -> Result<(), TheoryError> {
    use crate::cost::{cost_gat_layer, cost_gcn_layer, cost_sage_layer};
    let hand = cost_gcn_layer(10, 5, 4, 8) == 200
        && cost_gcn_layer(1, 1, 1, 1) == 2
        && cost_sage_layer(10, 5, 4, 8) == 360
        && cost_gat_layer(10, 12, 4, 8) == 624;
    report.check("cost_hand_examples", hand, "GCN 200, 2; SAGE 360; GAT 624".into());

    let stats = ScopeStats::Shadow {
        n: 200,
        m: 1000,
        targets: 1,
    };
    let cost = |l| inference_cost(Arch::Gcn, l, 256, 2, &stats);
    let (c3, c6) = (cost(3)?, cost(6)?);
    report.check(
        "cost_shadow_linear_in_depth",
        c6.total_macs == 2 * c3.total_macs && c3.total_macs == 3 * (1000 * 256 + 200 * 256 * 256),
        format!("3 layers {} MACs, 6 layers {} MACs", c3.total_macs, c6.total_macs),
    );

    if full_scale {
        let g = fixtures::random_regular(100_000, 10, seed);
        let targets: Vec<u32> = (0..200u32).map(|i| i * 500).collect();
        let layers = 5;
        let normal = hop_expansion(&g, &targets, layers, None, seed)?;
        let subs = extract_batch(&g, &targets, &ExtractConfig::new(ExtractMethod::ppr(200), seed))?;
        let shadow = ScopeStats::from_subgraphs(&subs);
        for (h, c) in normal.profile.counts.iter().enumerate() {
            report.curve("hop_counts/regular10", h as f64, *c);
        }
        // The ratio depends on width: it tends to the ratio of output-node
        // counts (about 9) as the dense term dominates.
        let mut ratios = Vec::new();
        for dim in [32u64, 64, 256] {
            let n = inference_cost(Arch::Gcn, layers, dim, 2, &normal.scope)?;
            let s = inference_cost(Arch::Gcn, layers, dim, 2, &shadow)?;
            ratios.push((dim, n.per_target() / s.per_target()));
        }
        report.check(
            "cost_normal_vs_shadow_regular10",
            ratios[0].1 >= 10.0,
            ratios.iter().map(|(d, r)| format!("d={d}: {r:.2}x")).collect::<Vec<_>>().join(", "),
        );
    }
    Ok(())
}

fn sgc_check(report: &mut SuiteReport, seed: u64) -> Result<(), TheoryError> {
    let g = sbm(&SbmParams::separable(), seed);
    let extract = ExtractConfig::new(ExtractMethod::ppr(32), seed);
    let cfg = LogisticConfig {
        seed,
        ..LogisticConfig::default()
    };
    let rows = sgc_sweep(&g, &extract, &[1, 3, 5, 10, 20, 30, 40], &cfg)?;
    for r in &rows {
        report.curve("sgc_accuracy/full", r.k as f64, r.full_acc);
        report.curve("sgc_accuracy/shadow", r.k as f64, r.shadow_acc);
    }
    let at = |k| rows.iter().find(|r| r.k == k).expect("swept depth");
    let (k3, k40) = (at(3), at(40));
    report.check(
        "sgc_oversmoothing",
        k40.full_acc <= k3.full_acc - 0.10 && k40.shadow_acc >= k3.shadow_acc - 0.01,
        format!(
            "full {:.3} -> {:.3}, subgraph {:.3} -> {:.3} (K=3 -> K=40)",
            k3.full_acc, k40.full_acc, k3.shadow_acc, k40.shadow_acc
        ),
    );
    Ok(())
}

/// Runs every check. Errors abort the suite; failed checks do not.
pub fn run_suite(opts: SuiteOptions) -> Result<SuiteReport, TheoryError> {
    let mut report = SuiteReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    limit_check(&mut report, &mut rng);
    distinct_check(&mut report, opts.seed)?;
    markov_check(&mut report);
    wl_check(&mut report)?;
    gradient_check(&mut report, &mut rng)?;
    cost_check(&mut report, opts.full, opts.seed)?;
    if opts.full {
        sgc_check(&mut report, opts.seed)?;
    }
    Ok(report)
}
