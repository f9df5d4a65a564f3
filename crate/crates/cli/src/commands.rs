use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scopegnn_core::cost::{hop_expansion, inference_cost, scope_composition, CostReport, HopProfile, ScopeStats};
use scopegnn_core::extract::cache::{read_cache, write_cache, CacheRecord};
use scopegnn_core::extract::{extract_batch, extract_ensemble_batch, ExtractConfig, ExtractMethod};
use scopegnn_core::graph::{load_graph, load_tsv_sized, save_bundle, subgraph_depth};
use scopegnn_core::model::checkpoint::{load_checkpoint, save_checkpoint};
use scopegnn_core::model::{evaluate_prepared, prepare_split, train as train_model, write_metrics_csv, ModelConfig, TrainConfig};
use scopegnn_core::theory::suite::{run_suite, SuiteOptions};
use scopegnn_core::{GraphBundle, Subgraph};

use crate::config::{self, parse_split, require, ConvertConfig, CostRun, EvalRun, ExtractRun, RegimeArg, TrainRun, VerifyRun};
use crate::{Common, ConvertArgs, CostArgs, EvalArgs, ExtractArgs, ExtractFlags, TrainArgs, VerifyArgs};

pub enum Outcome {
    Success,
    ChecksFailed,
}

fn set<T: Clone>(field: &mut T, flag: &Option<T>) {
    if let Some(v) = flag {
        *field = v.clone();
    }
}

fn set_opt<T: Clone>(field: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        field.clone_from(flag);
    }
}

fn apply_common(common: &Common, seed: &mut u64, out: &mut Option<PathBuf>) {
    set(seed, &common.seed);
    set_opt(out, &common.out);
}

fn method_from_flags(flags: &ExtractFlags) -> Option<ExtractMethod> {
    match (flags.top_k, flags.depth) {
        (Some(k), _) => Some(ExtractMethod::ppr(k)),
        (None, Some(d)) => Some(ExtractMethod::khop(d, flags.budget)),
        (None, None) => None,
    }
}

fn load(path: &Path) -> Result<GraphBundle> {
    load_graph(path).with_context(|| format!("loading graph {}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

pub fn convert(a: &ConvertArgs) -> Result<Outcome> {
    let mut cfg: ConvertConfig = config::load(a.common.config.as_deref())?;
    apply_common(&a.common, &mut cfg.seed, &mut cfg.out_dir);
    set_opt(&mut cfg.input, &a.input);
    set_opt(&mut cfg.edges, &a.edges);
    set_opt(&mut cfg.feats, &a.feats);
    set_opt(&mut cfg.labels, &a.labels);
    set_opt(&mut cfg.split, &a.split);
    set_opt(&mut cfg.num_nodes, &a.num_nodes);
    let out = require(&cfg.out_dir, "out")?.clone();
    let g = match (&cfg.input, &cfg.edges) {
        (Some(_), Some(_)) => bail!("give either `input` or `edges`, not both"),
        (Some(input), None) => load(input)?,
        (None, Some(edges)) => load_tsv_sized(
            edges,
            cfg.feats.as_deref(),
            cfg.labels.as_deref(),
            cfg.split.as_deref(),
            cfg.num_nodes,
        )
        .with_context(|| format!("reading TSV input {}", edges.display()))?,
        (None, None) => bail!("missing input: pass --input <dir> or --edges <file>"),
    };
    save_bundle(&g, &out).with_context(|| format!("writing bundle {}", out.display()))?;
    config::persist(&cfg, &out, "convert")?;
    println!(
        "bundle {}: {} nodes, {} undirected edges, {} feature dims, {} classes",
        out.display(),
        g.num_nodes(),
        g.num_entries() / 2,
        g.feature_dim(),
        g.num_classes()
    );
    Ok(Outcome::Success)
}

pub fn extract(a: &ExtractArgs) -> Result<Outcome> {
    let mut cfg: ExtractRun = config::load(a.common.config.as_deref())?;
    apply_common(&a.common, &mut cfg.seed, &mut cfg.out_dir);
    set_opt(&mut cfg.graph, &a.graph);
    set_opt(&mut cfg.split, &a.split);
    if let Some(m) = method_from_flags(&a.method) {
        cfg.extract = m;
    }
    let out = require(&cfg.out_dir, "out")?.clone();
    let g = load(require(&cfg.graph, "graph")?)?;
    let targets: Vec<u32> = match &cfg.split {
        Some(s) => g.split_nodes(parse_split(s)?),
        None => (0..g.num_nodes() as u32).collect(),
    };
    let ex = ExtractConfig::new(cfg.extract.clone(), cfg.seed);
    let subs = extract_ensemble_batch(&g, &targets, &ex)?;

    fs::create_dir_all(&out)?;
    let mut stats = csv_writer(&out.join("extract_stats.csv"))?;
    stats.write_record(["target", "branch", "num_nodes", "num_edges", "depth"])?;
    let mut records = Vec::new();
    for (&t, branches) in targets.iter().zip(subs) {
        for (b, s) in branches.into_iter().enumerate() {
            stats.serialize((t, b, s.num_nodes(), s.num_edges(), subgraph_depth(&s)))?;
            records.push(CacheRecord {
                target: t,
                branch: b as u32,
                subgraph: s,
            });
        }
    }
    stats.flush()?;
    write_cache(&out.join("subgraphs.cache"), &records)?;
    config::persist(&cfg, &out, "extract")?;
    let mean = records.iter().map(|r| r.subgraph.num_nodes()).sum::<usize>() as f64 / records.len().max(1) as f64;
    println!("{} subgraphs for {} targets, {mean:.1} nodes on average", records.len(), targets.len());
    Ok(Outcome::Success)
}

fn model_config(run: &TrainRun, g: &GraphBundle, branches: usize) -> ModelConfig {
    let m = &run.model;
    let mut cfg = ModelConfig::new(m.arch, g.feature_dim(), g.num_classes(), m.layers, m.hidden);
    cfg.num_heads = m.heads;
    cfg.pooling = m.pooling;
    cfg.jk_concat = m.jk_concat;
    cfg.ensemble_branches = branches;
    cfg.dropout = m.dropout;
    cfg.dropedge = m.dropedge;
    cfg.activation = m.activation;
    cfg
}

pub fn train(a: &TrainArgs) -> Result<Outcome> {
    let mut cfg: TrainRun = config::load(a.common.config.as_deref())?;
    apply_common(&a.common, &mut cfg.seed, &mut cfg.out_dir);
    set_opt(&mut cfg.graph, &a.graph);
    if let Some(m) = method_from_flags(&a.method) {
        cfg.extract = Some(m);
    }
    cfg.extract = Some(cfg.extract_method());
    set(&mut cfg.model.arch, &a.arch);
    set(&mut cfg.model.layers, &a.layers);
    set(&mut cfg.model.hidden, &a.hidden);
    set(&mut cfg.train.epochs, &a.epochs);
    set(&mut cfg.train.lr, &a.lr);
    set(&mut cfg.train.batch_size, &a.batch_size);
    let out = require(&cfg.out_dir, "out")?.clone();
    let g = load(require(&cfg.graph, "graph")?)?;

    let ex = ExtractConfig::new(cfg.extract_method(), cfg.seed);
    let model = model_config(&cfg, &g, ex.num_branches());
    model.validate()?;
    let hyper = TrainConfig {
        epochs: cfg.train.epochs,
        batch_size: cfg.train.batch_size,
        lr: cfg.train.lr,
        patience: cfg.train.patience,
        seed: cfg.seed,
    };
    let report = train_model(&g, &model, &ex, &hyper)?;
    fs::create_dir_all(&out)?;
    save_checkpoint(&out.join("model.ckpt"), &model, &report.params)?;
    let metrics = out.join("metrics.csv");
    write_metrics_csv(fs::File::create(&metrics)?, &report.history)?;
    config::persist(&cfg, &out, "train")?;
    match report.history.iter().find(|m| m.epoch == report.best_epoch && m.split == "val") {
        Some(best) => println!("best epoch {}: val accuracy {:.4}", best.epoch, best.accuracy),
        None => println!("trained {} epochs", report.history.iter().map(|m| m.epoch).max().unwrap_or(0)),
    }
    println!("checkpoint {}", out.join("model.ckpt").display());
    Ok(Outcome::Success)
}

/// The extractor recorded by the training run that produced `checkpoint`.
fn recorded_extract(checkpoint: &Path) -> Result<Option<ExtractMethod>> {
    let path = checkpoint.parent().unwrap_or(Path::new(".")).join("train_config.toml");
    if !path.exists() {
        return Ok(None);
    }
    let run: TrainRun = config::load(Some(&path))?;
    Ok(run.extract)
}

pub fn eval(a: &EvalArgs) -> Result<Outcome> {
    let mut cfg: EvalRun = config::load(a.common.config.as_deref())?;
    apply_common(&a.common, &mut cfg.seed, &mut cfg.out_dir);
    set_opt(&mut cfg.graph, &a.graph);
    set_opt(&mut cfg.checkpoint, &a.checkpoint);
    set(&mut cfg.split, &a.split);
    if let Some(m) = method_from_flags(&a.method) {
        cfg.extract = Some(m);
    }
    let ckpt = require(&cfg.checkpoint, "checkpoint")?.clone();
    if cfg.extract.is_none() {
        cfg.extract = recorded_extract(&ckpt)?;
    }
    let Some(method) = cfg.extract.clone() else {
        bail!("no extractor configured and none recorded next to the checkpoint; pass --top-k or --depth");
    };
    let out = cfg
        .out_dir
        .clone()
        .unwrap_or_else(|| ckpt.parent().unwrap_or(Path::new(".")).to_path_buf());
    cfg.out_dir = Some(out.clone());
    let tag = parse_split(&cfg.split)?;
    let g = load(require(&cfg.graph, "graph")?)?;
    let (model, params) = load_checkpoint(&ckpt).with_context(|| format!("loading checkpoint {}", ckpt.display()))?;
    let data = prepare_split(&g, tag, &model, &ExtractConfig::new(method, cfg.seed))?;
    let (loss, acc) = evaluate_prepared(&data, &model, &params)?;
    fs::create_dir_all(&out)?;
    let mut w = csv_writer(&out.join("eval_metrics.csv"))?;
    w.write_record(["split", "targets", "loss", "accuracy"])?;
    w.serialize((&cfg.split, data.len(), loss, acc))?;
    w.flush()?;
    config::persist(&cfg, &out, "eval")?;
    println!("{} split: {} targets, loss {loss:.4}, accuracy {acc:.4}", cfg.split, data.len());
    Ok(Outcome::Success)
}

fn sample_targets(g: &GraphBundle, max: usize, seed: u64) -> Vec<u32> {
    let mut all: Vec<u32> = (0..g.num_nodes() as u32).collect();
    if all.len() > max {
        all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        all.truncate(max);
        all.sort_unstable();
    }
    all
}

enum Scope {
    Hop(usize),
    Cache(PathBuf),
    OnTheFly,
}

fn parse_scope(s: Option<&str>) -> Result<Scope> {
    Ok(match s {
        None => Scope::OnTheFly,
        Some(s) => match s.strip_prefix("hop:") {
            Some(l) => Scope::Hop(l.parse().with_context(|| format!("bad hop depth in {s:?}"))?),
            None => Scope::Cache(PathBuf::from(s)),
        },
    })
}

fn write_profile(path: &Path, p: &HopProfile) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["hop", "mean_nodes", "fraction"])?;
    for (h, (c, f)) in p.counts.iter().zip(&p.fractions).enumerate() {
        w.serialize((h, c, f))?;
    }
    w.flush()?;
    Ok(())
}

fn print_cost(r: &CostReport) {
    let t = r.targets.max(1) as f64;
    println!("{:?} regime, {} targets (per-target averages)", r.regime, r.targets);
    println!("{:>5} {:>12} {:>12} {:>12} {:>6} {:>6} {:>16}", "layer", "n_in", "n_out", "m", "d_in", "d_out", "MACs");
    for (i, l) in r.layers.iter().enumerate() {
        println!(
            "{:>5} {:>12.1} {:>12.1} {:>12.1} {:>6} {:>6} {:>16.1}",
            i + 1,
            l.n_in as f64 / t,
            l.n_out as f64 / t,
            l.m as f64 / t,
            l.d_in,
            l.d_out,
            l.macs as f64 / t
        );
    }
    println!("layers {:.1} MACs per target, head {:.1}", r.per_target(), r.head_macs as f64 / t);
}

pub fn cost(a: &CostArgs) -> Result<Outcome> {
    let mut cfg: CostRun = config::load(a.common.config.as_deref())?;
    apply_common(&a.common, &mut cfg.seed, &mut cfg.out_dir);
    set_opt(&mut cfg.graph, &a.graph);
    set(&mut cfg.arch, &a.arch);
    set(&mut cfg.layers, &a.layers);
    set(&mut cfg.dim, &a.dim);
    set_opt(&mut cfg.classes, &a.classes);
    set(&mut cfg.regime, &a.regime);
    set_opt(&mut cfg.scope_from, &a.scope_from);
    set_opt(&mut cfg.budget, &a.budget);
    set(&mut cfg.top_k, &a.top_k);
    set(&mut cfg.max_targets, &a.max_targets);

    let graph = cfg.graph.as_deref().map(load).transpose()?;
    let need_graph = || graph.as_ref().context("this scope needs --graph");
    let mut scope = parse_scope(cfg.scope_from.as_deref())?;
    if matches!((cfg.regime, &scope), (RegimeArg::Normal, Scope::OnTheFly)) {
        scope = Scope::Hop(cfg.layers);
    }
    let mut profile = None;
    let stats = match (cfg.regime, scope) {
        (RegimeArg::Normal, Scope::Hop(l)) => {
            let g = need_graph()?;
            let e = hop_expansion(g, &sample_targets(g, cfg.max_targets, cfg.seed), l, cfg.budget, cfg.seed)?;
            profile = Some(e.profile);
            e.scope
        }
        (RegimeArg::Normal, _) => bail!("the normal regime needs breadth-first scopes (`hop:<L>`)"),
        (RegimeArg::Shadow, Scope::Cache(path)) => {
            let records = read_cache(&path).with_context(|| format!("reading cache {}", path.display()))?;
            let subs: Vec<Subgraph> = records.into_iter().map(|r| r.subgraph).collect();
            if let Some(g) = &graph {
                profile = Some(scope_composition(g, &subs));
            }
            ScopeStats::from_subgraphs(&subs)
        }
        (RegimeArg::Shadow, scope) => {
            let g = need_graph()?;
            let method = match scope {
                Scope::Hop(l) => ExtractMethod::khop(l, cfg.budget),
                _ => ExtractMethod::ppr(cfg.top_k),
            };
            let subs = extract_batch(g, &sample_targets(g, cfg.max_targets, cfg.seed), &ExtractConfig::new(method, cfg.seed))?;
            profile = Some(scope_composition(g, &subs));
            ScopeStats::from_subgraphs(&subs)
        }
    };
    let classes = cfg
        .classes
        .or_else(|| graph.as_ref().filter(|g| g.labels().is_some()).map(|g| g.num_classes() as u64))
        .unwrap_or(2);
    let report = inference_cost(cfg.arch, cfg.layers, cfg.dim, classes, &stats)?;
    print_cost(&report);
    if let Some(out) = cfg.out_dir.clone() {
        fs::create_dir_all(&out)?;
        let mut w = csv_writer(&out.join("cost.csv"))?;
        w.write_record(["layer", "n_in", "n_out", "m", "d_in", "d_out", "macs"])?;
        for (i, l) in report.layers.iter().enumerate() {
            w.serialize((i + 1, l.n_in, l.n_out, l.m, l.d_in, l.d_out, l.macs.to_string()))?;
        }
        w.flush()?;
        let mut s = csv_writer(&out.join("cost_summary.csv"))?;
        s.write_record(["regime", "targets", "total_macs", "head_macs", "macs_per_target"])?;
        s.serialize((
            format!("{:?}", report.regime),
            report.targets,
            report.total_macs.to_string(),
            report.head_macs.to_string(),
            report.per_target(),
        ))?;
        s.flush()?;
        if let Some(p) = &profile {
            write_profile(&out.join("hop_profile.csv"), p)?;
        }
        config::persist(&cfg, &out, "cost")?;
    }
    Ok(Outcome::Success)
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome> {
    let mut cfg: VerifyRun = config::load(a.common.config.as_deref())?;
    apply_common(&a.common, &mut cfg.seed, &mut cfg.out_dir);
    cfg.full |= a.full;
    let report = run_suite(SuiteOptions {
        full: cfg.full,
        seed: cfg.seed,
    })?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(out) = cfg.out_dir.clone() {
        fs::create_dir_all(&out)?;
        let mut w = csv_writer(&out.join("verify_report.csv"))?;
        for c in &report.checks {
            w.serialize(c)?;
        }
        w.flush()?;
        report.write_curves_csv(fs::File::create(out.join("verify_curves.csv"))?)?;
        config::persist(&cfg, &out, "verify")?;
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        println!("all {} checks passed", report.checks.len());
        Ok(Outcome::Success)
    } else {
        println!("{failed} of {} checks failed", report.checks.len());
        Ok(Outcome::ChecksFailed)
    }
}
