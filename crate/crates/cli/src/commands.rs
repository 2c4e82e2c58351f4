use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use snn_topo::analysis::{
    join_records, read_accuracy_csv, run_regression, AccuracyRecord, RegressionConfig, RegressionReport,
    RegressorKind, Scenario,
};
use snn_topo::encoder::io::{read_graph, write_graph};
use snn_topo::encoder::{encode_network, Encoding, MultipartiteGraph};
use snn_topo::fixtures;
use snn_topo::maskgen::{
    attach_weights, density_report, generate, read_mask, sidecar_path, write_mask, GenerateOptions, GeneratorInfo,
    MaskSidecar, Method, SparseMask, WeightInit,
};
use snn_topo::ramanujan::{density_correlation_study, LayerRamanujan, MetricCorrelation, RamanujanConfig};
use snn_topo::ranking::{
    evaluate_strategies, mixture_scores, rank_scores, read_strategy_csv, write_comparison_csv, write_strategy_csv,
    NetworkBaselines, Order, StrategyScore, BASELINE_NAMES,
};
use snn_topo::topometrics::{
    compute_all, read_rows_csv, write_rows_csv, Category, MetricsConfig, MetricsRow, TopometricVector, METRIC_COUNT,
    METRIC_NAMES,
};

use crate::manifest::{manifest_path_for, write_json, Recorder};
use crate::{Ctx, MetricSetArgs, MetricsArgs, RamanujanArgs, RankArgs, RegressArgs};

pub(crate) fn seeds(ctx: &Ctx) -> BTreeMap<String, u64> {
    BTreeMap::from([("seed".to_string(), ctx.seed)])
}

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(())
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    ensure_parent(path)?;
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

/// Digests the architecture file when one was given by path.
pub(crate) fn record_arch(rec: &mut Recorder, name_or_path: &str) -> Result<()> {
    let p = Path::new(name_or_path);
    if p.is_file() {
        rec.input(p)?;
    }
    Ok(())
}

pub(crate) fn metrics_config(ctx: &Ctx, set: &MetricSetArgs) -> MetricsConfig {
    let categories = if set.categories.is_empty() {
        Category::ALL.to_vec()
    } else {
        set.categories.clone()
    };
    MetricsConfig {
        include_padding: !set.no_padding,
        motif_size: set.motif_size,
        motif_edge_budget: set.motif_budget,
        motif_seed: ctx.seed,
        ..MetricsConfig::default()
    }
    .with_categories(&categories)
}

pub(crate) fn read_accuracy(paths: &[PathBuf]) -> Result<Vec<AccuracyRecord>> {
    let mut out = Vec::new();
    if paths.is_empty() {
        for (name, text) in fixtures::ACCURACY_TABLES {
            out.extend(read_accuracy_csv(text.as_bytes()).with_context(|| format!("bundled table {name}"))?);
        }
    }
    for p in paths {
        let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
        out.extend(read_accuracy_csv(f).with_context(|| format!("bad accuracy table {}", p.display()))?);
    }
    Ok(out)
}

pub(crate) fn read_metric_tables(paths: &[PathBuf]) -> Result<Vec<MetricsRow>> {
    let mut out = Vec::new();
    for p in paths {
        let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
        out.extend(read_rows_csv(f).with_context(|| format!("bad metrics table {}", p.display()))?);
    }
    Ok(out)
}

pub(crate) fn read_mask_file(path: &Path) -> Result<SparseMask> {
    read_mask(path).with_context(|| format!("cannot read mask {}", path.display()))
}

fn generator_of(mask_path: &Path) -> Option<GeneratorInfo> {
    let text = std::fs::read_to_string(sidecar_path(mask_path)).ok()?;
    serde_json::from_str::<MaskSidecar>(&text).ok()?.generator
}

pub(crate) fn graph_summary(g: &MultipartiteGraph) -> String {
    format!(
        "{} nodes ({} padding), {} edges, {} partitions",
        g.node_count(),
        g.padding_count(),
        g.edge_count(),
        g.partitions.len()
    )
}

// mask

pub(crate) fn make_mask(
    ctx: &Ctx,
    spec: &snn_topo::archspec::ArchitectureSpec,
    method: Method,
    sparsity: f64,
    weights: Option<WeightInit>,
    exclude: Vec<usize>,
) -> Result<SparseMask> {
    let opts = GenerateOptions {
        exclude,
        ..GenerateOptions::new(method, sparsity, ctx.seed)
    };
    let generated = generate(spec, &opts)?;
    Ok(match weights {
        Some(init) => attach_weights(&generated.mask, ctx.seed, init)?,
        None => generated.mask,
    })
}

pub fn mask_gen(
    ctx: &Ctx,
    method: Method,
    sparsity: f64,
    arch: &str,
    weights: Option<WeightInit>,
    exclude: Vec<usize>,
    out: &Path,
) -> Result<()> {
    let out = ctx.out(out);
    let config = json!({
        "global": ctx.config(),
        "arch": arch,
        "method": method,
        "sparsity": sparsity,
        "weights": weights,
        "exclude": exclude,
    });
    let mut rec = Recorder::new("mask gen", config, seeds(ctx), manifest_path_for(&out));
    record_arch(&mut rec, arch)?;
    let spec = ctx.arch(arch)?;
    let mask = rec.stage("mask", || make_mask(ctx, &spec, method, sparsity, weights, exclude))?;
    ensure_parent(&out)?;
    write_mask(
        &out,
        &mask,
        Some(GeneratorInfo {
            method,
            sparsity,
            seed: ctx.seed,
        }),
    )?;
    rec.output(&out)?;
    rec.output(&sidecar_path(&out))?;
    let d = density_report(&mask);
    println!(
        "{} {method} s={sparsity}: {} of {} weights kept (density {:.4}) -> {}",
        spec.name(),
        mask.nnz(),
        spec.total_params(),
        d.global_density,
        out.display()
    );
    rec.finish()?;
    Ok(())
}

pub fn mask_info(ctx: &Ctx, mask: &Path, out: Option<&Path>) -> Result<()> {
    let m = read_mask_file(mask)?;
    let report = density_report(&m);
    println!(
        "{}: {} layers, {} nonzeros, global density {:.4}, mean layer density {:.4}{}",
        m.architecture(),
        report.layers.len(),
        m.nnz(),
        report.global_density,
        report.average_layer_density,
        if m.is_weighted() { ", weighted" } else { "" }
    );
    for l in &report.layers {
        println!("  layer {:>3}: {:>10} / {:>10}  {:.4}", l.layer_index, l.nonzeros, l.total, l.density);
    }
    if let Some(out) = out {
        let out = ctx.out(out);
        let mut rec = Recorder::new("mask info", json!({ "global": ctx.config() }), seeds(ctx), manifest_path_for(&out));
        rec.input(mask)?;
        ensure_parent(&out)?;
        write_json(&out, &rec.reference(), &report)?;
        rec.output(&out)?;
        rec.finish()?;
    }
    Ok(())
}

// encode

pub fn encode(ctx: &Ctx, arch: &str, mask: &Path, weighted: bool, encoding: Encoding, out: &Path) -> Result<()> {
    let out = ctx.out(out);
    let config = json!({
        "global": ctx.config(),
        "arch": arch,
        "weighted": weighted,
        "encoding": encoding,
    });
    let mut rec = Recorder::new("encode", config, seeds(ctx), manifest_path_for(&out));
    record_arch(&mut rec, arch)?;
    rec.input(mask)?;
    let spec = ctx.arch(arch)?;
    let m = read_mask_file(mask)?;
    let g = rec.stage("encode", || Ok(encode_network(&spec, &m, encoding, weighted)?))?;
    ensure_parent(&out)?;
    rec.stage("write", || Ok(write_graph(&out, &g)?))?;
    rec.output(&out)?;
    println!("{} {encoding}: {} -> {}", spec.name(), graph_summary(&g), out.display());
    rec.finish()?;
    Ok(())
}

// metrics

#[derive(Debug, Serialize)]
pub(crate) struct MetricsReport<'a> {
    pub architecture: &'a str,
    pub dataset: &'a str,
    pub algorithm: &'a str,
    pub sparsity: Option<f64>,
    pub run: usize,
    pub config: &'a MetricsConfig,
    pub metrics: &'a TopometricVector,
}

pub(crate) fn print_metrics(v: &TopometricVector) {
    println!("{} nodes, {} edges", v.nodes, v.edges);
    for (j, name) in METRIC_NAMES.iter().enumerate() {
        let (n, r) = (v.normalized.0[j], v.raw.0[j]);
        if !n.is_nan() {
            println!("  {name:<20} {n:>14.6}  (raw {r})");
        }
    }
    if v.motif_sampling < 1.0 {
        println!("  motif count sampled at fraction {:.3e}", v.motif_sampling);
    }
}

pub fn metrics(ctx: &Ctx, a: MetricsArgs) -> Result<()> {
    let out = ctx.out(&a.out);
    let csv = a.csv.as_deref().map(|p| ctx.out(p));
    if csv.is_some() && a.sparsity.is_none() {
        bail!("--csv needs --sparsity to label the row");
    }
    let cfg = metrics_config(ctx, &a.set);
    let architecture = a.architecture.clone().unwrap_or_else(|| {
        a.graph
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let config = json!({
        "global": ctx.config(),
        "metrics": cfg,
        "architecture": architecture,
        "dataset": a.dataset,
        "algorithm": a.algorithm,
        "sparsity": a.sparsity,
        "run": a.run,
    });
    let mut rec = Recorder::new("metrics", config, seeds(ctx), manifest_path_for(&out));
    rec.input(&a.graph)?;
    let g = rec.stage("read", || {
        read_graph(&a.graph).with_context(|| format!("cannot read graph {}", a.graph.display()))
    })?;
    let v = rec.stage("metrics", || Ok(compute_all(&g, &cfg)?))?;
    let body = MetricsReport {
        architecture: &architecture,
        dataset: &a.dataset,
        algorithm: &a.algorithm,
        sparsity: a.sparsity,
        run: a.run,
        config: &cfg,
        metrics: &v,
    };
    ensure_parent(&out)?;
    write_json(&out, &rec.reference(), &body)?;
    rec.output(&out)?;
    if let (Some(csv), Some(s)) = (csv, a.sparsity) {
        let row = MetricsRow::new(&architecture, &a.dataset, s, &a.algorithm, a.run, &v);
        write_rows_csv(&[row], &[("config_hash", rec.config_hash())], create(&csv)?)?;
        rec.output(&csv)?;
    }
    print_metrics(&v);
    rec.finish()?;
    Ok(())
}

// ramanujan

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RamanujanMask {
    pub label: String,
    pub dataset: String,
    pub algorithm: String,
    pub sparsity: f64,
    pub baselines: NetworkBaselines,
    pub correlations: Vec<MetricCorrelation>,
    pub layers: Vec<LayerRamanujan>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RamanujanOutput {
    pub architecture: String,
    pub encoding: Encoding,
    pub masks: Vec<RamanujanMask>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

pub(crate) fn print_ramanujan(r: &RamanujanOutput) {
    for m in &r.masks {
        let feasible = m.layers.iter().filter(|l| l.feasible).count();
        println!(
            "{} ({} {} s={}): {feasible}/{} layers feasible",
            m.label,
            m.dataset,
            m.algorithm,
            m.sparsity,
            m.layers.len()
        );
        let b = &m.baselines;
        println!(
            "  mean delta_r {}  delta_r_imdb {}  lambda_imsg {}  density {:.4}",
            fmt_opt(b.delta_r),
            fmt_opt(b.delta_r_imdb),
            fmt_opt(b.lambda_imsg),
            b.density
        );
        for c in &m.correlations {
            println!("  corr({}, density) = {} over {} layers", c.metric, fmt_opt(c.pearson), c.layers);
        }
    }
}

pub fn ramanujan(ctx: &Ctx, a: RamanujanArgs) -> Result<()> {
    let out = ctx.out(&a.out);
    let config = json!({
        "global": ctx.config(),
        "arch": a.arch,
        "encoding": a.encoding,
        "dataset": a.dataset,
        "algorithm": a.algorithm,
        "sparsity": a.sparsity,
        "ramanujan": RamanujanConfig::default(),
    });
    let mut rec = Recorder::new("ramanujan", config, seeds(ctx), manifest_path_for(&out));
    record_arch(&mut rec, &a.arch)?;
    let spec = ctx.arch(&a.arch)?;
    let mut masks = Vec::new();
    let mut labels = Vec::new();
    for p in &a.mask {
        rec.input(p)?;
        let m = read_mask_file(p)?;
        let generator = generator_of(p);
        let algorithm = a
            .algorithm
            .clone()
            .or_else(|| generator.as_ref().map(|g| g.method.to_string()))
            .unwrap_or_else(|| "unknown".into());
        let sparsity = a
            .sparsity
            .or(generator.map(|g| g.sparsity))
            .unwrap_or_else(|| 1.0 - density_report(&m).global_density);
        let label = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        labels.push((algorithm, sparsity));
        masks.push((label, m));
    }
    let report = rec.stage("ramanujan", || {
        Ok(density_correlation_study(&spec, &masks, a.encoding, &RamanujanConfig::default())?)
    })?;
    let output = RamanujanOutput {
        architecture: report.architecture.clone(),
        encoding: report.encoding,
        masks: report
            .masks
            .iter()
            .zip(labels)
            .map(|(m, (algorithm, sparsity))| RamanujanMask {
                label: m.label.clone(),
                dataset: a.dataset.clone(),
                algorithm,
                sparsity,
                baselines: NetworkBaselines::from_layers(&m.layers),
                correlations: m.correlations.clone(),
                layers: m.layers.clone(),
            })
            .collect(),
    };
    ensure_parent(&out)?;
    write_json(&out, &rec.reference(), &output)?;
    rec.output(&out)?;
    if let Some(csv) = a.csv.as_deref().map(|p| ctx.out(p)) {
        report.write_normalized_csv(create(&csv)?, &[("config_hash", rec.config_hash())])?;
        rec.output(&csv)?;
    }
    print_ramanujan(&output);
    rec.finish()?;
    Ok(())
}

// analyze

pub(crate) fn regression_config(ctx: &Ctx, folds: usize, runs: usize, regressors: &[RegressorKind]) -> RegressionConfig {
    RegressionConfig {
        folds,
        runs,
        seed: ctx.seed,
        regressors: if regressors.is_empty() {
            RegressorKind::ALL.to_vec()
        } else {
            regressors.to_vec()
        },
        ..RegressionConfig::default()
    }
}

pub(crate) fn print_regression(r: &RegressionReport) {
    println!("{} on {} records, {} features", r.scenario, r.records, r.features.len());
    for s in &r.regressors {
        println!(
            "  {:<12} adj R2 {} ± {}  MAE {:.4} ± {:.4}  ({} folds, {} skipped)",
            s.regressor.name(),
            fmt_opt(s.adj_r2_mean),
            fmt_opt(s.adj_r2_std),
            s.mae_mean,
            s.mae_std,
            s.folds_evaluated,
            s.folds_skipped
        );
    }
    let mut imp: Vec<_> = r.importance.iter().collect();
    imp.sort_by(|a, b| b.pearson.abs().total_cmp(&a.pearson.abs()));
    let top: Vec<String> = imp.iter().take(5).map(|f| format!("{} {:+.3}", f.feature, f.pearson)).collect();
    println!("  top importance: {}", top.join(", "));
    for n in &r.notes {
        println!("  note: {n}");
    }
}

pub fn regress(ctx: &Ctx, a: RegressArgs) -> Result<()> {
    let out = ctx.out(&a.out);
    let cfg = regression_config(ctx, a.folds, a.runs, &a.regressors);
    let config = json!({
        "global": ctx.config(),
        "scenario": a.scenario,
        "regression": cfg,
        "bundled_records": a.records.is_empty(),
    });
    let mut rec = Recorder::new("analyze regress", config, seeds(ctx), manifest_path_for(&out));
    for p in a.records.iter().chain(&a.topometrics) {
        rec.input(p)?;
    }
    let accuracy = read_accuracy(&a.records)?;
    let rows = read_metric_tables(&a.topometrics)?;
    let (records, join) = join_records(&accuracy, &rows);
    println!(
        "joined {} records ({} accuracy rows unusable, {} without metrics)",
        join.joined, join.skipped_accuracy, join.unmatched
    );
    let report = rec.stage("regress", || Ok(run_regression(&records, &a.scenario, &cfg)?))?;
    ensure_parent(&out)?;
    write_json(&out, &rec.reference(), &report)?;
    rec.output(&out)?;
    print_regression(&report);
    rec.finish()?;
    Ok(())
}

// rank

#[derive(Debug, Serialize)]
struct RankedCell {
    architecture: String,
    dataset: String,
    sparsity: f64,
    algorithms: Vec<String>,
    coefficients: Vec<f64>,
    ties: Vec<(String, String)>,
}

fn read_reports(paths: &[PathBuf]) -> Result<Vec<RegressionReport>> {
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            RegressionReport::from_json(&text).with_context(|| format!("bad regression report {}", p.display()))
        })
        .collect()
}

fn pick_importance(
    reports: &[RegressionReport],
    fits: impl Fn(&Scenario) -> bool,
    what: &str,
) -> Result<[f64; METRIC_COUNT]> {
    if let Some(r) = reports.iter().find(|r| fits(&r.scenario)) {
        return Ok(r.importance_vector());
    }
    match reports {
        [only] => Ok(only.importance_vector()),
        _ => bail!("no importance report matches {what}"),
    }
}

pub fn rank(ctx: &Ctx, a: RankArgs) -> Result<()> {
    let Some(out) = a.out.as_deref().map(|p| ctx.out(p)) else {
        bail!("rank needs --out (or a subcommand)");
    };
    if a.topometrics.is_empty() || a.importance_arch.is_empty() || a.importance_sparsity.is_empty() {
        bail!("rank needs --topometrics, --importance-arch and --importance-sparsity");
    }
    let config = json!({ "global": ctx.config() });
    let mut rec = Recorder::new("rank", config, seeds(ctx), manifest_path_for(&out));
    for p in a.topometrics.iter().chain(&a.importance_arch).chain(&a.importance_sparsity) {
        rec.input(p)?;
    }
    let rows = read_metric_tables(&a.topometrics)?;
    let by_arch = read_reports(&a.importance_arch)?;
    let by_sparsity = read_reports(&a.importance_sparsity)?;

    let mut groups: BTreeMap<(String, u64), Vec<MetricsRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.architecture.clone(), r.sparsity.to_bits())).or_default().push(r);
    }
    let mut scores: Vec<StrategyScore> = Vec::new();
    for ((arch, bits), rows) in &groups {
        let s = f64::from_bits(*bits);
        let w_arch = pick_importance(
            &by_arch,
            |sc| matches!(sc, Scenario::ArchitectureFixed(n) if n == arch),
            &format!("architecture {arch}"),
        )?;
        let w_sparsity = pick_importance(
            &by_sparsity,
            |sc| matches!(sc, Scenario::SparsityFixed(x) if (x - s).abs() < 1e-9),
            &format!("sparsity {s}"),
        )?;
        scores.extend(mixture_scores(rows, &w_arch, &w_sparsity));
    }

    let mut cells: Vec<RankedCell> = Vec::new();
    let mut i = 0;
    while i < scores.len() {
        let head = &scores[i];
        let j = i + scores[i..]
            .iter()
            .take_while(|s| {
                s.architecture == head.architecture && s.dataset == head.dataset && s.sparsity == head.sparsity
            })
            .count();
        let pairs: Vec<(String, f64)> = scores[i..j].iter().map(|s| (s.algorithm.clone(), s.score)).collect();
        let ranked = rank_scores(&pairs, Order::Asc);
        cells.push(RankedCell {
            architecture: head.architecture.clone(),
            dataset: head.dataset.clone(),
            sparsity: head.sparsity,
            algorithms: ranked.algorithms,
            coefficients: ranked.coefficients,
            ties: ranked.ties,
        });
        i = j;
    }

    ensure_parent(&out)?;
    write_json(&out, &rec.reference(), &json!({ "order": Order::Asc, "cells": cells }))?;
    rec.output(&out)?;
    if let Some(p) = a.scores.as_deref().map(|p| ctx.out(p)) {
        write_strategy_csv(&scores, create(&p)?)?;
        rec.output(&p)?;
    }
    for c in &cells {
        println!(
            "{} {} s={}: {}{}",
            c.architecture,
            c.dataset,
            c.sparsity,
            c.algorithms.join(" > "),
            if c.ties.is_empty() { "" } else { " (ties)" }
        );
    }
    rec.finish()?;
    Ok(())
}

pub fn rank_eval(ctx: &Ctx, records: &[PathBuf], strategies: &Path, out: &Path) -> Result<()> {
    let out = ctx.out(out);
    let config = json!({ "global": ctx.config(), "bundled_records": records.is_empty() });
    let mut rec = Recorder::new("rank eval", config, seeds(ctx), manifest_path_for(&out));
    let mut files: Vec<PathBuf> = std::fs::read_dir(strategies)
        .with_context(|| format!("cannot list {}", strategies.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no strategy CSVs in {}", strategies.display());
    }
    for p in records.iter().chain(&files) {
        rec.input(p)?;
    }
    let accuracy = read_accuracy(records)?;
    let named = files
        .iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
            let scores = read_strategy_csv(f).with_context(|| format!("bad strategy file {}", p.display()))?;
            Ok((name, scores))
        })
        .collect::<Result<Vec<_>>>()?;
    let results = rec.stage("evaluate", || Ok(evaluate_strategies(&accuracy, &named)?))?;
    write_comparison_csv(&results, create(&out)?)?;
    rec.output(&out)?;
    for r in &results {
        println!(
            "{:<16} {:<16} s={:<5} RBO {:.4} over {} datasets",
            r.strategy, r.architecture, r.sparsity, r.rbo_mean, r.datasets
        );
    }
    rec.finish()?;
    Ok(())
}

pub fn rank_baselines(ctx: &Ctx, reports: &[PathBuf], out: &Path) -> Result<()> {
    let dir = ctx.out(out);
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut rec = Recorder::new(
        "rank baselines",
        json!({ "global": ctx.config() }),
        seeds(ctx),
        dir.join("manifest.json"),
    );
    let mut per_metric: BTreeMap<&str, Vec<StrategyScore>> = BTreeMap::new();
    for p in reports {
        rec.input(p)?;
        let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
        let r: RamanujanOutput =
            serde_json::from_str(&text).with_context(|| format!("bad ramanujan report {}", p.display()))?;
        for m in &r.masks {
            for name in BASELINE_NAMES {
                if let Some(score) = m.baselines.get(name) {
                    per_metric.entry(name).or_default().push(StrategyScore {
                        architecture: r.architecture.clone(),
                        dataset: m.dataset.clone(),
                        sparsity: m.sparsity,
                        algorithm: m.algorithm.clone(),
                        score,
                        order: Order::Desc,
                    });
                }
            }
        }
    }
    for (name, scores) in &per_metric {
        let p = dir.join(format!("{name}.csv"));
        write_strategy_csv(scores, create(&p)?)?;
        rec.output(&p)?;
        println!("{name}: {} scores -> {}", scores.len(), p.display());
    }
    rec.finish()?;
    Ok(())
}

// fixtures

pub fn fixtures(ctx: &Ctx, out: Option<&Path>) -> Result<()> {
    let dir = ctx.out(out.unwrap_or(Path::new("fixtures")));
    let mut rec = Recorder::new(
        "fixtures",
        json!({ "global": ctx.config() }),
        seeds(ctx),
        dir.join("manifest.json"),
    );
    let written = fixtures::install(&dir).with_context(|| format!("cannot install into {}", dir.display()))?;
    for p in &written {
        rec.output(p)?;
    }
    let rows = read_accuracy(&[])?.len();
    println!(
        "installed {} architectures and {} accuracy tables ({rows} rows) into {}",
        fixtures::ARCHITECTURES.len(),
        fixtures::ACCURACY_TABLES.len(),
        dir.display()
    );
    rec.finish()?;
    Ok(())
}
