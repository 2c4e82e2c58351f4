//! End-to-end run: mask -> graph -> topometrics [-> Ramanujan] [-> regression].

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::json;

use snn_topo::analysis::{join_records, run_regression};
use snn_topo::encoder::io::write_graph;
use snn_topo::encoder::{encode_network, Encoding};
use snn_topo::maskgen::{
    attach_weights, density_report, sidecar_path, write_mask, GeneratorInfo, MaskSidecar, WeightInit,
};
use snn_topo::ramanujan::{density_correlation_study, RamanujanConfig};
use snn_topo::ranking::NetworkBaselines;
use snn_topo::topometrics::{compute_all, write_rows_csv, MetricsRow};

use crate::commands::{
    create, graph_summary, make_mask, metrics_config, print_metrics, print_ramanujan, print_regression,
    read_accuracy, read_mask_file, read_metric_tables, record_arch, regression_config, seeds, MetricsReport,
    RamanujanMask, RamanujanOutput,
};
use crate::manifest::{write_json, Recorder};
use crate::{Ctx, PipelineArgs};

fn tag(stage: &str) -> String {
    format!("[{stage}] stage failed")
}

fn default_dir(a: &PipelineArgs, seed: u64) -> PathBuf {
    let arch = Path::new(&a.arch)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| a.arch.clone());
    let source = if a.mask.is_some() { "mask".to_string() } else { a.method.to_string() };
    PathBuf::from("runs").join(format!("{arch}-{source}-{}-{seed}", a.sparsity))
}

pub fn run(ctx: &Ctx, a: PipelineArgs) -> Result<()> {
    let dir = ctx.out(&a.out.clone().unwrap_or_else(|| default_dir(&a, ctx.seed)));
    let existed = dir.exists();
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut created = Vec::new();
    let res = stages(ctx, &a, &dir, &mut created);
    if res.is_err() {
        for p in &created {
            let _ = std::fs::remove_file(p);
        }
        if !existed {
            let _ = std::fs::remove_dir(&dir);
        }
    }
    res
}

fn stages(ctx: &Ctx, a: &PipelineArgs, dir: &Path, created: &mut Vec<PathBuf>) -> Result<()> {
    let cfg = metrics_config(ctx, &a.set);
    let reg_cfg = regression_config(ctx, a.folds, a.runs, &[]);
    let config = json!({
        "global": ctx.config(),
        "arch": a.arch,
        "mask": a.mask.as_ref().map(|p| p.display().to_string()),
        "method": a.method,
        "sparsity": a.sparsity,
        "weights": a.weights.map(WeightInit::from),
        "encoding": a.encoding,
        "weighted": a.weighted,
        "dataset": a.dataset,
        "algorithm": a.algorithm,
        "run": a.run,
        "metrics": cfg,
        "ramanujan": a.ramanujan.then(RamanujanConfig::default),
        "regression": (!a.records.is_empty()).then(|| json!({ "scenario": a.scenario, "config": reg_cfg })),
    });
    let mut rec = Recorder::new("pipeline", config, seeds(ctx), dir.join("manifest.json"));

    let spec = (|| {
        record_arch(&mut rec, &a.arch)?;
        ctx.arch(&a.arch)
    })()
    .with_context(|| tag("arch"))?;

    let mask_path = dir.join("mask.bin");
    let (mask, generator) = (|| {
        let (mask, generator) = match &a.mask {
            Some(p) => {
                rec.input(p)?;
                let m = read_mask_file(p)?;
                m.check_against(&spec)?;
                let side: Option<MaskSidecar> = std::fs::read_to_string(sidecar_path(p))
                    .ok()
                    .and_then(|t| serde_json::from_str(&t).ok());
                (m, side.and_then(|s| s.generator))
            }
            None => {
                let init = a.weights.map(WeightInit::from);
                let m = rec.stage("mask", || make_mask(ctx, &spec, a.method, a.sparsity, init, Vec::new()))?;
                let g = GeneratorInfo {
                    method: a.method,
                    sparsity: a.sparsity,
                    seed: ctx.seed,
                };
                (m, Some(g))
            }
        };
        let mask = if a.weighted && !mask.is_weighted() {
            attach_weights(&mask, ctx.seed, WeightInit::GaussianFanIn)?
        } else {
            mask
        };
        created.push(mask_path.clone());
        created.push(sidecar_path(&mask_path));
        write_mask(&mask_path, &mask, generator.clone())?;
        anyhow::Ok((mask, generator))
    })()
    .with_context(|| tag("mask"))?;
    let density = density_report(&mask).global_density;
    let sparsity = generator.as_ref().map_or(1.0 - density, |g| g.sparsity);
    let algorithm = a
        .algorithm
        .clone()
        .or_else(|| generator.as_ref().map(|g| g.method.to_string()))
        .unwrap_or_else(|| "unknown".into());
    println!("mask: {} nonzeros, density {density:.4}", mask.nnz());

    let graph_path = dir.join("graph.csr");
    let g = (|| {
        let g = rec.stage("encode", || Ok(encode_network(&spec, &mask, a.encoding, a.weighted)?))?;
        created.push(graph_path.clone());
        write_graph(&graph_path, &g)?;
        anyhow::Ok(g)
    })()
    .with_context(|| tag("encode"))?;
    println!("graph ({}): {}", a.encoding, graph_summary(&g));

    let json_path = dir.join("metrics.json");
    let csv_path = dir.join("metrics.csv");
    let row = (|| {
        let v = rec.stage("metrics", || Ok(compute_all(&g, &cfg)?))?;
        let body = MetricsReport {
            architecture: spec.name(),
            dataset: &a.dataset,
            algorithm: &algorithm,
            sparsity: Some(sparsity),
            run: a.run,
            config: &cfg,
            metrics: &v,
        };
        created.push(json_path.clone());
        write_json(&json_path, &rec.reference(), &body)?;
        let row = MetricsRow::new(spec.name(), &a.dataset, sparsity, &algorithm, a.run, &v);
        created.push(csv_path.clone());
        write_rows_csv(
            std::slice::from_ref(&row),
            &[("config_hash", rec.config_hash())],
            create(&csv_path)?,
        )?;
        print_metrics(&v);
        anyhow::Ok(row)
    })()
    .with_context(|| tag("metrics"))?;
    drop(g);

    if a.ramanujan {
        let path = dir.join("ramanujan.json");
        (|| {
            let masks = vec![("mask".to_string(), mask.clone())];
            let report = rec.stage("ramanujan", || {
                Ok(density_correlation_study(&spec, &masks, Encoding::Rolled, &RamanujanConfig::default())?)
            })?;
            let m = &report.masks[0];
            let output = RamanujanOutput {
                architecture: report.architecture.clone(),
                encoding: report.encoding,
                masks: vec![RamanujanMask {
                    label: m.label.clone(),
                    dataset: a.dataset.clone(),
                    algorithm: algorithm.clone(),
                    sparsity,
                    baselines: NetworkBaselines::from_layers(&m.layers),
                    correlations: m.correlations.clone(),
                    layers: m.layers.clone(),
                }],
            };
            created.push(path.clone());
            write_json(&path, &rec.reference(), &output)?;
            print_ramanujan(&output);
            anyhow::Ok(())
        })()
        .with_context(|| tag("ramanujan"))?;
    }

    if !a.records.is_empty() {
        let path = dir.join("regression.json");
        (|| {
            for p in a.records.iter().chain(&a.metrics_table) {
                rec.input(p)?;
            }
            let accuracy = read_accuracy(&a.records)?;
            let mut rows = read_metric_tables(&a.metrics_table)?;
            rows.push(row.clone());
            let (records, _) = join_records(&accuracy, &rows);
            let report = rec.stage("regress", || Ok(run_regression(&records, &a.scenario, &reg_cfg)?))?;
            created.push(path.clone());
            write_json(&path, &rec.reference(), &report)?;
            print_regression(&report);
            anyhow::Ok(())
        })()
        .with_context(|| tag("regress"))?;
    }

    (|| {
        for p in created.iter() {
            rec.output(p)?;
        }
        created.push(rec.path().to_path_buf());
        let path = rec.path().display().to_string();
        rec.finish()?;
        println!("manifest: {path}");
        anyhow::Ok(())
    })()
    .with_context(|| tag("manifest"))
}
