//! Topometric-mixture ranking of pruning algorithms and rank-biased overlap.
//!
//! The mixture score of an algorithm is its (within-cell min-max normalized)
//! topometric vector weighted by the mean of the architecture-fixed and
//! sparsity-fixed importance vectors; lower scores rank first. Baseline
//! strategies (Ramanujan metrics, layer density) rank higher scores first.
//! Rankings are compared to the accuracy ordering with RBO.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::AccuracyRecord;
use crate::ramanujan::LayerRamanujan;
use crate::stats::{mean, std_dev};
use crate::topometrics::{MetricsRow, METRIC_COUNT};

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("length mismatch: x has {x}, w_arch {wm}, w_sparsity {ws}")]
    Length { x: usize, wm: usize, ws: usize },
    #[error("need at least 2 algorithms to rank, got {0}")]
    TooFew(usize),
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("strategy `{strategy}` has no score for `{algorithm}` in {cell}")]
    MissingAlgorithm { strategy: String, algorithm: String, cell: String },
    #[error("invalid order `{0}` (expected asc or desc)")]
    Order(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// `Σ x_i (wM_i + ws_i) / 2`.
pub fn ranking_coefficient(x: &[f64], w_arch: &[f64], w_sparsity: &[f64]) -> Result<f64, RankingError> {
    if x.len() != w_arch.len() || x.len() != w_sparsity.len() {
        return Err(RankingError::Length {
            x: x.len(),
            wm: w_arch.len(),
            ws: w_sparsity.len(),
        });
    }
    Ok(x.iter()
        .zip(w_arch.iter().zip(w_sparsity))
        .map(|(xi, (a, s))| xi * ((a + s) / 2.0))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingInput {
    pub algorithm: String,
    pub x: Vec<f64>,
    pub w_arch: Vec<f64>,
    pub w_sparsity: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Asc,
    Desc,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Order::Asc => "asc",
            Order::Desc => "desc",
        })
    }
}

impl FromStr for Order {
    type Err = RankingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "asc" => Ok(Order::Asc),
            "desc" => Ok(Order::Desc),
            _ => Err(RankingError::Order(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub algorithms: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Adjacent pairs with equal scores, ordered by name.
    pub ties: Vec<(String, String)>,
}

impl RankedList {
    pub fn has_ties(&self) -> bool {
        !self.ties.is_empty()
    }
}

/// Sorts `(name, score)` pairs; equal scores fall back to name order and are recorded as ties.
pub fn rank_scores(scores: &[(String, f64)], order: Order) -> RankedList {
    let mut v: Vec<&(String, f64)> = scores.iter().collect();
    v.sort_by(|a, b| {
        let c = a.1.total_cmp(&b.1);
        let c = if order == Order::Desc { c.reverse() } else { c };
        c.then_with(|| a.0.cmp(&b.0))
    });
    let ties = v
        .windows(2)
        .filter(|w| w[0].1 == w[1].1)
        .map(|w| (w[0].0.clone(), w[1].0.clone()))
        .collect();
    RankedList {
        algorithms: v.iter().map(|p| p.0.clone()).collect(),
        coefficients: v.iter().map(|p| p.1).collect(),
        ties,
    }
}

/// Ascending ranking coefficient order; the first algorithm is preferred.
pub fn rank_algorithms(inputs: &[RankingInput]) -> Result<RankedList, RankingError> {
    if inputs.len() < 2 {
        return Err(RankingError::TooFew(inputs.len()));
    }
    let scores = inputs
        .iter()
        .map(|i| Ok((i.algorithm.clone(), ranking_coefficient(&i.x, &i.w_arch, &i.w_sparsity)?)))
        .collect::<Result<Vec<_>, RankingError>>()?;
    Ok(rank_scores(&scores, Order::Asc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rbo {
    pub value: f64,
    pub depth: usize,
    /// Weight of the untruncated tail, `alpha^depth`.
    pub residual: f64,
}

/// Rank-biased overlap truncated at the shorter list.
pub fn rbo_truncated<S: AsRef<str>>(a: &[S], b: &[S], alpha: f64) -> Result<Rbo, RankingError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RankingError::Alpha(alpha));
    }
    let depth = a.len().min(b.len());
    let mut seen_a = HashSet::new();
    let mut seen_b = HashSet::new();
    let mut overlap = 0usize;
    let mut sum = 0.0;
    let mut weight = 1.0;
    for d in 0..depth {
        let (x, y) = (a[d].as_ref(), b[d].as_ref());
        if x == y {
            overlap += 1;
        } else {
            overlap += seen_b.contains(x) as usize + seen_a.contains(y) as usize;
        }
        seen_a.insert(x);
        seen_b.insert(y);
        sum += weight * overlap as f64 / (d + 1) as f64;
        weight *= alpha;
    }
    Ok(Rbo {
        value: (1.0 - alpha) * sum,
        depth,
        residual: weight,
    })
}

pub fn rbo<S: AsRef<str>>(a: &[S], b: &[S], alpha: f64) -> Result<f64, RankingError> {
    rbo_truncated(a, b, alpha).map(|r| r.value)
}

pub const RBO_ALPHAS: [f64; 3] = [0.25, 0.5, 0.75];

pub fn rbo_mean<S: AsRef<str>>(a: &[S], b: &[S]) -> Result<f64, RankingError> {
    let mut s = 0.0;
    for alpha in RBO_ALPHAS {
        s += rbo(a, b, alpha)?;
    }
    Ok(s / RBO_ALPHAS.len() as f64)
}

/// Min-max normalizes each metric across the given vectors. Missing values and
/// constant columns become 0.
pub fn normalize_cell(vectors: &[[f64; METRIC_COUNT]]) -> Vec<[f64; METRIC_COUNT]> {
    let mut out = vec![[0.0; METRIC_COUNT]; vectors.len()];
    for j in 0..METRIC_COUNT {
        let vals = vectors.iter().map(|v| v[j]).filter(|v| v.is_finite());
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        for (o, v) in out.iter_mut().zip(vectors) {
            o[j] = if v[j].is_finite() && hi > lo { (v[j] - lo) / (hi - lo) } else { 0.0 };
        }
    }
    out
}

/// One algorithm's score within an ⟨architecture, dataset, sparsity⟩ cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyScore {
    pub architecture: String,
    pub dataset: String,
    pub sparsity: f64,
    pub algorithm: String,
    pub score: f64,
    pub order: Order,
}

pub fn read_strategy_csv(r: impl Read) -> Result<Vec<StrategyScore>, RankingError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub fn write_strategy_csv(scores: &[StrategyScore], w: impl Write) -> Result<(), RankingError> {
    let mut wr = csv::Writer::from_writer(w);
    for s in scores {
        wr.serialize(s)?;
    }
    wr.flush()?;
    Ok(())
}

type CellKey = (String, String, u64);

fn cell_key(arch: &str, dataset: &str, sparsity: f64) -> CellKey {
    (arch.to_string(), dataset.to_string(), sparsity.to_bits())
}

/// Mixture scores for every cell of a metrics table. Rows with the same cell and
/// algorithm (several runs) are averaged before normalization.
pub fn mixture_scores(
    rows: &[MetricsRow],
    w_arch: &[f64; METRIC_COUNT],
    w_sparsity: &[f64; METRIC_COUNT],
) -> Vec<StrategyScore> {
    let mut cells: BTreeMap<CellKey, BTreeMap<String, Vec<[f64; METRIC_COUNT]>>> = BTreeMap::new();
    for r in rows {
        cells
            .entry(cell_key(&r.architecture, &r.dataset, r.sparsity))
            .or_default()
            .entry(r.algorithm.clone())
            .or_default()
            .push(r.normalized.0);
    }
    let mut out = Vec::new();
    for ((arch, dataset, bits), algos) in cells {
        let names: Vec<&String> = algos.keys().collect();
        let averaged: Vec<[f64; METRIC_COUNT]> = algos
            .values()
            .map(|vs| std::array::from_fn(|j| mean(&vs.iter().map(|v| v[j]).collect::<Vec<_>>())))
            .collect();
        for (name, x) in names.into_iter().zip(normalize_cell(&averaged)) {
            let score = ranking_coefficient(&x, w_arch, w_sparsity).expect("fixed-length vectors");
            out.push(StrategyScore {
                architecture: arch.clone(),
                dataset: dataset.clone(),
                sparsity: f64::from_bits(bits),
                algorithm: name.clone(),
                score,
                order: Order::Asc,
            });
        }
    }
    out
}

/// Network-level baselines: the mean over feasible layers of each Ramanujan
/// metric and the mean density over all layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkBaselines {
    pub delta_r: Option<f64>,
    pub delta_r_imdb: Option<f64>,
    pub lambda_imsg: Option<f64>,
    pub density: f64,
}

pub const BASELINE_NAMES: [&str; 4] = ["delta_r", "delta_r_imdb", "lambda_imsg", "density"];

impl NetworkBaselines {
    pub fn from_layers(layers: &[LayerRamanujan]) -> Self {
        let avg = |f: &dyn Fn(&LayerRamanujan) -> Option<f64>| {
            let v: Vec<f64> = layers.iter().filter_map(f).collect();
            (!v.is_empty()).then(|| mean(&v))
        };
        Self {
            delta_r: avg(&|l| l.delta_r),
            delta_r_imdb: avg(&|l| l.delta_r_imdb),
            lambda_imsg: avg(&|l| l.lambda_imsg),
            density: mean(&layers.iter().map(|l| l.density).collect::<Vec<_>>()),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "delta_r" => self.delta_r,
            "delta_r_imdb" => self.delta_r_imdb,
            "lambda_imsg" => self.lambda_imsg,
            "density" => Some(self.density),
            _ => None,
        }
    }
}

/// Accuracy-derived ordering of one cell: descending mean accuracy, then lower
/// standard deviation, then name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub architecture: String,
    pub dataset: String,
    pub sparsity: f64,
    pub algorithms: Vec<String>,
}

/// Ground-truth rankings for every cell. Dense rows and rows without accuracy are ignored.
pub fn ground_truth(records: &[AccuracyRecord]) -> Vec<GroundTruth> {
    let mut cells: BTreeMap<CellKey, BTreeMap<String, Vec<&AccuracyRecord>>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.acc.is_some() && r.algorithm != "dense") {
        cells
            .entry(cell_key(&r.architecture, &r.dataset, r.sparsity))
            .or_default()
            .entry(r.algorithm.clone())
            .or_default()
            .push(r);
    }
    cells
        .into_iter()
        .map(|((architecture, dataset, bits), algos)| {
            let mut stats: Vec<(String, f64, f64)> = algos
                .into_iter()
                .map(|(name, rs)| {
                    let accs: Vec<f64> = rs.iter().filter_map(|r| r.acc).collect();
                    let sd = if accs.len() > 1 {
                        std_dev(&accs)
                    } else {
                        rs[0].acc_std.unwrap_or(0.0)
                    };
                    (name, mean(&accs), sd)
                })
                .collect();
            stats.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.2.total_cmp(&b.2)).then_with(|| a.0.cmp(&b.0)));
            GroundTruth {
                architecture,
                dataset,
                sparsity: f64::from_bits(bits),
                algorithms: stats.into_iter().map(|s| s.0).collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: String,
    pub architecture: String,
    pub sparsity: f64,
    /// RBO_mean averaged over the datasets of the cell.
    pub rbo_mean: f64,
    pub datasets: usize,
}

/// Compares each named strategy against the accuracy ordering. Strategy rows
/// with dataset `*` apply to every dataset; algorithms outside the ground truth
/// universe are ignored.
pub fn evaluate_strategies(
    accuracy: &[AccuracyRecord],
    strategies: &[(String, Vec<StrategyScore>)],
) -> Result<Vec<StrategyResult>, RankingError> {
    let truths = ground_truth(accuracy);
    let mut out = Vec::new();
    for (name, scores) in strategies {
        let mut per_cell: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
        for gt in &truths {
            let cell = format!("{}/{}/{}", gt.architecture, gt.dataset, gt.sparsity);
            if gt.algorithms.len() < 2 {
                return Err(RankingError::TooFew(gt.algorithms.len()));
            }
            let relevant: Vec<&StrategyScore> = scores
                .iter()
                .filter(|s| {
                    s.architecture == gt.architecture
                        && (s.dataset == gt.dataset || s.dataset == "*")
                        && (s.sparsity - gt.sparsity).abs() < 1e-9
                })
                .collect();
            if relevant.is_empty() {
                continue;
            }
            let order = relevant[0].order;
            let universe: BTreeSet<&str> = gt.algorithms.iter().map(String::as_str).collect();
            let mut picked: BTreeMap<&str, f64> = BTreeMap::new();
            for s in &relevant {
                if universe.contains(s.algorithm.as_str()) {
                    let exact = s.dataset == gt.dataset;
                    if exact || !picked.contains_key(s.algorithm.as_str()) {
                        picked.insert(s.algorithm.as_str(), s.score);
                    }
                }
            }
            if let Some(missing) = gt.algorithms.iter().find(|a| !picked.contains_key(a.as_str())) {
                return Err(RankingError::MissingAlgorithm {
                    strategy: name.clone(),
                    algorithm: missing.clone(),
                    cell,
                });
            }
            let pairs: Vec<(String, f64)> = picked.into_iter().map(|(a, s)| (a.to_string(), s)).collect();
            let ranked = rank_scores(&pairs, order);
            let value = rbo_mean(&ranked.algorithms, &gt.algorithms)?;
            per_cell
                .entry((gt.architecture.clone(), gt.sparsity.to_bits()))
                .or_default()
                .push(value);
        }
        for ((architecture, bits), values) in per_cell {
            out.push(StrategyResult {
                strategy: name.clone(),
                architecture,
                sparsity: f64::from_bits(bits),
                rbo_mean: mean(&values),
                datasets: values.len(),
            });
        }
    }
    Ok(out)
}

/// Writes results as one row per ⟨architecture, sparsity⟩ and one column per strategy.
pub fn write_comparison_csv(results: &[StrategyResult], w: impl Write) -> Result<(), RankingError> {
    let mut strategies: Vec<&str> = Vec::new();
    for r in results {
        if !strategies.contains(&r.strategy.as_str()) {
            strategies.push(&r.strategy);
        }
    }
    let mut rows: BTreeMap<(String, u64), BTreeMap<&str, f64>> = BTreeMap::new();
    for r in results {
        rows.entry((r.architecture.clone(), r.sparsity.to_bits()))
            .or_default()
            .insert(&r.strategy, r.rbo_mean);
    }
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["architecture".to_string(), "sparsity".to_string()];
    header.extend(strategies.iter().map(|s| s.to_string()));
    wr.write_record(&header)?;
    for ((arch, bits), vals) in rows {
        let mut rec = vec![arch, format!("{:?}", f64::from_bits(bits))];
        rec.extend(
            strategies
                .iter()
                .map(|s| vals.get(s).map_or(String::new(), |v| format!("{v:.6}"))),
        );
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}
