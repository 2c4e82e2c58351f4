//! Accuracy-drop regression and feature importance over topometric vectors.
//!
//! Records pair a pruned network's accuracy with its sixteen topometrics. A
//! [`Scenario`] selects a slice (fixed sparsity or fixed architecture), and
//! [`run_regression`] evaluates the regressor suite with seeded k-fold
//! cross-validation whose folds are stratified by dataset.

mod regressors;

pub use regressors::*;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{mean, pearson, std_dev};
use crate::topometrics::{Metrics16, MetricsRow, METRIC_COUNT, METRIC_NAMES};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("dense accuracy must be positive (got {0})")]
    ZeroDenseAccuracy(f64),
    #[error("scenario `{scenario}` has {found} records, need at least {needed}")]
    TooFewRecords { scenario: String, needed: usize, found: usize },
    #[error("feature `{0}` is missing or non-finite for some records")]
    NonFinite(String),
    #[error("invalid scenario `{0}` (expected sparsity:S, arch:NAME or all)")]
    Scenario(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One row of a published accuracy table. `acc` is `None` where the pruned
/// network did not train above chance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRecord {
    pub architecture: String,
    pub dataset: String,
    pub algorithm: String,
    pub sparsity: f64,
    pub run: usize,
    pub acc: Option<f64>,
    pub acc_dense: f64,
    #[serde(default)]
    pub acc_std: Option<f64>,
    #[serde(default)]
    pub acc_dense_std: Option<f64>,
}

pub fn read_accuracy_csv(r: impl Read) -> Result<Vec<AccuracyRecord>, AnalysisError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub fn write_accuracy_csv(records: &[AccuracyRecord], w: impl Write) -> Result<(), AnalysisError> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// `1 - acc_s / acc_d`; negative when the sparse network beats the dense one.
pub fn accuracy_drop(acc_s: f64, acc_d: f64) -> Result<f64, AnalysisError> {
    if acc_d <= 0.0 || !acc_d.is_finite() {
        return Err(AnalysisError::ZeroDenseAccuracy(acc_d));
    }
    Ok(1.0 - acc_s / acc_d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub architecture: String,
    pub dataset: String,
    pub sparsity: f64,
    pub algorithm: String,
    pub run: usize,
    pub acc_sparse: f64,
    pub acc_dense: f64,
    pub topometrics: Metrics16,
}

impl AnalysisRecord {
    pub fn drop(&self) -> f64 {
        1.0 - self.acc_sparse / self.acc_dense
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JoinSummary {
    pub joined: usize,
    /// Accuracy rows without a usable accuracy value (below chance or zero dense accuracy).
    pub skipped_accuracy: usize,
    /// Accuracy rows with no matching metrics row.
    pub unmatched: usize,
}

const SPARSITY_EPS: f64 = 1e-9;

/// Pairs accuracy rows with metric rows on architecture, dataset, algorithm,
/// sparsity and run. A metrics row with dataset `*` serves every dataset; when
/// no row has the same run id, the lowest run with an otherwise equal key is used.
pub fn join_records(accuracy: &[AccuracyRecord], metrics: &[MetricsRow]) -> (Vec<AnalysisRecord>, JoinSummary) {
    let mut summary = JoinSummary::default();
    let mut out = Vec::new();
    for a in accuracy {
        let Some(acc) = a.acc else {
            summary.skipped_accuracy += 1;
            continue;
        };
        if accuracy_drop(acc, a.acc_dense).is_err() {
            summary.skipped_accuracy += 1;
            continue;
        }
        let candidates: Vec<&MetricsRow> = metrics
            .iter()
            .filter(|m| {
                m.architecture == a.architecture
                    && m.algorithm == a.algorithm
                    && m.matches_dataset(&a.dataset)
                    && (m.sparsity - a.sparsity).abs() < SPARSITY_EPS
            })
            .collect();
        let exact_dataset = |m: &&&MetricsRow| m.dataset == a.dataset;
        let pick = candidates
            .iter()
            .filter(exact_dataset)
            .find(|m| m.run == a.run)
            .or_else(|| candidates.iter().find(|m| m.run == a.run))
            .or_else(|| candidates.iter().filter(exact_dataset).min_by_key(|m| m.run))
            .or_else(|| candidates.iter().min_by_key(|m| m.run));
        match pick {
            Some(m) => {
                out.push(AnalysisRecord {
                    architecture: a.architecture.clone(),
                    dataset: a.dataset.clone(),
                    sparsity: a.sparsity,
                    algorithm: a.algorithm.clone(),
                    run: a.run,
                    acc_sparse: acc,
                    acc_dense: a.acc_dense,
                    topometrics: m.normalized,
                });
                summary.joined += 1;
            }
            None => summary.unmatched += 1,
        }
    }
    (out, summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SparsityFixed(f64),
    ArchitectureFixed(String),
    All,
}

impl Scenario {
    pub fn matches(&self, r: &AnalysisRecord) -> bool {
        match self {
            Scenario::SparsityFixed(s) => (r.sparsity - s).abs() < SPARSITY_EPS,
            Scenario::ArchitectureFixed(a) => &r.architecture == a,
            Scenario::All => true,
        }
    }

    pub fn select<'a>(&self, records: &'a [AnalysisRecord]) -> Vec<&'a AnalysisRecord> {
        records.iter().filter(|r| self.matches(r)).collect()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::SparsityFixed(s) => write!(f, "sparsity:{s}"),
            Scenario::ArchitectureFixed(a) => write!(f, "arch:{a}"),
            Scenario::All => f.write_str("all"),
        }
    }
}

impl FromStr for Scenario {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AnalysisError::Scenario(s.to_string());
        if s == "all" {
            return Ok(Scenario::All);
        }
        let (k, v) = s.split_once(':').ok_or_else(bad)?;
        match k {
            "sparsity" | "s" => {
                let x: f64 = v.parse().map_err(|_| bad())?;
                if !(0.0..1.0).contains(&x) {
                    return Err(bad());
                }
                Ok(Scenario::SparsityFixed(x))
            }
            "arch" | "architecture" if !v.is_empty() => Ok(Scenario::ArchitectureFixed(v.to_string())),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionConfig {
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    pub regressors: Vec<RegressorKind>,
    pub params: RegressorParams,
    /// Weights for averaging importances over regressors; `None` is equal weighting.
    pub importance_weights: Option<Vec<f64>>,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            runs: 100,
            seed: 0,
            regressors: RegressorKind::ALL.to_vec(),
            params: RegressorParams::default(),
            importance_weights: None,
        }
    }
}

impl RegressionConfig {
    fn validate(&self) -> Result<(), AnalysisError> {
        if self.folds < 2 {
            return Err(AnalysisError::Config("at least 2 folds are required".into()));
        }
        if self.runs == 0 {
            return Err(AnalysisError::Config("at least one run is required".into()));
        }
        if self.regressors.is_empty() {
            return Err(AnalysisError::Config("no regressors configured".into()));
        }
        if let Some(w) = &self.importance_weights {
            if w.len() != self.regressors.len() {
                return Err(AnalysisError::Config(format!(
                    "{} importance weights for {} regressors",
                    w.len(),
                    self.regressors.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                return Err(AnalysisError::Config("importance weights must be nonnegative with a positive sum".into()));
            }
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        let w = self
            .importance_weights
            .clone()
            .unwrap_or_else(|| vec![1.0; self.regressors.len()]);
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }
}

/// Per-feature min-max scaler. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(xs: &[Vec<f64>]) -> Self {
        let p = xs.first().map_or(0, Vec::len);
        let mut min = vec![f64::INFINITY; p];
        let mut max = vec![f64::NEG_INFINITY; p];
        for r in xs {
            for j in 0..p {
                min[j] = min[j].min(r[j]);
                max[j] = max[j].max(r[j]);
            }
        }
        Self { min, max }
    }

    pub fn transform(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        xs.iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let range = self.max[j] - self.min[j];
                        if range > 0.0 {
                            (v - self.min[j]) / range
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// The design matrix of a scenario slice after dropping unusable columns.
#[derive(Debug, Clone)]
pub struct Design {
    pub features: Vec<usize>,
    pub dropped: Vec<usize>,
    pub xs: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub datasets: Vec<String>,
}

/// Builds the design for a slice. Columns that are constant or never computed
/// are dropped; a column computed for only some records is an error.
pub fn design(records: &[&AnalysisRecord]) -> Result<Design, AnalysisError> {
    let mut features = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..METRIC_COUNT {
        let col: Vec<f64> = records.iter().map(|r| r.topometrics.0[j]).collect();
        if col.iter().all(|v| v.is_nan()) {
            dropped.push(j);
            continue;
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(AnalysisError::NonFinite(METRIC_NAMES[j].to_string()));
        }
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi > lo {
            features.push(j);
        } else {
            dropped.push(j);
        }
    }
    let xs = records
        .iter()
        .map(|r| features.iter().map(|&j| r.topometrics.0[j]).collect())
        .collect();
    Ok(Design {
        features,
        dropped,
        xs,
        y: records.iter().map(|r| r.drop()).collect(),
        datasets: records.iter().map(|r| r.dataset.clone()).collect(),
    })
}

/// Fold index per record: each dataset group is shuffled, then groups are dealt
/// round-robin so every fold mixes datasets.
pub fn stratified_folds(datasets: &[String], k: usize, seed: u64, run: u64) -> Vec<usize> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, d) in datasets.iter().enumerate() {
        groups.entry(d.as_str()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    let mut fold = vec![0; datasets.len()];
    let mut counter = 0;
    for idx in groups.values_mut() {
        idx.shuffle(&mut rng);
        for &i in idx.iter() {
            fold[i] = counter % k;
            counter += 1;
        }
    }
    fold
}

/// `1 - (1 - r2)(n - 1)/(n - p - 1)`, or `None` when `n <= p + 1`.
pub fn adjusted_r2(r2: f64, n: usize, p: usize) -> Option<f64> {
    (n > p + 1).then(|| 1.0 - (1.0 - r2) * (n as f64 - 1.0) / ((n - p - 1) as f64))
}

/// Coefficient of determination against the mean of `y`; `None` for constant `y`.
pub fn r2_score(y: &[f64], pred: &[f64]) -> Option<f64> {
    let m = mean(y);
    let ss_tot: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    if ss_tot <= 0.0 {
        return None;
    }
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum();
    Some(1.0 - ss_res / ss_tot)
}

pub fn mae(y: &[f64], pred: &[f64]) -> f64 {
    mean(&y.iter().zip(pred).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
}

#[derive(Debug, Clone, Default, PartialEq)]
struct RunScores {
    adj_r2: Vec<f64>,
    r2: Vec<f64>,
    mae: Vec<f64>,
    skipped: usize,
    fallbacks: usize,
}

fn cross_validate(d: &Design, folds: &[usize], k: usize, kind: RegressorKind, params: &RegressorParams) -> RunScores {
    let mut s = RunScores::default();
    let p = d.features.len();
    for f in 0..k {
        let (mut tr_x, mut tr_y, mut te_x, mut te_y) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (i, &fi) in folds.iter().enumerate() {
            if fi == f {
                te_x.push(d.xs[i].clone());
                te_y.push(d.y[i]);
            } else {
                tr_x.push(d.xs[i].clone());
                tr_y.push(d.y[i]);
            }
        }
        if te_y.is_empty() || tr_y.is_empty() {
            s.skipped += 1;
            continue;
        }
        let scaler = MinMaxScaler::fit(&tr_x);
        let model = fit(kind, &scaler.transform(&tr_x), &tr_y, params);
        s.fallbacks += model.ridge_fallback as usize;
        let pred = model.predict(&scaler.transform(&te_x));
        s.mae.push(mae(&te_y, &pred));
        match r2_score(&te_y, &pred).and_then(|r2| adjusted_r2(r2, te_y.len(), p).map(|a| (r2, a))) {
            Some((r2, a)) => {
                s.r2.push(r2);
                s.adj_r2.push(a);
            }
            None => s.skipped += 1,
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSummary {
    pub regressor: RegressorKind,
    /// Mean and standard deviation of held-out adjusted R² over all evaluated folds and runs.
    pub adj_r2_mean: Option<f64>,
    pub adj_r2_std: Option<f64>,
    pub r2_mean: Option<f64>,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub folds_evaluated: usize,
    /// Folds where adjusted R² was undefined (too few test records or constant target).
    pub folds_skipped: usize,
    pub ridge_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub pearson: f64,
    /// The correlation was undefined (dropped column or constant prediction) and counted as 0.
    pub undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub scenario: Scenario,
    pub records: usize,
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    pub features: Vec<String>,
    pub dropped_features: Vec<String>,
    pub regressors: Vec<RegressorSummary>,
    pub importance: Vec<FeatureImportance>,
    pub notes: Vec<String>,
}

impl RegressionReport {
    /// Importance values in metric order.
    pub fn importance_vector(&self) -> [f64; METRIC_COUNT] {
        let mut out = [0.0; METRIC_COUNT];
        for fi in &self.importance {
            if let Some(j) = METRIC_NAMES.iter().position(|n| *n == fi.feature) {
                out[j] = fi.pearson;
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String, AnalysisError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, AnalysisError> {
        Ok(serde_json::from_str(s)?)
    }
}

fn slice<'a>(
    records: &'a [AnalysisRecord],
    scenario: &Scenario,
    config: &RegressionConfig,
) -> Result<(Vec<&'a AnalysisRecord>, Design), AnalysisError> {
    config.validate()?;
    let sel = scenario.select(records);
    let needed = 2 * config.folds;
    if sel.len() < needed {
        return Err(AnalysisError::TooFewRecords {
            scenario: scenario.to_string(),
            needed,
            found: sel.len(),
        });
    }
    let d = design(&sel)?;
    Ok((sel, d))
}

fn importance_from(d: &Design, config: &RegressionConfig) -> (Vec<FeatureImportance>, usize) {
    let weights = config.weights();
    let scaler = MinMaxScaler::fit(&d.xs);
    let xs = scaler.transform(&d.xs);
    let preds: Vec<(Vec<f64>, bool)> = config
        .regressors
        .par_iter()
        .map(|&k| {
            let m = fit(k, &xs, &d.y, &config.params);
            (m.predict(&xs), m.ridge_fallback)
        })
        .collect();
    let fallbacks = preds.iter().filter(|p| p.1).count();
    let importance = (0..METRIC_COUNT)
        .map(|j| {
            let col = d.features.iter().position(|&f| f == j);
            let mut value = 0.0;
            let mut undefined = col.is_none();
            if let Some(c) = col {
                let x: Vec<f64> = d.xs.iter().map(|r| r[c]).collect();
                for ((pred, _), w) in preds.iter().zip(&weights) {
                    match pearson(&x, pred) {
                        Some(r) => value += w * r,
                        None => undefined = true,
                    }
                }
            }
            FeatureImportance {
                feature: METRIC_NAMES[j].to_string(),
                pearson: value.clamp(-1.0, 1.0),
                undefined,
            }
        })
        .collect();
    (importance, fallbacks)
}

/// Pearson correlation of each metric with the predicted drop, averaged over
/// the configured regressors fitted on the whole slice. Undefined correlations
/// count as 0 and are flagged.
pub fn feature_importance(
    records: &[AnalysisRecord],
    scenario: &Scenario,
    config: &RegressionConfig,
) -> Result<Vec<FeatureImportance>, AnalysisError> {
    let (_, d) = slice(records, scenario, config)?;
    Ok(importance_from(&d, config).0)
}

pub fn run_regression(
    records: &[AnalysisRecord],
    scenario: &Scenario,
    config: &RegressionConfig,
) -> Result<RegressionReport, AnalysisError> {
    let (sel, d) = slice(records, scenario, config)?;
    let k = config.folds;
    let fold_sets: Vec<Vec<usize>> = (0..config.runs as u64)
        .map(|run| stratified_folds(&d.datasets, k, config.seed, run))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..config.regressors.len())
        .flat_map(|r| (0..config.runs).map(move |run| (r, run)))
        .collect();
    let scores: Vec<RunScores> = pairs
        .par_iter()
        .map(|&(r, run)| cross_validate(&d, &fold_sets[run], k, config.regressors[r], &config.params))
        .collect();

    let mut notes = Vec::new();
    let mut summaries = Vec::new();
    for (r, &kind) in config.regressors.iter().enumerate() {
        let mut acc = RunScores::default();
        for s in &scores[r * config.runs..(r + 1) * config.runs] {
            acc.adj_r2.extend(&s.adj_r2);
            acc.r2.extend(&s.r2);
            acc.mae.extend(&s.mae);
            acc.skipped += s.skipped;
            acc.fallbacks += s.fallbacks;
        }
        let defined = !acc.adj_r2.is_empty();
        if !defined {
            notes.push(format!(
                "{kind}: adjusted R² undefined on every fold ({} test records per fold, {} features)",
                sel.len() / k,
                d.features.len()
            ));
        }
        summaries.push(RegressorSummary {
            regressor: kind,
            adj_r2_mean: defined.then(|| mean(&acc.adj_r2)),
            adj_r2_std: defined.then(|| std_dev(&acc.adj_r2)),
            r2_mean: defined.then(|| mean(&acc.r2)),
            mae_mean: mean(&acc.mae),
            mae_std: std_dev(&acc.mae),
            folds_evaluated: acc.adj_r2.len(),
            folds_skipped: acc.skipped,
            ridge_fallbacks: acc.fallbacks,
        });
    }
    let (importance, fallbacks) = importance_from(&d, config);
    if fallbacks > 0 {
        notes.push(format!("{fallbacks} full-slice fits used the ridge fallback"));
    }
    if !d.dropped.is_empty() {
        notes.push(format!(
            "dropped constant or missing features: {}",
            d.dropped.iter().map(|&j| METRIC_NAMES[j]).collect::<Vec<_>>().join(", ")
        ));
    }
    Ok(RegressionReport {
        scenario: scenario.clone(),
        records: sel.len(),
        folds: k,
        runs: config.runs,
        seed: config.seed,
        features: d.features.iter().map(|&j| METRIC_NAMES[j].to_string()).collect(),
        dropped_features: d.dropped.iter().map(|&j| METRIC_NAMES[j].to_string()).collect(),
        regressors: summaries,
        importance,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rec(dataset: &str, x: [f64; 2], acc: f64) -> AnalysisRecord {
        let mut m = Metrics16::default();
        m.0[0] = x[0];
        m.0[1] = x[1];
        AnalysisRecord {
            architecture: "conv6".into(),
            dataset: dataset.into(),
            sparsity: 0.9,
            algorithm: "erk".into(),
            run: 0,
            acc_sparse: acc,
            acc_dense: 100.0,
            topometrics: m,
        }
    }

    #[test]
    fn drop_values() {
        assert_eq!(accuracy_drop(50.0, 50.0).unwrap(), 0.0);
        assert_eq!(accuracy_drop(0.0, 93.2).unwrap(), 1.0);
        assert_abs_diff_eq!(accuracy_drop(83.8, 93.2).unwrap(), 0.100858, epsilon = 1e-6);
        assert!(accuracy_drop(1.0, 0.0).is_err());
    }

    #[test]
    fn scenario_parse() {
        assert_eq!("sparsity:0.9".parse::<Scenario>().unwrap(), Scenario::SparsityFixed(0.9));
        assert_eq!(
            "arch:conv6".parse::<Scenario>().unwrap(),
            Scenario::ArchitectureFixed("conv6".into())
        );
        assert_eq!("all".parse::<Scenario>().unwrap(), Scenario::All);
        assert!("sparsity:2".parse::<Scenario>().is_err());
        assert!("foo".parse::<Scenario>().is_err());
        assert_eq!(Scenario::SparsityFixed(0.98).to_string(), "sparsity:0.98");
    }

    #[test]
    fn folds_mix_datasets() {
        let ds: Vec<String> = (0..30).map(|i| ["a", "b", "c"][i % 3].to_string()).collect();
        let f = stratified_folds(&ds, 5, 1, 0);
        for fold in 0..5 {
            let members: Vec<&String> = (0..30).filter(|&i| f[i] == fold).map(|i| &ds[i]).collect();
            assert_eq!(members.len(), 6);
            assert!(members.iter().any(|d| *d == "a") && members.iter().any(|d| *d == "c"));
        }
        assert_eq!(f, stratified_folds(&ds, 5, 1, 0));
        assert_ne!(f, stratified_folds(&ds, 5, 1, 1));
    }

    #[test]
    fn perfect_fit_and_constant_column() {
        let mut records = Vec::new();
        for i in 0..40 {
            let a = (i as f64 * 0.37).sin();
            let b = (i as f64 * 0.91).cos();
            let mut r = rec(["x", "y"][i % 2], [a, b], 0.0);
            r.topometrics.0[2] = 5.0;
            r.acc_sparse = 100.0 * (1.0 - (2.0 * a + 3.0 * b));
            records.push(r);
        }
        let cfg = RegressionConfig {
            runs: 3,
            regressors: vec![RegressorKind::Ols],
            ..Default::default()
        };
        let rep = run_regression(&records, &Scenario::All, &cfg).unwrap();
        assert_eq!(rep.features, vec!["sink", "source"]);
        assert_eq!(rep.dropped_features.len(), 14);
        let s = &rep.regressors[0];
        assert!(s.adj_r2_mean.unwrap() > 1.0 - 1e-9);
        assert!(s.mae_mean < 1e-9);
        let imp = rep.importance_vector();
        assert_eq!(imp[2], 0.0);
        assert!(rep.importance[2].undefined);
        let again = run_regression(&records, &Scenario::All, &cfg).unwrap();
        assert_eq!(rep.to_json().unwrap(), again.to_json().unwrap());
    }

    #[test]
    fn too_few_records() {
        let records: Vec<_> = (0..5).map(|i| rec("x", [i as f64, 1.0], 50.0)).collect();
        assert!(matches!(
            run_regression(&records, &Scenario::All, &RegressionConfig::default()),
            Err(AnalysisError::TooFewRecords { .. })
        ));
    }

    #[test]
    fn accuracy_csv_round_trip() {
        let text = "architecture,dataset,algorithm,sparsity,run,acc,acc_dense\nconv6,cifar10,snip,0.9,0,,93.2\n";
        let recs = read_accuracy_csv(text.as_bytes()).unwrap();
        assert_eq!(recs[0].acc, None);
        assert_eq!(recs[0].acc_std, None);
        let mut buf = Vec::new();
        write_accuracy_csv(&recs, &mut buf).unwrap();
        assert_eq!(read_accuracy_csv(buf.as_slice()).unwrap(), recs);
    }
}
