//! Ramanujan-style expansion baselines over per-layer bipartite graphs.
//!
//! For a graph with average degree `d` and adjacency spectrum `mu`, the bound
//! difference is `2 sqrt(d - 1) - mu_hat`, where `mu_hat` is the largest
//! eigenvalue magnitude once the trivial pair `+-mu0` is excluded. The
//! iterated variants average over the family `K` of distinct i-cores,
//! `i = 3..=degeneracy`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archspec::ArchitectureSpec;
use crate::eigen::{distinct_descending, largest_eigenvalues, LanczosConfig};
use crate::encoder::{rolled_layers, BipartiteGraph, EncodeError, Encoding};
use crate::graph::{DiGraph, UndirectedGraph};
use crate::maskgen::SparseMask;
use crate::stats::{pearson, sum_normalize};
use crate::topometrics::core_numbers;

#[derive(Debug, Error)]
pub enum RamanujanError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("{0}")]
    Undefined(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RamanujanConfig {
    pub lanczos: LanczosConfig,
    /// Relative gap below which two eigenvalues count as equal.
    pub distinct_tol: f64,
    /// Smallest core order included in `K`.
    pub min_core: usize,
}

impl Default for RamanujanConfig {
    fn default() -> Self {
        Self {
            lanczos: LanczosConfig::default(),
            distinct_tol: 1e-6,
            min_core: 3,
        }
    }
}

/// Simple undirected view of a bipartite graph (left nodes first).
pub fn bipartite_view(g: &BipartiteGraph) -> UndirectedGraph {
    let l = g.left as u32;
    let edges: Vec<(u32, u32)> = g.edges.iter().map(|&(a, b)| (a, l + b)).collect();
    DiGraph::from_edges(g.left + g.right, &edges, g.weights.as_deref()).undirected_simple()
}

/// Unweighted copy (all weights 1).
fn unit_weights(u: &UndirectedGraph) -> UndirectedGraph {
    let mut edges = Vec::with_capacity(u.edge_count());
    for v in 0..u.node_count() {
        for &w in u.neighbors(v) {
            if (w as usize) > v {
                edges.push((v as u32, w, 1.0));
            }
        }
    }
    UndirectedGraph::from_edges(u.node_count(), &edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub mu0: f64,
    /// Largest magnitude among eigenvalues other than `+-mu0` (0 if none).
    pub mu_hat: f64,
    pub converged: bool,
}

pub fn spectrum_summary(u: &UndirectedGraph, cfg: &RamanujanConfig) -> SpectrumSummary {
    let n = u.node_count();
    let mut wanted = 3;
    loop {
        let top = largest_eigenvalues(n, |x, y| u.adjacency_matvec(x, y), wanted, &cfg.lanczos);
        let bottom = largest_eigenvalues(
            n,
            |x, y| {
                u.adjacency_matvec(x, y);
                y.iter_mut().for_each(|v| *v = -*v);
            },
            wanted,
            &cfg.lanczos,
        );
        let mu0 = top.values.first().copied().unwrap_or(0.0);
        let tol = cfg.distinct_tol * mu0.abs().max(1.0);
        let hi = distinct_descending(&top.values, tol);
        let lo: Vec<f64> = distinct_descending(&bottom.values, tol).iter().map(|v| -v).collect();
        let trivial = |v: f64| (v - mu0).abs() <= tol || (v + mu0).abs() <= tol;
        let mu_hat = hi
            .iter()
            .chain(&lo)
            .filter(|&&v| !trivial(v))
            .map(|v| v.abs())
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        let enough = |invariant: bool, distinct: usize| distinct >= 2 || invariant || wanted >= n;
        if (enough(top.invariant, hi.len()) && enough(bottom.invariant, lo.len())) || wanted >= 12 {
            return SpectrumSummary {
                mu0,
                mu_hat: mu_hat.unwrap_or(0.0),
                converged: top.converged && bottom.converged,
            };
        }
        wanted += 3;
    }
}

fn average_degree(u: &UndirectedGraph) -> f64 {
    if u.node_count() == 0 {
        0.0
    } else {
        2.0 * u.edge_count() as f64 / u.node_count() as f64
    }
}

fn bound_difference(u: &UndirectedGraph, cfg: &RamanujanConfig) -> Result<f64, RamanujanError> {
    let d = average_degree(u);
    if d <= 1.0 {
        return Err(RamanujanError::Undefined(format!(
            "average degree {d} is not above 1"
        )));
    }
    let s = spectrum_summary(&unit_weights(u), cfg);
    Ok(2.0 * (d - 1.0).sqrt() - s.mu_hat)
}

/// `2 sqrt(d_avg - 1) - mu_hat` on the unweighted simple view.
pub fn delta_r(g: &BipartiteGraph, cfg: &RamanujanConfig) -> Result<f64, RamanujanError> {
    bound_difference(&bipartite_view(g), cfg)
}

/// One member of the core family `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreSubgraph {
    /// Smallest `i` whose i-core has this node set.
    pub order: usize,
    pub nodes: Vec<usize>,
    pub average_degree: f64,
    pub regular: bool,
}

/// Strategy producing the subgraph family `K`.
pub trait SubgraphFamily {
    fn subgraphs(&self, u: &UndirectedGraph) -> Vec<CoreSubgraph>;
}

/// Distinct nonempty i-cores for `i = min_core..=degeneracy`.
#[derive(Debug, Clone, Copy)]
pub struct CoreFamily {
    pub min_core: usize,
}

impl SubgraphFamily for CoreFamily {
    fn subgraphs(&self, u: &UndirectedGraph) -> Vec<CoreSubgraph> {
        let cores = core_numbers(u);
        let k_max = cores.iter().copied().max().unwrap_or(0);
        let mut out: Vec<CoreSubgraph> = Vec::new();
        for i in self.min_core..=k_max {
            let nodes: Vec<usize> = (0..u.node_count()).filter(|&v| cores[v] >= i).collect();
            if nodes.is_empty() || out.last().is_some_and(|c| c.nodes == nodes) {
                continue;
            }
            let sub = u.induced(&nodes);
            let degs: Vec<usize> = (0..sub.node_count()).map(|v| sub.degree(v)).collect();
            out.push(CoreSubgraph {
                order: i,
                average_degree: average_degree(&sub),
                regular: degs.windows(2).all(|w| w[0] == w[1]),
                nodes,
            });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IteratedValue {
    pub value: f64,
    pub subgraphs: usize,
    /// Orders of members of `K` that are not regular.
    pub irregular_orders: Vec<usize>,
}

fn iterate<F>(u: &UndirectedGraph, family: &dyn SubgraphFamily, mut f: F) -> Result<IteratedValue, RamanujanError>
where
    F: FnMut(&UndirectedGraph) -> Result<f64, RamanujanError>,
{
    let ks = family.subgraphs(u);
    if ks.is_empty() {
        return Err(RamanujanError::Undefined("no i-core with i >= 3".into()));
    }
    let mut total = 0.0;
    for k in &ks {
        total += f(&u.induced(&k.nodes))?;
    }
    Ok(IteratedValue {
        value: total / ks.len() as f64,
        subgraphs: ks.len(),
        irregular_orders: ks.iter().filter(|k| !k.regular).map(|k| k.order).collect(),
    })
}

/// Mean bound difference over the core family.
pub fn delta_r_imdb(g: &BipartiteGraph, cfg: &RamanujanConfig) -> Result<IteratedValue, RamanujanError> {
    delta_r_imdb_with(g, cfg, &CoreFamily { min_core: cfg.min_core })
}

pub fn delta_r_imdb_with(
    g: &BipartiteGraph,
    cfg: &RamanujanConfig,
    family: &dyn SubgraphFamily,
) -> Result<IteratedValue, RamanujanError> {
    iterate(&bipartite_view(g), family, |sub| bound_difference(sub, cfg))
}

/// Mean weighted spectral gap `mu0 - mu_hat` of `|A|` over the core family.
pub fn lambda_imsg(g: &BipartiteGraph, cfg: &RamanujanConfig) -> Result<IteratedValue, RamanujanError> {
    lambda_imsg_with(g, cfg, &CoreFamily { min_core: cfg.min_core })
}

pub fn lambda_imsg_with(
    g: &BipartiteGraph,
    cfg: &RamanujanConfig,
    family: &dyn SubgraphFamily,
) -> Result<IteratedValue, RamanujanError> {
    iterate(&bipartite_view(g), family, |sub| {
        let s = spectrum_summary(sub, cfg);
        Ok(s.mu0 - s.mu_hat)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRamanujan {
    pub layer_index: usize,
    pub density: f64,
    pub left: usize,
    pub right: usize,
    pub edges: usize,
    pub d_left: f64,
    pub d_right: f64,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_r_imdb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_imsg: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub irregular_cores: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Metrics of one layer graph; infeasible layers (`min(d_L, d_R) < 3`) carry only the flag.
pub fn layer_report(g: &BipartiteGraph, density: f64, cfg: &RamanujanConfig) -> LayerRamanujan {
    let e = g.edge_count() as f64;
    let d_left = if g.left == 0 { 0.0 } else { e / g.left as f64 };
    let d_right = if g.right == 0 { 0.0 } else { e / g.right as f64 };
    let feasible = d_left.min(d_right) >= 3.0;
    let mut rep = LayerRamanujan {
        layer_index: g.layer_index,
        density,
        left: g.left,
        right: g.right,
        edges: g.edge_count(),
        d_left,
        d_right,
        feasible,
        delta_r: None,
        delta_r_imdb: None,
        lambda_imsg: None,
        irregular_cores: Vec::new(),
        notes: Vec::new(),
    };
    if !feasible {
        return rep;
    }
    match delta_r(g, cfg) {
        Ok(v) => rep.delta_r = Some(v),
        Err(e) => rep.notes.push(format!("delta_r: {e}")),
    }
    match delta_r_imdb(g, cfg) {
        Ok(v) => {
            rep.delta_r_imdb = Some(v.value);
            rep.irregular_cores = v.irregular_orders;
        }
        Err(e) => rep.notes.push(format!("delta_r_imdb: {e}")),
    }
    if g.weights.is_none() {
        rep.notes.push("lambda_imsg uses unit weights".into());
    }
    let weighted = lambda_imsg(g, cfg);
    match weighted {
        Ok(v) => rep.lambda_imsg = Some(v.value),
        Err(e) => rep.notes.push(format!("lambda_imsg: {e}")),
    }
    rep
}

/// Per-layer reports for every weighted layer of a masked network.
pub fn network_report(
    spec: &ArchitectureSpec,
    mask: &SparseMask,
    encoding: Encoding,
    cfg: &RamanujanConfig,
) -> Result<Vec<LayerRamanujan>, RamanujanError> {
    use rayon::prelude::*;
    let weighted = mask.is_weighted();
    let graphs = rolled_layers(spec, mask, encoding, weighted)?;
    Ok(graphs
        .par_iter()
        .map(|g| {
            let density = mask.layer(g.layer_index).map_or(0.0, |l| l.density());
            layer_report(g, density, cfg)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCorrelation {
    pub metric: String,
    /// `None` when a series is constant or too short.
    pub pearson: Option<f64>,
    pub layers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskCorrelation {
    pub label: String,
    pub layers: Vec<LayerRamanujan>,
    pub correlations: Vec<MetricCorrelation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub architecture: String,
    pub encoding: Encoding,
    pub masks: Vec<MaskCorrelation>,
}

const CORRELATED: [&str; 3] = ["delta_r", "delta_r_imdb", "lambda_imsg"];

fn metric_of(l: &LayerRamanujan, name: &str) -> Option<f64> {
    match name {
        "delta_r" => l.delta_r,
        "delta_r_imdb" => l.delta_r_imdb,
        "lambda_imsg" => l.lambda_imsg,
        _ => None,
    }
}

/// Pearson correlation between each metric and layer density across the
/// feasible layers of each mask. Correlation is invariant to the per-series
/// sum normalization used for plotting, so it is taken on the raw values.
pub fn density_correlation_study(
    spec: &ArchitectureSpec,
    masks: &[(String, SparseMask)],
    encoding: Encoding,
    cfg: &RamanujanConfig,
) -> Result<CorrelationReport, RamanujanError> {
    let mut out = Vec::with_capacity(masks.len());
    for (label, mask) in masks {
        let layers = network_report(spec, mask, encoding, cfg)?;
        let correlations = CORRELATED
            .iter()
            .map(|&m| {
                let pairs: Vec<(f64, f64)> = layers
                    .iter()
                    .filter_map(|l| metric_of(l, m).map(|v| (v, l.density)))
                    .collect();
                let (xs, ds): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
                MetricCorrelation {
                    metric: m.to_string(),
                    pearson: if xs.len() >= 3 { pearson(&xs, &ds) } else { None },
                    layers: xs.len(),
                }
            })
            .collect();
        out.push(MaskCorrelation {
            label: label.clone(),
            layers,
            correlations,
        });
    }
    Ok(CorrelationReport {
        architecture: spec.name().to_string(),
        encoding,
        masks: out,
    })
}

impl CorrelationReport {
    /// Plot-ready series: each column divided by its sum over the feasible layers.
    pub fn write_normalized_csv(&self, w: impl Write, extra: &[(&str, &str)]) -> Result<(), RamanujanError> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["mask", "layer", "density", "delta_r", "delta_r_imdb", "lambda_imsg"];
        header.extend(extra.iter().map(|(k, _)| *k));
        wr.write_record(&header)?;
        for m in &self.masks {
            let feasible: Vec<&LayerRamanujan> = m.layers.iter().filter(|l| l.feasible).collect();
            let column = |f: &dyn Fn(&LayerRamanujan) -> Option<f64>| -> Vec<Option<f64>> {
                let vals: Vec<Option<f64>> = feasible.iter().map(|l| f(l)).collect();
                let present: Vec<f64> = vals.iter().flatten().copied().collect();
                match sum_normalize(&present) {
                    Some(norm) => {
                        let mut it = norm.into_iter();
                        vals.iter().map(|v| v.and_then(|_| it.next())).collect()
                    }
                    None => vec![None; vals.len()],
                }
            };
            let dens = column(&|l| Some(l.density));
            let dr = column(&|l| l.delta_r);
            let imdb = column(&|l| l.delta_r_imdb);
            let imsg = column(&|l| l.lambda_imsg);
            let cell = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
            for (i, l) in feasible.iter().enumerate() {
                let mut rec = vec![
                    m.label.clone(),
                    l.layer_index.to_string(),
                    cell(dens[i]),
                    cell(dr[i]),
                    cell(imdb[i]),
                    cell(imsg[i]),
                ];
                rec.extend(extra.iter().map(|(_, v)| v.to_string()));
                wr.write_record(&rec)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn complete(m: usize, n: usize) -> BipartiteGraph {
        let mut edges = Vec::new();
        for a in 0..m as u32 {
            for b in 0..n as u32 {
                edges.push((a, b));
            }
        }
        BipartiteGraph {
            left: m,
            left_padding: 0,
            right: n,
            edges,
            weights: None,
            layer_index: 0,
        }
    }

    #[test]
    fn k33_values() {
        let cfg = RamanujanConfig::default();
        let g = complete(3, 3);
        assert_abs_diff_eq!(delta_r(&g, &cfg).unwrap(), 2.0 * 2f64.sqrt(), epsilon = 1e-9);
        let imdb = delta_r_imdb(&g, &cfg).unwrap();
        assert_eq!(imdb.subgraphs, 1);
        assert_abs_diff_eq!(imdb.value, 2.0 * 2f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(lambda_imsg(&g, &cfg).unwrap().value, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn perfect_matching_is_undefined() {
        let g = BipartiteGraph {
            left: 3,
            left_padding: 0,
            right: 3,
            edges: vec![(0, 0), (1, 1), (2, 2)],
            weights: None,
            layer_index: 0,
        };
        assert!(matches!(delta_r(&g, &RamanujanConfig::default()), Err(RamanujanError::Undefined(_))));
    }

    #[test]
    fn regular_family_nonnegative() {
        for d in 3..=5 {
            assert!(delta_r(&complete(d, d), &RamanujanConfig::default()).unwrap() >= 0.0);
        }
    }

    #[test]
    fn lambda_scales_with_weights() {
        let mut g = complete(3, 4);
        g.edges.pop();
        g.weights = Some((0..g.edges.len()).map(|i| 0.5 + i as f64 * 0.1).collect());
        let cfg = RamanujanConfig::default();
        let base = lambda_imsg(&g, &cfg).unwrap().value;
        let mut scaled = g.clone();
        scaled.weights = scaled.weights.map(|w| w.iter().map(|x| 2.5 * x).collect());
        assert_abs_diff_eq!(lambda_imsg(&scaled, &cfg).unwrap().value, 2.5 * base, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_layers_have_no_values() {
        let g = complete(2, 2);
        let rep = layer_report(&g, 1.0, &RamanujanConfig::default());
        assert!(!rep.feasible);
        assert!(rep.delta_r.is_none() && rep.delta_r_imdb.is_none() && rep.lambda_imsg.is_none());
    }
}
