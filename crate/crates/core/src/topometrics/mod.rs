//! The sixteen topological metrics ("topometrics") over multipartite graphs.
//!
//! Metric order is fixed by [`METRIC_NAMES`]. Local metrics use edge
//! directions; k-core, motifs, components, cuts and spectra use the simple
//! undirected view with absolute weights.

mod motifs;
mod rows;

pub use motifs::{count_motifs, MotifCount};
pub use rows::{read_rows_csv, write_rows_csv, MetricsRow};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::eigen::{distinct_descending, largest_eigenvalues, LanczosConfig};
use crate::encoder::MultipartiteGraph;
use crate::graph::{DiGraph, UndirectedGraph};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("motif size must be at least 2, got {0}")]
    MotifSize(usize),
    #[error("unknown metric category `{0}`")]
    Category(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad metrics table: {0}")]
    Format(String),
}

pub const METRIC_COUNT: usize = 16;

pub const METRIC_NAMES: [&str; METRIC_COUNT] = [
    "sink",
    "source",
    "disconnected",
    "r_out",
    "r_in",
    "n1",
    "n2",
    "motif4",
    "kcore",
    "strength",
    "components",
    "c_avg",
    "cut_edges",
    "cut_nodes",
    "spectral_gap",
    "spectral_radius",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Local,
    Neighbor,
    Strength,
    Global,
    Expansion,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Local,
        Category::Neighbor,
        Category::Strength,
        Category::Global,
        Category::Expansion,
    ];

    /// Category of the metric at position `index` of [`METRIC_NAMES`].
    pub fn of(index: usize) -> Category {
        match index {
            0..=4 => Category::Local,
            5..=7 => Category::Neighbor,
            8 | 9 => Category::Strength,
            10..=13 => Category::Global,
            _ => Category::Expansion,
        }
    }
}

impl FromStr for Category {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(Category::Local),
            "neighbor" => Ok(Category::Neighbor),
            "strength" => Ok(Category::Strength),
            "global" => Ok(Category::Global),
            "expansion" => Ok(Category::Expansion),
            other => Err(MetricsError::Category(other.to_string())),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Local => "local",
            Category::Neighbor => "neighbor",
            Category::Strength => "strength",
            Category::Global => "global",
            Category::Expansion => "expansion",
        })
    }
}

/// Sixteen metric values in [`METRIC_NAMES`] order; NaN marks "not computed".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics16(pub [f64; METRIC_COUNT]);

impl Default for Metrics16 {
    fn default() -> Self {
        Metrics16([f64::NAN; METRIC_COUNT])
    }
}

impl Metrics16 {
    pub fn get(&self, name: &str) -> Option<f64> {
        let i = METRIC_NAMES.iter().position(|&n| n == name)?;
        let v = self.0[i];
        (!v.is_nan()).then_some(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Same values with NaN replaced by `fill`.
    pub fn filled(&self, fill: f64) -> [f64; METRIC_COUNT] {
        self.0.map(|v| if v.is_nan() { fill } else { v })
    }
}

impl Serialize for Metrics16 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(METRIC_COUNT))?;
        for (name, v) in METRIC_NAMES.iter().zip(self.0) {
            map.serialize_entry(name, &(!v.is_nan()).then_some(v))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Metrics16 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: BTreeMap<String, Option<f64>> = BTreeMap::deserialize(d)?;
        let mut out = Metrics16::default();
        for (k, v) in raw {
            let i = METRIC_NAMES
                .iter()
                .position(|&n| n == k)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown metric `{k}`")))?;
            out.0[i] = v.unwrap_or(f64::NAN);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    /// Count padding nodes of conv layers as graph nodes.
    pub include_padding: bool,
    pub motif_size: usize,
    /// Above this many undirected edges, motifs are estimated by sampling.
    pub motif_edge_budget: usize,
    pub motif_seed: u64,
    pub spectral: LanczosConfig,
    /// Relative gap below which two eigenvalues count as equal.
    pub distinct_tol: f64,
    pub categories: Vec<Category>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            include_padding: true,
            motif_size: 4,
            motif_edge_budget: 200_000,
            motif_seed: 0,
            spectral: LanczosConfig::default(),
            distinct_tol: 1e-6,
            categories: Category::ALL.to_vec(),
        }
    }
}

impl MetricsConfig {
    pub fn with_categories(mut self, categories: &[Category]) -> Self {
        self.categories = categories.to_vec();
        self
    }

    fn wants(&self, c: Category) -> bool {
        self.categories.contains(&c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LocalCounts {
    pub sink: usize,
    pub source: usize,
    pub disconnected: usize,
    /// Edges leaving counted source nodes.
    pub removable_out: usize,
    /// Edges entering counted sink nodes.
    pub removable_in: usize,
}

/// Sources have no incoming and some outgoing edges, sinks the reverse;
/// nodes with neither are counted as disconnected only. Partition flags
/// exclude network inputs from sources and outputs from sinks.
pub fn local_metrics(g: &MultipartiteGraph) -> LocalCounts {
    let d = &g.graph;
    let mut out = LocalCounts::default();
    for p in &g.partitions {
        for v in p.offset..p.end() {
            let (i, o) = (d.in_degree(v), d.out_degree(v));
            if i == 0 && o == 0 {
                out.disconnected += 1;
            } else if i == 0 && p.count_sources {
                out.source += 1;
                out.removable_out += o;
            } else if o == 0 && p.count_sinks {
                out.sink += 1;
                out.removable_in += i;
            }
        }
    }
    out
}

/// Mean over nodes of the number of distinct nodes reachable in `1..=k` forward hops.
pub fn mean_reach(g: &DiGraph, k: usize) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    let total: usize = (0..n)
        .into_par_iter()
        .with_min_len(256)
        .map_init(
            || (vec![u32::MAX; n], Vec::new(), Vec::new()),
            |(stamp, frontier, next), v| {
                stamp[v] = v as u32;
                frontier.clear();
                frontier.push(v as u32);
                let mut seen = 0usize;
                for _ in 0..k {
                    next.clear();
                    for &u in frontier.iter() {
                        for &x in g.successors(u as usize) {
                            if stamp[x as usize] != v as u32 {
                                stamp[x as usize] = v as u32;
                                next.push(x);
                            }
                        }
                    }
                    seen += next.len();
                    std::mem::swap(frontier, next);
                    if frontier.is_empty() {
                        break;
                    }
                }
                seen
            },
        )
        .sum();
    total as f64 / n as f64
}

/// Core number of every node (Batagelj–Zaveršnik bucket peeling).
pub fn core_numbers(u: &UndirectedGraph) -> Vec<usize> {
    let n = u.node_count();
    let mut deg: Vec<usize> = (0..n).map(|v| u.degree(v)).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    let mut bin = vec![0usize; max_deg + 1];
    for &d in &deg {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let c = *b;
        *b = start;
        start += c;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        bin[deg[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;
    for i in 0..n {
        let v = vert[i];
        for &w in u.neighbors(v) {
            let w = w as usize;
            if deg[w] > deg[v] {
                let dw = deg[w];
                let pw = pos[w];
                let ps = bin[dw];
                let s = vert[ps];
                if s != w {
                    pos[w] = ps;
                    vert[pw] = s;
                    pos[s] = pw;
                    vert[ps] = w;
                }
                bin[dw] += 1;
                deg[w] -= 1;
            }
        }
    }
    deg
}

/// Mean absolute incoming weight sum (in-degree when unweighted).
pub fn mean_strength(g: &DiGraph) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = (0..n)
        .map(|v| match g.in_weights(v) {
            Some(w) => w.iter().map(|x| x.abs()).sum(),
            None => g.in_degree(v) as f64,
        })
        .sum();
    total / n as f64
}

/// Component label per node and the number of components.
pub fn connected_components(u: &UndirectedGraph) -> (Vec<usize>, usize) {
    let n = u.node_count();
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = count;
        stack.push(s);
        while let Some(v) = stack.pop() {
            for &w in u.neighbors(v) {
                if label[w as usize] == usize::MAX {
                    label[w as usize] = count;
                    stack.push(w as usize);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// Bridges and articulation points of a simple undirected graph (iterative DFS low-link).
pub fn cut_counts(u: &UndirectedGraph) -> (usize, usize) {
    let n = u.node_count();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_cut = vec![false; n];
    let mut bridges = 0;
    let mut time = 0;
    // (node, parent, next neighbor position)
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = time;
        low[root] = time;
        time += 1;
        let mut root_children = 0;
        stack.push((root, usize::MAX, 0));
        while let Some(&mut (v, parent, ref mut next)) = stack.last_mut() {
            let nbrs = u.neighbors(v);
            if *next < nbrs.len() {
                let w = nbrs[*next] as usize;
                *next += 1;
                if w == parent {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    if v == root {
                        root_children += 1;
                    }
                    stack.push((w, v, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if parent != usize::MAX {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        bridges += 1;
                    }
                    if parent != root && low[v] >= disc[parent] {
                        is_cut[parent] = true;
                    }
                }
            }
        }
        if root_children >= 2 {
            is_cut[root] = true;
        }
    }
    (bridges, is_cut.iter().filter(|&&c| c).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralValue {
    pub value: f64,
    pub converged: bool,
    pub residual: f64,
}

/// `mu0 - mu_hat` of the adjacency matrix, where `mu_hat` is the largest
/// eigenvalue distinct from `mu0`; zero if there is none.
pub fn spectral_gap(u: &UndirectedGraph, cfg: &LanczosConfig, distinct_tol: f64) -> SpectralValue {
    let n = u.node_count();
    let mut wanted = 3;
    loop {
        let res = largest_eigenvalues(n, |x, y| u.adjacency_matvec(x, y), wanted, cfg);
        let scale = res.values.first().map_or(1.0, |v| v.abs().max(1.0));
        let d = distinct_descending(&res.values, distinct_tol * scale);
        if d.len() >= 2 || res.invariant || wanted >= n || wanted >= 12 {
            return SpectralValue {
                value: if d.len() >= 2 { d[0] - d[1] } else { 0.0 },
                converged: res.converged,
                residual: res.residual,
            };
        }
        wanted += 3;
    }
}

/// Largest eigenvalue of the Laplacian `D - A`.
pub fn spectral_radius(u: &UndirectedGraph, cfg: &LanczosConfig) -> SpectralValue {
    let res = largest_eigenvalues(u.node_count(), |x, y| u.laplacian_matvec(x, y), 1, cfg);
    SpectralValue {
        value: res.values.first().copied().unwrap_or(0.0).max(0.0),
        converged: res.converged,
        residual: res.residual,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralStatus {
    pub gap: SpectralValue,
    pub radius: SpectralValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopometricVector {
    pub normalized: Metrics16,
    pub raw: Metrics16,
    pub nodes: usize,
    pub edges: usize,
    pub padding_nodes: usize,
    pub motif_size: usize,
    /// Fraction of the motif census that was enumerated (1 when exact).
    pub motif_sampling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralStatus>,
}

fn ratio(a: f64, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a / b as f64
    }
}

/// Computes the configured metric categories.
pub fn compute_all(g: &MultipartiteGraph, cfg: &MetricsConfig) -> Result<TopometricVector, MetricsError> {
    if cfg.motif_size < 2 {
        return Err(MetricsError::MotifSize(cfg.motif_size));
    }
    let stripped;
    let g = if cfg.include_padding {
        g
    } else {
        stripped = g.without_padding();
        &stripped
    };
    let n = g.node_count();
    let m = g.edge_count();
    let mut raw = Metrics16::default();
    let mut norm = Metrics16::default();
    let mut motif_sampling = 1.0;
    let mut spectral = None;

    let needs_simple = cfg.wants(Category::Neighbor)
        || cfg.wants(Category::Strength)
        || cfg.wants(Category::Global)
        || cfg.wants(Category::Expansion);
    let simple = needs_simple.then(|| g.graph.undirected_simple());

    if cfg.wants(Category::Local) {
        let l = local_metrics(g);
        raw.0[0] = l.sink as f64;
        raw.0[1] = l.source as f64;
        raw.0[2] = l.disconnected as f64;
        raw.0[3] = l.removable_out as f64;
        raw.0[4] = l.removable_in as f64;
        norm.0[0] = ratio(raw.0[0], n);
        norm.0[1] = ratio(raw.0[1], n);
        norm.0[2] = ratio(raw.0[2], n);
        norm.0[3] = ratio(raw.0[3], m);
        norm.0[4] = ratio(raw.0[4], m);
    }
    if cfg.wants(Category::Neighbor) {
        let u = simple.as_ref().expect("built above");
        raw.0[5] = mean_reach(&g.graph, 1);
        raw.0[6] = mean_reach(&g.graph, 2);
        let mc = count_motifs(u, cfg.motif_size, cfg.motif_edge_budget, cfg.motif_seed);
        motif_sampling = mc.sampling_fraction;
        raw.0[7] = mc.estimate;
        norm.0[5] = raw.0[5];
        norm.0[6] = raw.0[6];
        norm.0[7] = ratio(raw.0[7], n);
    }
    if cfg.wants(Category::Strength) {
        let u = simple.as_ref().expect("built above");
        let cores = core_numbers(u);
        raw.0[8] = ratio(cores.iter().sum::<usize>() as f64, n);
        raw.0[9] = mean_strength(&g.graph);
        norm.0[8] = raw.0[8];
        norm.0[9] = raw.0[9];
    }
    if cfg.wants(Category::Global) {
        let u = simple.as_ref().expect("built above");
        let (_, c) = connected_components(u);
        let (bridges, cuts) = cut_counts(u);
        raw.0[10] = c as f64;
        raw.0[11] = ratio(n as f64, c);
        raw.0[12] = bridges as f64;
        raw.0[13] = cuts as f64;
        norm.0[10] = ratio(raw.0[10], n);
        norm.0[11] = raw.0[11];
        norm.0[12] = ratio(raw.0[12], m);
        norm.0[13] = ratio(raw.0[13], n);
    }
    if cfg.wants(Category::Expansion) {
        let u = simple.as_ref().expect("built above");
        let gap = spectral_gap(u, &cfg.spectral, cfg.distinct_tol);
        let radius = spectral_radius(u, &cfg.spectral);
        raw.0[14] = gap.value;
        raw.0[15] = radius.value;
        norm.0[14] = gap.value;
        norm.0[15] = radius.value;
        spectral = Some(SpectralStatus { gap, radius });
    }
    Ok(TopometricVector {
        normalized: norm,
        raw,
        nodes: n,
        edges: m,
        padding_nodes: g.padding_count(),
        motif_size: cfg.motif_size,
        motif_sampling,
        spectral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{BipartiteGraph, Partition};
    use approx::assert_abs_diff_eq;

    fn layered(sizes: &[usize], edges: &[(u32, u32)]) -> MultipartiteGraph {
        let mut partitions = Vec::new();
        let mut off = 0;
        for (i, &s) in sizes.iter().enumerate() {
            partitions.push(Partition {
                offset: off,
                core: s,
                padding: 0,
                count_sources: i != 0,
                count_sinks: i + 1 != sizes.len(),
            });
            off += s;
        }
        MultipartiteGraph {
            graph: DiGraph::from_edges(off, edges, None),
            partitions,
            groups: Vec::new(),
        }
    }

    #[test]
    fn chain_has_no_sinks_or_sources() {
        let g = layered(&[1, 1, 1], &[(0, 1), (1, 2)]);
        let l = local_metrics(&g);
        assert_eq!((l.sink, l.source, l.disconnected), (0, 0, 0));
        let g = layered(&[1, 2, 1], &[(0, 1), (1, 3)]);
        assert_eq!(local_metrics(&g).disconnected, 1);
    }

    #[test]
    fn middle_sink_removable_in() {
        // x = node 2 in the middle partition: indegree 2, outdegree 0; 10 edges total
        let mut edges = vec![(0, 2), (1, 2)];
        for a in 0..2 {
            for b in 3..5 {
                edges.push((a, b));
            }
        }
        for a in 3..5 {
            edges.push((a, 5));
            edges.push((a, 6));
        }
        let g = layered(&[2, 3, 2], &edges);
        assert_eq!(g.edge_count(), 10);
        let v = compute_all(&g, &MetricsConfig::default()).unwrap();
        assert_eq!(v.raw.get("sink"), Some(1.0));
        assert_abs_diff_eq!(v.normalized.get("r_in").unwrap(), 0.2);
    }

    #[test]
    fn reach_examples() {
        let mut edges = Vec::new();
        for a in 0..2 {
            for b in 2..5 {
                edges.push((a, b));
            }
        }
        let k23 = DiGraph::from_edges(5, &edges, None);
        assert_abs_diff_eq!(mean_reach(&k23, 1), 1.2);
        let path = DiGraph::from_edges(3, &[(0, 1), (1, 2)], None);
        assert_abs_diff_eq!(mean_reach(&path, 2), 1.0);
    }

    #[test]
    fn cores_and_strength() {
        let tri = UndirectedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        assert_eq!(core_numbers(&tri), vec![2, 2, 2]);
        let star = UndirectedGraph::from_edges(5, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0)]);
        assert_eq!(core_numbers(&star), vec![1; 5]);
        let g = DiGraph::from_edges(3, &[(0, 2), (1, 2)], Some(&[0.5, -1.5]));
        assert_abs_diff_eq!(mean_strength(&g) * 3.0, 2.0);
    }

    #[test]
    fn components_and_cuts() {
        let two = UndirectedGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        assert_eq!(connected_components(&two).1, 2);
        let path = UndirectedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(cut_counts(&path), (2, 1));
        let cycle = UndirectedGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]);
        assert_eq!(cut_counts(&cycle), (0, 0));
    }

    #[test]
    fn spectral_examples() {
        let cfg = LanczosConfig::default();
        let path = UndirectedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert_abs_diff_eq!(spectral_gap(&path, &cfg, 1e-6).value, 2f64.sqrt(), epsilon = 1e-9);
        let k2 = UndirectedGraph::from_edges(2, &[(0, 1, 1.0)]);
        assert_abs_diff_eq!(spectral_radius(&k2, &cfg).value, 2.0, epsilon = 1e-9);
        let empty = UndirectedGraph::from_edges(4, &[]);
        assert_eq!(spectral_gap(&empty, &cfg, 1e-6).value, 0.0);
    }

    #[test]
    fn empty_edge_graph() {
        let g = layered(&[2, 2], &[]);
        let v = compute_all(&g, &MetricsConfig::default()).unwrap();
        assert_eq!(v.normalized.get("n1"), Some(0.0));
        assert_eq!(v.normalized.get("r_out"), Some(0.0));
        assert_eq!(v.normalized.get("spectral_gap"), Some(0.0));
        assert_eq!(v.normalized.get("spectral_radius"), Some(0.0));
        assert_eq!(v.normalized.get("disconnected"), Some(1.0));
    }

    #[test]
    fn category_selection_leaves_nan() {
        let b = BipartiteGraph {
            left: 2,
            left_padding: 0,
            right: 1,
            edges: vec![(0, 0), (1, 0)],
            weights: None,
            layer_index: 0,
        };
        let cfg = MetricsConfig::default().with_categories(&[Category::Local]);
        let v = compute_all(&b.to_multipartite(), &cfg).unwrap();
        assert!(v.normalized.get("kcore").is_none());
        let json = serde_json::to_string(&v.normalized).unwrap();
        assert!(json.contains("\"kcore\":null"));
        let back: Metrics16 = serde_json::from_str(&json).unwrap();
        assert_eq!(back.get("sink"), v.normalized.get("sink"));
    }
}
