//! Independent brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use snn_topo::archspec::{ConvSpec, Shape3};
use snn_topo::encoder::{BipartiteGraph, MultipartiteGraph, Partition};
use snn_topo::graph::DiGraph;
use snn_topo::maskgen::LayerMask;

/// Left node id of padded position `(c, py, px)`: core positions use the
/// channel-major index of the unpadded map, padding positions are numbered
/// after the core in padded-grid order.
pub fn padded_ids(input: Shape3, p: usize) -> Vec<Vec<Vec<u32>>> {
    let (ph, pw) = (input.h + 2 * p, input.w + 2 * p);
    let mut next = input.len() as u32;
    let mut ids = vec![vec![vec![0u32; pw]; ph]; input.c];
    for (c, plane) in ids.iter_mut().enumerate() {
        for (py, row) in plane.iter_mut().enumerate() {
            for (px, id) in row.iter_mut().enumerate() {
                let inside = py >= p && py < p + input.h && px >= p && px < p + input.w;
                *id = if inside {
                    ((c * input.h + py - p) * input.w + px - p) as u32
                } else {
                    next += 1;
                    next - 1
                };
            }
        }
    }
    ids
}

/// Slides the kernel over the padded input step by step and records which
/// input position feeds which output neuron through a surviving weight.
pub fn conv_oracle(conv: &ConvSpec, input: Shape3, kept: &[bool]) -> (usize, usize, BTreeSet<(u32, u32)>) {
    let p = conv.padding;
    let (ph, pw) = (input.h + 2 * p, input.w + 2 * p);
    let ids = padded_ids(input, p);
    let steps = |extent: usize, k: usize| (0..).take_while(|i| i * conv.stride + k <= extent).count();
    let (out_h, out_w) = (steps(ph, conv.kernel_h), steps(pw, conv.kernel_w));
    let mut edges = BTreeSet::new();
    for oy in 0..out_h {
        for ox in 0..out_w {
            let (y0, x0) = (oy * conv.stride, ox * conv.stride);
            for oc in 0..conv.c_out {
                let neuron = ((oc * out_h + oy) * out_w + ox) as u32;
                for ic in 0..conv.c_in {
                    for ky in 0..conv.kernel_h {
                        for kx in 0..conv.kernel_w {
                            let w = ((oc * conv.c_in + ic) * conv.kernel_h + ky) * conv.kernel_w + kx;
                            if kept[w] {
                                edges.insert((ids[ic][y0 + ky][x0 + kx], neuron));
                            }
                        }
                    }
                }
            }
        }
    }
    (ph * pw * input.c, conv.c_out * out_h * out_w, edges)
}

pub struct ConvCase {
    pub conv: ConvSpec,
    pub input: Shape3,
    pub mask: LayerMask,
    pub kept: Vec<bool>,
}

/// Random conv config within input <= 8x8, channels <= 4, kernel <= 3, stride <= 2.
pub fn random_conv_case(rng: &mut ChaCha8Rng) -> ConvCase {
    loop {
        let conv = ConvSpec {
            c_in: rng.random_range(1..=4),
            c_out: rng.random_range(1..=4),
            kernel_h: rng.random_range(1..=3),
            kernel_w: rng.random_range(1..=3),
            stride: rng.random_range(1..=2),
            padding: rng.random_range(0..=1),
        };
        let input = Shape3::new(rng.random_range(1..=8), rng.random_range(1..=8), conv.c_in);
        if input.h + 2 * conv.padding < conv.kernel_h || input.w + 2 * conv.padding < conv.kernel_w {
            continue;
        }
        let density: f64 = rng.random_range(0.05..=1.0);
        let kept: Vec<bool> = (0..conv.weight_count()).map(|_| rng.random_bool(density)).collect();
        let values: Vec<f64> = kept.iter().map(|&k| if k { 1.0 } else { 0.0 }).collect();
        let mask = LayerMask::from_dense(0, vec![conv.c_out, conv.c_in, conv.kernel_h, conv.kernel_w], &values, false)
            .expect("valid mask");
        return ConvCase { conv, input, mask, kept };
    }
}

/// Random layered DAG: consecutive partitions are connected, with occasional
/// skip edges. Node count <= `max_nodes`.
pub fn random_layered(rng: &mut ChaCha8Rng, max_nodes: usize, weighted: bool) -> MultipartiteGraph {
    let parts = rng.random_range(2..=5);
    let mut sizes = Vec::new();
    let mut total = 0;
    for _ in 0..parts {
        let cap = (max_nodes - total) / 2;
        let s = rng.random_range(1..=cap.clamp(1, 60));
        sizes.push(s);
        total += s;
        if total >= max_nodes - 1 {
            break;
        }
    }
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
    let density: f64 = rng.random_range(0.01..0.25);
    let mut edges = Vec::new();
    for a in 0..partitions.len() {
        for b in (a + 1)..partitions.len() {
            let p = if b == a + 1 { density } else { density * 0.1 };
            for u in partitions[a].offset..partitions[a].end() {
                for v in partitions[b].offset..partitions[b].end() {
                    if rng.random_bool(p) {
                        edges.push((u as u32, v as u32));
                    }
                }
            }
        }
    }
    let weights: Vec<f64> = edges
        .iter()
        .map(|_| {
            let w: f64 = rng.random_range(0.1..2.0);
            if rng.random_bool(0.5) {
                w
            } else {
                -w
            }
        })
        .collect();
    MultipartiteGraph {
        graph: DiGraph::from_edges(off, &edges, weighted.then_some(weights.as_slice())),
        partitions,
        groups: Vec::new(),
    }
}

/// Random bipartite layer graph with `left, right <= max_side`.
pub fn random_bipartite(rng: &mut ChaCha8Rng, max_side: usize, weighted: bool) -> BipartiteGraph {
    let left = rng.random_range(2..=max_side);
    let right = rng.random_range(2..=max_side);
    let density: f64 = rng.random_range(0.05..0.6);
    let mut edges = Vec::new();
    for a in 0..left as u32 {
        for b in 0..right as u32 {
            if rng.random_bool(density) {
                edges.push((a, b));
            }
        }
    }
    let weights = weighted.then(|| {
        edges
            .iter()
            .map(|_| rng.random_range(0.1..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect()
    });
    BipartiteGraph {
        left,
        left_padding: 0,
        right,
        edges,
        weights,
        layer_index: 0,
    }
}

/// Plain edge list `(a, b, w)` of a digraph.
pub fn edge_list(g: &DiGraph) -> Vec<(usize, usize, f64)> {
    g.edges().map(|(a, b, w)| (a as usize, b as usize, w)).collect()
}

/// Symmetric adjacency sets of the undirected simple view.
pub fn undirected_sets(n: usize, edges: &[(usize, usize, f64)]) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); n];
    for &(a, b, _) in edges {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    adj
}

/// Dense symmetric `|w|` adjacency (parallel edges summed).
pub fn dense_adjacency(n: usize, edges: &[(usize, usize, f64)], unit: bool) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for &(x, y, w) in edges {
        if x != y {
            let w = if unit { 1.0 } else { w.abs() };
            a[(x, y)] += w;
            a[(y, x)] += w;
        }
    }
    if unit {
        a.iter_mut().for_each(|v| *v = if *v != 0.0 { 1.0 } else { 0.0 });
    }
    a
}

/// Eigenvalues of a symmetric matrix, descending. Computed as the singular
/// values of `A + cI` with `c` above the Gershgorin bound, which makes the
/// shifted matrix positive definite.
pub fn eigenvalues_desc(m: DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let c = (0..n).map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) + 1.0;
    let shifted = m + DMatrix::identity(n, n) * c;
    let mut v: Vec<f64> = shifted.svd(false, false).singular_values.iter().map(|s| s - c).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn dedupe_desc(v: &[f64], tol: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &x in v {
        if out.last().is_none_or(|&l| l - x > tol) {
            out.push(x);
        }
    }
    out
}

/// Number of connected components among the nodes not in `removed`.
pub fn components(adj: &[BTreeSet<usize>], removed: Option<usize>, skip_edge: Option<(usize, usize)>) -> usize {
    let n = adj.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for a in 0..n {
        for &b in &adj[a] {
            if b < a || Some(a) == removed || Some(b) == removed {
                continue;
            }
            if skip_edge == Some((a, b)) {
                continue;
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    (0..n)
        .filter(|&v| Some(v) != removed)
        .filter(|&v| find(&mut parent, v) == v)
        .count()
}

/// Core numbers by repeated peeling at each threshold.
pub fn core_numbers_naive(adj: &[BTreeSet<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut core = vec![0; n];
    let mut k = 1;
    loop {
        let mut alive = vec![true; n];
        loop {
            let mut changed = false;
            for v in 0..n {
                if alive[v] && adj[v].iter().filter(|&&u| alive[u]).count() < k {
                    alive[v] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if !alive.iter().any(|&a| a) {
            return core;
        }
        for v in 0..n {
            if alive[v] {
                core[v] = k;
            }
        }
        k += 1;
    }
}

/// Connected induced subgraphs with `k` nodes, grown level by level as node sets.
pub fn connected_subsets(adj: &[BTreeSet<usize>], k: usize) -> usize {
    let mut level: HashSet<Vec<usize>> = (0..adj.len()).map(|v| vec![v]).collect();
    for _ in 1..k {
        let mut next = HashSet::new();
        for s in &level {
            for &v in s {
                for &u in &adj[v] {
                    if !s.contains(&u) {
                        let mut t = s.clone();
                        t.push(u);
                        t.sort_unstable();
                        next.insert(t);
                    }
                }
            }
        }
        level = next;
    }
    level.len()
}

/// Mean number of other nodes reachable in `1..=k` directed hops.
pub fn reach_naive(n: usize, edges: &[(usize, usize, f64)], k: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut out = vec![Vec::new(); n];
    for &(a, b, _) in edges {
        out[a].push(b);
    }
    let mut total = 0;
    for s in 0..n {
        let mut reached = BTreeSet::new();
        let mut frontier = BTreeSet::from([s]);
        for _ in 0..k {
            frontier = frontier.iter().flat_map(|&v| out[v].iter().copied()).collect();
            reached.extend(frontier.iter().copied());
        }
        reached.remove(&s);
        total += reached.len();
    }
    total as f64 / n as f64
}

/// All sixteen raw metrics of a layered graph, computed from first principles.
pub struct OracleMetrics {
    pub raw: [f64; 16],
    pub normalized: [f64; 16],
}

pub fn oracle_metrics(g: &MultipartiteGraph, motif_size: usize) -> OracleMetrics {
    let n = g.node_count();
    let edges = edge_list(&g.graph);
    let m = edges.len();
    let mut indeg = vec![0usize; n];
    let mut outdeg = vec![0usize; n];
    let mut strength = vec![0.0; n];
    for &(a, b, w) in &edges {
        outdeg[a] += 1;
        indeg[b] += 1;
        strength[b] += w.abs();
    }
    let (mut sink, mut source, mut disc, mut r_out, mut r_in) = (0, 0, 0, 0, 0);
    for p in &g.partitions {
        for v in p.offset..p.end() {
            if indeg[v] == 0 && outdeg[v] == 0 {
                disc += 1;
            } else if indeg[v] == 0 && p.count_sources {
                source += 1;
                r_out += outdeg[v];
            } else if outdeg[v] == 0 && p.count_sinks {
                sink += 1;
                r_in += indeg[v];
            }
        }
    }
    let adj = undirected_sets(n, &edges);
    let motifs = connected_subsets(&adj, motif_size) as f64;
    let cores = core_numbers_naive(&adj);
    let c = components(&adj, None, None);
    let mut bridges = 0;
    for a in 0..n {
        for &b in &adj[a] {
            if b > a && components(&adj, None, Some((a, b))) > c {
                bridges += 1;
            }
        }
    }
    let cut_nodes = (0..n).filter(|&v| components(&adj, Some(v), None) > c).count();
    let a = dense_adjacency(n, &edges, !g.graph.is_weighted());
    let spec = eigenvalues_desc(a.clone());
    let scale = spec.first().map_or(1.0, |v| v.abs().max(1.0));
    let distinct = dedupe_desc(&spec, 1e-6 * scale);
    let gap = if distinct.len() >= 2 { distinct[0] - distinct[1] } else { 0.0 };
    let mut lap = -a.clone();
    for i in 0..n {
        lap[(i, i)] = a.row(i).sum();
    }
    let radius = eigenvalues_desc(lap).first().copied().unwrap_or(0.0).max(0.0);
    let strength_mean = if g.graph.is_weighted() {
        strength.iter().sum::<f64>() / n as f64
    } else {
        m as f64 / n as f64
    };
    let raw = [
        sink as f64,
        source as f64,
        disc as f64,
        r_out as f64,
        r_in as f64,
        reach_naive(n, &edges, 1),
        reach_naive(n, &edges, 2),
        motifs,
        cores.iter().sum::<usize>() as f64 / n as f64,
        strength_mean,
        c as f64,
        n as f64 / c as f64,
        bridges as f64,
        cut_nodes as f64,
        gap,
        radius,
    ];
    let per = |x: f64, d: usize| if d == 0 { 0.0 } else { x / d as f64 };
    let mut normalized = raw;
    for i in [0, 1, 2, 7, 10, 13] {
        normalized[i] = per(raw[i], n);
    }
    for i in [3, 4, 12] {
        normalized[i] = per(raw[i], m);
    }
    OracleMetrics { raw, normalized }
}

/// Dense reference for the Ramanujan quantities of a simple undirected graph
/// given as adjacency sets plus `|w|` weights.
pub struct DenseRamanujan {
    pub delta_r: Option<f64>,
    pub delta_r_imdb: Option<f64>,
    pub lambda_imsg: Option<f64>,
}

fn mu_hat(m: DMatrix<f64>, tol: f64) -> (f64, f64) {
    let spec = eigenvalues_desc(m);
    let mu0 = spec.first().copied().unwrap_or(0.0);
    let t = tol * mu0.abs().max(1.0);
    let hat = spec
        .iter()
        .filter(|&&v| (v - mu0).abs() > t && (v + mu0).abs() > t)
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    (mu0, hat)
}

fn induced(m: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(keep.len(), keep.len(), |i, j| m[(keep[i], keep[j])])
}

pub fn dense_ramanujan(g: &BipartiteGraph) -> DenseRamanujan {
    let n = g.left + g.right;
    let edges: Vec<(usize, usize, f64)> = g
        .edges
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| (a as usize, g.left + b as usize, g.weights.as_ref().map_or(1.0, |w| w[i])))
        .collect();
    let unit = dense_adjacency(n, &edges, true);
    let weighted = dense_adjacency(n, &edges, false);
    let bound = |m: &DMatrix<f64>| {
        let nn = m.nrows();
        let e = m.iter().filter(|&&v| v != 0.0).count() / 2;
        let d = 2.0 * e as f64 / nn as f64;
        (d > 1.0).then(|| 2.0 * (d - 1.0).sqrt() - mu_hat(m.clone(), 1e-6).1)
    };
    let adj = undirected_sets(n, &edges);
    let cores = core_numbers_naive(&adj);
    let kmax = cores.iter().copied().max().unwrap_or(0);
    let mut family: Vec<Vec<usize>> = Vec::new();
    for i in 3..=kmax {
        let nodes: Vec<usize> = (0..n).filter(|&v| cores[v] >= i).collect();
        if !nodes.is_empty() && family.last() != Some(&nodes) {
            family.push(nodes);
        }
    }
    let (imdb, imsg) = if family.is_empty() {
        (None, None)
    } else {
        let mut a = Some(0.0);
        let mut b = 0.0;
        for f in &family {
            a = match (a, bound(&induced(&unit, f))) {
                (Some(x), Some(y)) => Some(x + y),
                _ => None,
            };
            let (mu0, hat) = mu_hat(induced(&weighted, f), 1e-6);
            b += mu0 - hat;
        }
        (a.map(|x| x / family.len() as f64), Some(b / family.len() as f64))
    };
    DenseRamanujan {
        delta_r: bound(&unit),
        delta_r_imdb: imdb,
        lambda_imsg: imsg,
    }
}
