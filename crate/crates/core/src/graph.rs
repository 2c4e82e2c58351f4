//! Compressed adjacency storage.
//!
//! [`DiGraph`] keeps forward and reverse CSR arrays for a directed multigraph
//! with optional real weights. [`UndirectedGraph`] is the simple undirected view
//! used by spectral, core and cut metrics: directions dropped, parallel edges
//! merged (absolute weights summed), self loops removed.

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct DiGraph {
    n: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeId>,
    out_weights: Option<Vec<f64>>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
    in_weights: Option<Vec<f64>>,
}

fn csr_by_key(
    n: usize,
    edges: &[(NodeId, NodeId)],
    weights: Option<&[f64]>,
    key: impl Fn(&(NodeId, NodeId)) -> (NodeId, NodeId),
) -> (Vec<usize>, Vec<NodeId>, Option<Vec<f64>>) {
    let mut offsets = vec![0usize; n + 1];
    for e in edges {
        offsets[key(e).0 as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets.clone();
    let mut targets = vec![0 as NodeId; edges.len()];
    let mut out_w = weights.map(|_| vec![0.0; edges.len()]);
    for (i, e) in edges.iter().enumerate() {
        let (from, to) = key(e);
        let slot = cursor[from as usize];
        cursor[from as usize] += 1;
        targets[slot] = to;
        if let (Some(dst), Some(src)) = (out_w.as_mut(), weights) {
            dst[slot] = src[i];
        }
    }
    (offsets, targets, out_w)
}

impl DiGraph {
    /// Builds both CSR directions. Edge order within a row follows input order.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)], weights: Option<&[f64]>) -> Self {
        if let Some(w) = weights {
            assert_eq!(w.len(), edges.len(), "one weight per edge");
        }
        debug_assert!(edges.iter().all(|&(a, b)| (a as usize) < n && (b as usize) < n));
        let (out_offsets, out_targets, out_weights) = csr_by_key(n, edges, weights, |&(a, b)| (a, b));
        // reverse arrays are filled in forward order so the layout is canonical
        let mut fwd = Vec::with_capacity(out_targets.len());
        for a in 0..n {
            for &b in &out_targets[out_offsets[a]..out_offsets[a + 1]] {
                fwd.push((a as NodeId, b));
            }
        }
        let (in_offsets, in_sources, in_weights) = csr_by_key(n, &fwd, out_weights.as_deref(), |&(a, b)| (b, a));
        Self {
            n,
            out_offsets,
            out_targets,
            out_weights,
            in_offsets,
            in_sources,
            in_weights,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_edges(n, &[], None)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn is_weighted(&self) -> bool {
        self.out_weights.is_some()
    }

    #[inline]
    pub fn out_degree(&self, v: usize) -> usize {
        self.out_offsets[v + 1] - self.out_offsets[v]
    }

    #[inline]
    pub fn in_degree(&self, v: usize) -> usize {
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    #[inline]
    pub fn successors(&self, v: usize) -> &[NodeId] {
        &self.out_targets[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    #[inline]
    pub fn predecessors(&self, v: usize) -> &[NodeId] {
        &self.in_sources[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    /// Weights of incoming edges (aligned with [`DiGraph::predecessors`]).
    pub fn in_weights(&self, v: usize) -> Option<&[f64]> {
        self.in_weights
            .as_ref()
            .map(|w| &w[self.in_offsets[v]..self.in_offsets[v + 1]])
    }

    pub fn out_weights(&self, v: usize) -> Option<&[f64]> {
        self.out_weights
            .as_ref()
            .map(|w| &w[self.out_offsets[v]..self.out_offsets[v + 1]])
    }

    /// All edges as `(source, target, weight)`; weight is 1.0 when unweighted.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        (0..self.n).flat_map(move |a| {
            let ws = self.out_weights(a);
            self.successors(a)
                .iter()
                .enumerate()
                .map(move |(i, &b)| (a as NodeId, b, ws.map_or(1.0, |w| w[i])))
        })
    }

    pub fn out_offsets(&self) -> &[usize] {
        &self.out_offsets
    }

    pub fn out_targets(&self) -> &[NodeId] {
        &self.out_targets
    }

    pub fn raw_out_weights(&self) -> Option<&[f64]> {
        self.out_weights.as_deref()
    }

    /// Reassembles a graph from forward CSR arrays (as written by the binary dump).
    pub fn from_csr(offsets: Vec<usize>, targets: Vec<NodeId>, weights: Option<Vec<f64>>) -> Self {
        let n = offsets.len().saturating_sub(1);
        let mut edges = Vec::with_capacity(targets.len());
        for a in 0..n {
            for &b in &targets[offsets[a]..offsets[a + 1]] {
                edges.push((a as NodeId, b));
            }
        }
        Self::from_edges(n, &edges, weights.as_deref())
    }

    /// Same topology with every weight multiplied by `factor` (weights default to 1).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut g = self.clone();
        let n_edges = g.edge_count();
        g.out_weights = Some(match &self.out_weights {
            Some(w) => w.iter().map(|v| v * factor).collect(),
            None => vec![factor; n_edges],
        });
        g.in_weights = Some(match &self.in_weights {
            Some(w) => w.iter().map(|v| v * factor).collect(),
            None => vec![factor; n_edges],
        });
        g
    }

    pub fn undirected_simple(&self) -> UndirectedGraph {
        UndirectedGraph::from_digraph(self)
    }
}

/// Simple undirected graph in CSR form; neighbor lists sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedGraph {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    weights: Vec<f64>,
}

impl UndirectedGraph {
    pub fn from_digraph(g: &DiGraph) -> Self {
        let n = g.node_count();
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + g.out_degree(v) + g.in_degree(v);
        }
        let mut neighbors = vec![0 as NodeId; offsets[n]];
        let mut weights = vec![0.0f64; offsets[n]];
        let mut row: Vec<(NodeId, f64)> = Vec::new();
        let mut write = 0usize;
        let mut new_offsets = vec![0usize; n + 1];
        for v in 0..n {
            row.clear();
            let outs = g.successors(v);
            let ow = g.out_weights(v);
            row.extend(outs.iter().enumerate().map(|(i, &u)| (u, ow.map_or(1.0, |w| w[i].abs()))));
            let ins = g.predecessors(v);
            let iw = g.in_weights(v);
            row.extend(ins.iter().enumerate().map(|(i, &u)| (u, iw.map_or(1.0, |w| w[i].abs()))));
            row.sort_unstable_by_key(|&(u, _)| u);
            let mut last: Option<NodeId> = None;
            for &(u, w) in row.iter() {
                if u as usize == v {
                    continue;
                }
                if last == Some(u) {
                    weights[write - 1] += w;
                } else {
                    neighbors[write] = u;
                    weights[write] = w;
                    write += 1;
                    last = Some(u);
                }
            }
            new_offsets[v + 1] = write;
        }
        neighbors.truncate(write);
        weights.truncate(write);
        neighbors.shrink_to_fit();
        weights.shrink_to_fit();
        drop(offsets);
        Self {
            n,
            offsets: new_offsets,
            neighbors,
            weights,
        }
    }

    /// Builds from an undirected edge list (`(a, b, w)`); duplicates merge by summing `|w|`.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId, f64)]) -> Self {
        let pairs: Vec<(NodeId, NodeId)> = edges.iter().map(|&(a, b, _)| (a, b)).collect();
        let w: Vec<f64> = edges.iter().map(|e| e.2).collect();
        Self::from_digraph(&DiGraph::from_edges(n, &pairs, Some(&w)))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[NodeId] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn weights(&self, v: usize) -> &[f64] {
        &self.weights[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).binary_search(&(b as NodeId)).is_ok()
    }

    /// Weighted degree: sum of incident `|w|`.
    pub fn strength(&self, v: usize) -> f64 {
        self.weights(v).iter().sum()
    }

    /// Subgraph induced by `keep` (sorted ascending), nodes renumbered in order.
    pub fn induced(&self, keep: &[usize]) -> UndirectedGraph {
        let mut map = vec![u32::MAX; self.n];
        for (i, &v) in keep.iter().enumerate() {
            map[v] = i as u32;
        }
        let mut offsets = Vec::with_capacity(keep.len() + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        for &v in keep {
            for (&u, &w) in self.neighbors(v).iter().zip(self.weights(v)) {
                let m = map[u as usize];
                if m != u32::MAX {
                    neighbors.push(m);
                    weights.push(w);
                }
            }
            offsets.push(neighbors.len());
        }
        UndirectedGraph {
            n: keep.len(),
            offsets,
            neighbors,
            weights,
        }
    }

    /// `y = A x` with `A` the weighted adjacency matrix.
    pub fn adjacency_matvec(&self, x: &[f64], y: &mut [f64]) {
        for v in 0..self.n {
            let mut acc = 0.0;
            for (&u, &w) in self.neighbors(v).iter().zip(self.weights(v)) {
                acc += w * x[u as usize];
            }
            y[v] = acc;
        }
    }

    /// `y = (D - A) x` with `D` the weighted degree matrix.
    pub fn laplacian_matvec(&self, x: &[f64], y: &mut [f64]) {
        for v in 0..self.n {
            let mut acc = 0.0;
            let mut deg = 0.0;
            for (&u, &w) in self.neighbors(v).iter().zip(self.weights(v)) {
                acc += w * x[u as usize];
                deg += w;
            }
            y[v] = deg * x[v] - acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_degrees() {
        let g = DiGraph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3), (0, 1)], None);
        assert_eq!(g.edge_count(), 5);
        assert_eq!(g.out_degree(0), 3);
        assert_eq!(g.in_degree(3), 2);
        assert_eq!(g.predecessors(1), &[0, 0]);
        let u = g.undirected_simple();
        assert_eq!(u.edge_count(), 4);
        assert_eq!(u.neighbors(0), &[1, 2]);
        // parallel 0-1 edges merge into weight 2
        assert_eq!(u.weights(0), &[2.0, 1.0]);
    }

    #[test]
    fn weights_follow_edges() {
        let g = DiGraph::from_edges(3, &[(0, 2), (1, 2)], Some(&[0.5, -1.5]));
        assert_eq!(g.in_weights(2).unwrap(), &[0.5, -1.5]);
        let u = g.undirected_simple();
        assert_eq!(u.weights(2), &[0.5, 1.5]);
        assert_eq!(u.strength(2), 2.0);
    }

    #[test]
    fn induced_subgraph() {
        let u = UndirectedGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]);
        let s = u.induced(&[1, 2, 3]);
        assert_eq!(s.node_count(), 3);
        assert_eq!(s.edge_count(), 2);
        assert_eq!(s.neighbors(0), &[1]);
    }

    #[test]
    fn csr_round_trip() {
        let g = DiGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)], Some(&[1.0, 2.0, 3.0]));
        let h = DiGraph::from_csr(
            g.out_offsets().to_vec(),
            g.out_targets().to_vec(),
            g.raw_out_weights().map(|w| w.to_vec()),
        );
        assert_eq!(g, h);
    }
}
