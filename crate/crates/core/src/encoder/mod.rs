//! Graph encodings of masked layers.
//!
//! The unrolled encoding turns every feature-map element into a node: a conv
//! layer on an `h x w x c_in` input becomes a bipartite graph whose left side
//! holds the (padded) input elements and whose right side holds the output
//! elements, with one edge per convolution step and unmasked kernel cell.
//! [`build_mge`] chains those graphs through pooling bridges and residual
//! shortcuts into one multipartite graph. The rolled encodings are the
//! kernel-level and channel-level baselines.
//!
//! Left-side numbering of a conv graph: the `h*w*c_in` core nodes come first in
//! channel-major order, followed by the padding nodes enumerated over the
//! padded grid (channel, row, column), skipping core positions.

pub mod io;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archspec::{ArchError, ArchitectureSpec, ConvSpec, LayerSpec, PoolGeometry, Shape3, Shortcut};
use crate::graph::{DiGraph, NodeId};
use crate::maskgen::{LayerMask, MaskError, SparseMask};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("layer {layer}: mask shape {found:?}, expected {expected:?}")]
    Shape {
        layer: usize,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("layer {layer}: {reason}")]
    Geometry { layer: usize, reason: String },
    #[error("layer {layer} is a {kind} layer, expected {expected}")]
    WrongKind {
        layer: usize,
        kind: &'static str,
        expected: &'static str,
    },
    #[error("layer {layer} has no mask")]
    MissingMask { layer: usize },
    #[error("weighted encoding requested but layer {layer} carries no weights")]
    Unweighted { layer: usize },
    #[error("partition mismatch at layer {layer}: {left} left nodes vs {right} upstream nodes")]
    Misaligned { layer: usize, left: usize, right: usize },
    #[error("graph has {0} nodes, more than 32-bit node ids allow")]
    TooLarge(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad graph file: {0}")]
    Format(String),
}

/// Which graph encoding to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    Unrolled,
    Rolled,
    RolledChannel,
}

impl FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unrolled" => Ok(Encoding::Unrolled),
            "rolled" => Ok(Encoding::Rolled),
            "rolled-channel" => Ok(Encoding::RolledChannel),
            other => Err(format!("unknown encoding `{other}` (unrolled | rolled | rolled-channel)")),
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Unrolled => "unrolled",
            Encoding::Rolled => "rolled",
            Encoding::RolledChannel => "rolled-channel",
        })
    }
}

/// Bipartite encoding of one layer. Left indices `>= left_core()` are padding nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    pub left: usize,
    pub left_padding: usize,
    pub right: usize,
    pub edges: Vec<(NodeId, NodeId)>,
    pub weights: Option<Vec<f64>>,
    pub layer_index: usize,
}

impl BipartiteGraph {
    pub fn left_core(&self) -> usize {
        self.left - self.left_padding
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Two-partition view (left, right) for the metric suite.
    pub fn to_multipartite(&self) -> MultipartiteGraph {
        MultipartiteGraph::disjoint_union(std::slice::from_ref(self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub offset: usize,
    pub core: usize,
    pub padding: usize,
    /// Whether nodes here count as sources (false for network inputs).
    pub count_sources: bool,
    /// Whether nodes here count as sinks (false for network outputs).
    pub count_sinks: bool,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.core + self.padding
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn end(&self) -> usize {
        self.offset + self.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupKind {
    Layer,
    Residual { source: usize, target: usize },
}

/// Bookkeeping for the edges contributed by one layer or shortcut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeGroup {
    pub kind: GroupKind,
    pub layer_index: usize,
    pub from_partition: usize,
    pub to_partition: usize,
    /// Left core size of the (bridged) layer graph.
    pub left_core: usize,
    pub left_padding: usize,
    pub right: usize,
    pub edges: usize,
}

/// Partitioned directed graph; every edge goes from a lower to a higher partition.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipartiteGraph {
    pub graph: DiGraph,
    pub partitions: Vec<Partition>,
    pub groups: Vec<EdgeGroup>,
}

impl MultipartiteGraph {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn partition_of(&self, node: usize) -> usize {
        self.partitions.partition_point(|p| p.end() <= node)
    }

    pub fn is_padding(&self, node: usize) -> bool {
        let p = &self.partitions[self.partition_of(node)];
        node >= p.offset + p.core
    }

    pub fn padding_count(&self) -> usize {
        self.partitions.iter().map(|p| p.padding).sum()
    }

    /// Side-by-side union of independent bipartite graphs, each contributing
    /// a left partition (no sources counted) and a right partition (no sinks counted).
    pub fn disjoint_union(graphs: &[BipartiteGraph]) -> Self {
        let weighted = !graphs.is_empty() && graphs.iter().all(|g| g.weights.is_some());
        let mut partitions = Vec::with_capacity(graphs.len() * 2);
        let mut groups = Vec::with_capacity(graphs.len());
        let mut edges = Vec::new();
        let mut weights = Vec::new();
        let mut offset = 0usize;
        for g in graphs {
            let l = offset;
            let r = offset + g.left;
            partitions.push(Partition {
                offset: l,
                core: g.left_core(),
                padding: g.left_padding,
                count_sources: false,
                count_sinks: true,
            });
            partitions.push(Partition {
                offset: r,
                core: g.right,
                padding: 0,
                count_sources: true,
                count_sinks: false,
            });
            groups.push(EdgeGroup {
                kind: GroupKind::Layer,
                layer_index: g.layer_index,
                from_partition: partitions.len() - 2,
                to_partition: partitions.len() - 1,
                left_core: g.left_core(),
                left_padding: g.left_padding,
                right: g.right,
                edges: g.edges.len(),
            });
            edges.extend(g.edges.iter().map(|&(a, b)| ((l + a as usize) as NodeId, (r + b as usize) as NodeId)));
            if weighted {
                weights.extend_from_slice(g.weights.as_deref().unwrap_or(&[]));
            }
            offset = r + g.right;
        }
        let graph = DiGraph::from_edges(offset, &edges, weighted.then_some(weights.as_slice()));
        Self {
            graph,
            partitions,
            groups,
        }
    }

    /// Drops every padding node and its edges, renumbering the rest in order.
    pub fn without_padding(&self) -> Self {
        if self.padding_count() == 0 {
            return self.clone();
        }
        let n = self.node_count();
        let mut map = vec![NodeId::MAX; n];
        let mut partitions = Vec::with_capacity(self.partitions.len());
        let mut next = 0usize;
        for p in &self.partitions {
            partitions.push(Partition {
                offset: next,
                padding: 0,
                ..*p
            });
            for v in p.offset..p.offset + p.core {
                map[v] = next as NodeId;
                next += 1;
            }
        }
        let weighted = self.graph.is_weighted();
        let mut edges = Vec::with_capacity(self.edge_count());
        let mut weights = Vec::new();
        for (a, b, w) in self.graph.edges() {
            let (ma, mb) = (map[a as usize], map[b as usize]);
            if ma != NodeId::MAX && mb != NodeId::MAX {
                edges.push((ma, mb));
                if weighted {
                    weights.push(w);
                }
            }
        }
        let groups = self
            .groups
            .iter()
            .map(|g| EdgeGroup {
                left_padding: 0,
                ..*g
            })
            .collect();
        Self {
            graph: DiGraph::from_edges(next, &edges, weighted.then_some(weights.as_slice())),
            partitions,
            groups,
        }
    }
}

fn check_shape(layer: &LayerMask, expected: &[usize]) -> Result<(), EncodeError> {
    if layer.shape() != expected {
        return Err(EncodeError::Shape {
            layer: layer.layer_index(),
            expected: expected.to_vec(),
            found: layer.shape().to_vec(),
        });
    }
    Ok(())
}

fn layer_weights(layer: &LayerMask, weighted: bool) -> Result<Option<&[f64]>, EncodeError> {
    match (weighted, layer.weights()) {
        (false, _) => Ok(None),
        (true, Some(w)) => Ok(Some(w)),
        (true, None) => Err(EncodeError::Unweighted {
            layer: layer.layer_index(),
        }),
    }
}

fn node_id(n: usize) -> Result<(), EncodeError> {
    if n > NodeId::MAX as usize {
        Err(EncodeError::TooLarge(n))
    } else {
        Ok(())
    }
}

/// One edge per nonzero entry of an `[n_in, n_out]` mask.
pub fn encode_linear(layer: &LayerMask, weighted: bool) -> Result<BipartiteGraph, EncodeError> {
    let shape = layer.shape();
    if shape.len() != 2 {
        return Err(EncodeError::Shape {
            layer: layer.layer_index(),
            expected: vec![0, 0],
            found: shape.to_vec(),
        });
    }
    let (n_in, n_out) = (shape[0], shape[1]);
    node_id(n_in.max(n_out))?;
    let ws = layer_weights(layer, weighted)?;
    let edges = layer
        .indices()
        .iter()
        .map(|&i| ((i as usize / n_out) as NodeId, (i as usize % n_out) as NodeId))
        .collect();
    Ok(BipartiteGraph {
        left: n_in,
        left_padding: 0,
        right: n_out,
        edges,
        weights: ws.map(<[f64]>::to_vec),
        layer_index: layer.layer_index(),
    })
}

/// Maps padded-grid positions `(c, py, px)` to left-node indices.
struct PaddedLayout {
    ph: usize,
    pw: usize,
    table: Vec<NodeId>,
    core: usize,
    padding: usize,
}

impl PaddedLayout {
    fn new(input: Shape3, padding: usize) -> Self {
        let (ph, pw) = (input.h + 2 * padding, input.w + 2 * padding);
        let core = input.len();
        let mut table = vec![0 as NodeId; input.c * ph * pw];
        let mut pad_next = core;
        for c in 0..input.c {
            for py in 0..ph {
                for px in 0..pw {
                    let inside = py >= padding && py < padding + input.h && px >= padding && px < padding + input.w;
                    let id = if inside {
                        (c * input.h + py - padding) * input.w + px - padding
                    } else {
                        pad_next += 1;
                        pad_next - 1
                    };
                    table[(c * ph + py) * pw + px] = id as NodeId;
                }
            }
        }
        Self {
            ph,
            pw,
            table,
            core,
            padding: pad_next - core,
        }
    }

    #[inline]
    fn at(&self, c: usize, py: usize, px: usize) -> NodeId {
        self.table[(c * self.ph + py) * self.pw + px]
    }
}

/// Number of padding nodes a conv with `padding` adds around `input`.
pub fn padding_nodes(input: Shape3, padding: usize) -> usize {
    (input.h + 2 * padding) * (input.w + 2 * padding) * input.c - input.len()
}

/// Unrolled input-aware encoding of a convolution over `input`.
pub fn encode_conv(
    layer: &LayerMask,
    conv: &ConvSpec,
    input: Shape3,
    weighted: bool,
) -> Result<BipartiteGraph, EncodeError> {
    let li = layer.layer_index();
    check_shape(layer, &[conv.c_out, conv.c_in, conv.kernel_h, conv.kernel_w])?;
    if input.c != conv.c_in {
        return Err(EncodeError::Geometry {
            layer: li,
            reason: format!("input has {} channels, conv expects {}", input.c, conv.c_in),
        });
    }
    let out = conv.output_shape(input).ok_or_else(|| EncodeError::Geometry {
        layer: li,
        reason: format!(
            "{}x{} kernel with stride {} and padding {} does not fit a {} input",
            conv.kernel_h, conv.kernel_w, conv.stride, conv.padding, input
        ),
    })?;
    let layout = PaddedLayout::new(input, conv.padding);
    node_id(layout.core + layout.padding)?;
    node_id(out.len())?;
    let ws = layer_weights(layer, weighted)?;
    let steps = out.h * out.w;
    let mut edges = Vec::with_capacity(layer.nnz() * steps);
    let mut weights = ws.map(|_| Vec::with_capacity(layer.nnz() * steps));
    let (kh, kw) = (conv.kernel_h, conv.kernel_w);
    for (e, &flat) in layer.indices().iter().enumerate() {
        let flat = flat as usize;
        let kx = flat % kw;
        let ky = (flat / kw) % kh;
        let ic = (flat / (kw * kh)) % conv.c_in;
        let oc = flat / (kw * kh * conv.c_in);
        for oy in 0..out.h {
            let py = oy * conv.stride + ky;
            let row = (oc * out.h + oy) * out.w;
            for ox in 0..out.w {
                let px = ox * conv.stride + kx;
                edges.push((layout.at(ic, py, px), (row + ox) as NodeId));
            }
        }
        if let (Some(dst), Some(src)) = (weights.as_mut(), ws) {
            dst.extend(std::iter::repeat_n(src[e], steps));
        }
    }
    Ok(BipartiteGraph {
        left: layout.core + layout.padding,
        left_padding: layout.padding,
        right: out.len(),
        edges,
        weights,
        layer_index: li,
    })
}

/// Rewires `next` so its left side is the un-pooled map `upstream`.
///
/// Each edge leaving a core node `u` is replicated once for every upstream
/// node in the pooling window that produces `u`; edges leaving padding nodes
/// are kept once, with the padding nodes renumbered after the upstream core.
pub fn pooling_bridge(
    upstream: Shape3,
    pool: &PoolGeometry,
    next: &BipartiteGraph,
) -> Result<BipartiteGraph, EncodeError> {
    let li = next.layer_index;
    let pooled = pool.output_shape(upstream).ok_or_else(|| EncodeError::Geometry {
        layer: li,
        reason: format!("pool window {}x{} larger than {}", pool.window_h, pool.window_w, upstream),
    })?;
    if pooled.len() != next.left_core() {
        return Err(EncodeError::Misaligned {
            layer: li,
            left: next.left_core(),
            right: pooled.len(),
        });
    }
    node_id(upstream.len() + next.left_padding)?;
    let core = next.left_core();
    let window = pool.window_h * pool.window_w;
    let mut edges = Vec::with_capacity(next.edges.len() * window);
    let mut weights = next.weights.as_ref().map(|_| Vec::with_capacity(next.edges.len() * window));
    for (i, &(u, v)) in next.edges.iter().enumerate() {
        let u = u as usize;
        let w = next.weights.as_ref().map(|ws| ws[i]);
        if u >= core {
            edges.push(((u - core + upstream.len()) as NodeId, v));
            if let (Some(dst), Some(w)) = (weights.as_mut(), w) {
                dst.push(w);
            }
            continue;
        }
        let (c, py, px) = pooled.coords(u);
        for y in py * pool.stride_h..py * pool.stride_h + pool.window_h {
            for x in px * pool.stride_w..px * pool.stride_w + pool.window_w {
                edges.push((upstream.index(c, y, x) as NodeId, v));
                if let (Some(dst), Some(w)) = (weights.as_mut(), w) {
                    dst.push(w);
                }
            }
        }
    }
    Ok(BipartiteGraph {
        left: upstream.len() + next.left_padding,
        left_padding: next.left_padding,
        right: next.right,
        edges,
        weights,
        layer_index: li,
    })
}

/// Shortcut edges from the source map (`from`) to the target output (`to`).
///
/// Identity shortcuts connect equal positions; projections are encoded as a
/// 1x1 convolution using `mask` (required for projections).
pub fn residual_edges(
    layer_index: usize,
    from: Shape3,
    to: Shape3,
    shortcut: &Shortcut,
    mask: Option<&LayerMask>,
    weighted: bool,
) -> Result<BipartiteGraph, EncodeError> {
    match shortcut {
        Shortcut::Identity => {
            if from != to {
                return Err(EncodeError::Geometry {
                    layer: layer_index,
                    reason: format!("identity shortcut from {from} to {to}"),
                });
            }
            node_id(from.len())?;
            let n = from.len();
            Ok(BipartiteGraph {
                left: n,
                left_padding: 0,
                right: n,
                edges: (0..n as NodeId).map(|i| (i, i)).collect(),
                weights: weighted.then(|| vec![1.0; n]),
                layer_index,
            })
        }
        Shortcut::Projection { c_in, c_out, stride } => {
            let conv = ConvSpec {
                c_in: *c_in,
                c_out: *c_out,
                kernel_h: 1,
                kernel_w: 1,
                stride: *stride,
                padding: 0,
            };
            let mask = mask.ok_or(EncodeError::MissingMask { layer: layer_index })?;
            let g = encode_conv(mask, &conv, from, weighted)?;
            if g.right != to.len() {
                return Err(EncodeError::Misaligned {
                    layer: layer_index,
                    left: g.right,
                    right: to.len(),
                });
            }
            Ok(g)
        }
    }
}

fn mask_for(mask: &SparseMask, layer: usize) -> Result<&LayerMask, EncodeError> {
    mask.layer(layer).ok_or(EncodeError::MissingMask { layer })
}

/// Unrolled encoding of a single conv or linear layer of `spec`.
pub fn encode_layer(
    spec: &ArchitectureSpec,
    mask: &SparseMask,
    layer_index: usize,
    weighted: bool,
) -> Result<BipartiteGraph, EncodeError> {
    let layer = mask_for(mask, layer_index)?;
    match spec.layer(layer_index)? {
        LayerSpec::Conv(c) => encode_conv(layer, c, spec.input_shape(layer_index)?, weighted),
        LayerSpec::Linear(l) => {
            check_shape(layer, &[l.n_in, l.n_out])?;
            encode_linear(layer, weighted)
        }
        other => Err(EncodeError::WrongKind {
            layer: layer_index,
            kind: other.kind_name(),
            expected: "conv or linear",
        }),
    }
}

/// Multipartite encoding of the whole network.
///
/// Partition `k` holds the input map of the `k`-th conv/linear layer (after
/// undoing any pooling in between) followed by that layer's padding nodes;
/// the last partition is the network output. Residual groups connect the
/// source layer's input partition to the target layer's output partition.
pub fn build_mge(spec: &ArchitectureSpec, mask: &SparseMask, weighted: bool) -> Result<MultipartiteGraph, EncodeError> {
    mask.check_against(spec)?;
    let layers = spec.layers();
    let mains: Vec<usize> = (0..layers.len())
        .filter(|&i| matches!(layers[i], LayerSpec::Conv(_) | LayerSpec::Linear(_)))
        .collect();
    if mains.is_empty() {
        return Err(EncodeError::Geometry {
            layer: 0,
            reason: "architecture has no conv or linear layers".into(),
        });
    }

    // pools sitting in front of each main layer, nearest first
    let mut pools_before: Vec<Vec<usize>> = Vec::with_capacity(mains.len());
    let mut prev = 0usize;
    for (k, &m) in mains.iter().enumerate() {
        let start = if k == 0 { 0 } else { prev + 1 };
        let mut ps: Vec<usize> = (start..m).filter(|&i| matches!(layers[i], LayerSpec::Pool(_))).collect();
        ps.reverse();
        pools_before.push(ps);
        prev = m;
    }

    let encoded: Vec<BipartiteGraph> = mains
        .par_iter()
        .zip(pools_before.par_iter())
        .map(|(&m, pools)| {
            let mut g = encode_layer(spec, mask, m, weighted)?;
            for &p in pools {
                let LayerSpec::Pool(pool) = layers[p] else { unreachable!() };
                let upstream = spec.input_shape(p)?;
                g = pooling_bridge(upstream, &pool.geometry(upstream), &g)?;
            }
            Ok(g)
        })
        .collect::<Result<_, EncodeError>>()?;

    let mut partitions = Vec::with_capacity(mains.len() + 1);
    let mut offset = 0usize;
    let mut upstream_core = encoded[0].left_core();
    for (k, g) in encoded.iter().enumerate() {
        let expected = if k == 0 {
            spec.input().len()
        } else {
            upstream_core
        };
        if g.left_core() != expected {
            return Err(EncodeError::Misaligned {
                layer: mains[k],
                left: g.left_core(),
                right: expected,
            });
        }
        partitions.push(Partition {
            offset,
            core: g.left_core(),
            padding: g.left_padding,
            count_sources: k != 0,
            count_sinks: true,
        });
        offset += g.left;
        upstream_core = g.right;
    }
    partitions.push(Partition {
        offset,
        core: upstream_core,
        padding: 0,
        count_sources: true,
        count_sinks: false,
    });
    let n = offset + upstream_core;
    node_id(n)?;

    let residuals: Vec<(usize, usize, usize, &Shortcut)> = layers
        .iter()
        .enumerate()
        .filter_map(|(i, l)| match l {
            LayerSpec::Residual(r) => Some((i, r.source, r.target, &r.shortcut)),
            _ => None,
        })
        .collect();
    let position = |layer: usize| mains.iter().position(|&m| m == layer);
    let mut shortcut_graphs = Vec::with_capacity(residuals.len());
    for &(i, source, target, shortcut) in &residuals {
        let (ks, kt) = match (position(source), position(target)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(EncodeError::Geometry {
                    layer: i,
                    reason: "residual endpoints must be conv or linear layers".into(),
                })
            }
        };
        let from = spec.input_shape(source)?;
        let to = spec.output_shape(target)?;
        let g = residual_edges(i, from, to, shortcut, mask.layer(i), weighted)?;
        if g.left_core() != partitions[ks].core || g.right != partitions[kt + 1].core {
            return Err(EncodeError::Misaligned {
                layer: i,
                left: g.left_core(),
                right: partitions[ks].core,
            });
        }
        shortcut_graphs.push((i, source, target, ks, kt + 1, g));
    }

    let total: usize = encoded.iter().map(|g| g.edges.len()).sum::<usize>()
        + shortcut_graphs.iter().map(|s| s.5.edges.len()).sum::<usize>();
    let mut edges = Vec::with_capacity(total);
    let mut weights = weighted.then(|| Vec::with_capacity(total));
    let mut groups = Vec::with_capacity(encoded.len() + shortcut_graphs.len());
    let mut push = |g: &BipartiteGraph, from: usize, to: usize, kind: GroupKind| {
        let (lo, ro) = (partitions[from].offset, partitions[to].offset);
        edges.extend(g.edges.iter().map(|&(a, b)| ((lo + a as usize) as NodeId, (ro + b as usize) as NodeId)));
        if let (Some(dst), Some(src)) = (weights.as_mut(), g.weights.as_ref()) {
            dst.extend_from_slice(src);
        }
        groups.push(EdgeGroup {
            kind,
            layer_index: g.layer_index,
            from_partition: from,
            to_partition: to,
            left_core: g.left_core(),
            left_padding: g.left_padding,
            right: g.right,
            edges: g.edges.len(),
        });
    };
    for (k, g) in encoded.iter().enumerate() {
        push(g, k, k + 1, GroupKind::Layer);
    }
    for (_, source, target, from, to, g) in &shortcut_graphs {
        push(
            g,
            *from,
            *to,
            GroupKind::Residual {
                source: *source,
                target: *target,
            },
        );
    }
    drop(encoded);
    drop(shortcut_graphs);
    let graph = DiGraph::from_edges(n, &edges, weights.as_deref());
    Ok(MultipartiteGraph {
        graph,
        partitions,
        groups,
    })
}

/// Kernel-level encoding: left nodes are `(c_in, ky, kx)` kernel entries, right
/// nodes are output channels, one edge per unmasked weight.
pub fn encode_rolled(layer: &LayerMask, spec: &LayerSpec, weighted: bool) -> Result<BipartiteGraph, EncodeError> {
    let Some(conv) = conv_of(spec) else {
        return encode_linear_checked(layer, spec, weighted);
    };
    check_shape(layer, &[conv.c_out, conv.c_in, conv.kernel_h, conv.kernel_w])?;
    let ws = layer_weights(layer, weighted)?;
    let fan = conv.c_in * conv.kernel_h * conv.kernel_w;
    let edges = layer
        .indices()
        .iter()
        .map(|&i| ((i as usize % fan) as NodeId, (i as usize / fan) as NodeId))
        .collect();
    Ok(BipartiteGraph {
        left: fan,
        left_padding: 0,
        right: conv.c_out,
        edges,
        weights: ws.map(<[f64]>::to_vec),
        layer_index: layer.layer_index(),
    })
}

/// Channel-level encoding: an edge `c_in -> c_out` whenever the kernel slice is
/// not fully masked, weighted by the slice's absolute weight sum.
pub fn encode_rolled_channel(
    layer: &LayerMask,
    spec: &LayerSpec,
    weighted: bool,
) -> Result<BipartiteGraph, EncodeError> {
    let Some(conv) = conv_of(spec) else {
        return encode_linear_checked(layer, spec, weighted);
    };
    check_shape(layer, &[conv.c_out, conv.c_in, conv.kernel_h, conv.kernel_w])?;
    let ws = layer_weights(layer, weighted)?;
    let area = conv.kernel_h * conv.kernel_w;
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut weights = ws.map(|_| Vec::new());
    // indices are sorted, so each (c_out, c_in) slice is a contiguous run
    for (e, &i) in layer.indices().iter().enumerate() {
        let slice = i as usize / area;
        let pair = ((slice % conv.c_in) as NodeId, (slice / conv.c_in) as NodeId);
        let fresh = edges.last() != Some(&pair);
        if fresh {
            edges.push(pair);
        }
        if let (Some(dst), Some(src)) = (weights.as_mut(), ws) {
            if fresh {
                dst.push(0.0);
            }
            *dst.last_mut().expect("pushed above") += src[e].abs();
        }
    }
    Ok(BipartiteGraph {
        left: conv.c_in,
        left_padding: 0,
        right: conv.c_out,
        edges,
        weights,
        layer_index: layer.layer_index(),
    })
}

fn conv_of(spec: &LayerSpec) -> Option<ConvSpec> {
    match spec {
        LayerSpec::Conv(c) => Some(*c),
        LayerSpec::Residual(r) => r.projection_conv(),
        _ => None,
    }
}

fn encode_linear_checked(layer: &LayerMask, spec: &LayerSpec, weighted: bool) -> Result<BipartiteGraph, EncodeError> {
    match spec {
        LayerSpec::Linear(l) => {
            check_shape(layer, &[l.n_in, l.n_out])?;
            encode_linear(layer, weighted)
        }
        other => Err(EncodeError::WrongKind {
            layer: layer.layer_index(),
            kind: other.kind_name(),
            expected: "weighted",
        }),
    }
}

/// Per-layer rolled graphs for every weighted layer, in layer order.
pub fn rolled_layers(
    spec: &ArchitectureSpec,
    mask: &SparseMask,
    encoding: Encoding,
    weighted: bool,
) -> Result<Vec<BipartiteGraph>, EncodeError> {
    mask.check_against(spec)?;
    spec.weighted_layers()
        .map(|i| {
            let layer = mask_for(mask, i)?;
            let ls = spec.layer(i)?;
            match encoding {
                Encoding::Rolled => encode_rolled(layer, ls, weighted),
                Encoding::RolledChannel => encode_rolled_channel(layer, ls, weighted),
                Encoding::Unrolled => encode_layer(spec, mask, i, weighted),
            }
        })
        .collect()
}

/// Whole-network graph for any encoding: the MGE for `Unrolled`, otherwise
/// the disjoint union of per-layer rolled graphs.
pub fn encode_network(
    spec: &ArchitectureSpec,
    mask: &SparseMask,
    encoding: Encoding,
    weighted: bool,
) -> Result<MultipartiteGraph, EncodeError> {
    match encoding {
        Encoding::Unrolled => build_mge(spec, mask, weighted),
        _ => Ok(MultipartiteGraph::disjoint_union(&rolled_layers(spec, mask, encoding, weighted)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archspec::{LinearSpec, PoolKind, PoolSpec, PoolWindow};

    fn figure1() -> (ConvSpec, Shape3) {
        (
            ConvSpec {
                c_in: 3,
                c_out: 2,
                kernel_h: 2,
                kernel_w: 2,
                stride: 1,
                padding: 0,
            },
            Shape3::new(3, 3, 3),
        )
    }

    #[test]
    fn figure1_sizes() {
        let (conv, input) = figure1();
        let g = encode_conv(&LayerMask::dense(0, vec![2, 3, 2, 2]), &conv, input, false).unwrap();
        assert_eq!((g.left, g.right, g.edge_count()), (27, 8, 96));
    }

    #[test]
    fn masked_kernel_channel() {
        let (conv, input) = figure1();
        let keep: Vec<u64> = (4..24).collect();
        let g = encode_conv(&LayerMask::new(0, vec![2, 3, 2, 2], keep, None).unwrap(), &conv, input, false).unwrap();
        assert_eq!(g.edge_count(), 96 - 16);
    }

    #[test]
    fn linear_identity_mask() {
        let m = LayerMask::new(0, vec![2, 2], vec![0, 3], None).unwrap();
        assert_eq!(encode_linear(&m, false).unwrap().edges, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn padding_nodes_follow_core() {
        let conv = ConvSpec {
            c_in: 1,
            c_out: 1,
            kernel_h: 3,
            kernel_w: 3,
            stride: 1,
            padding: 1,
        };
        let g = encode_conv(&LayerMask::dense(0, vec![1, 1, 3, 3]), &conv, Shape3::new(2, 2, 1), false).unwrap();
        assert_eq!(g.left, 16);
        assert_eq!(g.left_padding, 12);
        assert_eq!(g.edge_count(), 9 * 4);
        assert_eq!(padding_nodes(Shape3::new(2, 2, 1), 1), 12);
    }

    #[test]
    fn pool_bridge_replicates() {
        let next = BipartiteGraph {
            left: 1,
            left_padding: 0,
            right: 1,
            edges: vec![(0, 0)],
            weights: Some(vec![0.5]),
            layer_index: 2,
        };
        let pool = PoolSpec {
            window: PoolWindow::Fixed { h: 2, w: 2 },
            stride: 2,
            kind: PoolKind::Max,
        };
        let up = Shape3::new(2, 2, 1);
        let g = pooling_bridge(up, &pool.geometry(up), &next).unwrap();
        assert_eq!(g.left, 4);
        assert_eq!(g.edges, vec![(0, 0), (1, 0), (2, 0), (3, 0)]);
        assert_eq!(g.weights.unwrap(), vec![0.5; 4]);
    }

    #[test]
    fn tiny_chain_is_complete() {
        let conv = |c_in, c_out| {
            LayerSpec::Conv(ConvSpec {
                c_in,
                c_out,
                kernel_h: 1,
                kernel_w: 1,
                stride: 1,
                padding: 0,
            })
        };
        let spec = ArchitectureSpec::new("tiny", Shape3::new(2, 2, 1), vec![conv(1, 1), conv(1, 1)]).unwrap();
        let g = build_mge(&spec, &SparseMask::dense(&spec), false).unwrap();
        assert_eq!(g.partitions.len(), 3);
        assert_eq!(g.node_count(), 12);
        assert_eq!(g.edge_count(), 8);
    }

    #[test]
    fn rolled_counts() {
        let spec = LayerSpec::Conv(ConvSpec {
            c_in: 3,
            c_out: 2,
            kernel_h: 3,
            kernel_w: 3,
            stride: 1,
            padding: 0,
        });
        let dense = LayerMask::dense(0, vec![2, 3, 3, 3]);
        let g = encode_rolled(&dense, &spec, false).unwrap();
        assert_eq!((g.left, g.right, g.edge_count()), (27, 2, 54));
        let ch = encode_rolled_channel(&dense, &spec, false).unwrap();
        assert_eq!(ch.edge_count(), 6);
        let keep: Vec<u64> = (9..54).collect();
        let pruned = LayerMask::new(0, vec![2, 3, 3, 3], keep, None).unwrap();
        assert_eq!(encode_rolled_channel(&pruned, &spec, false).unwrap().edge_count(), 5);
        let lin = LayerSpec::Linear(LinearSpec { n_in: 2, n_out: 3 });
        let m = LayerMask::dense(1, vec![2, 3]);
        assert_eq!(encode_rolled(&m, &lin, false).unwrap().edge_count(), 6);
    }

    #[test]
    fn rolled_channel_weight_sum() {
        let spec = LayerSpec::Conv(ConvSpec {
            c_in: 1,
            c_out: 1,
            kernel_h: 1,
            kernel_w: 2,
            stride: 1,
            padding: 0,
        });
        let m = LayerMask::new(0, vec![1, 1, 1, 2], vec![0, 1], Some(vec![0.5, -1.5])).unwrap();
        let g = encode_rolled_channel(&m, &spec, true).unwrap();
        assert_eq!(g.weights.unwrap(), vec![2.0]);
    }

    #[test]
    fn without_padding_drops_nodes() {
        let conv = ConvSpec {
            c_in: 1,
            c_out: 1,
            kernel_h: 3,
            kernel_w: 3,
            stride: 1,
            padding: 1,
        };
        let g = encode_conv(&LayerMask::dense(0, vec![1, 1, 3, 3]), &conv, Shape3::new(2, 2, 1), false).unwrap();
        let m = g.to_multipartite();
        assert_eq!(m.padding_count(), 12);
        assert!(m.is_padding(5));
        assert!(!m.is_padding(3));
        let core = m.without_padding();
        assert_eq!(core.node_count(), 8);
        assert_eq!(core.edge_count(), 16);
    }
}
