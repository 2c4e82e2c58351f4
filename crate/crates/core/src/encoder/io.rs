//! Graph files.
//!
//! Edge-list text:
//!
//! ```text
//! %snntopo-edgelist 1
//! %nodes <n> edges <m> weighted <0|1>
//! %partition <offset> <core> <padding> <count_sources 0|1> <count_sinks 0|1>
//! ...
//! a b [w]
//! ```
//!
//! Binary CSR (little endian):
//!
//! ```text
//! magic        8 bytes "SNNCSR\0\0"
//! version      u32
//! n, m         u64, u64
//! weighted     u8
//! partitions   u32 count, then offset u64, core u64, padding u64, flags u8
//!              (bit 0 count_sources, bit 1 count_sinks)
//! groups       u32 count, then kind u8 (0 layer, 1 residual), layer u32,
//!              source u32, target u32, from u32, to u32,
//!              left_core u64, left_padding u64, right u64, edges u64
//! offsets      (n + 1) x u64
//! targets      m x u32
//! weights      m x f64 (only when weighted)
//! ```
//!
//! Edge groups are only kept by the binary format.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{EdgeGroup, EncodeError, GroupKind, MultipartiteGraph, Partition};
use crate::graph::{DiGraph, NodeId};

const MAGIC: &[u8; 8] = b"SNNCSR\0\0";
const VERSION: u32 = 1;
const TEXT_HEADER: &str = "%snntopo-edgelist 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    Csr,
}

impl GraphFormat {
    /// `.bin` / `.csr` select the binary dump, everything else is text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("csr") => GraphFormat::Csr,
            _ => GraphFormat::EdgeList,
        }
    }
}

pub fn write_edge_list(g: &MultipartiteGraph, w: &mut impl Write) -> Result<(), EncodeError> {
    writeln!(w, "{TEXT_HEADER}")?;
    let weighted = g.graph.is_weighted();
    writeln!(
        w,
        "%nodes {} edges {} weighted {}",
        g.node_count(),
        g.edge_count(),
        u8::from(weighted)
    )?;
    for p in &g.partitions {
        writeln!(
            w,
            "%partition {} {} {} {} {}",
            p.offset,
            p.core,
            p.padding,
            u8::from(p.count_sources),
            u8::from(p.count_sinks)
        )?;
    }
    for (a, b, wt) in g.graph.edges() {
        if weighted {
            writeln!(w, "{a} {b} {wt:?}")?;
        } else {
            writeln!(w, "{a} {b}")?;
        }
    }
    Ok(())
}

fn bad(msg: impl Into<String>) -> EncodeError {
    EncodeError::Format(msg.into())
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T, EncodeError> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(format!("line {line}: expected {what}")))
}

pub fn read_edge_list(r: impl BufRead) -> Result<MultipartiteGraph, EncodeError> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(l)) if l.trim() == TEXT_HEADER => {}
        _ => return Err(bad("missing edge-list header")),
    }
    let mut n = None;
    let mut weighted = false;
    let mut partitions = Vec::new();
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        let mut toks = line.split_whitespace();
        match toks.next() {
            None => continue,
            Some("%nodes") => {
                n = Some(parse::<usize>(toks.next(), "node count", lineno)?);
                let _ = toks.next();
                let _m: usize = parse(toks.next(), "edge count", lineno)?;
                let _ = toks.next();
                weighted = parse::<u8>(toks.next(), "weighted flag", lineno)? == 1;
            }
            Some("%partition") => {
                let offset = parse(toks.next(), "offset", lineno)?;
                let core = parse(toks.next(), "core size", lineno)?;
                let padding = parse(toks.next(), "padding size", lineno)?;
                let count_sources = parse::<u8>(toks.next(), "flag", lineno)? == 1;
                let count_sinks = parse::<u8>(toks.next(), "flag", lineno)? == 1;
                partitions.push(Partition {
                    offset,
                    core,
                    padding,
                    count_sources,
                    count_sinks,
                });
            }
            Some(t) if t.starts_with('%') || t.starts_with('#') => continue,
            Some(a) => {
                let a: NodeId = parse(Some(a), "source node", lineno)?;
                let b: NodeId = parse(toks.next(), "target node", lineno)?;
                edges.push((a, b));
                if weighted {
                    weights.push(parse::<f64>(toks.next(), "weight", lineno)?);
                }
            }
        }
    }
    let n = n.ok_or_else(|| bad("missing %nodes line"))?;
    if edges.iter().any(|&(a, b)| a as usize >= n || b as usize >= n) {
        return Err(bad("edge endpoint out of range"));
    }
    Ok(MultipartiteGraph {
        graph: DiGraph::from_edges(n, &edges, weighted.then_some(weights.as_slice())),
        partitions,
        groups: Vec::new(),
    })
}

fn put<const N: usize>(w: &mut impl Write, b: [u8; N]) -> std::io::Result<()> {
    w.write_all(&b)
}

fn get<const N: usize>(r: &mut impl Read) -> std::io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn get_u64(r: &mut impl Read) -> Result<usize, EncodeError> {
    Ok(u64::from_le_bytes(get(r)?) as usize)
}

fn get_u32(r: &mut impl Read) -> Result<u32, EncodeError> {
    Ok(u32::from_le_bytes(get(r)?))
}

pub fn write_csr(g: &MultipartiteGraph, w: &mut impl Write) -> Result<(), EncodeError> {
    w.write_all(MAGIC)?;
    put(w, VERSION.to_le_bytes())?;
    put(w, (g.node_count() as u64).to_le_bytes())?;
    put(w, (g.edge_count() as u64).to_le_bytes())?;
    put(w, [u8::from(g.graph.is_weighted())])?;
    put(w, (g.partitions.len() as u32).to_le_bytes())?;
    for p in &g.partitions {
        for v in [p.offset, p.core, p.padding] {
            put(w, (v as u64).to_le_bytes())?;
        }
        put(w, [u8::from(p.count_sources) | (u8::from(p.count_sinks) << 1)])?;
    }
    put(w, (g.groups.len() as u32).to_le_bytes())?;
    for grp in &g.groups {
        let (kind, source, target) = match grp.kind {
            GroupKind::Layer => (0u8, 0, 0),
            GroupKind::Residual { source, target } => (1u8, source, target),
        };
        put(w, [kind])?;
        for v in [grp.layer_index, source, target, grp.from_partition, grp.to_partition] {
            put(w, (v as u32).to_le_bytes())?;
        }
        for v in [grp.left_core, grp.left_padding, grp.right, grp.edges] {
            put(w, (v as u64).to_le_bytes())?;
        }
    }
    for &o in g.graph.out_offsets() {
        put(w, (o as u64).to_le_bytes())?;
    }
    for &t in g.graph.out_targets() {
        put(w, t.to_le_bytes())?;
    }
    if let Some(ws) = g.graph.raw_out_weights() {
        for &v in ws {
            put(w, v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_csr(r: &mut impl Read) -> Result<MultipartiteGraph, EncodeError> {
    let magic: [u8; 8] = get(r)?;
    if &magic != MAGIC {
        return Err(bad("not a CSR graph file (bad magic)"));
    }
    let version = get_u32(r)?;
    if version != VERSION {
        return Err(bad(format!("unsupported CSR version {version}")));
    }
    let n = get_u64(r)?;
    let m = get_u64(r)?;
    let [weighted] = get::<1>(r)?;
    let n_parts = get_u32(r)? as usize;
    let mut partitions = Vec::with_capacity(n_parts);
    for _ in 0..n_parts {
        let offset = get_u64(r)?;
        let core = get_u64(r)?;
        let padding = get_u64(r)?;
        let [flags] = get::<1>(r)?;
        partitions.push(Partition {
            offset,
            core,
            padding,
            count_sources: flags & 1 != 0,
            count_sinks: flags & 2 != 0,
        });
    }
    let n_groups = get_u32(r)? as usize;
    let mut groups = Vec::with_capacity(n_groups);
    for _ in 0..n_groups {
        let [kind] = get::<1>(r)?;
        let mut ids = [0usize; 5];
        for id in ids.iter_mut() {
            *id = get_u32(r)? as usize;
        }
        let mut sizes = [0usize; 4];
        for s in sizes.iter_mut() {
            *s = get_u64(r)?;
        }
        groups.push(EdgeGroup {
            kind: match kind {
                0 => GroupKind::Layer,
                1 => GroupKind::Residual {
                    source: ids[1],
                    target: ids[2],
                },
                k => return Err(bad(format!("unknown group kind {k}"))),
            },
            layer_index: ids[0],
            from_partition: ids[3],
            to_partition: ids[4],
            left_core: sizes[0],
            left_padding: sizes[1],
            right: sizes[2],
            edges: sizes[3],
        });
    }
    let offsets = (0..=n).map(|_| get_u64(r)).collect::<Result<Vec<_>, _>>()?;
    if offsets.last() != Some(&m) || offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(bad("corrupt offsets"));
    }
    let targets = (0..m).map(|_| get_u32(r)).collect::<Result<Vec<_>, _>>()?;
    if targets.iter().any(|&t| t as usize >= n) {
        return Err(bad("edge target out of range"));
    }
    let weights = match weighted {
        0 => None,
        _ => Some(
            (0..m)
                .map(|_| get::<8>(r).map(f64::from_le_bytes))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    Ok(MultipartiteGraph {
        graph: DiGraph::from_csr(offsets, targets, weights),
        partitions,
        groups,
    })
}

pub fn write_graph(path: &Path, g: &MultipartiteGraph) -> Result<(), EncodeError> {
    let mut w = BufWriter::new(File::create(path)?);
    match GraphFormat::from_path(path) {
        GraphFormat::Csr => write_csr(g, &mut w)?,
        GraphFormat::EdgeList => write_edge_list(g, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

/// Reads either format, sniffing the magic bytes.
pub fn read_graph(path: &Path) -> Result<MultipartiteGraph, EncodeError> {
    let mut r = BufReader::new(File::open(path)?);
    let head = r.fill_buf()?;
    if head.starts_with(MAGIC) {
        read_csr(&mut r)
    } else {
        read_edge_list(r)
    }
}
