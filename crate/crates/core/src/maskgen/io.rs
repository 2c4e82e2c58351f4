//! Mask container: a little-endian binary body plus a JSON sidecar.
//!
//! ```text
//! magic      8 bytes  "SNNMASK\0"
//! version    u32
//! name_len   u32, then name bytes (UTF-8)
//! n_layers   u32
//! per layer:
//!   layer_index u32
//!   ndim        u32, then ndim x u64 dims
//!   nnz         u64
//!   weighted    u8 (0 | 1)
//!   indices     nnz x u64 (sorted flat row-major indices)
//!   weights     nnz x f64 (only when weighted)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{LayerMask, MaskError, Method, SparseMask};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"SNNMASK\0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub method: Method,
    pub sparsity: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarLayer {
    pub layer_index: usize,
    pub shape: Vec<usize>,
    pub nnz: usize,
    pub weighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSidecar {
    pub format_version: u32,
    pub architecture: String,
    pub layers: Vec<SidecarLayer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorInfo>,
}

impl MaskSidecar {
    pub fn describe(mask: &SparseMask, generator: Option<GeneratorInfo>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            architecture: mask.architecture().to_string(),
            layers: mask
                .layers()
                .iter()
                .map(|l| SidecarLayer {
                    layer_index: l.layer_index(),
                    shape: l.shape().to_vec(),
                    nnz: l.nnz(),
                    weighted: l.weights().is_some(),
                })
                .collect(),
            generator,
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn put_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn encode_mask(mask: &SparseMask, w: &mut impl Write) -> Result<(), MaskError> {
    w.write_all(MAGIC)?;
    put_u32(w, FORMAT_VERSION)?;
    let name = mask.architecture().as_bytes();
    put_u32(w, name.len() as u32)?;
    w.write_all(name)?;
    put_u32(w, mask.layers().len() as u32)?;
    for l in mask.layers() {
        put_u32(w, l.layer_index() as u32)?;
        put_u32(w, l.shape().len() as u32)?;
        for &d in l.shape() {
            put_u64(w, d as u64)?;
        }
        put_u64(w, l.nnz() as u64)?;
        w.write_all(&[u8::from(l.weights().is_some())])?;
        for &i in l.indices() {
            put_u64(w, i)?;
        }
        if let Some(ws) = l.weights() {
            for &v in ws {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn decode_mask(r: &mut impl Read) -> Result<SparseMask, MaskError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(MaskError::Format("not a mask file (bad magic)".into()));
    }
    let version = get_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(MaskError::Format(format!("unsupported format version {version}")));
    }
    let name_len = get_u32(r)? as usize;
    let mut name = vec![0u8; name_len];
    r.read_exact(&mut name)?;
    let name = String::from_utf8(name).map_err(|_| MaskError::Format("architecture name is not UTF-8".into()))?;
    let n_layers = get_u32(r)?;
    let mut layers = Vec::with_capacity(n_layers as usize);
    for _ in 0..n_layers {
        let layer_index = get_u32(r)? as usize;
        let ndim = get_u32(r)? as usize;
        let shape = (0..ndim)
            .map(|_| get_u64(r).map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let nnz = get_u64(r)? as usize;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let indices = (0..nnz).map(|_| get_u64(r)).collect::<Result<Vec<_>, _>>()?;
        let weights = match flag[0] {
            0 => None,
            1 => Some(
                (0..nnz)
                    .map(|_| get_u64(r).map(f64::from_bits))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            other => return Err(MaskError::Format(format!("bad weight flag {other}"))),
        };
        layers.push(LayerMask::new(layer_index, shape, indices, weights)?);
    }
    Ok(SparseMask::new(name, layers))
}

/// Writes `path` (binary) and its `.json` sidecar.
pub fn write_mask(path: &Path, mask: &SparseMask, generator: Option<GeneratorInfo>) -> Result<(), MaskError> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_mask(mask, &mut w)?;
    w.flush()?;
    let sidecar = MaskSidecar::describe(mask, generator);
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Reads a mask; if a sidecar exists it must agree with the binary body.
pub fn read_mask(path: &Path) -> Result<SparseMask, MaskError> {
    let mut r = BufReader::new(File::open(path)?);
    let mask = decode_mask(&mut r)?;
    let side = sidecar_path(path);
    if side.exists() && side != path {
        let sidecar: MaskSidecar = serde_json::from_str(&std::fs::read_to_string(&side)?)?;
        let actual = MaskSidecar::describe(&mask, sidecar.generator.clone());
        if sidecar != actual {
            return Err(MaskError::Format(format!(
                "sidecar {} disagrees with mask body",
                side.display()
            )));
        }
    }
    Ok(mask)
}
