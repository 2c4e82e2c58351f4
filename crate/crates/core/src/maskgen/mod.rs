//! Per-layer sparse masks, layer-wise random pruning (Uniform, ER, ERK),
//! density statistics and weight attachment.

mod io;

pub use io::{read_mask, sidecar_path, write_mask, GeneratorInfo, MaskSidecar, FORMAT_VERSION};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archspec::ArchitectureSpec;

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("sparsity must lie in [0, 1), got {0}")]
    Sparsity(f64),
    #[error("layer {layer}: indices must be strictly increasing")]
    Unsorted { layer: usize },
    #[error("layer {layer}: index {index} outside tensor of {total} entries")]
    OutOfBounds { layer: usize, index: u64, total: u64 },
    #[error("layer {layer}: {weights} weights for {nnz} nonzeros")]
    WeightCount { layer: usize, weights: usize, nnz: usize },
    #[error("layer {layer}: stored weight at position {position} is exactly zero")]
    ZeroWeight { layer: usize, position: usize },
    #[error("mask does not match architecture: {0}")]
    LayerMismatch(String),
    #[error("mask already carries weights")]
    AlreadyWeighted,
    #[error("mask file: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("sidecar: {0}")]
    Json(#[from] serde_json::Error),
}

/// Nonzero pattern of one weight tensor, optionally with the surviving weight values.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMask {
    layer_index: usize,
    shape: Vec<usize>,
    indices: Vec<u64>,
    weights: Option<Vec<f64>>,
}

impl LayerMask {
    pub fn new(
        layer_index: usize,
        shape: Vec<usize>,
        indices: Vec<u64>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self, MaskError> {
        let total: u64 = shape.iter().map(|&d| d as u64).product();
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MaskError::Unsorted { layer: layer_index });
        }
        if let Some(&last) = indices.last() {
            if last >= total {
                return Err(MaskError::OutOfBounds {
                    layer: layer_index,
                    index: last,
                    total,
                });
            }
        }
        if let Some(w) = &weights {
            if w.len() != indices.len() {
                return Err(MaskError::WeightCount {
                    layer: layer_index,
                    weights: w.len(),
                    nnz: indices.len(),
                });
            }
            if let Some(position) = w.iter().position(|&v| v == 0.0) {
                return Err(MaskError::ZeroWeight {
                    layer: layer_index,
                    position,
                });
            }
        }
        Ok(Self {
            layer_index,
            shape,
            indices,
            weights,
        })
    }

    pub fn dense(layer_index: usize, shape: Vec<usize>) -> Self {
        let total: u64 = shape.iter().map(|&d| d as u64).product();
        Self {
            layer_index,
            shape,
            indices: (0..total).collect(),
            weights: None,
        }
    }

    /// Builds a layer mask from a dense 0/1 (or real-valued) tensor in row-major order.
    /// Zero entries are pruned; nonzero values become weights when `weighted`.
    pub fn from_dense(layer_index: usize, shape: Vec<usize>, values: &[f64], weighted: bool) -> Result<Self, MaskError> {
        let total: usize = shape.iter().product();
        if values.len() != total {
            return Err(MaskError::LayerMismatch(format!(
                "layer {layer_index}: {} values for shape {:?}",
                values.len(),
                shape
            )));
        }
        let mut indices = Vec::new();
        let mut weights = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if v != 0.0 {
                indices.push(i as u64);
                weights.push(v);
            }
        }
        Self::new(layer_index, shape, indices, weighted.then_some(weights))
    }

    pub fn layer_index(&self) -> usize {
        self.layer_index
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn total(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn density(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.nnz() as f64 / total as f64
        }
    }

    pub fn contains(&self, flat: u64) -> bool {
        self.indices.binary_search(&flat).is_ok()
    }

    /// Weight stored at a flat index (1.0 for unweighted masks), or `None` if pruned.
    pub fn value_at(&self, flat: u64) -> Option<f64> {
        let pos = self.indices.binary_search(&flat).ok()?;
        Some(self.weights.as_ref().map_or(1.0, |w| w[pos]))
    }

    /// Iterates `(flat_index, weight)` with weight 1.0 when unweighted.
    pub fn entries(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.indices.iter().enumerate().map(move |(i, &idx)| {
            (idx, self.weights.as_ref().map_or(1.0, |w| w[i]))
        })
    }

    /// Fan-in used for weight initialisation: `c_in*kh*kw` for conv, `n_in` for linear.
    pub fn fan_in(&self) -> usize {
        match self.shape.as_slice() {
            [_, c_in, kh, kw] => c_in * kh * kw,
            [n_in, _] => *n_in,
            other => other.iter().skip(1).product(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMask {
    architecture: String,
    layers: Vec<LayerMask>,
}

impl SparseMask {
    pub fn new(architecture: impl Into<String>, mut layers: Vec<LayerMask>) -> Self {
        layers.sort_by_key(|l| l.layer_index);
        Self {
            architecture: architecture.into(),
            layers,
        }
    }

    /// All-ones mask over every weighted layer of `spec`.
    pub fn dense(spec: &ArchitectureSpec) -> Self {
        let layers = spec
            .weighted_layers()
            .map(|i| LayerMask::dense(i, spec.layers()[i].weight_shape().expect("weighted")))
            .collect();
        Self::new(spec.name(), layers)
    }

    pub fn architecture(&self) -> &str {
        &self.architecture
    }

    pub fn layers(&self) -> &[LayerMask] {
        &self.layers
    }

    pub fn layer(&self, layer_index: usize) -> Option<&LayerMask> {
        self.layers
            .binary_search_by_key(&layer_index, |l| l.layer_index)
            .ok()
            .map(|i| &self.layers[i])
    }

    pub fn is_weighted(&self) -> bool {
        !self.layers.is_empty() && self.layers.iter().all(|l| l.weights.is_some())
    }

    pub fn nnz(&self) -> usize {
        self.layers.iter().map(LayerMask::nnz).sum()
    }

    /// Checks layer count and tensor shapes against the architecture.
    pub fn check_against(&self, spec: &ArchitectureSpec) -> Result<(), MaskError> {
        let expected: Vec<usize> = spec.weighted_layers().collect();
        let found: Vec<usize> = self.layers.iter().map(|l| l.layer_index).collect();
        if expected != found {
            return Err(MaskError::LayerMismatch(format!(
                "weighted layers {expected:?}, mask covers {found:?}"
            )));
        }
        for l in &self.layers {
            let shape = spec.layers()[l.layer_index].weight_shape().expect("weighted");
            if shape != l.shape {
                return Err(MaskError::LayerMismatch(format!(
                    "layer {}: architecture shape {:?}, mask shape {:?}",
                    l.layer_index, shape, l.shape
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Generation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Uniform,
    Er,
    Erk,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Method::Uniform),
            "er" => Ok(Method::Er),
            "erk" => Ok(Method::Erk),
            other => Err(format!("unknown pruning method `{other}`")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Uniform => "uniform",
            Method::Er => "er",
            Method::Erk => "erk",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskWarning {
    /// No weight survived in this layer.
    EmptyLayer { layer_index: usize },
    /// Keep probability was capped at 1.
    Saturated { layer_index: usize },
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub method: Method,
    pub sparsity: f64,
    pub seed: u64,
    /// Layers left dense. Uniform prunes the rest at the target sparsity; ER and
    /// ERK count the dense layers toward the global target.
    pub exclude: Vec<usize>,
}

impl GenerateOptions {
    pub fn new(method: Method, sparsity: f64, seed: u64) -> Self {
        Self {
            method,
            sparsity,
            seed,
            exclude: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub mask: SparseMask,
    pub keep_probabilities: Vec<(usize, f64)>,
    pub warnings: Vec<MaskWarning>,
}

/// Unnormalised ER / ERK keep term for a weight tensor.
///
/// ER uses `(n_in + n_out) / (n_in * n_out)` over the channel dims; ERK sums and
/// multiplies every tensor dimension, so kernel extents only enter for conv layers.
pub fn proportional_term(shape: &[usize], method: Method) -> f64 {
    match method {
        Method::Uniform => 1.0,
        Method::Er => {
            let (a, b) = (shape[0] as f64, shape[1] as f64);
            (a + b) / (a * b)
        }
        Method::Erk => {
            let sum: usize = shape.iter().sum();
            let prod: usize = shape.iter().product();
            sum as f64 / prod as f64
        }
    }
}

fn check_sparsity(s: f64) -> Result<(), MaskError> {
    if !(0.0..1.0).contains(&s) || s.is_nan() {
        return Err(MaskError::Sparsity(s));
    }
    Ok(())
}

/// Per-layer keep probabilities scaled by a global factor so the expected total
/// matches `(1 - s) * |W|`. Layers whose probability would exceed 1 are pinned to 1
/// and the factor is re-solved over the rest.
pub fn keep_probabilities(
    totals: &[usize],
    terms: &[f64],
    sparsity: f64,
    dense: &[bool],
) -> (Vec<f64>, Vec<bool>) {
    let n = totals.len();
    let grand: f64 = totals.iter().map(|&t| t as f64).sum();
    let target = (1.0 - sparsity) * grand;
    let mut fixed = dense.to_vec();
    let mut saturated = vec![false; n];
    loop {
        let committed: f64 = (0..n).filter(|&i| fixed[i]).map(|i| totals[i] as f64).sum();
        let weight: f64 = (0..n)
            .filter(|&i| !fixed[i])
            .map(|i| terms[i] * totals[i] as f64)
            .sum();
        let eps = if weight > 0.0 {
            ((target - committed) / weight).max(0.0)
        } else {
            0.0
        };
        let mut changed = false;
        for i in 0..n {
            if !fixed[i] && eps * terms[i] > 1.0 {
                fixed[i] = true;
                saturated[i] = true;
                changed = true;
            }
        }
        if !changed {
            let probs = (0..n)
                .map(|i| if fixed[i] { 1.0 } else { eps * terms[i] })
                .collect();
            return (probs, saturated);
        }
    }
}

/// Integer counts per layer summing to the rounded expected total; fractional
/// parts are apportioned by largest remainder (ties to the earlier layer).
fn apportion(desired: &[f64], caps: &[usize]) -> Vec<usize> {
    let total = desired.iter().sum::<f64>().round() as usize;
    let mut counts: Vec<usize> = desired
        .iter()
        .zip(caps)
        .map(|(&d, &c)| (d.floor() as usize).min(c))
        .collect();
    let mut deficit = total.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..desired.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = desired[a] - desired[a].floor();
        let rb = desired[b] - desired[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    while deficit > 0 {
        let before = deficit;
        for &i in &order {
            if deficit == 0 {
                break;
            }
            if counts[i] < caps[i] {
                counts[i] += 1;
                deficit -= 1;
            }
        }
        if deficit == before {
            break;
        }
    }
    counts
}

fn layer_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample_layer(layer_index: usize, shape: Vec<usize>, keep: usize, seed: u64) -> LayerMask {
    let total: usize = shape.iter().product();
    if keep >= total {
        return LayerMask::dense(layer_index, shape);
    }
    let mut rng = layer_rng(seed, layer_index as u64);
    let mut picked: Vec<u64> = index::sample(&mut rng, total, keep)
        .into_iter()
        .map(|i| i as u64)
        .collect();
    picked.sort_unstable();
    LayerMask {
        layer_index,
        shape,
        indices: picked,
        weights: None,
    }
}

pub fn generate(spec: &ArchitectureSpec, opts: &GenerateOptions) -> Result<Generated, MaskError> {
    check_sparsity(opts.sparsity)?;
    let layers: Vec<usize> = spec.weighted_layers().collect();
    let shapes: Vec<Vec<usize>> = layers
        .iter()
        .map(|&i| spec.layers()[i].weight_shape().expect("weighted"))
        .collect();
    let totals: Vec<usize> = shapes.iter().map(|s| s.iter().product()).collect();
    let dense: Vec<bool> = layers.iter().map(|i| opts.exclude.contains(i)).collect();

    let (probs, saturated, counts) = match opts.method {
        Method::Uniform => {
            let probs: Vec<f64> = dense
                .iter()
                .map(|&d| if d { 1.0 } else { 1.0 - opts.sparsity })
                .collect();
            let counts = totals
                .iter()
                .zip(&probs)
                .map(|(&t, &p)| ((p * t as f64).round() as usize).min(t))
                .collect();
            (probs, vec![false; layers.len()], counts)
        }
        Method::Er | Method::Erk => {
            let terms: Vec<f64> = shapes.iter().map(|s| proportional_term(s, opts.method)).collect();
            let (probs, saturated) = keep_probabilities(&totals, &terms, opts.sparsity, &dense);
            let desired: Vec<f64> = probs.iter().zip(&totals).map(|(p, &t)| p * t as f64).collect();
            let counts = apportion(&desired, &totals);
            (probs, saturated, counts)
        }
    };

    let mut warnings = Vec::new();
    let mut out = Vec::with_capacity(layers.len());
    for (k, &li) in layers.iter().enumerate() {
        if saturated[k] {
            warnings.push(MaskWarning::Saturated { layer_index: li });
        }
        if counts[k] == 0 {
            warnings.push(MaskWarning::EmptyLayer { layer_index: li });
        }
        out.push(sample_layer(li, shapes[k].clone(), counts[k], opts.seed));
    }
    for w in &warnings {
        log::warn!("mask generation: {w:?}");
    }
    Ok(Generated {
        mask: SparseMask::new(spec.name(), out),
        keep_probabilities: layers.into_iter().zip(probs).collect(),
        warnings,
    })
}

pub fn generate_uniform(spec: &ArchitectureSpec, sparsity: f64, seed: u64) -> Result<Generated, MaskError> {
    generate(spec, &GenerateOptions::new(Method::Uniform, sparsity, seed))
}

pub fn generate_er(spec: &ArchitectureSpec, sparsity: f64, seed: u64) -> Result<Generated, MaskError> {
    generate(spec, &GenerateOptions::new(Method::Er, sparsity, seed))
}

pub fn generate_erk(spec: &ArchitectureSpec, sparsity: f64, seed: u64) -> Result<Generated, MaskError> {
    generate(spec, &GenerateOptions::new(Method::Erk, sparsity, seed))
}

// ---------------------------------------------------------------------------
// Density

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDensity {
    pub layer_index: usize,
    pub nonzeros: usize,
    pub total: usize,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub layers: Vec<LayerDensity>,
    pub global_density: f64,
    /// Unweighted mean of the per-layer densities.
    pub average_layer_density: f64,
    pub warnings: Vec<MaskWarning>,
}

pub fn density_report(mask: &SparseMask) -> DensityReport {
    let layers: Vec<LayerDensity> = mask
        .layers()
        .iter()
        .map(|l| LayerDensity {
            layer_index: l.layer_index,
            nonzeros: l.nnz(),
            total: l.total(),
            density: l.density(),
        })
        .collect();
    let nnz: usize = layers.iter().map(|l| l.nonzeros).sum();
    let total: usize = layers.iter().map(|l| l.total).sum();
    let average = if layers.is_empty() {
        0.0
    } else {
        layers.iter().map(|l| l.density).sum::<f64>() / layers.len() as f64
    };
    let warnings = layers
        .iter()
        .filter(|l| l.nonzeros == 0)
        .map(|l| MaskWarning::EmptyLayer {
            layer_index: l.layer_index,
        })
        .collect();
    DensityReport {
        global_density: if total == 0 { 0.0 } else { nnz as f64 / total as f64 },
        average_layer_density: average,
        layers,
        warnings,
    }
}

// ---------------------------------------------------------------------------
// Weights

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightInit {
    /// Normal(0, sqrt(2 / fan_in)).
    GaussianFanIn,
    UnitMagnitude,
}

const WEIGHT_STREAM_OFFSET: u64 = 1 << 32;

pub fn attach_weights(mask: &SparseMask, seed: u64, init: WeightInit) -> Result<SparseMask, MaskError> {
    if mask.layers.iter().any(|l| l.weights.is_some()) {
        return Err(MaskError::AlreadyWeighted);
    }
    let layers = mask
        .layers
        .iter()
        .map(|l| {
            let weights = match init {
                WeightInit::UnitMagnitude => vec![1.0; l.nnz()],
                WeightInit::GaussianFanIn => {
                    let std = (2.0 / l.fan_in().max(1) as f64).sqrt();
                    let normal = Normal::new(0.0, std).expect("finite std");
                    let mut rng = layer_rng(seed, WEIGHT_STREAM_OFFSET + l.layer_index as u64);
                    (0..l.nnz())
                        .map(|_| loop {
                            let v: f64 = normal.sample(&mut rng);
                            if v != 0.0 {
                                break v;
                            }
                        })
                        .collect()
                }
            };
            LayerMask {
                weights: Some(weights),
                ..l.clone()
            }
        })
        .collect();
    Ok(SparseMask::new(mask.architecture.clone(), layers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archspec::{load_architecture, ArchitectureSpec};
    use crate::fixtures;

    fn linear44() -> ArchitectureSpec {
        load_architecture(r#"{"name":"lin","input":[1,1,4],"layers":[{"kind":"linear","n_in":4,"n_out":4}]}"#).unwrap()
    }

    #[test]
    fn uniform_exact_count() {
        for seed in 0..5 {
            let g = generate_uniform(&linear44(), 0.5, seed).unwrap();
            assert_eq!(g.mask.nnz(), 8);
        }
    }

    #[test]
    fn zero_sparsity_is_dense() {
        let spec = fixtures::architecture("conv6").unwrap();
        for method in [Method::Uniform, Method::Er, Method::Erk] {
            let g = generate(&spec, &GenerateOptions::new(method, 0.0, 3)).unwrap();
            assert_eq!(g.mask.nnz(), spec.total_params(), "{method}");
        }
    }

    #[test]
    fn sparsity_out_of_range() {
        assert!(matches!(generate_er(&linear44(), 1.0, 0), Err(MaskError::Sparsity(_))));
        assert!(matches!(generate_er(&linear44(), -0.1, 0), Err(MaskError::Sparsity(_))));
    }

    #[test]
    fn conv6_global_density() {
        let spec = fixtures::architecture("conv6").unwrap();
        let layers = spec.weighted_layers().count();
        let g = generate_uniform(&spec, 0.9, 1).unwrap();
        let target = 0.1 * spec.total_params() as f64;
        assert!((g.mask.nnz() as f64 - target).abs() <= layers as f64);
        let g = generate_erk(&spec, 0.9, 1).unwrap();
        assert_eq!(g.mask.nnz(), target.round() as usize);
        let report = density_report(&g.mask);
        assert!((report.global_density - 0.1).abs() < 1.0 / spec.total_params() as f64);
    }

    #[test]
    fn proportional_terms() {
        assert_eq!(proportional_term(&[4, 4], Method::Er), 0.5);
        let erk = proportional_term(&[16, 3, 3, 3], Method::Erk);
        assert!((erk - 25.0 / 432.0).abs() < 1e-15);
        assert!((erk - 0.05787).abs() < 1e-5);
    }

    #[test]
    fn single_layer_density_is_one_minus_s() {
        let spec = load_architecture(r#"{"name":"l","input":[1,1,10],"layers":[{"kind":"linear","n_in":10,"n_out":10}]}"#)
            .unwrap();
        for method in [Method::Uniform, Method::Er, Method::Erk] {
            let g = generate(&spec, &GenerateOptions::new(method, 0.3, 9)).unwrap();
            assert_eq!(g.mask.nnz(), 70, "{method}");
        }
    }

    #[test]
    fn er_ratio_between_unsaturated_layers() {
        let spec = fixtures::architecture("conv6").unwrap();
        let g = generate_er(&spec, 0.9, 0).unwrap();
        let sat: Vec<usize> = g
            .warnings
            .iter()
            .filter_map(|w| match w {
                MaskWarning::Saturated { layer_index } => Some(*layer_index),
                _ => None,
            })
            .collect();
        let free: Vec<(usize, f64)> = g
            .keep_probabilities
            .iter()
            .copied()
            .filter(|(i, _)| !sat.contains(i))
            .collect();
        assert!(free.len() >= 2);
        let term = |i: usize| proportional_term(&spec.layers()[i].weight_shape().unwrap(), Method::Er);
        let (a, pa) = free[0];
        for &(b, pb) in &free[1..] {
            assert!((pa / pb - term(a) / term(b)).abs() < 1e-9);
        }
    }

    #[test]
    fn exclusion_keeps_layer_dense() {
        let spec = fixtures::architecture("conv6").unwrap();
        let mut opts = GenerateOptions::new(Method::Erk, 0.9, 2);
        opts.exclude = vec![0];
        let g = generate(&spec, &opts).unwrap();
        assert_eq!(g.mask.layer(0).unwrap().density(), 1.0);
    }

    #[test]
    fn density_half() {
        let layer = LayerMask::new(0, vec![2, 5], vec![0, 2, 4, 6, 8], None).unwrap();
        let r = density_report(&SparseMask::new("x", vec![layer]));
        assert_eq!(r.layers[0].density, 0.5);
        assert_eq!(r.global_density, 0.5);
    }

    #[test]
    fn dense_conv6_report() {
        let spec = fixtures::architecture("conv6").unwrap();
        let r = density_report(&SparseMask::dense(&spec));
        assert!(r.layers.iter().all(|l| l.density == 1.0));
        assert_eq!(r.global_density, 1.0);
        assert_eq!(r.average_layer_density, 1.0);
    }

    #[test]
    fn invariants_rejected() {
        assert!(matches!(LayerMask::new(0, vec![2, 2], vec![1, 1], None), Err(MaskError::Unsorted { .. })));
        assert!(matches!(LayerMask::new(0, vec![2, 2], vec![4], None), Err(MaskError::OutOfBounds { .. })));
        assert!(matches!(
            LayerMask::new(0, vec![2, 2], vec![1], Some(vec![])),
            Err(MaskError::WeightCount { .. })
        ));
        assert!(matches!(
            LayerMask::new(0, vec![2, 2], vec![1], Some(vec![0.0])),
            Err(MaskError::ZeroWeight { .. })
        ));
    }

    #[test]
    fn unit_and_gaussian_weights() {
        let spec = fixtures::architecture("conv6").unwrap();
        let g = generate_erk(&spec, 0.5, 4).unwrap();
        let unit = attach_weights(&g.mask, 1, WeightInit::UnitMagnitude).unwrap();
        assert!(unit.layers().iter().all(|l| l.weights().unwrap().iter().all(|&w| w == 1.0)));
        assert!(matches!(
            attach_weights(&unit, 1, WeightInit::UnitMagnitude),
            Err(MaskError::AlreadyWeighted)
        ));

        let gauss = attach_weights(&g.mask, 1, WeightInit::GaussianFanIn).unwrap();
        // Layer 7 (256->256 3x3 conv) has plenty of samples.
        let l = gauss.layer(7).unwrap();
        let w = l.weights().unwrap();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64;
        let expected = (2.0f64 / (256.0 * 9.0)).sqrt();
        assert!((var.sqrt() / expected - 1.0).abs() < 0.01, "{} vs {}", var.sqrt(), expected);
        assert_eq!(gauss, attach_weights(&g.mask, 1, WeightInit::GaussianFanIn).unwrap());
    }

    #[test]
    fn empty_layer_weights() {
        let layer = LayerMask::new(0, vec![2, 2], vec![], None).unwrap();
        let m = attach_weights(&SparseMask::new("x", vec![layer]), 0, WeightInit::GaussianFanIn).unwrap();
        assert_eq!(m.layers()[0].weights().unwrap().len(), 0);
    }

    #[test]
    fn same_seed_same_mask() {
        let spec = fixtures::architecture("resnet20").unwrap();
        let a = generate_erk(&spec, 0.8, 11).unwrap().mask;
        let b = generate_erk(&spec, 0.8, 11).unwrap().mask;
        let c = generate_erk(&spec, 0.8, 12).unwrap().mask;
        assert_eq!(a, b);
        assert_ne!(a, c);
        a.check_against(&spec).unwrap();
    }
}
