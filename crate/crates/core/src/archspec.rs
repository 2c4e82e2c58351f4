//! Architecture descriptions: ordered conv / linear / pool / residual layers
//! with shape propagation, plus JSON loading.
//!
//! Feature maps are indexed channel-major, `(c, y, x) -> c*h*w + y*w + x`, so
//! flattening a conv output in front of a linear layer is the identity on node
//! indices.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArchError {
    #[error("malformed architecture document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("architecture has no layers")]
    Empty,
    #[error("layer {index}: {reason}")]
    InvalidLayer { index: usize, reason: String },
    #[error("layer {index}: expected input {expected}, previous layer produces {found}")]
    ShapeMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("layer index {index} out of range ({len} layers)")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Height x width x channels of a feature map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape3 {
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl Shape3 {
    pub const fn new(h: usize, w: usize, c: usize) -> Self {
        Self { h, w, c }
    }

    pub const fn flat(n: usize) -> Self {
        Self { h: 1, w: 1, c: n }
    }

    pub const fn len(&self) -> usize {
        self.h * self.w * self.c
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub const fn index(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.h + y) * self.w + x
    }

    /// Inverse of [`Shape3::index`]: returns `(c, y, x)`.
    #[inline]
    pub const fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let plane = self.h * self.w;
        let c = idx / plane;
        let r = idx % plane;
        (c, r / self.w, r % self.w)
    }
}

impl fmt::Display for Shape3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.h, self.w, self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvSpec {
    pub fn weight_count(&self) -> usize {
        self.c_out * self.c_in * self.kernel_h * self.kernel_w
    }

    /// Output shape for an input map, using floor division for non-divisible strides.
    pub fn output_shape(&self, input: Shape3) -> Option<Shape3> {
        let ph = input.h + 2 * self.padding;
        let pw = input.w + 2 * self.padding;
        if ph < self.kernel_h || pw < self.kernel_w || self.stride == 0 {
            return None;
        }
        Some(Shape3::new(
            (ph - self.kernel_h) / self.stride + 1,
            (pw - self.kernel_w) / self.stride + 1,
            self.c_out,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearSpec {
    pub n_in: usize,
    pub n_out: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Max,
    Avg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolWindow {
    Fixed { h: usize, w: usize },
    /// Window spans the whole spatial extent of the incoming map.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSpec {
    pub window: PoolWindow,
    pub stride: usize,
    pub kind: PoolKind,
}

/// Pool window resolved against a concrete input map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolGeometry {
    pub window_h: usize,
    pub window_w: usize,
    pub stride_h: usize,
    pub stride_w: usize,
}

impl PoolGeometry {
    pub fn output_shape(&self, input: Shape3) -> Option<Shape3> {
        if input.h < self.window_h || input.w < self.window_w {
            return None;
        }
        Some(Shape3::new(
            (input.h - self.window_h) / self.stride_h + 1,
            (input.w - self.window_w) / self.stride_w + 1,
            input.c,
        ))
    }
}

impl PoolSpec {
    pub fn geometry(&self, input: Shape3) -> PoolGeometry {
        match self.window {
            PoolWindow::Fixed { h, w } => PoolGeometry {
                window_h: h,
                window_w: w,
                stride_h: self.stride,
                stride_w: self.stride,
            },
            PoolWindow::Global => PoolGeometry {
                window_h: input.h,
                window_w: input.w,
                stride_h: input.h.max(1),
                stride_w: input.w.max(1),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shortcut {
    Identity,
    /// 1x1 convolution shortcut.
    Projection {
        c_in: usize,
        c_out: usize,
        stride: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidualSpec {
    /// Layer whose input feeds the shortcut.
    pub source: usize,
    /// Layer whose output receives the shortcut.
    pub target: usize,
    pub shortcut: Shortcut,
}

impl ResidualSpec {
    /// The projection shortcut viewed as a convolution, if any.
    pub fn projection_conv(&self) -> Option<ConvSpec> {
        match self.shortcut {
            Shortcut::Identity => None,
            Shortcut::Projection { c_in, c_out, stride } => Some(ConvSpec {
                c_in,
                c_out,
                kernel_h: 1,
                kernel_w: 1,
                stride,
                padding: 0,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv(ConvSpec),
    Linear(LinearSpec),
    Pool(PoolSpec),
    Residual(ResidualSpec),
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv(_) => "conv",
            LayerSpec::Linear(_) => "linear",
            LayerSpec::Pool(_) => "pool",
            LayerSpec::Residual(_) => "residual",
        }
    }

    /// Dense weight tensor dimensions, or `None` for parameter-free layers.
    ///
    /// Conv weights are `[c_out, c_in, kh, kw]`; linear weights are `[n_in, n_out]`.
    pub fn weight_shape(&self) -> Option<Vec<usize>> {
        match self {
            LayerSpec::Conv(c) => Some(vec![c.c_out, c.c_in, c.kernel_h, c.kernel_w]),
            LayerSpec::Linear(l) => Some(vec![l.n_in, l.n_out]),
            LayerSpec::Residual(r) => r
                .projection_conv()
                .map(|c| vec![c.c_out, c.c_in, c.kernel_h, c.kernel_w]),
            LayerSpec::Pool(_) => None,
        }
    }

    pub fn weight_count(&self) -> usize {
        self.weight_shape()
            .map(|s| s.iter().product())
            .unwrap_or(0)
    }

    /// Input fan-in of a single output unit.
    pub fn fan_in(&self) -> usize {
        match self {
            LayerSpec::Conv(c) => c.c_in * c.kernel_h * c.kernel_w,
            LayerSpec::Linear(l) => l.n_in,
            LayerSpec::Residual(r) => r.projection_conv().map(|c| c.c_in).unwrap_or(0),
            LayerSpec::Pool(_) => 0,
        }
    }

    /// Conv, linear and pool layers form the main chain; residual layers hang off it.
    pub fn is_main(&self) -> bool {
        !matches!(self, LayerSpec::Residual(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShapes {
    pub input: Shape3,
    pub output: Shape3,
}

/// A validated architecture. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureSpec {
    name: String,
    input: Shape3,
    layers: Vec<LayerSpec>,
    shapes: Vec<LayerShapes>,
}

impl ArchitectureSpec {
    pub fn new(name: impl Into<String>, input: Shape3, layers: Vec<LayerSpec>) -> Result<Self, ArchError> {
        let shapes = propagate(input, &layers)?;
        Ok(Self {
            name: name.into(),
            input,
            layers,
            shapes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input(&self) -> Shape3 {
        self.input
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn layer(&self, index: usize) -> Result<&LayerSpec, ArchError> {
        self.layers.get(index).ok_or(ArchError::IndexOutOfRange {
            index,
            len: self.layers.len(),
        })
    }

    pub fn shapes(&self, index: usize) -> Result<LayerShapes, ArchError> {
        self.shapes.get(index).copied().ok_or(ArchError::IndexOutOfRange {
            index,
            len: self.layers.len(),
        })
    }

    /// Shape after layer `index`. Residual layers report the shape of their target.
    pub fn output_shape(&self, index: usize) -> Result<Shape3, ArchError> {
        self.shapes(index).map(|s| s.output)
    }

    pub fn input_shape(&self, index: usize) -> Result<Shape3, ArchError> {
        self.shapes(index).map(|s| s.input)
    }

    /// Indices of layers that carry a weight tensor, in layer order.
    pub fn weighted_layers(&self) -> impl Iterator<Item = usize> + '_ {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.weight_shape().is_some())
            .map(|(i, _)| i)
    }

    pub fn total_params(&self) -> usize {
        self.layers.iter().map(LayerSpec::weight_count).sum()
    }

    /// Same architecture on a different input resolution. Linear layers fed by a
    /// flattened feature map get their fan-in recomputed.
    pub fn with_input_size(&self, h: usize, w: usize) -> Result<Self, ArchError> {
        let input = Shape3::new(h, w, self.input.c);
        let mut layers = self.layers.clone();
        let mut shape = input;
        let mut prev_spatial = true;
        for (index, layer) in layers.iter_mut().enumerate() {
            match layer {
                LayerSpec::Linear(l) => {
                    if prev_spatial {
                        l.n_in = shape.len();
                    }
                    prev_spatial = false;
                }
                LayerSpec::Conv(_) | LayerSpec::Pool(_) => prev_spatial = true,
                LayerSpec::Residual(_) => continue,
            }
            shape = step_shape(index, shape, layer)?;
        }
        Self::new(self.name.clone(), input, layers)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ArchError> {
        let raw: RawArchitecture = serde_json::from_str(text)?;
        raw.into_spec()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ArchError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawArchitecture::from_spec(self);
        serde_json::to_string_pretty(&raw).expect("architecture serializes")
    }
}

/// Alias matching the loader operation name.
pub fn load_architecture(text: &str) -> Result<ArchitectureSpec, ArchError> {
    ArchitectureSpec::from_json_str(text)
}

/// Alias for [`ArchitectureSpec::output_shape`].
pub fn output_shape(spec: &ArchitectureSpec, layer_index: usize) -> Result<Shape3, ArchError> {
    spec.output_shape(layer_index)
}

fn invalid(index: usize, reason: impl Into<String>) -> ArchError {
    ArchError::InvalidLayer {
        index,
        reason: reason.into(),
    }
}

fn check_layer(index: usize, layer: &LayerSpec) -> Result<(), ArchError> {
    match layer {
        LayerSpec::Conv(c) => {
            if c.c_in == 0 || c.c_out == 0 || c.kernel_h == 0 || c.kernel_w == 0 {
                return Err(invalid(index, "conv dimensions must be positive"));
            }
            if c.stride == 0 {
                return Err(invalid(index, "stride must be at least 1"));
            }
        }
        LayerSpec::Linear(l) => {
            if l.n_in == 0 || l.n_out == 0 {
                return Err(invalid(index, "linear dimensions must be positive"));
            }
        }
        LayerSpec::Pool(p) => {
            if p.stride == 0 {
                return Err(invalid(index, "pool stride must be at least 1"));
            }
            if let PoolWindow::Fixed { h, w } = p.window {
                if h == 0 || w == 0 {
                    return Err(invalid(index, "pool window must be positive"));
                }
            }
        }
        LayerSpec::Residual(r) => {
            if r.source >= r.target {
                return Err(invalid(index, "residual source must precede its target"));
            }
            if r.target >= index {
                return Err(invalid(index, "residual must be listed after its target layer"));
            }
            if let Shortcut::Projection { c_in, c_out, stride } = r.shortcut {
                if c_in == 0 || c_out == 0 || stride == 0 {
                    return Err(invalid(index, "projection dimensions must be positive"));
                }
            }
        }
    }
    Ok(())
}

fn step_shape(index: usize, shape: Shape3, layer: &LayerSpec) -> Result<Shape3, ArchError> {
    match layer {
        LayerSpec::Conv(c) => {
            if c.c_in != shape.c {
                return Err(ArchError::ShapeMismatch {
                    index,
                    expected: format!("{} channels", c.c_in),
                    found: shape.to_string(),
                });
            }
            c.output_shape(shape)
                .ok_or_else(|| invalid(index, format!("kernel does not fit input {shape}")))
        }
        LayerSpec::Linear(l) => {
            if l.n_in != shape.len() {
                return Err(ArchError::ShapeMismatch {
                    index,
                    expected: format!("{} inputs", l.n_in),
                    found: shape.to_string(),
                });
            }
            Ok(Shape3::flat(l.n_out))
        }
        LayerSpec::Pool(p) => p
            .geometry(shape)
            .output_shape(shape)
            .ok_or_else(|| invalid(index, format!("pool window does not fit input {shape}"))),
        LayerSpec::Residual(_) => Ok(shape),
    }
}

fn propagate(input: Shape3, layers: &[LayerSpec]) -> Result<Vec<LayerShapes>, ArchError> {
    if layers.is_empty() {
        return Err(ArchError::Empty);
    }
    if input.is_empty() {
        return Err(invalid(0, "input shape must be positive"));
    }
    let mut shapes: Vec<LayerShapes> = Vec::with_capacity(layers.len());
    let mut shape = input;
    for (index, layer) in layers.iter().enumerate() {
        check_layer(index, layer)?;
        if let LayerSpec::Residual(r) = layer {
            for end in [r.source, r.target] {
                if !matches!(layers[end], LayerSpec::Conv(_) | LayerSpec::Linear(_)) {
                    return Err(invalid(index, "residual endpoints must be conv or linear layers"));
                }
            }
            let main_before_source = layers[..r.source].iter().rev().find(|l| l.is_main());
            if matches!(main_before_source, Some(LayerSpec::Pool(_))) {
                return Err(invalid(index, "residual source cannot directly follow a pooling layer"));
            }
            if layers[r.source..=r.target]
                .iter()
                .any(|l| matches!(l, LayerSpec::Pool(_)))
            {
                return Err(invalid(index, "residual span cannot contain pooling"));
            }
            let from = shapes[r.source].input;
            let to = shapes[r.target].output;
            match r.shortcut {
                Shortcut::Identity => {
                    if from != to {
                        return Err(ArchError::ShapeMismatch {
                            index,
                            expected: from.to_string(),
                            found: to.to_string(),
                        });
                    }
                }
                Shortcut::Projection { .. } => {
                    let conv = r.projection_conv().expect("projection");
                    let projected = step_shape(index, from, &LayerSpec::Conv(conv))?;
                    if projected != to {
                        return Err(ArchError::ShapeMismatch {
                            index,
                            expected: to.to_string(),
                            found: projected.to_string(),
                        });
                    }
                }
            }
            shapes.push(LayerShapes { input: from, output: to });
            continue;
        }
        let out = step_shape(index, shape, layer)?;
        shapes.push(LayerShapes { input: shape, output: out });
        shape = out;
    }
    Ok(shapes)
}

// ---------------------------------------------------------------------------
// JSON schema

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArchitecture {
    name: String,
    input: [usize; 3],
    layers: Vec<RawLayer>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawLayer {
    Conv {
        c_in: usize,
        c_out: usize,
        kernel: [usize; 2],
        #[serde(default = "one")]
        stride: usize,
        #[serde(default)]
        padding: usize,
    },
    Linear {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_in: Option<usize>,
        n_out: usize,
    },
    Pool {
        pool: PoolKind,
        window: RawWindow,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stride: Option<usize>,
    },
    Residual {
        source: usize,
        target: usize,
        shortcut: RawShortcut,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawWindow {
    Fixed([usize; 2]),
    Named(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawShortcut {
    Identity,
    Projection {
        c_in: usize,
        c_out: usize,
        #[serde(default = "one")]
        stride: usize,
    },
}

impl RawArchitecture {
    fn into_spec(self) -> Result<ArchitectureSpec, ArchError> {
        let input = Shape3::new(self.input[0], self.input[1], self.input[2]);
        let mut layers = Vec::with_capacity(self.layers.len());
        // Linear fan-in may be omitted and is then inferred from the running shape.
        let mut shape = input;
        for (index, raw) in self.layers.into_iter().enumerate() {
            let layer = match raw {
                RawLayer::Conv {
                    c_in,
                    c_out,
                    kernel,
                    stride,
                    padding,
                } => LayerSpec::Conv(ConvSpec {
                    c_in,
                    c_out,
                    kernel_h: kernel[0],
                    kernel_w: kernel[1],
                    stride,
                    padding,
                }),
                RawLayer::Linear { n_in, n_out } => LayerSpec::Linear(LinearSpec {
                    n_in: n_in.unwrap_or(shape.len()),
                    n_out,
                }),
                RawLayer::Pool { pool, window, stride } => {
                    let window = match window {
                        RawWindow::Fixed([h, w]) => PoolWindow::Fixed { h, w },
                        RawWindow::Named(s) if s == "global" => PoolWindow::Global,
                        RawWindow::Named(s) => {
                            return Err(invalid(index, format!("unknown pool window `{s}`")))
                        }
                    };
                    let stride = match (stride, window) {
                        (Some(s), _) => s,
                        (None, PoolWindow::Fixed { h, .. }) => h,
                        (None, PoolWindow::Global) => 1,
                    };
                    LayerSpec::Pool(PoolSpec {
                        window,
                        stride,
                        kind: pool,
                    })
                }
                RawLayer::Residual {
                    source,
                    target,
                    shortcut,
                } => LayerSpec::Residual(ResidualSpec {
                    source,
                    target,
                    shortcut: match shortcut {
                        RawShortcut::Identity => Shortcut::Identity,
                        RawShortcut::Projection { c_in, c_out, stride } => {
                            Shortcut::Projection { c_in, c_out, stride }
                        }
                    },
                }),
            };
            check_layer(index, &layer)?;
            shape = step_shape(index, shape, &layer)?;
            layers.push(layer);
        }
        ArchitectureSpec::new(self.name, input, layers)
    }

    fn from_spec(spec: &ArchitectureSpec) -> Self {
        let layers = spec
            .layers
            .iter()
            .map(|l| match *l {
                LayerSpec::Conv(c) => RawLayer::Conv {
                    c_in: c.c_in,
                    c_out: c.c_out,
                    kernel: [c.kernel_h, c.kernel_w],
                    stride: c.stride,
                    padding: c.padding,
                },
                LayerSpec::Linear(l) => RawLayer::Linear {
                    n_in: Some(l.n_in),
                    n_out: l.n_out,
                },
                LayerSpec::Pool(p) => RawLayer::Pool {
                    pool: p.kind,
                    window: match p.window {
                        PoolWindow::Fixed { h, w } => RawWindow::Fixed([h, w]),
                        PoolWindow::Global => RawWindow::Named("global".into()),
                    },
                    stride: match p.window {
                        PoolWindow::Fixed { .. } => Some(p.stride),
                        PoolWindow::Global => None,
                    },
                },
                LayerSpec::Residual(r) => RawLayer::Residual {
                    source: r.source,
                    target: r.target,
                    shortcut: match r.shortcut {
                        Shortcut::Identity => RawShortcut::Identity,
                        Shortcut::Projection { c_in, c_out, stride } => {
                            RawShortcut::Projection { c_in, c_out, stride }
                        }
                    },
                },
            })
            .collect();
        RawArchitecture {
            name: spec.name.clone(),
            input: [spec.input.h, spec.input.w, spec.input.c],
            layers,
        }
    }
}
