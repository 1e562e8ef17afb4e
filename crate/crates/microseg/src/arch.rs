//! Architecture grid: layer-graph generation plus static parameter and MAC
//! accounting for every U-Net variant in the study.
//!
//! A [`LayerGraph`] is the single source of truth consumed by the kernels,
//! the resource estimator, and the model file format. Edges are numbered so
//! that edge 0 is the network input and edge `i + 1` is the output of layer
//! `i`; every layer reads the edge directly before it, and `Concat`
//! additionally reads the edge of its `skip_source` layer.

use crate::error::{Error, Result};
use crate::tensor::Shape;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Uniform multiplier applied to every filter count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterScale {
    Full,
    Half,
    Quarter,
    Eighth,
    Sixteenth,
}

impl FilterScale {
    pub const ALL: [FilterScale; 5] = [
        FilterScale::Full,
        FilterScale::Half,
        FilterScale::Quarter,
        FilterScale::Eighth,
        FilterScale::Sixteenth,
    ];

    pub fn denominator(self) -> usize {
        match self {
            FilterScale::Full => 1,
            FilterScale::Half => 2,
            FilterScale::Quarter => 4,
            FilterScale::Eighth => 8,
            FilterScale::Sixteenth => 16,
        }
    }

    pub fn parse(s: &str) -> Option<FilterScale> {
        match s.trim() {
            "1" | "x1" | "1/1" => Some(FilterScale::Full),
            "1/2" | "x1/2" | "0.5" => Some(FilterScale::Half),
            "1/4" | "x1/4" | "0.25" => Some(FilterScale::Quarter),
            "1/8" | "x1/8" | "0.125" => Some(FilterScale::Eighth),
            "1/16" | "x1/16" | "0.0625" => Some(FilterScale::Sixteenth),
            _ => None,
        }
    }
}

impl fmt::Display for FilterScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterScale::Full => write!(f, "1"),
            FilterScale::Half => write!(f, "1/2"),
            FilterScale::Quarter => write!(f, "1/4"),
            FilterScale::Eighth => write!(f, "1/8"),
            FilterScale::Sixteenth => write!(f, "1/16"),
        }
    }
}

/// Convolution flavor of the variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConvType {
    Standard,
    DepthwiseSeparable,
}

impl fmt::Display for ConvType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvType::Standard => write!(f, "standard"),
            ConvType::DepthwiseSeparable => write!(f, "depthwise"),
        }
    }
}

/// One point of the 30-configuration grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub depth: usize,
    pub filter_scale: FilterScale,
    pub conv_type: ConvType,
    pub input_h: usize,
    pub input_w: usize,
    pub input_c: usize,
    pub base_filters: usize,
}

impl ArchConfig {
    pub fn new(depth: usize, filter_scale: FilterScale, conv_type: ConvType) -> Self {
        ArchConfig {
            depth,
            filter_scale,
            conv_type,
            input_h: 96,
            input_w: 96,
            input_c: 3,
            base_filters: 64,
        }
    }

    /// Short identifier used in reports, e.g. `d4-x1/4-depthwise`.
    pub fn id(&self) -> String {
        format!("d{}-x{}-{}", self.depth, self.filter_scale, self.conv_type)
    }

    /// Filters of encoder level `i` (0-based); the bottleneck is level `depth - 1`.
    pub fn level_filters(&self, i: usize) -> usize {
        self.base_filters / self.filter_scale.denominator() * (1 << i)
    }

    /// Grid membership and pooling-divisibility checks.
    pub fn validate(&self) -> Result<()> {
        if !(3..=5).contains(&self.depth) {
            return Err(Error::InvalidConfig(format!(
                "depth {} outside the grid {{3, 4, 5}}",
                self.depth
            )));
        }
        self.validate_dims()
    }

    /// Structural checks only (dimensions, filter counts); used by
    /// [`assemble_graph`] so that off-grid depths can be built for
    /// experiments and tests.
    pub fn validate_dims(&self) -> Result<()> {
        if self.depth < 1 {
            return Err(Error::InvalidConfig("depth must be at least 1".into()));
        }
        let denom = self.filter_scale.denominator();
        if self.base_filters == 0 || self.base_filters % denom != 0 {
            return Err(Error::InvalidConfig(format!(
                "base_filters {} is not a positive multiple of {}",
                self.base_filters, denom
            )));
        }
        let pool = 1usize << (self.depth - 1);
        if self.input_h == 0 || self.input_w == 0 || self.input_c == 0 {
            return Err(Error::InvalidConfig("input dims must be positive".into()));
        }
        if self.input_h % pool != 0 || self.input_w % pool != 0 {
            return Err(Error::InvalidConfig(format!(
                "input {}x{} not divisible by 2^{} (pooling would truncate)",
                self.input_h,
                self.input_w,
                self.depth - 1
            )));
        }
        Ok(())
    }
}

/// Layer kinds emitted by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    Conv3x3,
    DepthwiseConv3x3,
    PointwiseConv1x1,
    Conv1x1Out,
    BatchNorm,
    Relu,
    MaxPool2x2,
    TransposedConv2x2,
    Concat,
    Sigmoid,
}

impl LayerKind {
    /// Layers that own weights and biases.
    pub fn is_weighted(self) -> bool {
        matches!(
            self,
            LayerKind::Conv3x3
                | LayerKind::DepthwiseConv3x3
                | LayerKind::PointwiseConv1x1
                | LayerKind::Conv1x1Out
                | LayerKind::TransposedConv2x2
        )
    }

    /// Element-wise layers that an arena planner executes in place.
    pub fn is_elementwise(self) -> bool {
        matches!(
            self,
            LayerKind::Relu | LayerKind::Sigmoid | LayerKind::BatchNorm
        )
    }
}

/// One layer record: kind plus fully resolved shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_shape: Shape,
    pub out_shape: Shape,
    pub filters: usize,
    /// For `Concat`: index of the encoder layer whose output is stacked in.
    pub skip_source: Option<usize>,
}

impl LayerSpec {
    fn simple(kind: LayerKind, in_shape: Shape, out_shape: Shape, filters: usize) -> Self {
        LayerSpec {
            kind,
            in_shape,
            out_shape,
            filters,
            skip_source: None,
        }
    }

    /// Trainable parameter count of this layer alone.
    pub fn param_count(&self) -> usize {
        let cin = self.in_shape.c;
        let cout = self.out_shape.c;
        match self.kind {
            LayerKind::Conv3x3 => 9 * cin * cout + cout,
            LayerKind::DepthwiseConv3x3 => 9 * cin + cin,
            LayerKind::PointwiseConv1x1 => cin * cout + cout,
            LayerKind::TransposedConv2x2 => 4 * cin * cout + cout,
            LayerKind::Conv1x1Out => cin + 1,
            LayerKind::BatchNorm => 4 * cin,
            _ => 0,
        }
    }

    /// Bias-vector length of this layer (zero for unweighted layers).
    pub fn bias_count(&self) -> usize {
        match self.kind {
            LayerKind::Conv3x3
            | LayerKind::PointwiseConv1x1
            | LayerKind::TransposedConv2x2 => self.out_shape.c,
            LayerKind::DepthwiseConv3x3 => self.in_shape.c,
            LayerKind::Conv1x1Out => 1,
            _ => 0,
        }
    }

    /// Multiply-accumulate count of this layer alone.
    pub fn mac_count(&self) -> u64 {
        let (hi, wi) = (self.in_shape.h as u64, self.in_shape.w as u64);
        let (ho, wo) = (self.out_shape.h as u64, self.out_shape.w as u64);
        let cin = self.in_shape.c as u64;
        let cout = self.out_shape.c as u64;
        match self.kind {
            LayerKind::Conv3x3 => ho * wo * 9 * cin * cout,
            LayerKind::DepthwiseConv3x3 => ho * wo * 9 * cin,
            LayerKind::PointwiseConv1x1 => ho * wo * cin * cout,
            LayerKind::TransposedConv2x2 => hi * wi * 4 * cin * cout,
            LayerKind::Conv1x1Out => ho * wo * cin,
            _ => 0,
        }
    }
}

/// Ordered layer list for one configuration, with cached totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerGraph {
    pub config: ArchConfig,
    pub layers: Vec<LayerSpec>,
    pub param_count: usize,
    pub mac_count: u64,
}

impl LayerGraph {
    pub fn output_shape(&self) -> Shape {
        self.layers.last().expect("graph has layers").out_shape
    }

    /// Edge index read by layer `i` as its primary input (edge 0 = network input).
    pub fn input_edge(&self, layer: usize) -> usize {
        layer
    }

    /// Edge index produced by layer `i`.
    pub fn output_edge(&self, layer: usize) -> usize {
        layer + 1
    }

    /// Number of activation edges (network input + one per layer).
    pub fn edge_count(&self) -> usize {
        self.layers.len() + 1
    }

    pub fn has_batchnorm(&self) -> bool {
        self.layers.iter().any(|l| l.kind == LayerKind::BatchNorm)
    }
}

/// Validate a grid configuration and build its layer graph.
pub fn build_graph(config: &ArchConfig) -> Result<LayerGraph> {
    config.validate()?;
    assemble_graph(config)
}

/// Build a layer graph without grid validation (depth may be anything the
/// input dimensions support). Off-grid graphs are useful for tiny test
/// networks; `build_graph` is the grid-checked entry point.
pub fn assemble_graph(config: &ArchConfig) -> Result<LayerGraph> {
    config.validate_dims()?;
    let mut layers: Vec<LayerSpec> = Vec::new();
    let mut shape = Shape::new(config.input_h, config.input_w, config.input_c);
    // output edge of the layer whose activations feed each skip connection
    let mut skip_layers: Vec<usize> = Vec::new();

    let push = |layers: &mut Vec<LayerSpec>, spec: LayerSpec| -> Shape {
        let out = spec.out_shape;
        layers.push(spec);
        out
    };

    let conv_block = |layers: &mut Vec<LayerSpec>, shape: Shape, filters: usize| -> Shape {
        let mut s = shape;
        match config.conv_type {
            ConvType::Standard => {
                for _ in 0..2 {
                    let out = Shape::new(s.h, s.w, filters);
                    s = push(layers, LayerSpec::simple(LayerKind::Conv3x3, s, out, filters));
                    s = push(layers, LayerSpec::simple(LayerKind::Relu, s, s, 0));
                }
            }
            ConvType::DepthwiseSeparable => {
                s = push(
                    layers,
                    LayerSpec::simple(LayerKind::DepthwiseConv3x3, s, s, s.c),
                );
                let out = Shape::new(s.h, s.w, filters);
                s = push(
                    layers,
                    LayerSpec::simple(LayerKind::PointwiseConv1x1, s, out, filters),
                );
                s = push(layers, LayerSpec::simple(LayerKind::BatchNorm, s, s, s.c));
                s = push(layers, LayerSpec::simple(LayerKind::Relu, s, s, 0));
            }
        }
        s
    };

    // encoder
    for level in 0..config.depth - 1 {
        let filters = config.level_filters(level);
        shape = conv_block(&mut layers, shape, filters);
        skip_layers.push(layers.len() - 1);
        let out = Shape::new(shape.h / 2, shape.w / 2, shape.c);
        shape = push(
            &mut layers,
            LayerSpec::simple(LayerKind::MaxPool2x2, shape, out, 0),
        );
    }

    // bottleneck
    shape = conv_block(&mut layers, shape, config.level_filters(config.depth - 1));

    // decoder
    for level in (0..config.depth - 1).rev() {
        let filters = config.level_filters(level);
        let up = Shape::new(shape.h * 2, shape.w * 2, filters);
        shape = push(
            &mut layers,
            LayerSpec::simple(LayerKind::TransposedConv2x2, shape, up, filters),
        );
        let skip = skip_layers[level];
        let skip_c = layers[skip].out_shape.c;
        let cat = Shape::new(shape.h, shape.w, shape.c + skip_c);
        shape = push(
            &mut layers,
            LayerSpec {
                kind: LayerKind::Concat,
                in_shape: shape,
                out_shape: cat,
                filters: 0,
                skip_source: Some(skip),
            },
        );
        shape = conv_block(&mut layers, shape, filters);
    }

    // output head
    let head = Shape::new(shape.h, shape.w, 1);
    shape = push(
        &mut layers,
        LayerSpec::simple(LayerKind::Conv1x1Out, shape, head, 1),
    );
    push(
        &mut layers,
        LayerSpec::simple(LayerKind::Sigmoid, shape, shape, 0),
    );

    let param_count = layers.iter().map(|l| l.param_count()).sum();
    let mac_count = layers.iter().map(|l| l.mac_count()).sum();
    Ok(LayerGraph {
        config: *config,
        layers,
        param_count,
        mac_count,
    })
}

/// Total trainable (plus batch-norm statistic) parameters of a graph.
pub fn count_params(graph: &LayerGraph) -> usize {
    graph.layers.iter().map(|l| l.param_count()).sum()
}

/// Total multiply-accumulates of one forward pass.
pub fn count_macs(graph: &LayerGraph) -> u64 {
    graph.layers.iter().map(|l| l.mac_count()).sum()
}

/// The full 30-point grid in report order: depth 5, 4, 3; within a depth
/// standard before depthwise; within a type scale 1, 1/2, 1/4, 1/8, 1/16.
pub fn enumerate_grid() -> Vec<ArchConfig> {
    let mut grid = Vec::with_capacity(30);
    for depth in [5, 4, 3] {
        for conv_type in [ConvType::Standard, ConvType::DepthwiseSeparable] {
            for scale in FilterScale::ALL {
                grid.push(ArchConfig::new(depth, scale, conv_type));
            }
        }
    }
    grid
}
