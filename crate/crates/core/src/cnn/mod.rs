//! Forward-only convolutional feature extractor.
//!
//! The canonical network maps a 128x128x1 tensor through four
//! conv(3x3) -> ReLU -> dropout -> maxpool(2x2) blocks with 64, 64, 128 and
//! 128 filters, flattens channel-major, and applies Dense(64) + ReLU and a
//! linear Dense(16). Dropout is the identity at inference.

mod io;
mod ops;
mod weights;

pub use io::{load_weights, save_weights, WeightsError, WeightsErrorKind, WEIGHTS_MAGIC, WEIGHTS_VERSION};
pub use ops::{conv2d, dense, flatten, maxpool2d, relu, relu_vec, Activation, Conv3x3, DenseLayer};
pub use weights::{init_weights, ConvWeights, DenseWeights, Provenance, WeightSet};

use crate::imaging::PixelTensor;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CnnError {
    #[error("kernel expects {kernel} input channels but the input has {input}")]
    ChannelMismatch { kernel: usize, input: usize },
    #[error("max pooling needs even dimensions, got {height}x{width}")]
    OddPoolInput { height: usize, width: usize },
    #[error("dense layer expects {expected} inputs, got {found}")]
    DenseMismatch { expected: usize, found: usize },
    #[error("layer {layer} ({name}): {source}")]
    AtLayer {
        layer: usize,
        name: String,
        #[source]
        source: Box<CnnError>,
    },
    #[error("input tensor is {found:?} (h, w, c) but the network expects {expected:?}")]
    InputShape { expected: [usize; 3], found: [usize; 3] },
    #[error("weights do not match the network topology: {0}")]
    WeightsMismatch(String),
}

/// Layer topology of the feature extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnSpec {
    pub input_size: usize,
    pub input_channels: usize,
    pub conv_filters: Vec<usize>,
    pub dropout_rate: f64,
    pub dense_widths: Vec<usize>,
}

impl Default for CnnSpec {
    fn default() -> Self {
        Self {
            input_size: 128,
            input_channels: 1,
            conv_filters: vec![64, 64, 128, 128],
            dropout_rate: 0.5,
            dense_widths: vec![64, 16],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layer {
    Conv { index: usize, filters: usize },
    Relu,
    Dropout { rate: f64 },
    MaxPool,
    Flatten,
    Dense { index: usize, width: usize },
}

impl Layer {
    pub fn name(&self) -> String {
        match self {
            Layer::Conv { index, filters } => format!("conv{}[{filters}]", index + 1),
            Layer::Relu => "relu".into(),
            Layer::Dropout { rate } => format!("dropout({rate})"),
            Layer::MaxPool => "maxpool".into(),
            Layer::Flatten => "flatten".into(),
            Layer::Dense { index, width } => format!("dense{}[{width}]", index + 1),
        }
    }
}

/// Shape of an intermediate value: spatial `(h, w, c)` or a flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Spatial { height: usize, width: usize, channels: usize },
    Flat(usize),
}

impl CnnSpec {
    /// Ordered layer list, including the inference-time no-op dropouts.
    pub fn layers(&self) -> Vec<Layer> {
        let mut layers = Vec::new();
        for (index, &filters) in self.conv_filters.iter().enumerate() {
            layers.push(Layer::Conv { index, filters });
            layers.push(Layer::Relu);
            layers.push(Layer::Dropout { rate: self.dropout_rate });
            layers.push(Layer::MaxPool);
        }
        layers.push(Layer::Flatten);
        let last = self.dense_widths.len().saturating_sub(1);
        for (index, &width) in self.dense_widths.iter().enumerate() {
            layers.push(Layer::Dense { index, width });
            if index != last {
                layers.push(Layer::Relu);
            }
        }
        layers
    }

    /// Output shape after each conv block, the flatten and each dense layer.
    pub fn shape_chain(&self) -> Vec<Shape> {
        let mut chain = Vec::new();
        let mut size = self.input_size;
        let mut channels = self.input_channels;
        for &f in &self.conv_filters {
            size /= 2;
            channels = f;
            chain.push(Shape::Spatial {
                height: size,
                width: size,
                channels,
            });
        }
        chain.push(Shape::Flat(size * size * channels));
        chain.extend(self.dense_widths.iter().map(|&w| Shape::Flat(w)));
        chain
    }

    pub fn flatten_width(&self) -> usize {
        let pooled = self.input_size >> self.conv_filters.len();
        pooled * pooled * self.conv_filters.last().copied().unwrap_or(self.input_channels)
    }

    pub fn feature_dim(&self) -> usize {
        self.dense_widths.last().copied().unwrap_or_else(|| self.flatten_width())
    }

    /// `(out, in)` per conv layer followed by `(out, in)` per dense layer.
    pub fn layer_dims(&self) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
        let mut conv = Vec::new();
        let mut inputs = self.input_channels;
        for &f in &self.conv_filters {
            conv.push((f, inputs));
            inputs = f;
        }
        let mut dense = Vec::new();
        let mut inputs = self.flatten_width();
        for &w in &self.dense_widths {
            dense.push((w, inputs));
            inputs = w;
        }
        (conv, dense)
    }
}

/// Embedding of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    pub values: Vec<f64>,
}

/// Weights promoted to `f64`, ready for repeated forward passes.
#[derive(Debug, Clone)]
pub struct Network {
    spec: CnnSpec,
    convs: Vec<Conv3x3>,
    denses: Vec<DenseLayer>,
}

impl Network {
    pub fn new(spec: &CnnSpec, weights: &WeightSet) -> Result<Self, CnnError> {
        weights.check_against(spec)?;
        let promote = |v: &[f32]| v.iter().map(|&x| f64::from(x)).collect::<Vec<f64>>();
        let convs = weights
            .conv
            .iter()
            .map(|c| Conv3x3 {
                out_channels: c.out_channels,
                in_channels: c.in_channels,
                kernels: promote(&c.kernels),
                biases: promote(&c.biases),
            })
            .collect();
        let denses = weights
            .dense
            .iter()
            .map(|d| DenseLayer {
                out_features: d.out_features,
                in_features: d.in_features,
                weights: promote(&d.weights),
                biases: promote(&d.biases),
            })
            .collect();
        Ok(Self {
            spec: spec.clone(),
            convs,
            denses,
        })
    }

    pub fn spec(&self) -> &CnnSpec {
        &self.spec
    }

    /// Runs the full layer list.
    pub fn forward(&self, input: &PixelTensor) -> Result<Vec<f64>, CnnError> {
        self.run_layers(input, &self.spec.layers(), None)
    }

    /// Like [`Network::forward`] but also returns the shape after every conv
    /// block, the flatten and each dense layer.
    pub fn forward_traced(&self, input: &PixelTensor) -> Result<(Vec<f64>, Vec<Shape>), CnnError> {
        let mut shapes = Vec::new();
        let out = self.run_layers(input, &self.spec.layers(), Some(&mut shapes))?;
        Ok((out, shapes))
    }

    /// Runs an explicit layer list against this network's weights.
    pub fn run_layers(
        &self,
        input: &PixelTensor,
        layers: &[Layer],
        mut shapes: Option<&mut Vec<Shape>>,
    ) -> Result<Vec<f64>, CnnError> {
        let expected = [self.spec.input_size, self.spec.input_size, self.spec.input_channels];
        let found = [input.height, input.width, input.channels];
        if expected != found {
            return Err(CnnError::InputShape { expected, found });
        }
        enum Value {
            Spatial(Activation),
            Flat(Vec<f64>),
        }
        let mut value = Value::Spatial(Activation::from(input));
        for (i, layer) in layers.iter().enumerate() {
            let at = |e: CnnError| CnnError::AtLayer {
                layer: i,
                name: layer.name(),
                source: Box::new(e),
            };
            value = match (layer, value) {
                (Layer::Conv { index, .. }, Value::Spatial(a)) => {
                    Value::Spatial(conv2d(&a, &self.convs[*index]).map_err(at)?)
                }
                (Layer::Relu, Value::Spatial(a)) => Value::Spatial(relu(&a)),
                (Layer::Relu, Value::Flat(v)) => Value::Flat(relu_vec(&v)),
                (Layer::Dropout { .. }, v) => v,
                (Layer::MaxPool, Value::Spatial(a)) => {
                    let pooled = maxpool2d(&a).map_err(at)?;
                    if let Some(s) = shapes.as_deref_mut() {
                        s.push(Shape::Spatial {
                            height: pooled.height,
                            width: pooled.width,
                            channels: pooled.channels,
                        });
                    }
                    Value::Spatial(pooled)
                }
                (Layer::Flatten, Value::Spatial(a)) => {
                    let flat = flatten(&a);
                    if let Some(s) = shapes.as_deref_mut() {
                        s.push(Shape::Flat(flat.len()));
                    }
                    Value::Flat(flat)
                }
                (Layer::Dense { index, .. }, Value::Flat(v)) => {
                    let out = dense(&v, &self.denses[*index]).map_err(at)?;
                    if let Some(s) = shapes.as_deref_mut() {
                        s.push(Shape::Flat(out.len()));
                    }
                    Value::Flat(out)
                }
                (_, _) => {
                    return Err(at(CnnError::WeightsMismatch(
                        "layer applied to a value of the wrong rank".into(),
                    )))
                }
            };
        }
        match value {
            Value::Flat(v) => Ok(v),
            Value::Spatial(a) => Ok(flatten(&a)),
        }
    }
}

/// One forward pass producing a [`FeatureVector`].
pub fn forward(
    spec: &CnnSpec,
    weights: &WeightSet,
    id: &str,
    input: &PixelTensor,
) -> Result<FeatureVector, CnnError> {
    let net = Network::new(spec, weights)?;
    Ok(FeatureVector {
        id: id.to_string(),
        values: net.forward(input)?,
    })
}
