use super::{CnnError, CnnSpec};
use crate::numerics::make_rng;

/// Where a weight set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Seeded(u64),
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvWeights {
    pub out_channels: usize,
    pub in_channels: usize,
    /// `(out, in, 3, 3)` row-major.
    pub kernels: Vec<f32>,
    pub biases: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseWeights {
    pub out_features: usize,
    pub in_features: usize,
    /// `(out, in)` row-major.
    pub weights: Vec<f32>,
    pub biases: Vec<f32>,
}

/// Parameters of every conv and dense layer, in network order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub conv: Vec<ConvWeights>,
    pub dense: Vec<DenseWeights>,
    pub provenance: Provenance,
}

impl WeightSet {
    /// True when every tensor matches bit for bit; provenance is ignored.
    pub fn bit_eq(&self, other: &WeightSet) -> bool {
        fn same(a: &[f32], b: &[f32]) -> bool {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        }
        self.conv.len() == other.conv.len()
            && self.dense.len() == other.dense.len()
            && self.conv.iter().zip(&other.conv).all(|(a, b)| {
                (a.out_channels, a.in_channels) == (b.out_channels, b.in_channels)
                    && same(&a.kernels, &b.kernels)
                    && same(&a.biases, &b.biases)
            })
            && self.dense.iter().zip(&other.dense).all(|(a, b)| {
                (a.out_features, a.in_features) == (b.out_features, b.in_features)
                    && same(&a.weights, &b.weights)
                    && same(&a.biases, &b.biases)
            })
    }

    pub fn parameter_count(&self) -> usize {
        self.conv.iter().map(|c| c.kernels.len() + c.biases.len()).sum::<usize>()
            + self.dense.iter().map(|d| d.weights.len() + d.biases.len()).sum::<usize>()
    }

    /// Verifies tensor shapes against `spec` and that every value is finite.
    pub fn check_against(&self, spec: &CnnSpec) -> Result<(), CnnError> {
        let (conv_dims, dense_dims) = spec.layer_dims();
        if self.conv.len() != conv_dims.len() || self.dense.len() != dense_dims.len() {
            return Err(CnnError::WeightsMismatch(format!(
                "expected {} conv and {} dense layers, found {} and {}",
                conv_dims.len(),
                dense_dims.len(),
                self.conv.len(),
                self.dense.len()
            )));
        }
        for (i, (c, &(out, inp))) in self.conv.iter().zip(&conv_dims).enumerate() {
            if (c.out_channels, c.in_channels) != (out, inp)
                || c.kernels.len() != out * inp * 9
                || c.biases.len() != out
            {
                return Err(CnnError::WeightsMismatch(format!(
                    "conv layer {} is {}x{}, expected {out}x{inp}",
                    i + 1,
                    c.out_channels,
                    c.in_channels
                )));
            }
            if !c.kernels.iter().chain(&c.biases).all(|v| v.is_finite()) {
                return Err(CnnError::WeightsMismatch(format!("conv layer {} has non-finite values", i + 1)));
            }
        }
        for (i, (d, &(out, inp))) in self.dense.iter().zip(&dense_dims).enumerate() {
            if (d.out_features, d.in_features) != (out, inp)
                || d.weights.len() != out * inp
                || d.biases.len() != out
            {
                return Err(CnnError::WeightsMismatch(format!(
                    "dense layer {} is {}x{}, expected {out}x{inp}",
                    i + 1,
                    d.out_features,
                    d.in_features
                )));
            }
            if !d.weights.iter().chain(&d.biases).all(|v| v.is_finite()) {
                return Err(CnnError::WeightsMismatch(format!("dense layer {} has non-finite values", i + 1)));
            }
        }
        Ok(())
    }
}

/// He-normal initialization (`std = sqrt(2 / fan_in)`), zero biases.
///
/// Draw order: conv layers first to last, each kernel tensor in
/// `(out, in, ky, kx)` order, then dense layers first to last in
/// `(out, in)` order, all from one stream seeded with `seed`.
pub fn init_weights(spec: &CnnSpec, seed: u64) -> WeightSet {
    let mut rng = make_rng(seed);
    let (conv_dims, dense_dims) = spec.layer_dims();
    let conv = conv_dims
        .iter()
        .map(|&(out, inp)| {
            let std = (2.0 / (inp * 9) as f64).sqrt();
            ConvWeights {
                out_channels: out,
                in_channels: inp,
                kernels: (0..out * inp * 9).map(|_| (rng.next_gaussian() * std) as f32).collect(),
                biases: vec![0.0; out],
            }
        })
        .collect();
    let dense = dense_dims
        .iter()
        .map(|&(out, inp)| {
            let std = (2.0 / inp as f64).sqrt();
            DenseWeights {
                out_features: out,
                in_features: inp,
                weights: (0..out * inp).map(|_| (rng.next_gaussian() * std) as f32).collect(),
                biases: vec![0.0; out],
            }
        })
        .collect();
    WeightSet {
        conv,
        dense,
        provenance: Provenance::Seeded(seed),
    }
}
