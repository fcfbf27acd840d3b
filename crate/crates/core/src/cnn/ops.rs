//! Layer kernels on channel-major activations.

use super::CnnError;
use crate::imaging::PixelTensor;

/// Activation tensor stored channel-major: `data[(c * height + y) * width + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Activation {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Activation {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), channels * height * width, "activation size mismatch");
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.height, self.width, self.channels]
    }

    fn plane(&self, c: usize) -> &[f64] {
        let len = self.height * self.width;
        &self.data[c * len..(c + 1) * len]
    }
}

impl From<&PixelTensor> for Activation {
    fn from(t: &PixelTensor) -> Self {
        // (h, w, c) -> (c, h, w)
        let mut data = vec![0.0; t.values.len()];
        for y in 0..t.height {
            for x in 0..t.width {
                for c in 0..t.channels {
                    data[(c * t.height + y) * t.width + x] = t.values[(y * t.width + x) * t.channels + c];
                }
            }
        }
        Activation::from_vec(t.channels, t.height, t.width, data)
    }
}

/// 3x3 convolution bank with kernels laid out `(out, in, ky, kx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv3x3 {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernels: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Fully connected layer with row-major `(out, in)` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub out_features: usize,
    pub in_features: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Same-padded (zero border of width 1), stride-1 cross-correlation.
pub fn conv2d(input: &Activation, conv: &Conv3x3) -> Result<Activation, CnnError> {
    if conv.in_channels != input.channels {
        return Err(CnnError::ChannelMismatch {
            kernel: conv.in_channels,
            input: input.channels,
        });
    }
    let (h, w) = (input.height, input.width);
    let mut out = Activation::zeros(conv.out_channels, h, w);
    let plane_len = h * w;
    for (co, out_plane) in out.data.chunks_mut(plane_len).enumerate() {
        out_plane.fill(conv.biases[co]);
        for ci in 0..conv.in_channels {
            let src = input.plane(ci);
            let kbase = (co * conv.in_channels + ci) * 9;
            for ky in 0..3 {
                for kx in 0..3 {
                    let wgt = conv.kernels[kbase + ky * 3 + kx];
                    if wgt == 0.0 {
                        continue;
                    }
                    // Output x range where x + kx - 1 stays inside [0, w).
                    let x_lo = 1usize.saturating_sub(kx);
                    let x_hi = (w + 1).saturating_sub(kx).min(w);
                    if x_lo >= x_hi {
                        continue;
                    }
                    for y in 0..h {
                        let sy = y + ky;
                        if sy < 1 || sy > h {
                            continue;
                        }
                        let sy = sy - 1;
                        let dst = &mut out_plane[y * w + x_lo..y * w + x_hi];
                        let s0 = sy * w + x_lo + kx - 1;
                        let srow = &src[s0..s0 + (x_hi - x_lo)];
                        for (d, s) in dst.iter_mut().zip(srow) {
                            *d += wgt * s;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn relu(t: &Activation) -> Activation {
    Activation {
        data: t.data.iter().map(|&v| v.max(0.0)).collect(),
        ..*t
    }
}

pub fn relu_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// Non-overlapping 2x2 max pooling, stride 2.
pub fn maxpool2d(t: &Activation) -> Result<Activation, CnnError> {
    if t.height % 2 != 0 || t.width % 2 != 0 {
        return Err(CnnError::OddPoolInput {
            height: t.height,
            width: t.width,
        });
    }
    let (oh, ow) = (t.height / 2, t.width / 2);
    let mut out = Activation::zeros(t.channels, oh, ow);
    for c in 0..t.channels {
        for y in 0..oh {
            for x in 0..ow {
                let m = t
                    .at(c, 2 * y, 2 * x)
                    .max(t.at(c, 2 * y, 2 * x + 1))
                    .max(t.at(c, 2 * y + 1, 2 * x))
                    .max(t.at(c, 2 * y + 1, 2 * x + 1));
                out.data[(c * oh + y) * ow + x] = m;
            }
        }
    }
    Ok(out)
}

/// Flattens channel-major, then row, then column.
pub fn flatten(t: &Activation) -> Vec<f64> {
    t.data.clone()
}

/// `W v + b`.
pub fn dense(v: &[f64], layer: &DenseLayer) -> Result<Vec<f64>, CnnError> {
    if v.len() != layer.in_features {
        return Err(CnnError::DenseMismatch {
            expected: layer.in_features,
            found: v.len(),
        });
    }
    Ok(layer
        .weights
        .chunks_exact(layer.in_features)
        .zip(&layer.biases)
        .map(|(row, b)| b + row.iter().zip(v).map(|(w, x)| w * x).sum::<f64>())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::make_rng;

    fn random_activation(c: usize, h: usize, w: usize, seed: u64) -> Activation {
        let mut rng = make_rng(seed);
        Activation::from_vec(c, h, w, (0..c * h * w).map(|_| rng.next_gaussian()).collect())
    }

    fn naive_conv(input: &Activation, conv: &Conv3x3) -> Activation {
        let (h, w) = (input.height, input.width);
        let mut out = Activation::zeros(conv.out_channels, h, w);
        for co in 0..conv.out_channels {
            for y in 0..h {
                for x in 0..w {
                    let mut s = conv.biases[co];
                    for ci in 0..conv.in_channels {
                        for ky in 0..3 {
                            for kx in 0..3 {
                                let iy = y as isize + ky as isize - 1;
                                let ix = x as isize + kx as isize - 1;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                s += conv.kernels[((co * conv.in_channels + ci) * 3 + ky) * 3 + kx]
                                    * input.at(ci, iy as usize, ix as usize);
                            }
                        }
                    }
                    out.data[(co * h + y) * w + x] = s;
                }
            }
        }
        out
    }

    #[test]
    fn all_ones_kernel_center_sums_input() {
        let input = Activation::from_vec(1, 3, 3, (1..=9).map(f64::from).collect());
        let conv = Conv3x3 {
            out_channels: 1,
            in_channels: 1,
            kernels: vec![1.0; 9],
            biases: vec![0.0],
        };
        let out = conv2d(&input, &conv).unwrap();
        assert_eq!(out.at(0, 1, 1), 45.0);
        // corner sees only its 2x2 neighbourhood
        assert_eq!(out.at(0, 0, 0), 1.0 + 2.0 + 4.0 + 5.0);
    }

    #[test]
    fn delta_kernel_is_identity() {
        let input = random_activation(1, 6, 5, 1);
        let mut kernels = vec![0.0; 9];
        kernels[4] = 1.0;
        let conv = Conv3x3 {
            out_channels: 1,
            in_channels: 1,
            kernels,
            biases: vec![0.0],
        };
        assert_eq!(conv2d(&input, &conv).unwrap(), input);
    }

    #[test]
    fn conv_matches_naive_loops() {
        let mut rng = make_rng(2);
        for (cin, cout, h, w) in [(1, 1, 5, 5), (3, 4, 5, 7), (2, 3, 1, 1), (2, 2, 2, 3)] {
            let input = random_activation(cin, h, w, rng.next_u64());
            let conv = Conv3x3 {
                out_channels: cout,
                in_channels: cin,
                kernels: (0..cout * cin * 9).map(|_| rng.next_gaussian()).collect(),
                biases: (0..cout).map(|_| rng.next_gaussian()).collect(),
            };
            let fast = conv2d(&input, &conv).unwrap();
            let slow = naive_conv(&input, &conv);
            for (a, b) in fast.data.iter().zip(&slow.data) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn conv_is_linear_without_bias() {
        let mut rng = make_rng(3);
        let conv = Conv3x3 {
            out_channels: 2,
            in_channels: 2,
            kernels: (0..36).map(|_| rng.next_gaussian()).collect(),
            biases: vec![0.0; 2],
        };
        let x = random_activation(2, 6, 6, 4);
        let y = random_activation(2, 6, 6, 5);
        let a = 1.7;
        let combo = Activation::from_vec(2, 6, 6, x.data.iter().zip(&y.data).map(|(p, q)| a * p + q).collect());
        let lhs = conv2d(&combo, &conv).unwrap();
        let cx = conv2d(&x, &conv).unwrap();
        let cy = conv2d(&y, &conv).unwrap();
        for i in 0..lhs.data.len() {
            assert!((lhs.data[i] - (a * cx.data[i] + cy.data[i])).abs() <= 1e-9);
        }
    }

    #[test]
    fn conv_channel_mismatch() {
        let conv = Conv3x3 {
            out_channels: 1,
            in_channels: 2,
            kernels: vec![0.0; 18],
            biases: vec![0.0],
        };
        let err = conv2d(&Activation::zeros(3, 2, 2), &conv).unwrap_err();
        assert_eq!(err, CnnError::ChannelMismatch { kernel: 2, input: 3 });
    }

    #[test]
    fn relu_clamps_and_is_idempotent() {
        let t = Activation::from_vec(1, 1, 2, vec![-1.0, 2.0]);
        assert_eq!(relu(&t).data, vec![0.0, 2.0]);
        let r = random_activation(2, 4, 4, 6);
        assert_eq!(relu(&relu(&r)), relu(&r));
    }

    #[test]
    fn maxpool_cases() {
        let t = Activation::from_vec(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(maxpool2d(&t).unwrap().data, vec![4.0]);
        let c = Activation::from_vec(2, 4, 6, vec![0.25; 48]);
        let p = maxpool2d(&c).unwrap();
        assert_eq!(p.shape(), [2, 3, 2]);
        assert!(p.data.iter().all(|&v| v == 0.25));
        assert!(maxpool2d(&Activation::zeros(1, 3, 2)).is_err());
    }

    #[test]
    fn maxpool_matches_window_scan() {
        let t = random_activation(3, 8, 8, 7);
        let p = maxpool2d(&t).unwrap();
        for c in 0..3 {
            for y in 0..4 {
                for x in 0..4 {
                    let mut m = f64::NEG_INFINITY;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            m = m.max(t.at(c, 2 * y + dy, 2 * x + dx));
                        }
                    }
                    assert_eq!(p.at(c, y, x), m);
                }
            }
        }
    }

    #[test]
    fn dense_cases() {
        let v = vec![1.5, -2.0, 3.0];
        let mut eye = vec![0.0; 9];
        for i in 0..3 {
            eye[i * 4] = 1.0;
        }
        let id = DenseLayer {
            out_features: 3,
            in_features: 3,
            weights: eye,
            biases: vec![0.0; 3],
        };
        assert_eq!(dense(&v, &id).unwrap(), v);
        let bias_only = DenseLayer {
            out_features: 3,
            in_features: 3,
            weights: vec![0.0; 9],
            biases: vec![1.0; 3],
        };
        assert_eq!(dense(&v, &bias_only).unwrap(), vec![1.0; 3]);
        assert_eq!(
            dense(&[1.0], &id).unwrap_err(),
            CnnError::DenseMismatch { expected: 3, found: 1 }
        );
    }

    #[test]
    fn dense_matches_dot_loop() {
        let mut rng = make_rng(8);
        let layer = DenseLayer {
            out_features: 4,
            in_features: 8,
            weights: (0..32).map(|_| rng.next_gaussian()).collect(),
            biases: (0..4).map(|_| rng.next_gaussian()).collect(),
        };
        let v: Vec<f64> = (0..8).map(|_| rng.next_gaussian()).collect();
        let out = dense(&v, &layer).unwrap();
        for o in 0..4 {
            let mut s = layer.biases[o];
            for i in 0..8 {
                s += layer.weights[o * 8 + i] * v[i];
            }
            assert!((out[o] - s).abs() <= 1e-12);
        }
    }

    #[test]
    fn flatten_is_channel_row_column() {
        let mut t = Activation::zeros(2, 2, 2);
        for c in 0..2 {
            for y in 0..2 {
                for x in 0..2 {
                    t.data[(c * 2 + y) * 2 + x] = (100 * c + 10 * y + x) as f64;
                }
            }
        }
        assert_eq!(
            flatten(&t),
            vec![0.0, 1.0, 10.0, 11.0, 100.0, 101.0, 110.0, 111.0]
        );
    }

    #[test]
    fn pixel_tensor_conversion() {
        let pt = PixelTensor {
            height: 1,
            width: 2,
            channels: 2,
            values: vec![1.0, 2.0, 3.0, 4.0],
        };
        let a = Activation::from(&pt);
        assert_eq!(a.data, vec![1.0, 3.0, 2.0, 4.0]);
    }
}
