use serde::{Deserialize, Serialize};

use super::params::{LayerKind, NetworkParams};
use super::{leaky_relu, NetError, OUT_CHANNELS};
use crate::tensor::Tensor3;

/// Selects one of the three convolution layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConvLayer {
    Conv1,
    Conv2,
    Conv3,
}

impl ConvLayer {
    pub const ALL: [ConvLayer; 3] = [ConvLayer::Conv1, ConvLayer::Conv2, ConvLayer::Conv3];

    /// 0-based position in the network.
    pub fn index(self) -> usize {
        match self {
            ConvLayer::Conv1 => 0,
            ConvLayer::Conv2 => 1,
            ConvLayer::Conv3 => 2,
        }
    }

    /// From the 1-based layer number used in reports and on the wire.
    pub fn from_number(n: usize) -> Option<ConvLayer> {
        match n {
            1 => Some(ConvLayer::Conv1),
            2 => Some(ConvLayer::Conv2),
            3 => Some(ConvLayer::Conv3),
            _ => None,
        }
    }

    pub fn number(self) -> usize {
        self.index() + 1
    }
}

/// Post-activation outputs of every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivations {
    pub conv1: Tensor3,
    pub conv2: Tensor3,
    pub conv3: Tensor3,
    /// Dense output reshaped to `(width, height, 32)`.
    pub output: Tensor3,
}

impl LayerActivations {
    pub fn conv(&self, layer: ConvLayer) -> &Tensor3 {
        match layer {
            ConvLayer::Conv1 => &self.conv1,
            ConvLayer::Conv2 => &self.conv2,
            ConvLayer::Conv3 => &self.conv3,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.conv1.is_finite()
            && self.conv2.is_finite()
            && self.conv3.is_finite()
            && self.output.is_finite()
    }
}

pub fn forward(params: &NetworkParams, state: &Tensor3) -> Result<LayerActivations, NetError> {
    let cfg = params.config();
    let expected = cfg.state_shape();
    if state.shape() != expected {
        return Err(NetError::ShapeMismatch {
            expected,
            got: state.shape(),
        });
    }
    let slope = cfg.leaky_slope;
    let conv1 = conv_layer(params, 0, state, slope);
    let conv2 = conv_layer(params, 1, &conv1, slope);
    let conv3 = conv_layer(params, 2, &conv2, slope);

    let (w, h) = (cfg.width, cfg.height);
    let mut out = vec![0.0; w * h * OUT_CHANNELS];
    dense(
        params.dense_weights(),
        params.dense_biases(),
        conv3.as_slice(),
        &mut out,
    );
    for v in &mut out {
        *v = leaky_relu(*v, slope);
    }
    let output = Tensor3::from_vec(w, h, OUT_CHANNELS, out).expect("dense output size");
    Ok(LayerActivations {
        conv1,
        conv2,
        conv3,
        output,
    })
}

fn conv_layer(params: &NetworkParams, layer: usize, input: &Tensor3, slope: f64) -> Tensor3 {
    let LayerKind::Conv {
        filters,
        kernel,
        depth,
    } = params.layout().conv(layer).kind
    else {
        unreachable!("conv layout");
    };
    debug_assert_eq!(input.channels(), depth);
    let mut out = conv_same(
        input,
        params.conv_weights(layer),
        params.conv_biases(layer),
        filters,
        kernel,
    );
    for v in out.as_mut_slice() {
        *v = leaky_relu(*v, slope);
    }
    out
}

/// Pre-activation "same" convolution, stride 1.
pub(crate) fn conv_same(
    input: &Tensor3,
    weights: &[f64],
    biases: &[f64],
    filters: usize,
    kernel: usize,
) -> Tensor3 {
    let (w, h, depth) = input.shape();
    let pad = (kernel - 1) / 2;
    let kk = kernel * kernel;
    let mut out = Tensor3::zeros(w, h, filters);
    for y in 0..h {
        for x in 0..w {
            let base = out.index(x, y, 0);
            let acc = &mut out.as_mut_slice()[base..base + filters];
            acc.copy_from_slice(biases);
            for ky in 0..kernel {
                let Some(iy) = (y + ky).checked_sub(pad).filter(|&v| v < h) else {
                    continue;
                };
                for kx in 0..kernel {
                    let Some(ix) = (x + kx).checked_sub(pad).filter(|&v| v < w) else {
                        continue;
                    };
                    let cell = input.cell(ix, iy);
                    let tap = ky * kernel + kx;
                    for (kz, &a) in cell.iter().enumerate() {
                        if a == 0.0 {
                            continue;
                        }
                        let mut wi = kz * kk + tap;
                        for slot in acc.iter_mut() {
                            *slot += weights[wi] * a;
                            wi += depth * kk;
                        }
                    }
                }
            }
        }
    }
    out
}

/// `out = W x + b` with row-major `W`.
pub(crate) fn dense(weights: &[f64], biases: &[f64], input: &[f64], out: &mut [f64]) {
    let cols = input.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &weights[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (wv, xv) in row.iter().zip(input) {
            acc += wv * xv;
        }
        *o = acc + biases[r];
    }
}
