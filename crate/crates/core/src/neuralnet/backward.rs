use super::forward::{forward, LayerActivations};
use super::params::{LayerKind, NetworkParams};
use super::{NetError, OUT_CHANNELS};
use crate::tensor::Tensor3;

/// Gradient of the MSE loss with respect to every parameter, in flat layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
    /// Loss at the point the gradient was taken.
    pub loss: f64,
}

impl Gradients {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
            loss: 0.0,
        }
    }
}

pub fn backward(
    params: &NetworkParams,
    state: &Tensor3,
    target: &Tensor3,
) -> Result<Gradients, NetError> {
    let mut grads = Gradients::zeros(params.layout().total);
    backward_into(params, state, target, &mut grads)?;
    Ok(grads)
}

/// Like [`backward`] but reuses `grads` (every entry is overwritten).
pub fn backward_into(
    params: &NetworkParams,
    state: &Tensor3,
    target: &Tensor3,
    grads: &mut Gradients,
) -> Result<LayerActivations, NetError> {
    let cfg = params.config();
    let out_shape = cfg.output_shape();
    if target.shape() != out_shape {
        return Err(NetError::ShapeMismatch {
            expected: out_shape,
            got: target.shape(),
        });
    }
    let layout = params.layout();
    if grads.values.len() != layout.total {
        grads.values = vec![0.0; layout.total];
    }
    let acts = forward(params, state)?;
    let slope = cfg.leaky_slope;
    let n = (cfg.width * cfg.height * OUT_CHANNELS) as f64;

    // Output layer: dL/dz = 2 (y - t) / N * leaky'(z).
    let out = acts.output.as_slice();
    let mut loss = 0.0;
    let dz_out: Vec<f64> = out
        .iter()
        .zip(target.as_slice())
        .map(|(&y, &t)| {
            let r = y - t;
            loss += r * r;
            2.0 * r / n * leaky_grad(y, slope)
        })
        .collect();
    grads.loss = loss / n;

    // Dense layer.
    let dense = layout.dense();
    let LayerKind::Dense { cols, .. } = dense.kind else {
        unreachable!("dense layout");
    };
    let a3 = acts.conv3.as_slice();
    let wd = params.dense_weights();
    let mut da3 = vec![0.0; cols];
    {
        let (gw, gb) = split_weight_bias(
            &mut grads.values,
            dense.weight_offset,
            dense.weight_len,
            dense.bias_len,
        );
        for (r, &dz) in dz_out.iter().enumerate() {
            gb[r] = dz;
            let grow = &mut gw[r * cols..(r + 1) * cols];
            if dz == 0.0 {
                grow.fill(0.0);
                continue;
            }
            for (g, &a) in grow.iter_mut().zip(a3) {
                *g = dz * a;
            }
            let wrow = &wd[r * cols..(r + 1) * cols];
            for (d, &w) in da3.iter_mut().zip(wrow) {
                *d += w * dz;
            }
        }
    }

    // Convolutions, last to first.
    let mut delta =
        Tensor3::from_vec(cfg.width, cfg.height, acts.conv3.channels(), da3).expect("conv3 shape");
    apply_leaky_grad(&mut delta, &acts.conv3, slope);
    let mut d_in = conv_backward(params, 2, &acts.conv2, &delta, &mut grads.values, true);
    let mut delta2 = d_in.take().expect("input gradient requested");
    apply_leaky_grad(&mut delta2, &acts.conv2, slope);
    d_in = conv_backward(params, 1, &acts.conv1, &delta2, &mut grads.values, true);
    let mut delta1 = d_in.take().expect("input gradient requested");
    apply_leaky_grad(&mut delta1, &acts.conv1, slope);
    conv_backward(params, 0, state, &delta1, &mut grads.values, false);

    Ok(acts)
}

/// Derivative of Leaky ReLU expressed through its output; `y > 0` iff `x > 0` for `slope >= 0`.
#[inline]
fn leaky_grad(y: f64, slope: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else {
        slope
    }
}

fn apply_leaky_grad(delta: &mut Tensor3, post: &Tensor3, slope: f64) {
    for (d, &y) in delta.as_mut_slice().iter_mut().zip(post.as_slice()) {
        *d *= leaky_grad(y, slope);
    }
}

fn split_weight_bias(
    values: &mut [f64],
    offset: usize,
    weight_len: usize,
    bias_len: usize,
) -> (&mut [f64], &mut [f64]) {
    let (w, rest) = values[offset..offset + weight_len + bias_len].split_at_mut(weight_len);
    (w, rest)
}

/// Writes weight and bias gradients for conv `layer` given the gradient of
/// its pre-activation output; optionally returns the gradient w.r.t. its input.
fn conv_backward(
    params: &NetworkParams,
    layer: usize,
    input: &Tensor3,
    delta: &Tensor3,
    grads: &mut [f64],
    want_input_grad: bool,
) -> Option<Tensor3> {
    let spec = params.layout().conv(layer);
    let LayerKind::Conv { kernel, depth, .. } = spec.kind else {
        unreachable!("conv layout");
    };
    let weights = params.conv_weights(layer);
    let (w, h, _) = input.shape();
    let pad = (kernel - 1) / 2;
    let kk = kernel * kernel;
    let (gw, gb) = split_weight_bias(grads, spec.weight_offset, spec.weight_len, spec.bias_len);
    gw.fill(0.0);
    gb.fill(0.0);
    let mut d_input = want_input_grad.then(|| Tensor3::zeros(w, h, depth));

    for y in 0..h {
        for x in 0..w {
            let dcell = delta.cell(x, y);
            for (f, &d) in dcell.iter().enumerate() {
                gb[f] += d;
            }
            for ky in 0..kernel {
                let Some(iy) = (y + ky).checked_sub(pad).filter(|&v| v < h) else {
                    continue;
                };
                for kx in 0..kernel {
                    let Some(ix) = (x + kx).checked_sub(pad).filter(|&v| v < w) else {
                        continue;
                    };
                    let tap = ky * kernel + kx;
                    let in_cell = input.cell(ix, iy);
                    for (f, &d) in dcell.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        let fbase = f * depth * kk + tap;
                        for (kz, &a) in in_cell.iter().enumerate() {
                            gw[fbase + kz * kk] += d * a;
                        }
                    }
                    if let Some(di) = d_input.as_mut() {
                        let start = di.index(ix, iy, 0);
                        let dslice = &mut di.as_mut_slice()[start..start + depth];
                        for (f, &d) in dcell.iter().enumerate() {
                            if d == 0.0 {
                                continue;
                            }
                            let fbase = f * depth * kk + tap;
                            for (kz, slot) in dslice.iter_mut().enumerate() {
                                *slot += weights[fbase + kz * kk] * d;
                            }
                        }
                    }
                }
            }
        }
    }
    d_input
}
