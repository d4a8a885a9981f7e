use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NetError, NetworkConfig, CONV_KERNELS, IN_CHANNELS, OUT_CHANNELS};

/// Shape of one layer's weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerKind {
    /// Square `kernel × kernel × depth` filters, stored `[filter][kz][ky][kx]`.
    Conv {
        filters: usize,
        kernel: usize,
        depth: usize,
    },
    /// Row-major `[row][col]` matrix; `rows` outputs, `cols` inputs.
    Dense { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub weight_offset: usize,
    pub weight_len: usize,
    pub bias_offset: usize,
    pub bias_len: usize,
}

impl LayerSpec {
    pub fn fan_in(&self) -> usize {
        match self.kind {
            LayerKind::Conv { kernel, depth, .. } => kernel * kernel * depth,
            LayerKind::Dense { cols, .. } => cols,
        }
    }

    pub fn weight_range(&self) -> std::ops::Range<usize> {
        self.weight_offset..self.weight_offset + self.weight_len
    }

    pub fn bias_range(&self) -> std::ops::Range<usize> {
        self.bias_offset..self.bias_offset + self.bias_len
    }
}

/// A single parameter addressed structurally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamRef {
    /// `layer` is 0, 1 or 2 for conv1..conv3.
    ConvWeight {
        layer: usize,
        filter: usize,
        kz: usize,
        ky: usize,
        kx: usize,
    },
    DenseWeight {
        row: usize,
        col: usize,
    },
    /// `layer` is 0..=3, the dense layer being 3.
    Bias {
        layer: usize,
        index: usize,
    },
}

/// Mapping between structural parameter addresses and the flat parameter vector.
///
/// Order: conv1 weights, conv1 biases, conv2 weights, conv2 biases, conv3
/// weights, conv3 biases, dense weights, dense biases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub layers: Vec<LayerSpec>,
    pub total: usize,
}

impl ParamLayout {
    pub fn for_config(config: &NetworkConfig) -> ParamLayout {
        let mut layers = Vec::with_capacity(4);
        let mut offset = 0;
        let mut depth = IN_CHANNELS;
        for (i, (&filters, &kernel)) in config.conv_filters.iter().zip(&CONV_KERNELS).enumerate() {
            let weight_len = filters * kernel * kernel * depth;
            layers.push(LayerSpec {
                name: format!("conv{}", i + 1),
                kind: LayerKind::Conv {
                    filters,
                    kernel,
                    depth,
                },
                weight_offset: offset,
                weight_len,
                bias_offset: offset + weight_len,
                bias_len: filters,
            });
            offset += weight_len + filters;
            depth = filters;
        }
        let cells = config.width * config.height;
        let cols = cells * depth;
        let rows = cells * OUT_CHANNELS;
        layers.push(LayerSpec {
            name: "dense".to_string(),
            kind: LayerKind::Dense { rows, cols },
            weight_offset: offset,
            weight_len: rows * cols,
            bias_offset: offset + rows * cols,
            bias_len: rows,
        });
        offset += rows * cols + rows;
        ParamLayout {
            layers,
            total: offset,
        }
    }

    pub fn conv(&self, layer: usize) -> &LayerSpec {
        assert!(layer < 3, "conv layer index {layer} out of range");
        &self.layers[layer]
    }

    pub fn dense(&self) -> &LayerSpec {
        &self.layers[3]
    }

    pub fn flat_index(&self, r: ParamRef) -> Option<usize> {
        match r {
            ParamRef::ConvWeight {
                layer,
                filter,
                kz,
                ky,
                kx,
            } => {
                let spec = self.layers.get(layer).filter(|_| layer < 3)?;
                let LayerKind::Conv {
                    filters,
                    kernel,
                    depth,
                } = spec.kind
                else {
                    return None;
                };
                if filter >= filters || kz >= depth || ky >= kernel || kx >= kernel {
                    return None;
                }
                Some(spec.weight_offset + ((filter * depth + kz) * kernel + ky) * kernel + kx)
            }
            ParamRef::DenseWeight { row, col } => {
                let spec = self.dense();
                let LayerKind::Dense { rows, cols } = spec.kind else {
                    return None;
                };
                (row < rows && col < cols).then(|| spec.weight_offset + row * cols + col)
            }
            ParamRef::Bias { layer, index } => {
                let spec = self.layers.get(layer)?;
                (index < spec.bias_len).then(|| spec.bias_offset + index)
            }
        }
    }

    pub fn locate(&self, flat: usize) -> Option<ParamRef> {
        for (layer, spec) in self.layers.iter().enumerate() {
            if spec.weight_range().contains(&flat) {
                let local = flat - spec.weight_offset;
                return Some(match spec.kind {
                    LayerKind::Conv { kernel, depth, .. } => {
                        let kx = local % kernel;
                        let ky = (local / kernel) % kernel;
                        let kz = (local / (kernel * kernel)) % depth;
                        let filter = local / (kernel * kernel * depth);
                        ParamRef::ConvWeight {
                            layer,
                            filter,
                            kz,
                            ky,
                            kx,
                        }
                    }
                    LayerKind::Dense { cols, .. } => ParamRef::DenseWeight {
                        row: local / cols,
                        col: local % cols,
                    },
                });
            }
            if spec.bias_range().contains(&flat) {
                return Some(ParamRef::Bias {
                    layer,
                    index: flat - spec.bias_offset,
                });
            }
        }
        None
    }

    /// Total number of conv filter weights (biases excluded).
    pub fn conv_weight_count(&self) -> usize {
        (0..3).map(|l| self.conv(l).weight_len).sum()
    }
}

/// All network parameters as one flat vector plus its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    config: NetworkConfig,
    layout: ParamLayout,
    values: Vec<f64>,
}

impl NetworkParams {
    /// He-style uniform initialization: weights in `±sqrt(6 / fan_in)`, biases zero.
    pub fn init(config: &NetworkConfig) -> Result<NetworkParams, NetError> {
        config.validate()?;
        let layout = ParamLayout::for_config(config);
        let mut values = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for spec in &layout.layers {
            let limit = (6.0 / spec.fan_in() as f64).sqrt();
            for w in &mut values[spec.weight_range()] {
                *w = rng.gen_range(-limit..limit);
            }
        }
        Ok(NetworkParams {
            config: config.clone(),
            layout,
            values,
        })
    }

    /// All-zero parameters.
    pub fn zeros(config: &NetworkConfig) -> Result<NetworkParams, NetError> {
        config.validate()?;
        let layout = ParamLayout::for_config(config);
        let values = vec![0.0; layout.total];
        Ok(NetworkParams {
            config: config.clone(),
            layout,
            values,
        })
    }

    pub fn from_parts(config: NetworkConfig, values: Vec<f64>) -> Result<NetworkParams, NetError> {
        config.validate()?;
        let layout = ParamLayout::for_config(&config);
        if values.len() != layout.total {
            return Err(NetError::Corrupt(format!(
                "expected {} parameters, got {}",
                layout.total,
                values.len()
            )));
        }
        Ok(NetworkParams {
            config,
            layout,
            values,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, r: ParamRef) -> Option<f64> {
        self.layout.flat_index(r).map(|i| self.values[i])
    }

    pub fn conv_weights(&self, layer: usize) -> &[f64] {
        &self.values[self.layout.conv(layer).weight_range()]
    }

    pub fn conv_biases(&self, layer: usize) -> &[f64] {
        &self.values[self.layout.conv(layer).bias_range()]
    }

    pub fn dense_weights(&self) -> &[f64] {
        &self.values[self.layout.dense().weight_range()]
    }

    pub fn dense_biases(&self) -> &[f64] {
        &self.values[self.layout.dense().bias_range()]
    }

    /// Copy of all conv filter weights, conv1 then conv2 then conv3.
    pub fn conv_snapshot(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layout.conv_weight_count());
        for l in 0..3 {
            out.extend_from_slice(self.conv_weights(l));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
