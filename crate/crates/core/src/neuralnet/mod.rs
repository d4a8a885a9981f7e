//! Three convolution layers and one dense layer, trained one instance at a time.
//!
//! Every layer uses Leaky ReLU. Convolutions use stride 1 and "same" padding
//! (for even kernels the extra padding goes after, so the window for output
//! `(x, y)` starts at `x - (k-1)/2`). The dense layer maps the flattened conv3
//! output to a `width × height × 32` action-value grid.
//!
//! Everything is `f64` and single-threaded; identical inputs give bitwise
//! identical parameters.

mod adam;
mod backward;
mod forward;
mod model_file;
mod params;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use backward::{backward, backward_into, Gradients};
pub use forward::{forward, ConvLayer, LayerActivations};
pub use model_file::{
    load_model, save_model, ModelMeta, SavedModel, MODEL_MAGIC, MODEL_SCHEMA_VERSION,
};
pub use params::{LayerKind, LayerSpec, NetworkParams, ParamLayout, ParamRef};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::Tensor3;
use crate::tilegrid::{ACTION_CHANNELS, STATE_CHANNELS};

pub const IN_CHANNELS: usize = STATE_CHANNELS;
pub const OUT_CHANNELS: usize = ACTION_CHANNELS;
/// Kernel size per conv layer.
pub const CONV_KERNELS: [usize; 3] = [4, 3, 3];
/// Default filter count per conv layer.
pub const CONV_FILTERS: [usize; 3] = [8, 16, 32];

#[derive(Debug, Error)]
pub enum NetError {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("model file schema version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("model file is corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_slope")]
    pub leaky_slope: f64,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub seed: u64,
    /// Filters in conv1, conv2, conv3.
    #[serde(default = "default_filters")]
    pub conv_filters: [usize; 3],
}

fn default_slope() -> f64 {
    0.01
}

fn default_filters() -> [usize; 3] {
    CONV_FILTERS
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            width: 12,
            height: 8,
            leaky_slope: default_slope(),
            adam: AdamConfig::default(),
            seed: 0,
            conv_filters: CONV_FILTERS,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.width < 3 || self.height < 3 {
            return Err(NetError::InvalidConfig(format!(
                "grid {}x{} is smaller than 3x3",
                self.width, self.height
            )));
        }
        if self.conv_filters.contains(&0) {
            return Err(NetError::InvalidConfig(
                "every conv layer needs at least one filter".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.leaky_slope) {
            return Err(NetError::InvalidConfig(
                "leaky_slope must be in [0, 1)".into(),
            ));
        }
        self.adam.validate()
    }

    pub fn state_shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, IN_CHANNELS)
    }

    pub fn output_shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, OUT_CHANNELS)
    }
}

#[inline]
pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

/// Mean over all entries of the squared difference.
pub fn mse_loss(pred: &Tensor3, target: &Tensor3) -> Result<f64, NetError> {
    if pred.shape() != target.shape() {
        return Err(NetError::ShapeMismatch {
            expected: pred.shape(),
            got: target.shape(),
        });
    }
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / pred.as_slice().len() as f64)
}
