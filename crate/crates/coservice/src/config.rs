//! TOML run configuration.
//!
//! ```toml
//! [network]
//! width = 12
//! height = 8
//! seed = 13
//!
//! [training]
//! epochs = 6
//!
//! [eval]
//! n_random = 20
//! min_added = 10
//! win_rule = "mean"
//!
//! [suggest]
//! threshold = 0.5
//! top_k = 16
//!
//! [generator]
//! n_sessions = 24
//! fp_rate = 0.2
//! ```
//!
//! Every section is optional. Without `[network]` the network is sized to
//! the training corpus with default settings.

use std::path::Path;

use mrin_core::attribution::SliceNorm;
use mrin_core::evalharness::{EvalOptions, WinRule};
use mrin_core::neuralnet::{ConvLayer, NetworkConfig};
use mrin_core::sessionlog::{Session, SynthParams};
use serde::{Deserialize, Serialize};

use crate::suggest::SuggestConfig;
use crate::CommandError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    #[serde(default)]
    pub network: Option<NetworkConfig>,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub suggest: SuggestConfig,
    #[serde(default)]
    pub generator: SynthParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { epochs: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_random: usize,
    pub min_added: usize,
    pub win_rule: WinRule,
    /// 1-based conv layer used for explanations.
    pub layer: usize,
    pub norm: SliceNorm,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let d = EvalOptions::default();
        Self {
            n_random: d.n_random,
            min_added: d.min_added,
            win_rule: d.win_rule,
            layer: d.layer.number(),
            norm: d.norm,
        }
    }
}

impl EvalConfig {
    pub fn options(&self, seed: u64) -> Result<EvalOptions, CommandError> {
        let layer = ConvLayer::from_number(self.layer).ok_or_else(|| {
            CommandError::Config(format!("eval.layer must be 1, 2 or 3, got {}", self.layer))
        })?;
        Ok(EvalOptions {
            n_random: self.n_random,
            min_added: self.min_added,
            seed,
            win_rule: self.win_rule,
            layer,
            norm: self.norm,
        })
    }
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self, CommandError> {
        let cfg: AppConfig =
            toml::from_str(text).map_err(|e| CommandError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CommandError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CommandError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CommandError::Config(m) => CommandError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The configured network, or the default one sized to the corpus's levels.
    pub fn network_for(&self, sessions: &[Session]) -> Result<NetworkConfig, CommandError> {
        if let Some(n) = &self.network {
            return Ok(n.clone());
        }
        let first = sessions
            .first()
            .ok_or_else(|| CommandError::Data("session log is empty".into()))?;
        let (width, height) = first.initial.dims();
        Ok(NetworkConfig {
            width,
            height,
            ..NetworkConfig::default()
        })
    }

    pub fn validate(&self) -> Result<(), CommandError> {
        if let Some(n) = &self.network {
            n.validate()?;
        }
        self.generator.validate()?;
        if self.training.epochs == 0 {
            return Err(CommandError::Config(
                "training.epochs must be positive".into(),
            ));
        }
        self.eval.options(0)?;
        self.suggest.validate()?;
        Ok(())
    }
}
