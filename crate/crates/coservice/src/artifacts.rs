//! Training outputs on disk and their consistency checks.
//!
//! A model directory holds `model.bin`, `mrin.json`, `fingerprint.txt` and
//! `train_log.csv`.

use std::path::{Path, PathBuf};

use mrin_core::attribution::{training_fingerprint, Attribution, Explainer};
use mrin_core::neuralnet::{load_model, SavedModel};
use mrin_core::sessionlog::{build_training_set, load_sessions, Session};

use crate::CommandError;

pub const MODEL_FILE: &str = "model.bin";
pub const MRIN_FILE: &str = "mrin.json";
pub const FINGERPRINT_FILE: &str = "fingerprint.txt";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";

/// Model, attribution and training corpus verified to come from one run.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub model: SavedModel,
    pub attribution: Attribution,
    pub sessions: Vec<Session>,
}

impl Artifacts {
    pub fn new(
        model: SavedModel,
        attribution: Attribution,
        sessions: Vec<Session>,
    ) -> Result<Self, CommandError> {
        let a = Self {
            model,
            attribution,
            sessions,
        };
        a.check()?;
        Ok(a)
    }

    pub fn load(model_dir: &Path, sessions_path: &Path) -> Result<Self, CommandError> {
        let model = load_model(&model_dir.join(MODEL_FILE))?;
        let attribution = Attribution::load(&model_dir.join(MRIN_FILE))?;
        let sessions = load_sessions(sessions_path)?;
        let stamp_path = model_dir.join(FINGERPRINT_FILE);
        let stamp = std::fs::read_to_string(&stamp_path).map_err(CommandError::io(&stamp_path))?;
        if stamp.trim() != model.meta.fingerprint {
            return Err(CommandError::Data(format!(
                "{} does not match {}",
                stamp_path.display(),
                MODEL_FILE
            )));
        }
        Self::new(model, attribution, sessions)
    }

    fn check(&self) -> Result<(), CommandError> {
        self.explainer()?;
        let instances = build_training_set(&self.sessions)?;
        let expected = training_fingerprint(
            self.model.params.config(),
            self.model.meta.epochs,
            &instances,
        );
        if expected != self.model.meta.fingerprint {
            return Err(CommandError::Data(format!(
                "training sessions do not reproduce the model's fingerprint (expected {}, got {expected})",
                self.model.meta.fingerprint
            )));
        }
        Ok(())
    }

    pub fn explainer(&self) -> Result<Explainer<'_>, CommandError> {
        Ok(Explainer::new(
            &self.model,
            &self.attribution,
            &self.sessions,
        )?)
    }

    pub fn fingerprint(&self) -> &str {
        &self.model.meta.fingerprint
    }

    pub fn dims(&self) -> (usize, usize) {
        let c = self.model.params.config();
        (c.width, c.height)
    }
}

pub fn artifact_paths(dir: &Path) -> [PathBuf; 4] {
    [MODEL_FILE, MRIN_FILE, FINGERPRINT_FILE, TRAIN_LOG_FILE].map(|f| dir.join(f))
}
