//! Attribution file: the MRIN arrays of one training run as JSON.
//!
//! ```text
//! {"schema":"mrin-attribution","version":1,
//!  "fingerprint":"<hex sha-256 of the run>",
//!  "instance_sessions":["s000","s000",...],      // owning session per instance id
//!  "mrin":{"layers":[{"filters":8,"kernel":4,"depth":34,"ids":[...]},...]},
//!  "summary":{"instances":..,"batches":..,"layers":[...]},
//!  "ledger":{...}}                               // only in audit mode
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ledger::{DeltaLedger, LedgerSummary};
use super::mrin::MrinArrays;
use super::training::TrainedRun;
use super::AttributionError;

pub const MRIN_SCHEMA: &str = "mrin-attribution";
pub const MRIN_VERSION: u32 = 1;

/// What the explainer needs from a training run, plus optional audit data.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub fingerprint: String,
    pub instance_sessions: Vec<String>,
    pub mrin: MrinArrays,
    pub summary: LedgerSummary,
    pub ledger: Option<DeltaLedger>,
}

impl Attribution {
    /// `audit` keeps the full ledger.
    pub fn from_run(run: &TrainedRun, audit: bool) -> Self {
        Attribution {
            fingerprint: run.fingerprint.clone(),
            instance_sessions: run.instance_sessions.clone(),
            mrin: run.mrin.clone(),
            summary: run.ledger.summary(),
            ledger: audit.then(|| run.ledger.clone()),
        }
    }

    fn validate(&self) -> Result<(), AttributionError> {
        let n = self.instance_sessions.len();
        for (l, layer) in self.mrin.layers.iter().enumerate() {
            if layer.ids.len() != layer.filters * layer.filter_len() {
                return Err(AttributionError::Format(format!(
                    "conv{} array has the wrong length",
                    l + 1
                )));
            }
            if let Some(&bad) = layer.ids.iter().find(|&&id| id >= n) {
                return Err(AttributionError::Format(format!(
                    "conv{} refers to instance {bad} but the run has {n}",
                    l + 1
                )));
            }
        }
        if let Some(ledger) = &self.ledger {
            if ledger.instances() != n {
                return Err(AttributionError::Format(
                    "ledger instance count disagrees".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let out = FileOut {
            schema: MRIN_SCHEMA,
            version: MRIN_VERSION,
            fingerprint: &self.fingerprint,
            instance_sessions: &self.instance_sessions,
            mrin: &self.mrin,
            summary: &self.summary,
            ledger: self.ledger.as_ref(),
        };
        let mut s = serde_json::to_string(&out).expect("attribution serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, AttributionError> {
        let f: FileIn =
            serde_json::from_str(text).map_err(|e| AttributionError::Format(e.to_string()))?;
        if f.schema != MRIN_SCHEMA || f.version != MRIN_VERSION {
            return Err(AttributionError::Format(format!(
                "unsupported attribution file {}/{}",
                f.schema, f.version
            )));
        }
        let a = Attribution {
            fingerprint: f.fingerprint,
            instance_sessions: f.instance_sessions,
            mrin: f.mrin,
            summary: f.summary,
            ledger: f.ledger,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn save(&self, path: &Path) -> Result<(), AttributionError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, AttributionError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Serialize)]
struct FileOut<'a> {
    schema: &'a str,
    version: u32,
    fingerprint: &'a str,
    instance_sessions: &'a [String],
    mrin: &'a MrinArrays,
    summary: &'a LedgerSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    ledger: Option<&'a DeltaLedger>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileIn {
    schema: String,
    version: u32,
    fingerprint: String,
    instance_sessions: Vec<String>,
    mrin: MrinArrays,
    summary: LedgerSummary,
    #[serde(default)]
    ledger: Option<DeltaLedger>,
}
