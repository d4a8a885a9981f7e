//! Per-instance weight-change bookkeeping and the explanations built on it.
//!
//! During training every conv weight's signed change is added to the column
//! of the instance being presented. [`DeltaLedger::finalize`] turns the sums
//! into MRIN arrays: for each weight, the instance with the largest absolute
//! sum. A query is explained by its most activated conv filter and the modal
//! instance of that filter's array.

mod explain;
mod file;
mod ledger;
mod mrin;
mod training;

pub use explain::{explain, Explainer, Explanation};
pub use file::{Attribution, MRIN_SCHEMA, MRIN_VERSION};
pub use ledger::{DeltaLedger, LayerSummary, LedgerSummary};
pub use mrin::{
    most_activated_channel, most_activated_filter, most_responsible_instance, slice_magnitudes,
    MrinArrays, MrinLayer, SliceNorm,
};
pub use training::{
    train_tracked, train_tracked_order, training_fingerprint, training_fingerprint_ordered,
    TrainedRun, DIVERGENCE_LOSS,
};

use thiserror::Error;

use crate::neuralnet::NetError;

#[derive(Debug, Error)]
pub enum AttributionError {
    #[error("instance {instance_id} out of range for a ledger of {instances}")]
    IndexOutOfRange {
        instance_id: usize,
        instances: usize,
    },
    #[error("no batches were recorded")]
    EmptyLedger,
    #[error("model fingerprint {model} does not match attribution fingerprint {mrin}")]
    FingerprintMismatch { model: String, mrin: String },
    #[error("session {0} is not in the training corpus")]
    UnknownSession(String),
    #[error("invalid training set: {0}")]
    InvalidTrainingSet(String),
    #[error("training diverged (loss above bound or non-finite values) at epoch {epoch}, instance {instance_id}")]
    NumericFailure { epoch: usize, instance_id: usize },
    #[error("attribution file: {0}")]
    Format(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
