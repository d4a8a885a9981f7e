use log::{debug, info};
use sha2::{Digest, Sha256};

use super::ledger::DeltaLedger;
use super::mrin::MrinArrays;
use super::AttributionError;
use crate::neuralnet::{backward_into, AdamState, Gradients, NetworkConfig, NetworkParams};
use crate::sessionlog::TrainingInstance;

/// Per-instance loss treated as divergence. Targets are one-hot, so an all-zero
/// output scores at most 1; finite but astronomically large losses come from
/// runaway step sizes and would otherwise slip past the NaN check.
pub const DIVERGENCE_LOSS: f64 = 1e6;

/// Everything a tracked training run produces.
#[derive(Debug, Clone)]
pub struct TrainedRun {
    pub params: NetworkParams,
    /// Conv weights before the first step, in ledger row order.
    pub initial_conv: Vec<f64>,
    pub ledger: DeltaLedger,
    pub mrin: MrinArrays,
    /// Mean loss per epoch, measured before each instance's update.
    pub epoch_losses: Vec<f64>,
    pub fingerprint: String,
    /// Owning session of every instance, by id.
    pub instance_sessions: Vec<String>,
    pub epochs: usize,
}

/// Hex SHA-256 over the network config (seed included), the epoch count and
/// every instance in presentation order.
pub fn training_fingerprint(
    config: &NetworkConfig,
    epochs: usize,
    instances: &[TrainingInstance],
) -> String {
    let mut h = Sha256::new();
    h.update(b"mrin-run-v1\0");
    h.update(serde_json::to_vec(config).expect("config serializes"));
    h.update((epochs as u64).to_le_bytes());
    h.update((instances.len() as u64).to_le_bytes());
    for inst in instances {
        h.update((inst.instance_id as u64).to_le_bytes());
        h.update((inst.session_id.len() as u64).to_le_bytes());
        h.update(inst.session_id.as_bytes());
        h.update((inst.turn_index as u64).to_le_bytes());
        h.update(inst.state.to_le_bytes());
        h.update(inst.target_q.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Fingerprint of a run with a custom presentation order. The identity order
/// gives the same value as [`training_fingerprint`].
pub fn training_fingerprint_ordered(
    config: &NetworkConfig,
    epochs: usize,
    instances: &[TrainingInstance],
    order: &[usize],
) -> String {
    let base = training_fingerprint(config, epochs, instances);
    if is_identity(order, instances.len()) {
        return base;
    }
    let mut h = Sha256::new();
    h.update(b"mrin-order-v1\0");
    h.update(base.as_bytes());
    h.update((order.len() as u64).to_le_bytes());
    for &i in order {
        h.update((i as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn is_identity(order: &[usize], n: usize) -> bool {
    order.len() == n && order.iter().enumerate().all(|(p, &i)| p == i)
}

fn check_instances(
    config: &NetworkConfig,
    instances: &[TrainingInstance],
) -> Result<(), AttributionError> {
    if instances.is_empty() {
        return Err(AttributionError::InvalidTrainingSet(
            "no training instances".into(),
        ));
    }
    for (i, inst) in instances.iter().enumerate() {
        if inst.instance_id != i {
            return Err(AttributionError::InvalidTrainingSet(format!(
                "instance at position {i} has id {}",
                inst.instance_id
            )));
        }
        if inst.state.shape() != config.state_shape()
            || inst.target_q.shape() != config.output_shape()
        {
            return Err(AttributionError::InvalidTrainingSet(format!(
                "instance {i} does not match the {}x{} network",
                config.width, config.height
            )));
        }
        if !inst.target_q.is_finite() {
            return Err(AttributionError::InvalidTrainingSet(format!(
                "instance {i} has a non-finite target"
            )));
        }
    }
    Ok(())
}

/// Trains with batch size one, presenting instances in id order every epoch,
/// and books each step's conv weight change against the presented instance.
pub fn train_tracked(
    config: &NetworkConfig,
    instances: &[TrainingInstance],
    epochs: usize,
) -> Result<TrainedRun, AttributionError> {
    let order: Vec<usize> = (0..instances.len()).collect();
    train_tracked_order(config, instances, &order, epochs)
}

/// Like [`train_tracked`] but every epoch presents the instance ids in
/// `order`. Ids may repeat (oversampling); each presentation is booked
/// against its instance, so repeats accumulate in one ledger column.
pub fn train_tracked_order(
    config: &NetworkConfig,
    instances: &[TrainingInstance],
    order: &[usize],
    epochs: usize,
) -> Result<TrainedRun, AttributionError> {
    config.validate()?;
    check_instances(config, instances)?;
    if epochs == 0 {
        return Err(AttributionError::InvalidTrainingSet(
            "epochs must be positive".into(),
        ));
    }
    if order.is_empty() {
        return Err(AttributionError::InvalidTrainingSet(
            "empty presentation order".into(),
        ));
    }
    if let Some(&bad) = order.iter().find(|&&i| i >= instances.len()) {
        return Err(AttributionError::InvalidTrainingSet(format!(
            "presentation order names unknown instance {bad}"
        )));
    }
    let fingerprint = training_fingerprint_ordered(config, epochs, instances, order);
    let mut params = NetworkParams::init(config)?;
    let initial_conv = params.conv_snapshot();
    let total = params.layout().total;
    let mut adam = AdamState::new(total);
    let mut grads = Gradients::zeros(total);
    let mut ledger = DeltaLedger::new(params.layout(), instances.len());
    let mut before = initial_conv.clone();
    let mut epoch_losses = Vec::with_capacity(epochs);
    info!(
        "training {} instances ({} presentations per epoch) for {epochs} epochs on a {}x{} grid ({total} parameters)",
        instances.len(),
        order.len(),
        config.width,
        config.height
    );

    for epoch in 0..epochs {
        let mut loss_sum = 0.0;
        for inst in order.iter().map(|&i| &instances[i]) {
            backward_into(&params, &inst.state, &inst.target_q, &mut grads)?;
            // written negated so that NaN also trips it
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(grads.loss <= DIVERGENCE_LOSS) || grads.values.iter().any(|g| !g.is_finite()) {
                return Err(AttributionError::NumericFailure {
                    epoch,
                    instance_id: inst.instance_id,
                });
            }
            loss_sum += grads.loss;
            before.clear();
            for l in 0..3 {
                before.extend_from_slice(params.conv_weights(l));
            }
            adam.step(&config.adam, params.values_mut(), &grads.values);
            let after = params.conv_snapshot();
            ledger.record_conv_delta(inst.instance_id, &before, &after)?;
        }
        let mean = loss_sum / order.len() as f64;
        debug!("epoch {epoch}: mean loss {mean:.6e}");
        epoch_losses.push(mean);
    }
    if !params.is_finite() || !ledger.is_finite() {
        return Err(AttributionError::NumericFailure {
            epoch: epochs - 1,
            instance_id: order[order.len() - 1],
        });
    }
    let mrin = ledger.finalize()?;
    Ok(TrainedRun {
        params,
        initial_conv,
        ledger,
        mrin,
        epoch_losses,
        fingerprint,
        instance_sessions: instances.iter().map(|i| i.session_id.clone()).collect(),
        epochs,
    })
}
