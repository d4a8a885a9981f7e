use std::collections::HashMap;

use super::file::Attribution;
use super::mrin::{most_activated_filter, most_responsible_instance, SliceNorm};
use super::AttributionError;
use crate::neuralnet::{forward, ConvLayer, SavedModel};
use crate::sessionlog::Session;
use crate::tilegrid::TileGrid;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Explanation {
    pub instance_id: usize,
    pub session_id: String,
    /// Final level of the owning session.
    pub responsible_level: TileGrid,
    pub layer: ConvLayer,
    pub filter_index: usize,
    /// How many weights of the filter point at `instance_id`.
    pub modal_count: usize,
}

/// A model, its attribution and the training sessions, checked to belong together.
#[derive(Debug, Clone)]
pub struct Explainer<'a> {
    model: &'a SavedModel,
    attribution: &'a Attribution,
    levels: HashMap<&'a str, &'a TileGrid>,
    layer: ConvLayer,
    norm: SliceNorm,
}

impl<'a> Explainer<'a> {
    pub fn new(
        model: &'a SavedModel,
        attribution: &'a Attribution,
        sessions: &'a [Session],
    ) -> Result<Self, AttributionError> {
        if model.meta.fingerprint != attribution.fingerprint {
            return Err(AttributionError::FingerprintMismatch {
                model: model.meta.fingerprint.clone(),
                mrin: attribution.fingerprint.clone(),
            });
        }
        let levels: HashMap<&str, &TileGrid> = sessions
            .iter()
            .map(|s| (s.session_id.as_str(), &s.final_level))
            .collect();
        if let Some(missing) = attribution
            .instance_sessions
            .iter()
            .find(|id| !levels.contains_key(id.as_str()))
        {
            return Err(AttributionError::UnknownSession(missing.clone()));
        }
        Ok(Self {
            model,
            attribution,
            levels,
            layer: ConvLayer::Conv1,
            norm: SliceNorm::L1,
        })
    }

    pub fn with_layer(mut self, layer: ConvLayer) -> Self {
        self.layer = layer;
        self
    }

    pub fn with_norm(mut self, norm: SliceNorm) -> Self {
        self.norm = norm;
        self
    }

    pub fn explain(&self, state: &TileGrid) -> Result<Explanation, AttributionError> {
        let acts = forward(&self.model.params, &state.to_state_tensor())?;
        let filter_index = most_activated_filter(&acts, self.layer, self.norm);
        let (instance_id, modal_count) =
            most_responsible_instance(&self.attribution.mrin, self.layer, filter_index);
        let session_id = &self.attribution.instance_sessions[instance_id];
        Ok(Explanation {
            instance_id,
            session_id: session_id.clone(),
            responsible_level: self.levels[session_id.as_str()].clone(),
            layer: self.layer,
            filter_index,
            modal_count,
        })
    }
}

/// One-shot conv1 explanation with the L1 slice norm.
pub fn explain(
    model: &SavedModel,
    attribution: &Attribution,
    sessions: &[Session],
    state: &TileGrid,
) -> Result<Explanation, AttributionError> {
    Explainer::new(model, attribution, sessions)?.explain(state)
}
