use serde::{Deserialize, Serialize};

use super::mrin::{MrinArrays, MrinLayer};
use super::AttributionError;
use crate::neuralnet::{LayerKind, NetworkParams, ParamLayout};

/// Signed per-instance sums of conv weight changes.
///
/// Rows are conv filter weights (conv1, then conv2, then conv3, each in
/// `[filter][kz][ky][kx]` order); columns are instance ids. Storage is
/// instance-major so that recording one batch touches one contiguous column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaLedger {
    /// `(filters, kernel, depth)` per conv layer.
    shapes: [(usize, usize, usize); 3],
    rows: usize,
    instances: usize,
    batches: u64,
    data: Vec<f64>,
}

impl DeltaLedger {
    pub fn new(layout: &ParamLayout, instances: usize) -> Self {
        let shapes = std::array::from_fn(|l| match layout.conv(l).kind {
            LayerKind::Conv {
                filters,
                kernel,
                depth,
            } => (filters, kernel, depth),
            LayerKind::Dense { .. } => unreachable!("conv layer"),
        });
        Self::with_shapes(shapes, instances)
    }

    pub fn with_shapes(shapes: [(usize, usize, usize); 3], instances: usize) -> Self {
        let rows = shapes.iter().map(|(f, k, d)| f * k * k * d).sum();
        Self {
            shapes,
            rows,
            instances,
            batches: 0,
            data: vec![0.0; rows * instances],
        }
    }

    pub fn instances(&self) -> usize {
        self.instances
    }

    /// Number of tracked conv weights.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn batches(&self) -> u64 {
        self.batches
    }

    pub fn shapes(&self) -> [(usize, usize, usize); 3] {
        self.shapes
    }

    fn layer_offset(&self, layer: usize) -> usize {
        self.shapes[..layer]
            .iter()
            .map(|(f, k, d)| f * k * k * d)
            .sum()
    }

    fn layer_len(&self, layer: usize) -> usize {
        let (f, k, d) = self.shapes[layer];
        f * k * k * d
    }

    fn check_instance(&self, instance_id: usize) -> Result<(), AttributionError> {
        if instance_id >= self.instances {
            return Err(AttributionError::IndexOutOfRange {
                instance_id,
                instances: self.instances,
            });
        }
        Ok(())
    }

    /// Adds `after - before` for every conv weight to column `instance_id`.
    pub fn record_batch(
        &mut self,
        instance_id: usize,
        before: &NetworkParams,
        after: &NetworkParams,
    ) -> Result<(), AttributionError> {
        if before.layout() != after.layout() {
            return Err(AttributionError::InvalidTrainingSet(
                "parameter layouts differ between snapshots".into(),
            ));
        }
        self.record_conv_delta(instance_id, &before.conv_snapshot(), &after.conv_snapshot())
    }

    /// Same as [`record_batch`](Self::record_batch) on flattened conv weights
    /// (the layout of [`NetworkParams::conv_snapshot`]).
    pub fn record_conv_delta(
        &mut self,
        instance_id: usize,
        before: &[f64],
        after: &[f64],
    ) -> Result<(), AttributionError> {
        self.check_instance(instance_id)?;
        if before.len() != self.rows || after.len() != self.rows {
            return Err(AttributionError::InvalidTrainingSet(format!(
                "expected {} conv weights, got {} and {}",
                self.rows,
                before.len(),
                after.len()
            )));
        }
        let col = &mut self.data[instance_id * self.rows..(instance_id + 1) * self.rows];
        for ((s, &b), &a) in col.iter_mut().zip(before).zip(after) {
            *s += a - b;
        }
        self.batches += 1;
        Ok(())
    }

    /// `S[w][i]` for layer-local weight index `w` (0-based layer).
    pub fn entry(&self, layer: usize, w: usize, instance_id: usize) -> f64 {
        assert!(
            w < self.layer_len(layer),
            "weight {w} out of range for conv{}",
            layer + 1
        );
        self.data[instance_id * self.rows + self.layer_offset(layer) + w]
    }

    /// Column of `instance_id` across all tracked weights.
    pub fn instance_column(&self, instance_id: usize) -> &[f64] {
        &self.data[instance_id * self.rows..(instance_id + 1) * self.rows]
    }

    /// `Σ_i S[w][i]` for every tracked weight, instances summed in id order.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for i in 0..self.instances {
            for (o, s) in out.iter_mut().zip(self.instance_column(i)) {
                *o += s;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Per weight, the instance with the largest `|S|`; ties go to the smallest id.
    pub fn finalize(&self) -> Result<MrinArrays, AttributionError> {
        if self.batches == 0 || self.instances == 0 {
            return Err(AttributionError::EmptyLedger);
        }
        let mut best_abs = vec![f64::NEG_INFINITY; self.rows];
        let mut best_id = vec![0usize; self.rows];
        for i in 0..self.instances {
            for (w, s) in self.instance_column(i).iter().enumerate() {
                let a = s.abs();
                if a > best_abs[w] {
                    best_abs[w] = a;
                    best_id[w] = i;
                }
            }
        }
        let mut offset = 0;
        let layers = self.shapes.map(|(filters, kernel, depth)| {
            let len = filters * kernel * kernel * depth;
            let ids = best_id[offset..offset + len].to_vec();
            offset += len;
            MrinLayer {
                filters,
                kernel,
                depth,
                ids,
            }
        });
        Ok(MrinArrays { layers })
    }

    pub fn summary(&self) -> LedgerSummary {
        let layers = (0..3)
            .map(|l| {
                let (off, len) = (self.layer_offset(l), self.layer_len(l));
                let mut max_abs = 0.0f64;
                let mut sum_abs = 0.0;
                let mut nonzero = 0;
                for i in 0..self.instances {
                    for s in &self.instance_column(i)[off..off + len] {
                        max_abs = max_abs.max(s.abs());
                        sum_abs += s.abs();
                        nonzero += usize::from(*s != 0.0);
                    }
                }
                LayerSummary {
                    name: format!("conv{}", l + 1),
                    weights: len,
                    max_abs,
                    sum_abs,
                    nonzero_entries: nonzero,
                }
            })
            .collect();
        LedgerSummary {
            instances: self.instances,
            batches: self.batches,
            layers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub name: String,
    pub weights: usize,
    pub max_abs: f64,
    pub sum_abs: f64,
    pub nonzero_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub instances: usize,
    pub batches: u64,
    pub layers: Vec<LayerSummary>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: [(usize, usize, usize); 3] = [(1, 1, 1), (1, 1, 1), (1, 1, 2)];

    #[test]
    fn unchanged_params_leave_ledger_zero() {
        let mut l = DeltaLedger::with_shapes(TINY, 2);
        let w = [0.1, 0.2, 0.3, 0.4];
        l.record_conv_delta(1, &w, &w).unwrap();
        assert!(l.instance_column(1).iter().all(|&s| s == 0.0));
        assert_eq!(l.batches(), 1);
    }

    #[test]
    fn opposite_changes_cancel() {
        let mut l = DeltaLedger::with_shapes(TINY, 1);
        l.record_conv_delta(0, &[0.0; 4], &[0.5, 0.0, 0.0, 0.0])
            .unwrap();
        l.record_conv_delta(0, &[0.5, 0.0, 0.0, 0.0], &[0.0; 4])
            .unwrap();
        assert_eq!(l.entry(0, 0, 0), 0.0);
    }

    #[test]
    fn instance_out_of_range() {
        let mut l = DeltaLedger::with_shapes(TINY, 2);
        let err = l.record_conv_delta(2, &[0.0; 4], &[0.0; 4]).unwrap_err();
        assert!(matches!(
            err,
            AttributionError::IndexOutOfRange { instance_id: 2, .. }
        ));
    }

    #[test]
    fn finalize_picks_largest_absolute_sum() {
        let mut l = DeltaLedger::with_shapes(TINY, 3);
        for (i, d) in [0.3, -0.4, 0.1].into_iter().enumerate() {
            l.record_conv_delta(i, &[0.0; 4], &[d, 0.0, 0.0, 0.0])
                .unwrap();
        }
        let m = l.finalize().unwrap();
        assert_eq!(m.layers[0].ids, vec![1]);
        // All-zero rows tie everywhere and fall to instance 0.
        assert_eq!(m.layers[2].ids, vec![0, 0]);
    }

    #[test]
    fn finalize_tie_goes_to_smallest_id() {
        let mut l = DeltaLedger::with_shapes(TINY, 6);
        l.record_conv_delta(3, &[0.0; 4], &[0.2, 0.0, 0.0, 0.0])
            .unwrap();
        l.record_conv_delta(5, &[0.0; 4], &[-0.2, 0.0, 0.0, 0.0])
            .unwrap();
        assert_eq!(l.finalize().unwrap().layers[0].ids, vec![3]);
    }

    #[test]
    fn single_instance_owns_everything() {
        let mut l = DeltaLedger::with_shapes(TINY, 1);
        l.record_conv_delta(0, &[0.0; 4], &[0.1, -0.1, 0.0, 0.2])
            .unwrap();
        let m = l.finalize().unwrap();
        assert!(m
            .layers
            .iter()
            .all(|layer| layer.ids.iter().all(|&i| i == 0)));
    }

    #[test]
    fn empty_ledger() {
        let l = DeltaLedger::with_shapes(TINY, 3);
        assert!(matches!(l.finalize(), Err(AttributionError::EmptyLedger)));
    }

    #[test]
    fn row_sums_and_summary() {
        let mut l = DeltaLedger::with_shapes(TINY, 2);
        l.record_conv_delta(0, &[0.0; 4], &[1.0, 0.0, 2.0, 0.0])
            .unwrap();
        l.record_conv_delta(1, &[0.0; 4], &[-3.0, 0.0, 0.0, 0.0])
            .unwrap();
        assert_eq!(l.row_sums(), vec![-2.0, 0.0, 2.0, 0.0]);
        let s = l.summary();
        assert_eq!(s.layers[0].max_abs, 3.0);
        assert_eq!(s.layers[0].nonzero_entries, 2);
        assert_eq!(s.layers[2].nonzero_entries, 1);
    }
}
