use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::neuralnet::{ConvLayer, LayerActivations};
use crate::tensor::Tensor3;

/// Responsible instance ids for one conv layer, shaped like its filters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrinLayer {
    pub filters: usize,
    pub kernel: usize,
    pub depth: usize,
    /// `[filter][kz][ky][kx]`.
    pub ids: Vec<usize>,
}

impl MrinLayer {
    pub fn filter_len(&self) -> usize {
        self.kernel * self.kernel * self.depth
    }

    pub fn filter(&self, f: usize) -> &[usize] {
        let n = self.filter_len();
        &self.ids[f * n..(f + 1) * n]
    }

    pub fn get(&self, f: usize, kz: usize, ky: usize, kx: usize) -> usize {
        let k = self.kernel;
        self.ids[((f * self.depth + kz) * k + ky) * k + kx]
    }
}

/// One array per conv filter; `layers[0]` is conv1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrinArrays {
    pub layers: [MrinLayer; 3],
}

impl MrinArrays {
    pub fn layer(&self, layer: ConvLayer) -> &MrinLayer {
        &self.layers[layer.index()]
    }

    pub fn max_id(&self) -> Option<usize> {
        self.layers.iter().flat_map(|l| l.ids.iter().copied()).max()
    }
}

/// How a filter's output slice is reduced to one magnitude.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceNorm {
    #[default]
    L1,
    L2,
    Max,
}

impl SliceNorm {
    fn accumulate(self, acc: f64, v: f64) -> f64 {
        match self {
            SliceNorm::L1 => acc + v.abs(),
            SliceNorm::L2 => acc + v * v,
            SliceNorm::Max => acc.max(v.abs()),
        }
    }
}

/// Per-channel slice magnitudes of an activation tensor.
pub fn slice_magnitudes(acts: &Tensor3, norm: SliceNorm) -> Vec<f64> {
    let c = acts.channels();
    let mut out = vec![0.0; c];
    for cell in acts.as_slice().chunks_exact(c) {
        for (o, &v) in out.iter_mut().zip(cell) {
            *o = norm.accumulate(*o, v);
        }
    }
    // L2 is compared squared; the square root does not change the argmax.
    out
}

/// Channel with the largest slice magnitude; ties go to the smallest index.
pub fn most_activated_channel(acts: &Tensor3, norm: SliceNorm) -> usize {
    let mags = slice_magnitudes(acts, norm);
    let mut best = 0;
    for (f, &m) in mags.iter().enumerate() {
        if m > mags[best] {
            best = f;
        }
    }
    best
}

pub fn most_activated_filter(acts: &LayerActivations, layer: ConvLayer, norm: SliceNorm) -> usize {
    most_activated_channel(acts.conv(layer), norm)
}

/// Modal id of a filter's MRIN array and how often it occurs; ties go to the smallest id.
pub fn most_responsible_instance(
    mrin: &MrinArrays,
    layer: ConvLayer,
    filter: usize,
) -> (usize, usize) {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &id in mrin.layer(layer).filter(filter) {
        *counts.entry(id).or_default() += 1;
    }
    let mut best = (usize::MAX, 0);
    for (id, n) in counts {
        if n > best.1 {
            best = (id, n);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acts_from_slices(slices: &[Vec<f64>]) -> Tensor3 {
        let cells = slices[0].len();
        let c = slices.len();
        let mut t = Tensor3::zeros(cells, 1, c);
        for (f, s) in slices.iter().enumerate() {
            for (x, &v) in s.iter().enumerate() {
                t.set(x, 0, f, v);
            }
        }
        t
    }

    #[test]
    fn single_spike_wins() {
        let t = acts_from_slices(&[vec![0.0, 0.0], vec![5.0, 0.0]]);
        assert_eq!(most_activated_channel(&t, SliceNorm::L1), 1);
    }

    #[test]
    fn norm_tie_goes_to_smallest() {
        let t = acts_from_slices(&[vec![2.0, 0.0], vec![3.0, 0.5], vec![-3.5, 0.0]]);
        assert_eq!(slice_magnitudes(&t, SliceNorm::L1), vec![2.0, 3.5, 3.5]);
        assert_eq!(most_activated_channel(&t, SliceNorm::L1), 1);
    }

    #[test]
    fn norms_can_disagree() {
        let t = acts_from_slices(&[vec![1.0, 1.0, 1.0], vec![2.5, 0.0, 0.0]]);
        assert_eq!(most_activated_channel(&t, SliceNorm::L1), 0);
        assert_eq!(most_activated_channel(&t, SliceNorm::L2), 1);
        assert_eq!(most_activated_channel(&t, SliceNorm::Max), 1);
    }

    fn mrin_with_filter(ids: Vec<usize>) -> MrinArrays {
        let one = |ids: Vec<usize>| MrinLayer {
            filters: 1,
            kernel: 1,
            depth: ids.len(),
            ids,
        };
        MrinArrays {
            layers: [one(ids), one(vec![0]), one(vec![0])],
        }
    }

    #[test]
    fn mode_of_filter() {
        let m = mrin_with_filter(vec![7, 7, 3, 1]);
        assert_eq!(most_responsible_instance(&m, ConvLayer::Conv1, 0), (7, 2));
    }

    #[test]
    fn mode_tie_goes_to_smallest() {
        let m = mrin_with_filter(vec![2, 9, 2, 9]);
        assert_eq!(most_responsible_instance(&m, ConvLayer::Conv1, 0), (2, 2));
    }

    #[test]
    fn layer_indexing() {
        let l = MrinLayer {
            filters: 2,
            kernel: 2,
            depth: 3,
            ids: (0..24).collect(),
        };
        assert_eq!(l.get(1, 2, 1, 0), 12 + 2 * 4 + 2);
        assert_eq!(l.filter(1)[0], 12);
    }
}
