use serde::{Deserialize, Serialize};

use super::dataset::FeatureKind;
use super::{argmax, Prediction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnState {
    pub k: usize,
    pub kinds: Vec<FeatureKind>,
    /// Normalized training vectors in training order.
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

/// Squared mixed distance: Euclidean on normalized numerics plus one per
/// mismatched categorical value.
pub fn mixed_distance_sq(kinds: &[FeatureKind], a: &[f64], b: &[f64]) -> f64 {
    let mut d = 0.0;
    for ((kind, x), y) in kinds.iter().zip(a).zip(b) {
        d += match kind {
            FeatureKind::Numeric => (x - y) * (x - y),
            FeatureKind::Categorical => {
                if x == y {
                    0.0
                } else {
                    1.0
                }
            }
        };
    }
    d
}

impl KnnState {
    /// Training indices of the `k` nearest rows, nearest first; equal
    /// distances keep the lower training index first.
    pub fn neighbors(&self, x: &[f64]) -> Vec<(f64, usize)> {
        let k = self.k.min(self.rows.len());
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (i, row) in self.rows.iter().enumerate() {
            let d = mixed_distance_sq(&self.kinds, x, row);
            if best.len() == k && d >= best[k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|b| b.0 <= d);
            best.insert(pos, (d, i));
            best.truncate(k);
        }
        best
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        let nn = self.neighbors(x);
        let mut votes = vec![0.0; self.n_classes];
        for (_, i) in &nn {
            votes[self.labels[*i]] += 1.0;
        }
        let total = nn.len() as f64;
        let distribution: Vec<f64> = votes.iter().map(|v| v / total).collect();
        Prediction {
            label: argmax(&distribution),
            distribution,
        }
    }
}
