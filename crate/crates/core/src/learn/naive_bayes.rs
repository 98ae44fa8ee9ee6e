use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::FeatureKind;
use super::{argmax, Prediction};

/// Per-class sufficient statistics for one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureModel {
    Gaussian {
        mean: Vec<f64>,
        var: Vec<f64>,
    },
    /// Sorted `(value code, count)` pairs, per class.
    Frequencies {
        counts: Vec<Vec<(i64, usize)>>,
        vocabulary: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesState {
    pub alpha: f64,
    pub class_counts: Vec<usize>,
    pub log_priors: Vec<f64>,
    pub features: Vec<FeatureModel>,
}

/// `rows` are normalized feature vectors paired with labels.
pub fn fit(
    kinds: &[FeatureKind],
    n_classes: usize,
    rows: &[(Vec<f64>, usize)],
    alpha: f64,
    var_floor: f64,
) -> NaiveBayesState {
    let n = rows.len() as f64;
    let mut class_counts = vec![0usize; n_classes];
    for (_, y) in rows {
        class_counts[*y] += 1;
    }
    let log_priors = class_counts
        .iter()
        .map(|&c| ((c as f64 + alpha) / (n + alpha * n_classes as f64)).ln())
        .collect();

    let features = kinds
        .iter()
        .enumerate()
        .map(|(j, kind)| match kind {
            FeatureKind::Numeric => {
                let mut sum = vec![0.0; n_classes];
                for (x, y) in rows {
                    sum[*y] += x[j];
                }
                let mean: Vec<f64> = (0..n_classes)
                    .map(|c| {
                        if class_counts[c] > 0 {
                            sum[c] / class_counts[c] as f64
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let mut ss = vec![0.0; n_classes];
                for (x, y) in rows {
                    ss[*y] += (x[j] - mean[*y]).powi(2);
                }
                let var = (0..n_classes)
                    .map(|c| {
                        let v = if class_counts[c] > 0 {
                            ss[c] / class_counts[c] as f64
                        } else {
                            0.0
                        };
                        v.max(var_floor)
                    })
                    .collect();
                FeatureModel::Gaussian { mean, var }
            }
            FeatureKind::Categorical => {
                let mut counts = vec![BTreeMap::new(); n_classes];
                let mut vocab = std::collections::BTreeSet::new();
                for (x, y) in rows {
                    let code = x[j] as i64;
                    vocab.insert(code);
                    *counts[*y].entry(code).or_insert(0) += 1;
                }
                FeatureModel::Frequencies {
                    counts: counts
                        .into_iter()
                        .map(|m: BTreeMap<i64, usize>| m.into_iter().collect())
                        .collect(),
                    vocabulary: vocab.len(),
                }
            }
        })
        .collect();

    NaiveBayesState {
        alpha,
        class_counts,
        log_priors,
        features,
    }
}

impl NaiveBayesState {
    /// Unnormalized log posterior per class; classes unseen in training get −∞.
    pub fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        (0..self.class_counts.len())
            .map(|c| {
                if self.class_counts[c] == 0 {
                    return f64::NEG_INFINITY;
                }
                let mut lp = self.log_priors[c];
                for (j, f) in self.features.iter().enumerate() {
                    lp += match f {
                        FeatureModel::Gaussian { mean, var } => {
                            let d = x[j] - mean[c];
                            -0.5 * (2.0 * std::f64::consts::PI * var[c]).ln() - d * d / (2.0 * var[c])
                        }
                        FeatureModel::Frequencies { counts, vocabulary } => {
                            let code = x[j] as i64;
                            let cnt = counts[c]
                                .binary_search_by_key(&code, |p| p.0)
                                .map_or(0, |k| counts[c][k].1) as f64;
                            ((cnt + self.alpha) / (self.class_counts[c] as f64 + self.alpha * *vocabulary as f64)).ln()
                        }
                    };
                }
                lp
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        let distribution = softmax(&self.log_joint(x));
        Prediction {
            label: argmax(&distribution),
            distribution,
        }
    }
}

/// Normalizes log scores with the log-sum-exp shift.
pub fn softmax(log_scores: &[f64]) -> Vec<f64> {
    let max = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        let n = log_scores.len() as f64;
        return vec![1.0 / n; log_scores.len()];
    }
    let exps: Vec<f64> = log_scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn softmax_sums_to_one_and_is_shift_invariant(
            scores in prop::collection::vec(-500.0f64..500.0, 1..10),
            shift in -1e3f64..1e3,
        ) {
            let p = softmax(&scores);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
            let q = softmax(&shifted);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
