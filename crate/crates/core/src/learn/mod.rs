//! Service-usage classifiers written from scratch, k-fold cross-validation
//! and a repeated benchmark harness.
//!
//! Every classifier works on min-max normalized numeric features (statistics
//! taken from its own training set) and exact categorical codes. All tie
//! rules resolve to the lowest index, so prediction is deterministic.

mod bench;
mod cv;
mod dataset;
pub mod knn;
pub mod naive_bayes;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bench::{benchmark, BenchReport, BenchRow};
pub use cv::{cross_validate, evaluate, stratified_folds, ClassMetrics, EvalReport};
pub use dataset::{
    encode, zone_code, Dataset, FeatureInput, FeatureKind, FeatureSpec, Instance, Normalizer, Schema, TraceColumns,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "zeror")]
    ZeroR,
    #[serde(rename = "nb", alias = "naive_bayes")]
    NaiveBayes,
    #[serde(rename = "knn")]
    Knn,
    #[serde(rename = "tree", alias = "decision_tree")]
    DecisionTree,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::ZeroR,
        Algorithm::NaiveBayes,
        Algorithm::Knn,
        Algorithm::DecisionTree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::ZeroR => "zeror",
            Algorithm::NaiveBayes => "nb",
            Algorithm::Knn => "knn",
            Algorithm::DecisionTree => "tree",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zeror" => Ok(Algorithm::ZeroR),
            "nb" | "naivebayes" | "naive_bayes" => Ok(Algorithm::NaiveBayes),
            "knn" | "ibk" => Ok(Algorithm::Knn),
            "tree" | "decisiontree" | "decision_tree" => Ok(Algorithm::DecisionTree),
            _ => Err(Error::UnsupportedAlgorithm(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub k: usize,
    pub laplace_alpha: f64,
    pub var_floor: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            k: 1,
            laplace_alpha: 1.0,
            var_floor: 1e-9,
            max_depth: 25,
            min_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    /// One probability per class, summing to 1.
    pub distribution: Vec<f64>,
}

/// Index of the largest entry; the lowest index wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum ModelState {
    ZeroR { label: usize, class_counts: Vec<usize> },
    NaiveBayes(naive_bayes::NaiveBayesState),
    Knn(knn::KnnState),
    DecisionTree(tree::TreeState),
}

/// A trained classifier; self-describing when serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub schema: Schema,
    pub classes: Vec<String>,
    pub normalizer: Normalizer,
    pub state: ModelState,
}

impl Model {
    pub fn algorithm(&self) -> Algorithm {
        match self.state {
            ModelState::ZeroR { .. } => Algorithm::ZeroR,
            ModelState::NaiveBayes(_) => Algorithm::NaiveBayes,
            ModelState::Knn(_) => Algorithm::Knn,
            ModelState::DecisionTree(_) => Algorithm::DecisionTree,
        }
    }

    /// Predicts from a raw (unnormalized) feature vector in schema order.
    pub fn predict(&self, raw: &[f64]) -> Prediction {
        let x = self.normalizer.apply(raw);
        match &self.state {
            ModelState::ZeroR { label, class_counts } => {
                let total: usize = class_counts.iter().sum();
                Prediction {
                    label: *label,
                    distribution: class_counts.iter().map(|&c| c as f64 / total as f64).collect(),
                }
            }
            ModelState::NaiveBayes(nb) => nb.predict(&x),
            ModelState::Knn(knn) => knn.predict(&x),
            ModelState::DecisionTree(t) => t.predict(&x),
        }
    }

    pub fn predict_class(&self, raw: &[f64]) -> &str {
        &self.classes[self.predict(raw).label]
    }

    /// Rough model size in stored instances, nodes or statistics.
    pub fn size_proxy(&self) -> usize {
        match &self.state {
            ModelState::ZeroR { .. } => 1,
            ModelState::NaiveBayes(nb) => nb.class_counts.len() * nb.features.len().max(1),
            ModelState::Knn(knn) => knn.rows.len(),
            ModelState::DecisionTree(t) => t.nodes.len(),
        }
    }
}

pub fn train(alg: Algorithm, dataset: &Dataset, hp: &Hyperparams) -> Result<Model> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset("cannot train on zero instances".into()));
    }
    let normalizer = dataset.normalizer();
    let kinds = dataset.schema.kinds();
    let n_classes = dataset.classes.len();
    let rows: Vec<(Vec<f64>, usize)> = dataset
        .instances
        .iter()
        .map(|inst| (normalizer.apply(&inst.values), inst.label))
        .collect();

    let state = match alg {
        Algorithm::ZeroR => {
            let class_counts = dataset.class_counts();
            let counts: Vec<f64> = class_counts.iter().map(|&c| c as f64).collect();
            ModelState::ZeroR {
                label: argmax(&counts),
                class_counts,
            }
        }
        Algorithm::NaiveBayes => ModelState::NaiveBayes(naive_bayes::fit(
            &kinds,
            n_classes,
            &rows,
            hp.laplace_alpha,
            hp.var_floor,
        )),
        Algorithm::Knn => {
            if hp.k == 0 {
                return Err(Error::validation("k", "must be at least 1"));
            }
            let (rows, labels) = rows.into_iter().unzip();
            ModelState::Knn(knn::KnnState {
                k: hp.k,
                kinds,
                rows,
                labels,
                n_classes,
            })
        }
        Algorithm::DecisionTree => {
            ModelState::DecisionTree(tree::fit(&kinds, n_classes, &rows, hp.max_depth, hp.min_leaf))
        }
    };
    Ok(Model {
        schema: dataset.schema.clone(),
        classes: dataset.classes.clone(),
        normalizer,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(rows: &[(f64, i64, usize)], classes: &[&str]) -> Dataset {
        let schema = Schema::new(vec![FeatureSpec::numeric("x"), FeatureSpec::categorical("c")]);
        let instances = rows
            .iter()
            .map(|&(x, c, y)| Instance {
                values: vec![x, c as f64],
                label: y,
            })
            .collect();
        Dataset::new(schema, classes.iter().map(|s| s.to_string()).collect(), instances).unwrap()
    }

    #[test]
    fn algorithm_tags() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!(matches!(
            "svm".parse::<Algorithm>(),
            Err(Error::UnsupportedAlgorithm(_))
        ));
    }

    #[test]
    fn zeror_predicts_majority() {
        let ds = fixture(&[(0.0, 0, 0), (1.0, 0, 0), (2.0, 1, 1)], &["A", "B"]);
        let m = train(Algorithm::ZeroR, &ds, &Hyperparams::default()).unwrap();
        for x in [-5.0, 0.5, 99.0] {
            assert_eq!(m.predict_class(&[x, 1.0]), "A");
        }
    }

    #[test]
    fn zeror_tie_goes_to_lowest_label() {
        let ds = fixture(&[(0.0, 0, 1), (1.0, 0, 0)], &["A", "B"]);
        let m = train(Algorithm::ZeroR, &ds, &Hyperparams::default()).unwrap();
        assert_eq!(m.predict(&[0.0, 0.0]).label, 0);
    }

    #[test]
    fn single_instance_knn() {
        let ds = fixture(&[(3.0, 2, 1)], &["A", "B"]);
        let m = train(Algorithm::Knn, &ds, &Hyperparams::default()).unwrap();
        for x in [-100.0, 3.0, 1e6] {
            assert_eq!(m.predict_class(&[x, 7.0]), "B");
        }
    }

    #[test]
    fn knn_majority_of_three() {
        // Query at 0: neighbors at 0.1 (A), 0.2 (A), 0.3 (B); far C is ignored.
        let ds = fixture(&[(0.1, 0, 0), (0.2, 0, 0), (0.3, 0, 1), (10.0, 0, 2)], &["A", "B", "C"]);
        let hp = Hyperparams {
            k: 3,
            ..Hyperparams::default()
        };
        let m = train(Algorithm::Knn, &ds, &hp).unwrap();
        let p = m.predict(&[0.0, 0.0]);
        assert_eq!(p.label, 0);
        assert!((p.distribution[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn knn_distance_tie_prefers_lower_training_index() {
        let ds = fixture(&[(1.0, 0, 1), (-1.0, 0, 0), (3.0, 0, 0)], &["A", "B"]);
        let m = train(Algorithm::Knn, &ds, &Hyperparams::default()).unwrap();
        // Normalized, the query sits at 0.25 with rows 0 and 1 at 0.5 and 0.
        assert_eq!(m.predict_class(&[0.0, 0.0]), "B");
    }

    #[test]
    fn naive_bayes_tie_goes_to_lowest_label() {
        // Mirror-image classes: identical priors and likelihoods at the midpoint.
        let ds = fixture(&[(0.0, 0, 0), (1.0, 0, 0), (0.0, 0, 1), (1.0, 0, 1)], &["A", "B"]);
        let m = train(Algorithm::NaiveBayes, &ds, &Hyperparams::default()).unwrap();
        let p = m.predict(&[0.5, 0.0]);
        assert_eq!(p.label, 0);
        assert!((p.distribution[0] - 0.5).abs() < 1e-12);
    }

    /// Hand-derived posterior on a four-row fixture.
    ///
    /// x (numeric, normalized by /4): A: 0, .25; B: .5, 1. c (categorical):
    /// A: p, q; B: p, p. Query (x=1 → .25, c=q).
    /// Priors (2+1)/(4+2) = 1/2 each. Gaussian A: mean .125, var .015625;
    /// B: mean .75, var .0625. P(q|A) = (1+1)/(2+2) = .5, P(q|B) = (0+1)/(2+2) = .25.
    #[test]
    fn naive_bayes_matches_hand_posterior() {
        let ds = fixture(&[(0.0, 0, 0), (1.0, 1, 0), (2.0, 0, 1), (4.0, 0, 1)], &["A", "B"]);
        let m = train(Algorithm::NaiveBayes, &ds, &Hyperparams::default()).unwrap();
        let pdf = |x: f64, mean: f64, var: f64| {
            (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
        };
        let a = 0.5 * pdf(0.25, 0.125, 0.015625) * 0.5;
        let b = 0.5 * pdf(0.25, 0.75, 0.0625) * 0.25;
        let p = m.predict(&[1.0, 1.0]);
        assert!((p.distribution[0] - a / (a + b)).abs() < 1e-9);
        assert!((p.distribution[1] - b / (a + b)).abs() < 1e-9);
        assert_eq!(p.label, 0);
    }

    #[test]
    fn tree_splits_separable_data() {
        let ds = fixture(
            &[
                (0.0, 0, 0),
                (1.0, 0, 0),
                (2.0, 0, 0),
                (10.0, 0, 1),
                (11.0, 0, 1),
                (12.0, 0, 1),
            ],
            &["A", "B"],
        );
        let m = train(Algorithm::DecisionTree, &ds, &Hyperparams::default()).unwrap();
        assert_eq!(m.predict_class(&[1.5, 0.0]), "A");
        assert_eq!(m.predict_class(&[9.0, 0.0]), "B");
        let ModelState::DecisionTree(t) = &m.state else {
            unreachable!()
        };
        assert_eq!(t.depth(), 1);
        // threshold sits midway between 2 and 10 in normalized units
        let tree::Split::Numeric { threshold, .. } = t.nodes[0].split else {
            unreachable!()
        };
        assert!((threshold - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tree_categorical_split_and_unseen_value() {
        let ds = fixture(
            &[
                (0.0, 1, 0),
                (0.0, 1, 0),
                (0.0, 2, 1),
                (0.0, 2, 1),
                (0.0, 3, 1),
                (0.0, 3, 1),
            ],
            &["A", "B"],
        );
        let m = train(Algorithm::DecisionTree, &ds, &Hyperparams::default()).unwrap();
        assert_eq!(m.predict_class(&[0.0, 1.0]), "A");
        assert_eq!(m.predict_class(&[0.0, 3.0]), "B");
        // unseen category falls back to the root majority
        assert_eq!(m.predict_class(&[0.0, 9.0]), "B");
    }

    #[test]
    fn empty_dataset_rejected() {
        let ds = fixture(&[], &["A"]);
        assert!(matches!(
            train(Algorithm::Knn, &ds, &Hyperparams::default()),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn model_json_round_trip() {
        let ds = fixture(&[(0.0, 0, 0), (1.0, 1, 0), (2.0, 0, 1), (4.0, 0, 1)], &["A", "B"]);
        for alg in Algorithm::ALL {
            let m = train(alg, &ds, &Hyperparams::default()).unwrap();
            let json = serde_json::to_string(&m).unwrap();
            assert!(json.contains(&format!(
                "\"algorithm\":\"{}\"",
                match alg {
                    Algorithm::ZeroR => "zero_r",
                    Algorithm::NaiveBayes => "naive_bayes",
                    Algorithm::Knn => "knn",
                    Algorithm::DecisionTree => "decision_tree",
                }
            )));
            let back: Model = serde_json::from_str(&json).unwrap();
            assert_eq!(back.predict(&[1.0, 1.0]), m.predict(&[1.0, 1.0]));
        }
    }
}
