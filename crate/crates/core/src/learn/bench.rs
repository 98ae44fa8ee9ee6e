use serde::{Deserialize, Serialize};

use super::{cross_validate, Algorithm, Dataset, Hyperparams};
use crate::error::Result;
use crate::stats::mean_ci95;

/// Aggregates over repetitions for one algorithm. Times are wall-clock
/// seconds summed over the folds of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub algorithm: Algorithm,
    pub mean_accuracy: f64,
    pub ci95_accuracy: f64,
    pub mean_train_s: f64,
    pub mean_test_s: f64,
    /// CI of train + test time.
    pub ci95_time: f64,
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub repetitions: usize,
    pub folds: usize,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, alg: Algorithm) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.algorithm == alg)
    }
}

/// Repeated stratified cross-validation; repetition `r` shuffles with
/// `seed + r`. Runs sequentially so the timings don't compete for cores.
pub fn benchmark(
    algorithms: &[Algorithm],
    dataset: &Dataset,
    repetitions: usize,
    folds: usize,
    hp: &Hyperparams,
    seed: u64,
) -> Result<BenchReport> {
    let repetitions = repetitions.max(1);
    let mut rows = Vec::with_capacity(algorithms.len());
    for &alg in algorithms {
        let (mut acc, mut train, mut test, mut total) = (vec![], vec![], vec![], vec![]);
        for r in 0..repetitions {
            let rep = cross_validate(alg, dataset, folds, hp, seed.wrapping_add(r as u64))?;
            acc.push(rep.accuracy);
            train.push(rep.train_wall_s);
            test.push(rep.test_wall_s);
            total.push(rep.train_wall_s + rep.test_wall_s);
        }
        let (mean_accuracy, ci95_accuracy) = mean_ci95(&acc);
        rows.push(BenchRow {
            algorithm: alg,
            mean_accuracy,
            ci95_accuracy,
            mean_train_s: mean_ci95(&train).0,
            mean_test_s: mean_ci95(&test).0,
            ci95_time: mean_ci95(&total).1,
            accuracies: acc,
        });
    }
    Ok(BenchReport {
        repetitions,
        folds,
        seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{train, FeatureSpec, Instance, Schema};

    fn noisy(n: usize) -> Dataset {
        let schema = Schema::new(vec![FeatureSpec::numeric("x"), FeatureSpec::numeric("y")]);
        let instances = (0..n)
            .map(|i| {
                let x = (i * 7919 % 1000) as f64;
                let y = (i * 104_729 % 997) as f64;
                Instance {
                    values: vec![x, y],
                    label: usize::from(x + y > 1000.0) + usize::from(i % 11 == 0),
                }
            })
            .collect();
        Dataset::new(schema, vec!["A".into(), "B".into(), "C".into()], instances).unwrap()
    }

    #[test]
    fn accuracy_is_repeatable_across_runs() {
        let ds = noisy(300);
        let hp = Hyperparams::default();
        let a = benchmark(&[Algorithm::NaiveBayes, Algorithm::Knn], &ds, 3, 5, &hp, 9).unwrap();
        let b = benchmark(&[Algorithm::NaiveBayes, Algorithm::Knn], &ds, 3, 5, &hp, 9).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.accuracies, y.accuracies);
        }
        assert_eq!(a.rows[0].accuracies.len(), 3);
    }

    #[test]
    fn single_repetition_has_zero_ci() {
        let ds = noisy(100);
        let r = benchmark(&[Algorithm::ZeroR], &ds, 1, 10, &Hyperparams::default(), 0).unwrap();
        assert_eq!(r.rows[0].ci95_accuracy, 0.0);
        assert_eq!(r.rows[0].ci95_time, 0.0);
    }

    #[test]
    fn zeror_tests_faster_than_knn() {
        let ds = noisy(12_000);
        let r = benchmark(
            &[Algorithm::ZeroR, Algorithm::Knn],
            &ds,
            1,
            10,
            &Hyperparams::default(),
            1,
        )
        .unwrap();
        let zr = r.row(Algorithm::ZeroR).unwrap();
        let knn = r.row(Algorithm::Knn).unwrap();
        assert!(zr.mean_train_s + zr.mean_test_s < knn.mean_test_s);
    }

    #[test]
    fn tree_depth_grows_with_depth_limit() {
        let ds = noisy(500);
        let mut last = 0;
        for max_depth in [1, 2, 4, 8, 25] {
            let hp = Hyperparams {
                max_depth,
                ..Hyperparams::default()
            };
            let m = train(Algorithm::DecisionTree, &ds, &hp).unwrap();
            let depth = match &m.state {
                crate::learn::ModelState::DecisionTree(t) => t.depth(),
                _ => unreachable!(),
            };
            assert!(depth <= max_depth);
            assert!(depth >= last);
            last = depth;
        }
        assert!(last > 2);
    }
}
