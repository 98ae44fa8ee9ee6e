use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{train, Algorithm, Dataset, Hyperparams, Model};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    /// `None` when the class was never predicted.
    pub precision: Option<f64>,
    /// `None` when the class never occurs.
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub algorithm: Algorithm,
    pub classes: Vec<String>,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[actual][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub fold_accuracies: Vec<f64>,
    #[serde(skip)]
    pub train_wall_s: f64,
    #[serde(skip)]
    pub test_wall_s: f64,
}

impl EvalReport {
    fn from_confusion(
        algorithm: Algorithm,
        classes: Vec<String>,
        confusion: Vec<Vec<usize>>,
        fold_accuracies: Vec<f64>,
        train_wall_s: f64,
        test_wall_s: f64,
    ) -> Self {
        let total: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..confusion.len()).map(|i| confusion[i][i]).sum();
        let per_class = classes
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let predicted: usize = confusion.iter().map(|row| row[c]).sum();
                let actual: usize = confusion[c].iter().sum();
                let tp = confusion[c][c] as f64;
                ClassMetrics {
                    class: name.clone(),
                    precision: (predicted > 0).then(|| tp / predicted as f64),
                    recall: (actual > 0).then(|| tp / actual as f64),
                }
            })
            .collect();
        Self {
            algorithm,
            classes,
            accuracy: if total > 0 { correct as f64 / total as f64 } else { 0.0 },
            per_class,
            confusion,
            fold_accuracies,
            train_wall_s,
            test_wall_s,
        }
    }
}

/// Seeded shuffle, then rows of each class (in label order) are dealt
/// round-robin over the folds with a counter that carries across classes.
/// Fold sizes differ by at most one, overall and per class.
pub fn stratified_folds(dataset: &Dataset, k_folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k_folds < 2 {
        return Err(Error::validation("folds", "need at least 2 folds"));
    }
    if dataset.len() < k_folds {
        return Err(Error::validation(
            "folds",
            format!("{} instances cannot fill {k_folds} folds", dataset.len()),
        ));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k_folds];
    let mut next = 0;
    for class in 0..dataset.classes.len() {
        for &i in order.iter().filter(|&&i| dataset.instances[i].label == class) {
            folds[next % k_folds].push(i);
            next += 1;
        }
    }
    Ok(folds)
}

/// Evaluates a trained model on a held-out dataset with the same classes.
pub fn evaluate(model: &Model, dataset: &Dataset) -> EvalReport {
    let n = model.classes.len();
    let mut confusion = vec![vec![0; n]; n];
    let started = Instant::now();
    for inst in &dataset.instances {
        let actual = model
            .classes
            .iter()
            .position(|c| *c == dataset.classes[inst.label])
            .unwrap_or(usize::MAX);
        let predicted = model.predict(&inst.values).label;
        if actual != usize::MAX {
            confusion[actual][predicted] += 1;
        }
    }
    let test = started.elapsed().as_secs_f64();
    let report = EvalReport::from_confusion(model.algorithm(), model.classes.clone(), confusion, vec![], 0.0, test);
    EvalReport {
        fold_accuracies: vec![report.accuracy],
        ..report
    }
}

/// Stratified k-fold cross-validation. Each fold trains on the remaining
/// folds (normalization statistics included) and predicts the held-out one.
pub fn cross_validate(
    alg: Algorithm,
    dataset: &Dataset,
    k_folds: usize,
    hp: &Hyperparams,
    seed: u64,
) -> Result<EvalReport> {
    let folds = stratified_folds(dataset, k_folds, seed)?;
    let n = dataset.classes.len();
    let mut confusion = vec![vec![0; n]; n];
    let mut fold_accuracies = Vec::with_capacity(k_folds);
    let (mut train_s, mut test_s) = (0.0, 0.0);
    for (f, held_out) in folds.iter().enumerate() {
        let train_rows: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, rows)| rows.iter().copied())
            .collect();
        let training = dataset.subset(&train_rows);

        let started = Instant::now();
        let model = train(alg, &training, hp)?;
        train_s += started.elapsed().as_secs_f64();

        let started = Instant::now();
        let mut correct = 0;
        for &i in held_out {
            let inst = &dataset.instances[i];
            let predicted = model.predict(&inst.values).label;
            confusion[inst.label][predicted] += 1;
            correct += usize::from(predicted == inst.label);
        }
        test_s += started.elapsed().as_secs_f64();
        fold_accuracies.push(correct as f64 / held_out.len() as f64);
    }
    Ok(EvalReport::from_confusion(
        alg,
        dataset.classes.clone(),
        confusion,
        fold_accuracies,
        train_s,
        test_s,
    ))
}
