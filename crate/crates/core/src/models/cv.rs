//! Stratified k-fold cross-validation and the scenario × algorithm grid.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    build_scenario_dataset, train, AlgorithmKind, Dataset, EvalReport, Hyperparameters, ModelError,
    ScenarioSpec,
};
use crate::ingest::Cohort;
use crate::seed::derive_seed;
use crate::Label;

/// Per-sample fold index in `0..k`.
///
/// Each class is shuffled independently and dealt round-robin into folds; the
/// dealing offset carries over from one class to the next so fold totals stay
/// balanced as well.
pub fn stratified_kfold(data: &Dataset, k: usize, seed: u64) -> Result<Vec<usize>, ModelError> {
    if k < 2 {
        return Err(ModelError::InvalidFolds(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; data.len()];
    let mut offset = 0;
    for class in [Label::HighRisk, Label::LowRisk] {
        let mut members: Vec<usize> = (0..data.len())
            .filter(|&i| data.labels[i] == class)
            .collect();
        if members.len() < k {
            return Err(ModelError::ClassTooSmall {
                class,
                size: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            folds[i] = (offset + pos) % k;
        }
        offset = (offset + members.len()) % k;
    }
    Ok(folds)
}

/// Pooled out-of-fold scores in dataset order.
pub fn out_of_fold_scores(
    data: &Dataset,
    kind: AlgorithmKind,
    k: usize,
    seed: u64,
    hp: &Hyperparameters,
) -> Result<Vec<f64>, ModelError> {
    let folds = stratified_kfold(data, k, seed)?;
    let per_fold: Vec<Vec<(usize, f64)>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let (test, train_idx): (Vec<usize>, Vec<usize>) =
                (0..data.len()).partition(|&i| folds[i] == f);
            let model = train(
                kind,
                &data.subset(&train_idx),
                hp,
                derive_seed(seed, &format!("fold-{f}")),
            )?;
            Ok(test
                .into_iter()
                .map(|i| (i, model.score_row(&data.rows[i])))
                .collect())
        })
        .collect::<Result<_, ModelError>>()?;
    let mut scores = vec![0.0; data.len()];
    for (i, s) in per_fold.into_iter().flatten() {
        scores[i] = s;
    }
    Ok(scores)
}

pub fn cross_validate(
    data: &Dataset,
    kind: AlgorithmKind,
    k: usize,
    seed: u64,
    hp: &Hyperparameters,
) -> Result<EvalReport, ModelError> {
    let scores = out_of_fold_scores(data, kind, k, seed, hp)?;
    Ok(EvalReport::from_pooled(
        &data.scenario,
        kind,
        &data.labels,
        &scores,
        k,
        seed,
    ))
}

/// One report per (scenario, algorithm), scenario-major. Every cell uses the same
/// fold assignment so algorithms are compared on identical splits.
pub fn scenario_grid(
    cohort: &Cohort,
    genes_by_term: &BTreeMap<String, Vec<String>>,
    specs: &[ScenarioSpec],
    algorithms: &[AlgorithmKind],
    k: usize,
    seed: u64,
    hp: &Hyperparameters,
) -> Result<(Vec<EvalReport>, Vec<String>), ModelError> {
    if specs.is_empty() {
        return Err(ModelError::InvalidDataset("no scenarios configured".into()));
    }
    let mut datasets = Vec::with_capacity(specs.len());
    let mut warnings = Vec::new();
    for spec in specs {
        let (data, w) = build_scenario_dataset(cohort, genes_by_term, spec)?;
        warnings.extend(w.into_iter().map(|w| format!("{}: {w}", spec.name)));
        datasets.push(data);
    }
    let cells: Vec<(usize, AlgorithmKind)> = (0..datasets.len())
        .flat_map(|d| algorithms.iter().map(move |a| (d, *a)))
        .collect();
    let reports = cells
        .par_iter()
        .map(|&(d, a)| cross_validate(&datasets[d], a, k, seed, hp))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((reports, warnings))
}
