use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::NormalizedDataset;
use crate::error::{Error, Result};

use super::report::{EvalReport, ModelRow};
use super::{compute_auc, fit, samples_of, ClassifierKind, Samples};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub cycles: usize,
    pub folds: usize,
    pub master_seed: u64,
    /// Identifiers printed in the report header.
    #[serde(default = "default_train_name")]
    pub train_name: String,
    #[serde(default = "default_exploration_name")]
    pub exploration_name: String,
}

fn default_train_name() -> String {
    "train".into()
}

fn default_exploration_name() -> String {
    "exploration".into()
}

impl EvalConfig {
    pub fn new(cycles: usize, folds: usize, master_seed: u64) -> Self {
        EvalConfig {
            cycles,
            folds,
            master_seed,
            train_name: default_train_name(),
            exploration_name: default_exploration_name(),
        }
    }

    pub fn named(mut self, train: impl Into<String>, exploration: impl Into<String>) -> Self {
        self.train_name = train.into();
        self.exploration_name = exploration.into();
        self
    }

    /// Checks that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.cycles < 1 {
            return Err(Error::config("cycles must be at least 1"));
        }
        if self.folds < 2 {
            return Err(Error::config("folds must be at least 2"));
        }
        Ok(())
    }
}

/// Called with (cycles finished, total cycles).
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

/// Test-index sets for each fold. Each class is shuffled and dealt
/// round-robin; the dealing position carries over between classes so fold
/// sizes stay within one of each other.
pub fn stratified_folds(labels: &[usize], n_classes: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    let mut offset = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            out[(offset + j) % folds].push(i);
        }
        offset = (offset + members.len()) % folds;
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

struct CycleResult {
    cv: f64,
    exp: f64,
    auc: Option<f64>,
    flags: Vec<String>,
}

fn subset<'a>(s: &Samples<'a>, idx: &[usize]) -> Samples<'a> {
    Samples {
        x: idx.iter().map(|&i| s.x[i]).collect(),
        y: idx.iter().map(|&i| s.y[i]).collect(),
        n_classes: s.n_classes,
    }
}

fn accuracy(correct: usize, total: usize) -> f64 {
    correct as f64 / total as f64
}

/// Everything `monte_carlo_cv` rejects before doing any work.
pub fn validate_eval(
    config: &EvalConfig,
    train: &NormalizedDataset,
    exploration: &NormalizedDataset,
    kinds: &[ClassifierKind],
) -> Result<()> {
    config.validate()?;
    if kinds.is_empty() {
        return Err(Error::config("no classifiers selected"));
    }
    for k in kinds {
        k.validate()?;
    }
    let counts = samples_of(train).class_counts();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::Degenerate("training data needs at least two classes".into()));
    }
    let smallest = counts.iter().copied().filter(|&c| c > 0).min().unwrap_or(0);
    if config.folds > smallest {
        return Err(Error::config(format!(
            "stratification infeasible: {} folds but the smallest class has {smallest} cases",
            config.folds
        )));
    }
    if exploration.is_empty() {
        return Err(Error::Empty("exploration dataset has no cases".into()));
    }
    if exploration.n_attributes() != train.n_attributes() {
        return Err(Error::DimensionMismatch {
            expected: train.n_attributes(),
            found: exploration.n_attributes(),
        });
    }
    if let Some(c) = exploration.cases.iter().find(|c| train.class_index(&c.label).is_none()) {
        return Err(Error::UnknownClass(c.label.clone()));
    }
    Ok(())
}

/// Repeated stratified k-fold CV on `train`, plus accuracy and AUC on
/// `exploration` from a model refit on all of `train`, for every cycle.
pub fn monte_carlo_cv(
    config: &EvalConfig,
    train: &NormalizedDataset,
    exploration: &NormalizedDataset,
    kinds: &[ClassifierKind],
    progress: Option<Progress>,
) -> Result<EvalReport> {
    validate_eval(config, train, exploration, kinds)?;
    let samples = samples_of(train);
    let exp_x: Vec<&[f64]> = exploration.cases.iter().map(|c| c.values.as_slice()).collect();
    let exp_y: Vec<usize> = exploration
        .cases
        .iter()
        .map(|c| train.class_index(&c.label).expect("checked above"))
        .collect();
    let classes = train.class_palette.clone();

    let done = AtomicUsize::new(0);
    let per_cycle: Vec<Vec<CycleResult>> = (0..config.cycles)
        .into_par_iter()
        .map(|cycle| {
            let seed = config.master_seed.wrapping_add(cycle as u64);
            let folds = stratified_folds(&samples.y, samples.n_classes, config.folds, seed);
            let splits: Vec<(Samples, Samples)> = (0..config.folds)
                .map(|f| {
                    let train_idx: Vec<usize> = (0..config.folds)
                        .filter(|&g| g != f)
                        .flat_map(|g| folds[g].iter().copied())
                        .collect();
                    (subset(&samples, &train_idx), subset(&samples, &folds[f]))
                })
                .collect();
            let row = kinds
                .iter()
                .map(|kind| {
                    let mut flags = BTreeSet::new();
                    let mut fold_acc = 0.0;
                    for (tr, te) in &splits {
                        let model = fit(kind, tr, classes.clone())?;
                        flags.extend(model.flags().iter().cloned());
                        let correct = te
                            .x
                            .iter()
                            .zip(&te.y)
                            .filter(|(x, &y)| model.predict_index(x) == y)
                            .count();
                        fold_acc += accuracy(correct, te.len());
                    }
                    let model = fit(kind, &samples, classes.clone())?;
                    flags.extend(model.flags().iter().cloned());
                    let scores: Vec<Vec<f64>> = exp_x.iter().map(|x| model.score(x)).collect();
                    let correct = scores
                        .iter()
                        .zip(&exp_y)
                        .filter(|(s, &y)| super::argmax(s) == y)
                        .count();
                    let auc = compute_auc(&scores, &exp_y, classes.len())?;
                    if !auc.skipped.is_empty() {
                        let names: Vec<&str> = auc.skipped.iter().map(|&c| classes[c].as_str()).collect();
                        flags.insert(format!("AUC skipped classes absent from exploration data: {}", names.join(", ")));
                    }
                    Ok(CycleResult {
                        cv: fold_acc / config.folds as f64,
                        exp: accuracy(correct, exp_x.len()),
                        auc: auc.auc,
                        flags: flags.into_iter().collect(),
                    })
                })
                .collect::<Result<Vec<_>>>();
            let finished = done.fetch_add(1, Ordering::SeqCst) + 1;
            if let Some(p) = progress {
                p(finished, config.cycles);
            }
            row
        })
        .collect::<Result<_>>()?;

    let rows = kinds
        .iter()
        .enumerate()
        .map(|(k, kind)| {
            let results: Vec<&CycleResult> = per_cycle.iter().map(|c| &c[k]).collect();
            let cv: Vec<f64> = results.iter().map(|r| r.cv).collect();
            let exp: Vec<f64> = results.iter().map(|r| r.exp).collect();
            let aucs: Vec<f64> = results.iter().filter_map(|r| r.auc).collect();
            let mut flags: BTreeSet<String> = results.iter().flat_map(|r| r.flags.iter().cloned()).collect();
            if exp.iter().any(|&e| e != exp[0]) {
                flags.insert("exploration accuracy varies across cycles".into());
            }
            let (cv_mean, cv_std) = mean_std(&cv);
            let (exp_mean, exp_std) = mean_std(&exp);
            ModelRow {
                model: kind.short_name().to_string(),
                classifier: kind.clone(),
                cv_mean_acc: cv_mean,
                cv_std_acc: cv_std,
                exp_mean_acc: exp_mean,
                exp_std_acc: exp_std,
                best_auc: aucs.iter().copied().reduce(f64::max),
                worst_auc: aucs.iter().copied().reduce(f64::min),
                flags: flags.into_iter().collect(),
            }
        })
        .collect();

    Ok(EvalReport {
        train_name: config.train_name.clone(),
        exploration_name: config.exploration_name.clone(),
        cycles: config.cycles,
        folds: config.folds,
        master_seed: config.master_seed,
        rows,
    })
}

/// Mean and population standard deviation.
fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_balanced() {
        let labels: Vec<usize> = (0..23).map(|i| i % 3).collect();
        let folds = stratified_folds(&labels, 3, 5, 9);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn separable_fixture_is_perfect() {
        let d = super::super::tests::separable();
        let report = monte_carlo_cv(&EvalConfig::new(3, 5, 1), &d, &d, &ClassifierKind::defaults(), None).unwrap();
        for row in &report.rows {
            assert_eq!(row.cv_mean_acc, 1.0, "{}", row.model);
            assert_eq!(row.exp_mean_acc, 1.0, "{}", row.model);
            assert_eq!(row.cv_std_acc, 0.0);
            assert_eq!(row.best_auc, Some(1.0));
        }
    }

    #[test]
    fn infeasible_folds_rejected() {
        let d = super::super::tests::separable();
        let err = monte_carlo_cv(&EvalConfig::new(1, 6, 1), &d, &d, &[ClassifierKind::Lda], None);
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn progress_reaches_total() {
        let d = super::super::tests::separable();
        let seen = AtomicUsize::new(0);
        let cb = |done: usize, total: usize| {
            assert!(done <= total);
            seen.fetch_max(done, Ordering::SeqCst);
        };
        monte_carlo_cv(&EvalConfig::new(4, 2, 0), &d, &d, &[ClassifierKind::KNN], Some(&cb)).unwrap();
        assert_eq!(seen.load(Ordering::SeqCst), 4);
    }
}
