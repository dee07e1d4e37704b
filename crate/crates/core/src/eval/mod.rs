//! Classifier ensemble and the Monte-Carlo cross-validation harness.

mod auc;
mod bayes;
mod cv;
mod knn;
mod lda;
mod logistic;
mod report;
mod ridge;
mod tree;

pub use auc::{compute_auc, AucOutcome};
pub use cv::{monte_carlo_cv, stratified_folds, validate_eval, EvalConfig, Progress};
pub use lda::lda_coefficients;
pub use report::{render_report, EvalReport, ModelRow, ReportFormat};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::NormalizedDataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierKind {
    DecisionTree { max_depth: usize, min_leaf: usize },
    Knn { k: usize },
    GaussianNb,
    Lda,
    /// Multinomial; objective is mean cross-entropy + l2 / (2n) * |W|^2.
    LogisticRegression { l2: f64, iterations: usize, learning_rate: f64 },
    Ridge { alpha: f64 },
}

impl ClassifierKind {
    pub const DECISION_TREE: ClassifierKind = ClassifierKind::DecisionTree { max_depth: 8, min_leaf: 1 };
    pub const KNN: ClassifierKind = ClassifierKind::Knn { k: 5 };
    pub const LOGISTIC_REGRESSION: ClassifierKind = ClassifierKind::LogisticRegression {
        l2: 0.01,
        iterations: 500,
        learning_rate: 0.4,
    };
    pub const RIDGE: ClassifierKind = ClassifierKind::Ridge { alpha: 1.0 };

    /// The six classifiers with default hyperparameters, in report order.
    pub fn defaults() -> Vec<ClassifierKind> {
        vec![
            Self::DECISION_TREE,
            Self::KNN,
            ClassifierKind::Lda,
            Self::LOGISTIC_REGRESSION,
            Self::RIDGE,
            ClassifierKind::GaussianNb,
        ]
    }

    /// Short model name used in report tables.
    pub fn short_name(&self) -> &'static str {
        match self {
            ClassifierKind::DecisionTree { .. } => "DT",
            ClassifierKind::Knn { .. } => "KNN",
            ClassifierKind::GaussianNb => "NB",
            ClassifierKind::Lda => "LDA",
            ClassifierKind::LogisticRegression { .. } => "LR",
            ClassifierKind::Ridge { .. } => "Ridge",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ClassifierKind::DecisionTree { max_depth, min_leaf } => max_depth >= 1 && min_leaf >= 1,
            ClassifierKind::Knn { k } => k >= 1,
            ClassifierKind::GaussianNb | ClassifierKind::Lda => true,
            ClassifierKind::LogisticRegression { l2, iterations, learning_rate } => {
                l2.is_finite() && l2 >= 0.0 && iterations >= 1 && learning_rate.is_finite() && learning_rate > 0.0
            }
            ClassifierKind::Ridge { alpha } => alpha.is_finite() && alpha >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("hyperparameters out of range for {}", self.short_name())))
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Accepts the short table names and the snake_case kind names, yielding
/// default hyperparameters.
impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "dt" | "decision_tree" => Self::DECISION_TREE,
            "knn" => Self::KNN,
            "nb" | "gaussian_nb" => ClassifierKind::GaussianNb,
            "lda" => ClassifierKind::Lda,
            "lr" | "logistic_regression" => Self::LOGISTIC_REGRESSION,
            "ridge" => Self::RIDGE,
            other => return Err(Error::config(format!("unknown classifier {other:?}"))),
        })
    }
}

/// Training vectors with labels as palette indices.
pub(crate) struct Samples<'a> {
    pub x: Vec<&'a [f64]>,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

impl Samples<'_> {
    pub fn n_features(&self) -> usize {
        self.x.first().map_or(0, |v| v.len())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.y {
            counts[l] += 1;
        }
        counts
    }
}

enum Model {
    Tree(tree::Tree),
    Knn(knn::Knn),
    Nb(bayes::GaussianNb),
    Lda(lda::Lda),
    Logistic(logistic::Logistic),
    Ridge(ridge::Ridge),
}

pub struct TrainedModel {
    kind: ClassifierKind,
    classes: Vec<String>,
    model: Model,
    flags: Vec<String>,
}

impl fmt::Debug for TrainedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrainedModel")
            .field("kind", &self.kind)
            .field("classes", &self.classes)
            .field("flags", &self.flags)
            .finish_non_exhaustive()
    }
}

impl TrainedModel {
    pub fn kind(&self) -> &ClassifierKind {
        &self.kind
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Notes about the fit, e.g. a regularized fallback.
    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    /// Per-class scores in palette order, summing to 1.
    pub fn score(&self, x: &[f64]) -> Vec<f64> {
        match &self.model {
            Model::Tree(m) => m.score(x),
            Model::Knn(m) => m.score(x),
            Model::Nb(m) => m.score(x),
            Model::Lda(m) => m.score(x),
            Model::Logistic(m) => m.score(x),
            Model::Ridge(m) => m.score(x),
        }
    }

    pub fn predict_index(&self, x: &[f64]) -> usize {
        argmax(&self.score(x))
    }

    pub fn predict(&self, x: &[f64]) -> &str {
        &self.classes[self.predict_index(x)]
    }
}

/// First index of the maximum; earlier classes win ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in v.iter().enumerate().skip(1) {
        if s > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|&s| (s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|s| s / z).collect()
}

pub(crate) fn fit(kind: &ClassifierKind, samples: &Samples, classes: Vec<String>) -> Result<TrainedModel> {
    kind.validate()?;
    let counts = samples.class_counts();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::Degenerate("training needs at least two classes".into()));
    }
    let mut flags = Vec::new();
    let model = match *kind {
        ClassifierKind::DecisionTree { max_depth, min_leaf } => {
            Model::Tree(tree::Tree::fit(samples, max_depth, min_leaf))
        }
        ClassifierKind::Knn { k } => Model::Knn(knn::Knn::fit(samples, k)),
        ClassifierKind::GaussianNb => Model::Nb(bayes::GaussianNb::fit(samples)),
        ClassifierKind::Lda => {
            let (m, regularized) = lda::Lda::fit(samples);
            if regularized {
                flags.push("singular within-class scatter; ridge-regularized".to_string());
            }
            Model::Lda(m)
        }
        ClassifierKind::LogisticRegression { l2, iterations, learning_rate } => {
            Model::Logistic(logistic::Logistic::fit(samples, l2, iterations, learning_rate))
        }
        ClassifierKind::Ridge { alpha } => Model::Ridge(ridge::Ridge::fit(samples, alpha)),
    };
    Ok(TrainedModel {
        kind: kind.clone(),
        classes,
        model,
        flags,
    })
}

pub(crate) fn samples_of(dataset: &NormalizedDataset) -> Samples<'_> {
    Samples {
        x: dataset.cases.iter().map(|c| c.values.as_slice()).collect(),
        y: dataset
            .cases
            .iter()
            .map(|c| dataset.class_index(&c.label).expect("palette covers labels"))
            .collect(),
        n_classes: dataset.class_palette.len(),
    }
}

pub fn train_classifier(kind: &ClassifierKind, dataset: &NormalizedDataset) -> Result<TrainedModel> {
    fit(kind, &samples_of(dataset), dataset.class_palette.clone())
}
