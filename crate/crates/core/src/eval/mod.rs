//! Splits, classifiers, metrics and role-similarity analysis.

mod analysis;
mod logreg;
mod metrics;
mod split;
mod tfidf;

use serde::{Deserialize, Serialize};

use crate::corpus::RoleLabel;

pub use analysis::{inter_intra_matrix, InterIntraMatrix};
pub use logreg::{train_logreg, LogRegHyper, LogRegModel, Problem};
pub use metrics::{macro_weighted_metrics, ClassMetrics, EvalReport, Scores};
pub use split::{split, Split, SplitPlan, MIN_PER_CLASS};
pub use tfidf::{tfidf_vectorize, TfidfVectorizer, DEFAULT_TOP_K};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("role {role} has {count} member(s); stratified splits need at least {}", MIN_PER_CLASS)]
    TooFewPerClass { role: RoleLabel, count: usize },
    #[error("invalid split plan: {0}")]
    InvalidPlan(String),
    #[error("invalid classifier setting: {0}")]
    InvalidHyper(String),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("feature matrix contains a non-finite value")]
    NonFiniteFeature,
    #[error("expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label {0} is not among the evaluated classes")]
    UnknownLabel(RoleLabel),
    #[error("zero vector: {0}")]
    ZeroVector(String),
    #[error("empty {0}")]
    Empty(&'static str),
}

/// A fitted classifier over real vectors.
pub trait Classifier {
    fn predict(&self, x: &[f64]) -> Result<RoleLabel, EvalError>;

    fn predict_all(&self, xs: &[Vec<f64>]) -> Result<Vec<RoleLabel>, EvalError> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

/// Settings that fit a [`Classifier`] to labeled vectors.
pub trait ClassifierTrainer {
    type Model: Classifier;

    fn name(&self) -> &'static str;

    fn fit(&self, x: &[Vec<f64>], y: &[RoleLabel]) -> Result<Self::Model, EvalError>;
}

/// Predicts one fixed role for every input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityClassifier {
    pub label: RoleLabel,
}

impl Classifier for MajorityClassifier {
    fn predict(&self, _: &[f64]) -> Result<RoleLabel, EvalError> {
        Ok(self.label)
    }
}

/// The most frequent training role; ties go to the earliest role.
pub fn majority_baseline(train_labels: &[RoleLabel]) -> Result<MajorityClassifier, EvalError> {
    let mut counts = [0usize; RoleLabel::ALL.len()];
    for l in train_labels {
        counts[l.index()] += 1;
    }
    let best = (0..counts.len())
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
        .filter(|&i| counts[i] > 0)
        .ok_or(EvalError::Empty("training labels"))?;
    Ok(MajorityClassifier {
        label: RoleLabel::ALL[best],
    })
}

/// Fits on the training rows and scores predictions on the test rows over
/// every role present in either set.
pub fn fit_and_score<T: ClassifierTrainer>(
    trainer: &T,
    train_x: &[Vec<f64>],
    train_y: &[RoleLabel],
    test_x: &[Vec<f64>],
    test_y: &[RoleLabel],
) -> Result<(T::Model, EvalReport), EvalError> {
    let model = trainer.fit(train_x, train_y)?;
    let pred = model.predict_all(test_x)?;
    let report = macro_weighted_metrics(test_y, &pred, &present_classes(train_y, test_y))?;
    Ok((model, report))
}

/// Roles occurring in any of the given label lists, in role order.
pub fn present_classes(a: &[RoleLabel], b: &[RoleLabel]) -> Vec<RoleLabel> {
    let mut c: Vec<RoleLabel> = a.iter().chain(b).copied().collect();
    c.sort();
    c.dedup();
    c
}
