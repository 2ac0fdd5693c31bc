//! Paragraph-vector embeddings trained with negative sampling.
//!
//! Two training modes are supported. In distributed memory (DM) the mean of
//! the document vector and the surrounding word vectors predicts each word.
//! In distributed bag of words (DBOW) the document vector alone predicts
//! each of its words; word vectors can optionally be trained alongside with
//! skip-gram updates so they are usable afterwards. New documents get
//! vectors through [`EmbeddingModel::infer`], which optimizes a fresh
//! document vector against the frozen word and output matrices.

mod gradients;
mod io;
mod train;
mod vocab;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use gradients::{negative_sampling_gradients, negative_sampling_loss, NegSamplingGradients};
pub use io::{read_container, write_container, Container, FORMAT_VERSION, MAGIC};
pub use vocab::{Vocabulary, NOISE_EXPONENT};

#[derive(Debug, thiserror::Error)]
pub enum PvError {
    #[error("no token reaches min_count")]
    EmptyVocabulary,
    #[error("duplicate document tag `{0}`")]
    DuplicateTag(String),
    #[error("every token is out of vocabulary")]
    OovOnly,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparams(String),
    #[error("index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("negative sample equals the target index {0}")]
    NegativeIsTarget(usize),
    #[error("model format version {found} is not supported (expected {expected})")]
    FormatVersionMismatch { found: u16, expected: u16 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "DM")]
    Dm,
    #[serde(rename = "DBOW")]
    Dbow,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Dm => "DM",
            Algorithm::Dbow => "DBOW",
        })
    }
}

impl FromStr for Algorithm {
    type Err = PvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "DM" => Ok(Algorithm::Dm),
            "DBOW" => Ok(Algorithm::Dbow),
            _ => Err(PvError::InvalidHyperparams(format!("unknown algorithm `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    pub vector_size: usize,
    pub window: usize,
    pub min_count: u64,
    pub algorithm: Algorithm,
    pub negative: usize,
    pub epochs: usize,
    pub alpha_initial: f64,
    pub alpha_final: f64,
    pub seed: u64,
    pub workers: usize,
    /// DBOW only: interleave skip-gram updates so word vectors get trained.
    pub train_word_vectors: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            vector_size: 100,
            window: 5,
            min_count: 5,
            algorithm: Algorithm::Dm,
            negative: 5,
            epochs: 10,
            alpha_initial: 0.025,
            alpha_final: 1e-4,
            seed: 1,
            workers: 1,
            train_word_vectors: false,
        }
    }
}

impl Hyperparams {
    pub fn repos() -> Self {
        Hyperparams {
            vector_size: 230,
            window: 5,
            min_count: 5,
            algorithm: Algorithm::Dm,
            negative: 5,
            epochs: 15,
            ..Default::default()
        }
    }

    pub fn issues() -> Self {
        Hyperparams {
            vector_size: 150,
            window: 5,
            min_count: 5,
            algorithm: Algorithm::Dm,
            negative: 5,
            epochs: 20,
            ..Default::default()
        }
    }

    pub fn apis() -> Self {
        Hyperparams {
            vector_size: 200,
            window: 30,
            min_count: 5,
            algorithm: Algorithm::Dbow,
            negative: 20,
            epochs: 10,
            train_word_vectors: true,
            ..Default::default()
        }
    }

    /// Checks every invariant, naming the offending field.
    pub fn validate(&self) -> Result<(), PvError> {
        let bad = |m: &str| Err(PvError::InvalidHyperparams(m.to_string()));
        if self.vector_size < 2 {
            return bad("vector_size must be at least 2");
        }
        if self.window == 0 {
            return bad("window must be positive");
        }
        if self.min_count == 0 {
            return bad("min_count must be positive");
        }
        if self.negative == 0 {
            return bad("negative must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be positive");
        }
        if !(self.alpha_initial.is_finite() && self.alpha_final.is_finite()) || self.alpha_final <= 0.0 {
            return bad("alpha_initial and alpha_final must be finite and positive");
        }
        if self.alpha_final >= self.alpha_initial {
            return bad("alpha_final must be below alpha_initial");
        }
        Ok(())
    }

    /// Learning rate after `fraction` of all updates, decaying linearly.
    pub fn learning_rate(&self, fraction: f64) -> f64 {
        let f = fraction.clamp(0.0, 1.0);
        self.alpha_initial + f * (self.alpha_final - self.alpha_initial)
    }
}

/// Dense row-major `f32` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix shape mismatch");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A trained paragraph-vector model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    hyper: Hyperparams,
    vocab: Vocabulary,
    word_in: Matrix,
    word_out: Matrix,
    docs: Matrix,
    tags: Vec<String>,
    tag_index: HashMap<String, usize>,
}

impl EmbeddingModel {
    /// Assembles a model from its parts, checking shapes and tag uniqueness.
    pub fn from_parts(
        hyper: Hyperparams,
        vocab: Vocabulary,
        word_in: Matrix,
        word_out: Matrix,
        docs: Matrix,
        tags: Vec<String>,
    ) -> Result<Self, PvError> {
        let d = hyper.vector_size;
        let v = vocab.len();
        if word_in.rows() != v || word_out.rows() != v || docs.rows() != tags.len() {
            return Err(PvError::CorruptModel("matrix row counts disagree with vocab/tags".into()));
        }
        if word_in.cols() != d || word_out.cols() != d || docs.cols() != d {
            return Err(PvError::CorruptModel("matrix width differs from vector_size".into()));
        }
        let mut tag_index = HashMap::with_capacity(tags.len());
        for (i, t) in tags.iter().enumerate() {
            if tag_index.insert(t.clone(), i).is_some() {
                return Err(PvError::DuplicateTag(t.clone()));
            }
        }
        Ok(EmbeddingModel {
            hyper,
            vocab,
            word_in,
            word_out,
            docs,
            tags,
            tag_index,
        })
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.hyper.vector_size
    }

    pub fn word_in(&self) -> &Matrix {
        &self.word_in
    }

    pub fn word_out(&self) -> &Matrix {
        &self.word_out
    }

    pub fn docs(&self) -> &Matrix {
        &self.docs
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    /// Trained vector of a document seen during training.
    pub fn doc_vector(&self, tag: &str) -> Option<&[f32]> {
        self.tag_index.get(tag).map(|&i| self.docs.row(i))
    }

    /// Input vector of an in-vocabulary word.
    pub fn word_vector(&self, token: &str) -> Option<&[f32]> {
        self.vocab.index_of(token).map(|i| self.word_in.row(i))
    }

    pub fn is_finite(&self) -> bool {
        self.word_in.is_finite() && self.word_out.is_finite() && self.docs.is_finite()
    }
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        dot += f64::from(x) * f64::from(y);
        na += f64::from(x) * f64::from(x);
        nb += f64::from(y) * f64::from(y);
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}
