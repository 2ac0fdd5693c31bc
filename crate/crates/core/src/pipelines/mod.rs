//! Turning developer documents into expertise vectors.
//!
//! Repository and issue texts are embedded by training a paragraph-vector
//! model on the training developers and inferring vectors for the rest. API
//! vectors average the word vectors of a developer's imports. The combined
//! vector concatenates the three, optionally reduced by [`PcaModel`].

mod pca;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TaggedDocument;
use crate::pv::{EmbeddingModel, Hyperparams, PvError};

pub use pca::{pca_fit, PcaModel, RANK_TOLERANCE};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Pv(#[from] PvError),
    #[error("developer `{developer_id}` lacks {}", list(missing))]
    MissingSource {
        developer_id: String,
        missing: Vec<VectorSource>,
    },
    #[error("expected a vector of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("developer `{0}` is in both the training and test documents")]
    TagOverlap(String),
    #[error("vector for `{0}` is empty or has non-finite values")]
    InvalidVector(String),
    #[error("pca: {0}")]
    Pca(String),
}

fn list(sources: &[VectorSource]) -> String {
    sources.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VectorSource {
    Repos,
    Issues,
    #[serde(rename = "APIs")]
    Apis,
    #[serde(rename = "RIAs")]
    Rias,
    #[serde(rename = "RIAsPca")]
    RiasPca,
}

impl VectorSource {
    pub const ALL: [VectorSource; 5] = [
        VectorSource::Repos,
        VectorSource::Issues,
        VectorSource::Apis,
        VectorSource::Rias,
        VectorSource::RiasPca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VectorSource::Repos => "Repos",
            VectorSource::Issues => "Issues",
            VectorSource::Apis => "APIs",
            VectorSource::Rias => "RIAs",
            VectorSource::RiasPca => "RIAsPca",
        }
    }
}

impl fmt::Display for VectorSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VectorSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VectorSource::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown vector source `{s}`"))
    }
}

/// One developer's vector in one embedding space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertiseVector {
    pub developer_id: String,
    pub source: VectorSource,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl ExpertiseVector {
    pub fn new(developer_id: impl Into<String>, source: VectorSource, values: Vec<f64>) -> Result<Self, PipelineError> {
        let v = ExpertiseVector {
            developer_id: developer_id.into(),
            source,
            dim: values.len(),
            values,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn from_f32(developer_id: impl Into<String>, source: VectorSource, values: &[f32]) -> Result<Self, PipelineError> {
        Self::new(developer_id, source, values.iter().map(|&x| f64::from(x)).collect())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.dim == 0 || self.dim != self.values.len() || !self.values.iter().all(|x| x.is_finite()) {
            return Err(PipelineError::InvalidVector(self.developer_id.clone()));
        }
        Ok(())
    }
}

/// Output of [`embed_text_source`].
#[derive(Debug, Clone)]
pub struct TextEmbedding {
    pub model: EmbeddingModel,
    pub train: Vec<ExpertiseVector>,
    pub test: Vec<ExpertiseVector>,
    /// Test developers with no in-vocabulary token, hence no vector.
    pub skipped: Vec<String>,
}

/// Seed for inferring the vector of `tag`, independent of processing order.
pub fn infer_seed(seed: u64, tag: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    seed.to_le_bytes()
        .iter()
        .chain(tag.as_bytes())
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Vectors for documents the model was not trained on. Documents without
/// any known token are returned by tag in the second list.
///
/// `infer_epochs` defaults to the model's training epoch count.
pub fn infer_vectors(
    model: &EmbeddingModel,
    docs: &[TaggedDocument],
    source: VectorSource,
    infer_epochs: Option<usize>,
) -> Result<(Vec<ExpertiseVector>, Vec<String>), PipelineError> {
    let hyper = model.hyper();
    let epochs = infer_epochs.unwrap_or(hyper.epochs);
    let mut out = Vec::with_capacity(docs.len());
    let mut skipped = Vec::new();
    for d in docs {
        let mut rng = ChaCha8Rng::seed_from_u64(infer_seed(hyper.seed, &d.tag));
        match model.infer(&d.tokens, epochs, &mut rng) {
            Ok(v) => out.push(ExpertiseVector::from_f32(&d.tag, source, &v)?),
            Err(PvError::OovOnly) => {
                log::warn!("{source}: no known token for `{}`; skipped", d.tag);
                skipped.push(d.tag.clone());
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((out, skipped))
}

/// Trains on `train_docs` and infers vectors for `test_docs`.
///
/// `infer_epochs` defaults to the training epoch count.
pub fn embed_text_source(
    train_docs: &[TaggedDocument],
    test_docs: &[TaggedDocument],
    hyper: &Hyperparams,
    source: VectorSource,
    infer_epochs: Option<usize>,
) -> Result<TextEmbedding, PipelineError> {
    let train_tags: std::collections::HashSet<&str> = train_docs.iter().map(|d| d.tag.as_str()).collect();
    if let Some(d) = test_docs.iter().find(|d| train_tags.contains(d.tag.as_str())) {
        return Err(PipelineError::TagOverlap(d.tag.clone()));
    }
    let model = EmbeddingModel::train(train_docs, hyper)?;
    let train = train_docs
        .iter()
        .map(|d| ExpertiseVector::from_f32(&d.tag, source, model.doc_vector(&d.tag).expect("trained tag")))
        .collect::<Result<Vec<_>, _>>()?;
    let (test, skipped) = infer_vectors(&model, test_docs, source, infer_epochs)?;
    Ok(TextEmbedding {
        model,
        train,
        test,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApiWeighting {
    /// Each import weighted by how often the developer used it.
    #[default]
    Frequency,
    /// Every distinct import counts once.
    Unweighted,
}

/// Average of the word vectors of in-vocabulary imports.
pub fn average_api_vectors<'a, F>(
    lookup: F,
    counts: &BTreeMap<String, u64>,
    weighting: ApiWeighting,
) -> Result<Vec<f64>, PvError>
where
    F: Fn(&str) -> Option<&'a [f32]>,
{
    let mut sum: Vec<f64> = Vec::new();
    let mut total = 0.0f64;
    for (name, &count) in counts {
        if count == 0 {
            continue;
        }
        let Some(row) = lookup(name) else { continue };
        let w = match weighting {
            ApiWeighting::Frequency => count as f64,
            ApiWeighting::Unweighted => 1.0,
        };
        if sum.is_empty() {
            sum = vec![0.0; row.len()];
        }
        for (s, &x) in sum.iter_mut().zip(row) {
            *s += w * f64::from(x);
        }
        total += w;
    }
    if total == 0.0 {
        return Err(PvError::OovOnly);
    }
    sum.iter_mut().for_each(|s| *s /= total);
    Ok(sum)
}

/// API expertise vector from the model's word vectors. Imports unseen by the
/// model are ignored.
pub fn embed_apis(
    model: &EmbeddingModel,
    developer_id: &str,
    counts: &BTreeMap<String, u64>,
    weighting: ApiWeighting,
) -> Result<ExpertiseVector, PipelineError> {
    let values = average_api_vectors(|a| model.word_vector(a), counts, weighting)?;
    ExpertiseVector::new(developer_id, VectorSource::Apis, values)
}

/// API vectors for every developer in `counts`. With `direct_fetch`, a
/// developer the model was trained on gets their trained document vector
/// instead of the average. Developers with no known import are returned in
/// the second list.
pub fn embed_api_source(
    model: &EmbeddingModel,
    counts: &BTreeMap<String, BTreeMap<String, u64>>,
    weighting: ApiWeighting,
    direct_fetch: bool,
) -> Result<(Vec<ExpertiseVector>, Vec<String>), PipelineError> {
    let mut out = Vec::with_capacity(counts.len());
    let mut skipped = Vec::new();
    for (dev, c) in counts {
        if direct_fetch {
            if let Some(v) = model.doc_vector(dev) {
                out.push(ExpertiseVector::from_f32(dev, VectorSource::Apis, v)?);
                continue;
            }
        }
        match embed_apis(model, dev, c, weighting) {
            Ok(v) => out.push(v),
            Err(PipelineError::Pv(PvError::OovOnly)) => {
                log::warn!("APIs: no known import for `{dev}`; skipped");
                skipped.push(dev.clone());
            }
            Err(e) => return Err(e),
        }
    }
    Ok((out, skipped))
}

/// Joins Repos, Issues and APIs vectors in that order.
pub fn concat_rias(
    developer_id: &str,
    repos: Option<&ExpertiseVector>,
    issues: Option<&ExpertiseVector>,
    apis: Option<&ExpertiseVector>,
) -> Result<ExpertiseVector, PipelineError> {
    let parts = [(VectorSource::Repos, repos), (VectorSource::Issues, issues), (VectorSource::Apis, apis)];
    let missing: Vec<VectorSource> = parts.iter().filter(|(_, v)| v.is_none()).map(|(s, _)| *s).collect();
    if !missing.is_empty() {
        return Err(PipelineError::MissingSource {
            developer_id: developer_id.to_string(),
            missing,
        });
    }
    let mut values = Vec::new();
    for (source, v) in parts {
        let v = v.expect("checked above");
        if v.source != source {
            return Err(PipelineError::InvalidVector(format!(
                "{developer_id} ({} given where {source} expected)",
                v.source
            )));
        }
        values.extend_from_slice(&v.values);
    }
    ExpertiseVector::new(developer_id, VectorSource::Rias, values)
}
