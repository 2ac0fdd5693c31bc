use std::collections::HashMap;

use rand::Rng;

use super::PvError;
use crate::corpus::TaggedDocument;

/// Exponent applied to unigram counts for the negative-sampling noise law.
pub const NOISE_EXPONENT: f64 = 0.75;

/// Token table with dense indices, ordered by descending count then token.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    total_count: u64,
    noise_cdf: Vec<f64>,
}

impl Vocabulary {
    /// Keeps tokens occurring at least `min_count` times across `docs`.
    pub fn build(docs: &[TaggedDocument], min_count: u64) -> Result<Self, PvError> {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for doc in docs {
            for t in &doc.tokens {
                *counts.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .map(|(t, c)| (t.to_string(), c))
            .collect();
        if kept.is_empty() {
            return Err(PvError::EmptyVocabulary);
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(Self::from_entries(kept))
    }

    /// Rebuilds a vocabulary from `(token, count)` pairs in index order.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Self {
        let (tokens, counts): (Vec<String>, Vec<u64>) = entries.into_iter().unzip();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let total_count = counts.iter().sum();
        let noise_cdf = noise_cdf(&counts);
        Vocabulary {
            tokens,
            counts,
            index,
            total_count,
            noise_cdf,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    pub fn noise_cdf(&self) -> &[f64] {
        &self.noise_cdf
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> {
        self.tokens.iter().map(String::as_str).zip(self.counts.iter().copied())
    }

    /// In-vocabulary indices of `tokens`, unknown tokens dropped.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.index_of(t.as_ref())).collect()
    }

    /// One draw from the noise distribution.
    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.noise_cdf
            .partition_point(|&c| c <= u)
            .min(self.tokens.len() - 1)
    }

    /// `k` noise draws, redrawing any that hit `target`.
    ///
    /// Requires at least two tokens so a non-target draw exists.
    pub fn sample_negatives<R: Rng + ?Sized>(&self, k: usize, target: usize, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(k);
        self.sample_negatives_into(k, target, rng, &mut out);
        out
    }

    pub(crate) fn sample_negatives_into<R: Rng + ?Sized>(
        &self,
        k: usize,
        target: usize,
        rng: &mut R,
        out: &mut Vec<usize>,
    ) {
        assert!(self.len() >= 2, "negative sampling needs at least two tokens");
        out.clear();
        while out.len() < k {
            let j = self.draw_noise(rng);
            if j != target {
                out.push(j);
            }
        }
    }
}

fn noise_cdf(counts: &[u64]) -> Vec<f64> {
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(NOISE_EXPONENT)).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc / total
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}
