//! Labeled topic corpora with a known answer, for checking that embeddings
//! and classifiers recover structure that was planted on purpose.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{RoleLabel, TaggedDocument};

#[derive(Debug, Clone, PartialEq)]
pub struct TopicCorpusSpec {
    pub topics: usize,
    pub docs_per_topic: usize,
    pub doc_len: usize,
    pub vocab_size: usize,
    /// Share of tokens drawn from the noise words common to every topic.
    pub noise_share: f64,
    pub seed: u64,
}

impl Default for TopicCorpusSpec {
    fn default() -> Self {
        TopicCorpusSpec {
            topics: 3,
            docs_per_topic: 60,
            doc_len: 100,
            vocab_size: 300,
            noise_share: 0.1,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicCorpus {
    pub docs: Vec<TaggedDocument>,
    pub labels: Vec<RoleLabel>,
}

impl TopicCorpus {
    /// Same documents with the labels permuted, so they carry no signal.
    pub fn shuffled_labels(&self, seed: u64) -> TopicCorpus {
        let mut labels = self.labels.clone();
        labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        TopicCorpus {
            docs: self.docs.clone(),
            labels,
        }
    }
}

/// Generates `topics × docs_per_topic` documents. Noise words take a tenth of
/// the vocabulary (rounded) and the rest is split evenly between topics, so
/// topic vocabularies are disjoint. Topic `t` is labeled with the `t`-th role.
pub fn topic_corpus(spec: &TopicCorpusSpec) -> TopicCorpus {
    assert!(
        (1..=RoleLabel::ALL.len()).contains(&spec.topics),
        "topics must be between 1 and {}",
        RoleLabel::ALL.len()
    );
    let noise_words = ((spec.vocab_size as f64) * 0.1).round().max(1.0) as usize;
    let per_topic = (spec.vocab_size - noise_words) / spec.topics;
    assert!(per_topic > 0, "vocabulary too small for {} topics", spec.topics);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut docs = Vec::with_capacity(spec.topics * spec.docs_per_topic);
    let mut labels = Vec::with_capacity(docs.capacity());
    for topic in 0..spec.topics {
        for i in 0..spec.docs_per_topic {
            let tokens = (0..spec.doc_len)
                .map(|_| {
                    if rng.gen_bool(spec.noise_share) {
                        format!("noise{}", rng.gen_range(0..noise_words))
                    } else {
                        format!("topic{topic}w{}", rng.gen_range(0..per_topic))
                    }
                })
                .collect();
            docs.push(TaggedDocument::new(format!("t{topic}d{i:03}"), tokens));
            labels.push(RoleLabel::ALL[topic]);
        }
    }
    TopicCorpus { docs, labels }
}
