use std::collections::HashSet;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Algorithm, EmbeddingModel, Hyperparams, Matrix, PvError, Vocabulary};
use crate::corpus::TaggedDocument;

/// Matrix shared between training workers. Reads and writes are relaxed
/// atomics, so concurrent workers race on rows without synchronization.
struct SharedMatrix {
    cols: usize,
    data: Vec<AtomicU32>,
}

impl SharedMatrix {
    fn new(m: Matrix) -> Self {
        SharedMatrix {
            cols: m.cols(),
            data: m.as_slice().iter().map(|v| AtomicU32::new(v.to_bits())).collect(),
        }
    }

    fn into_matrix(self) -> Matrix {
        let rows = self.data.len() / self.cols.max(1);
        let data = self.data.into_iter().map(|a| f32::from_bits(a.into_inner())).collect();
        Matrix::from_vec(rows, self.cols, data)
    }

    fn read_row(&self, r: usize, out: &mut [f32]) {
        let row = &self.data[r * self.cols..(r + 1) * self.cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn write_row(&self, r: usize, values: &[f32]) {
        let row = &self.data[r * self.cols..(r + 1) * self.cols];
        for (a, v) in row.iter().zip(values) {
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    /// `row += scale * delta`
    fn add_row(&self, r: usize, delta: &[f32], scale: f32) {
        let row = &self.data[r * self.cols..(r + 1) * self.cols];
        for (a, d) in row.iter().zip(delta) {
            let cur = f32::from_bits(a.load(Ordering::Relaxed));
            a.store((cur + scale * d).to_bits(), Ordering::Relaxed);
        }
    }
}

/// Output matrix access for the negative-sampling kernel; inference reads a
/// frozen matrix, training updates a shared one.
trait OutputRows {
    fn load(&self, r: usize, out: &mut [f32]);
    fn update(&self, r: usize, values: &[f32]);
    const TRAINABLE: bool;
}

impl OutputRows for SharedMatrix {
    fn load(&self, r: usize, out: &mut [f32]) {
        self.read_row(r, out);
    }
    fn update(&self, r: usize, values: &[f32]) {
        self.write_row(r, values);
    }
    const TRAINABLE: bool = true;
}

impl OutputRows for Matrix {
    fn load(&self, r: usize, out: &mut [f32]) {
        out.copy_from_slice(self.row(r));
    }
    fn update(&self, _: usize, _: &[f32]) {}
    const TRAINABLE: bool = false;
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Scratch {
    hidden: Vec<f32>,
    neu1e: Vec<f32>,
    row: Vec<f32>,
    negatives: Vec<usize>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Scratch {
            hidden: vec![0.0; d],
            neu1e: vec![0.0; d],
            row: vec![0.0; d],
            negatives: Vec::new(),
        }
    }
}

/// One descent step on the negative-sampling loss for hidden vector
/// `scratch.hidden` and word `target`. Accumulates `-alpha * dL/dh` into
/// `scratch.neu1e` and, when trainable, moves each output row by
/// `-alpha * dL/du`.
fn negative_sampling_step<O: OutputRows, R: Rng>(
    out: &O,
    vocab: &Vocabulary,
    target: usize,
    k: usize,
    alpha: f32,
    rng: &mut R,
    scratch: &mut Scratch,
) {
    vocab.sample_negatives_into(k, target, rng, &mut scratch.negatives);
    for i in 0..=k {
        let (word, label) = if i == 0 {
            (target, 1.0)
        } else {
            (scratch.negatives[i - 1], 0.0)
        };
        out.load(word, &mut scratch.row);
        let g = (label - sigmoid(dot(&scratch.row, &scratch.hidden))) * alpha;
        for (e, u) in scratch.neu1e.iter_mut().zip(&scratch.row) {
            *e += g * u;
        }
        if O::TRAINABLE {
            for (u, h) in scratch.row.iter_mut().zip(&scratch.hidden) {
                *u += g * h;
            }
            out.update(word, &scratch.row);
        }
    }
}

fn uniform_init<R: Rng>(rows: usize, d: usize, rng: &mut R) -> Matrix {
    let half = 0.5 / d as f32;
    let data = (0..rows * d).map(|_| rng.gen_range(-half..half)).collect();
    Matrix::from_vec(rows, d, data)
}

struct Trainer<'a> {
    hyper: &'a Hyperparams,
    vocab: &'a Vocabulary,
    word_in: SharedMatrix,
    word_out: SharedMatrix,
    docs: SharedMatrix,
    total_updates: u64,
    done: AtomicU64,
}

impl Trainer<'_> {
    fn alpha(&self) -> f32 {
        let done = self.done.fetch_add(1, Ordering::Relaxed);
        self.hyper.learning_rate(done as f64 / self.total_updates as f64) as f32
    }

    fn train_doc<R: Rng>(&self, doc: usize, words: &[usize], rng: &mut R, s: &mut Scratch) {
        let k = self.hyper.negative;
        let window = self.hyper.window;
        for t in 0..words.len() {
            let alpha = self.alpha();
            let lo = t.saturating_sub(window);
            let hi = (t + window + 1).min(words.len());
            match self.hyper.algorithm {
                Algorithm::Dm => {
                    self.docs.read_row(doc, &mut s.hidden);
                    let mut n = 1usize;
                    for c in (lo..hi).filter(|&c| c != t) {
                        self.word_in.read_row(words[c], &mut s.row);
                        for (h, w) in s.hidden.iter_mut().zip(&s.row) {
                            *h += w;
                        }
                        n += 1;
                    }
                    let inv = 1.0 / n as f32;
                    s.hidden.iter_mut().for_each(|h| *h *= inv);
                    s.neu1e.iter_mut().for_each(|e| *e = 0.0);
                    negative_sampling_step(&self.word_out, self.vocab, words[t], k, alpha, rng, s);
                    self.docs.add_row(doc, &s.neu1e, inv);
                    for c in (lo..hi).filter(|&c| c != t) {
                        self.word_in.add_row(words[c], &s.neu1e, inv);
                    }
                }
                Algorithm::Dbow => {
                    self.docs.read_row(doc, &mut s.hidden);
                    s.neu1e.iter_mut().for_each(|e| *e = 0.0);
                    negative_sampling_step(&self.word_out, self.vocab, words[t], k, alpha, rng, s);
                    self.docs.add_row(doc, &s.neu1e, 1.0);
                    if self.hyper.train_word_vectors {
                        for c in (lo..hi).filter(|&c| c != t) {
                            self.word_in.read_row(words[c], &mut s.hidden);
                            s.neu1e.iter_mut().for_each(|e| *e = 0.0);
                            negative_sampling_step(&self.word_out, self.vocab, words[t], k, alpha, rng, s);
                            self.word_in.add_row(words[c], &s.neu1e, 1.0);
                        }
                    }
                }
            }
        }
    }
}

impl EmbeddingModel {
    /// Trains a model on `docs`. With `workers == 1` the result is a pure
    /// function of the inputs; more workers update parameters concurrently
    /// without locks and are not reproducible.
    pub fn train(docs: &[TaggedDocument], hyper: &Hyperparams) -> Result<Self, PvError> {
        hyper.validate()?;
        let mut seen = HashSet::with_capacity(docs.len());
        for doc in docs {
            if !seen.insert(doc.tag.as_str()) {
                return Err(PvError::DuplicateTag(doc.tag.clone()));
            }
        }
        let vocab = Vocabulary::build(docs, hyper.min_count)?;
        let d = hyper.vector_size;
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let word_in = uniform_init(vocab.len(), d, &mut rng);
        let doc_init = uniform_init(docs.len(), d, &mut rng);
        let encoded: Vec<Vec<usize>> = docs.iter().map(|doc| vocab.encode(&doc.tokens)).collect();
        let positions: u64 = encoded.iter().map(|w| w.len() as u64).sum();

        let trainer = Trainer {
            hyper,
            vocab: &vocab,
            word_in: SharedMatrix::new(word_in),
            word_out: SharedMatrix::new(Matrix::zeros(vocab.len(), d)),
            docs: SharedMatrix::new(doc_init),
            total_updates: (positions * hyper.epochs as u64).max(1),
            done: AtomicU64::new(0),
        };

        if vocab.len() >= 2 {
            if hyper.workers == 1 {
                let mut scratch = Scratch::new(d);
                for _ in 0..hyper.epochs {
                    for (i, words) in encoded.iter().enumerate() {
                        trainer.train_doc(i, words, &mut rng, &mut scratch);
                    }
                }
            } else {
                std::thread::scope(|scope| {
                    for w in 0..hyper.workers {
                        let trainer = &trainer;
                        let encoded = &encoded;
                        let seed = hyper.seed.wrapping_add(1 + w as u64);
                        scope.spawn(move || {
                            let mut rng = ChaCha8Rng::seed_from_u64(seed);
                            let mut scratch = Scratch::new(d);
                            for _ in 0..hyper.epochs {
                                for (i, words) in encoded.iter().enumerate().skip(w).step_by(hyper.workers) {
                                    trainer.train_doc(i, words, &mut rng, &mut scratch);
                                }
                            }
                        });
                    }
                });
            }
        } else {
            log::warn!("vocabulary has a single token; skipping negative-sampling updates");
        }

        let Trainer {
            word_in,
            word_out,
            docs: doc_vecs,
            ..
        } = trainer;
        let model = EmbeddingModel::from_parts(
            hyper.clone(),
            vocab,
            word_in.into_matrix(),
            word_out.into_matrix(),
            doc_vecs.into_matrix(),
            docs.iter().map(|d| d.tag.clone()).collect(),
        )?;
        if !model.is_finite() {
            return Err(PvError::InvalidHyperparams(
                "training diverged to non-finite values; lower alpha_initial".into(),
            ));
        }
        Ok(model)
    }

    /// Vector for an unseen document. Out-of-vocabulary tokens are removed
    /// before `rng` is touched; the model is not modified.
    pub fn infer<S: AsRef<str>, R: Rng>(
        &self,
        tokens: &[S],
        infer_epochs: usize,
        rng: &mut R,
    ) -> Result<Vec<f32>, PvError> {
        let words = self.vocab.encode(tokens);
        if words.is_empty() {
            return Err(PvError::OovOnly);
        }
        let d = self.dim();
        let half = 0.5 / d as f32;
        let mut doc: Vec<f32> = (0..d).map(|_| rng.gen_range(-half..half)).collect();
        if self.vocab.len() < 2 || infer_epochs == 0 {
            return Ok(doc);
        }
        let total = (words.len() * infer_epochs) as f64;
        let k = self.hyper.negative;
        let window = self.hyper.window;
        let mut s = Scratch::new(d);
        let mut step = 0usize;
        for _ in 0..infer_epochs {
            for t in 0..words.len() {
                let alpha = self.hyper.learning_rate(step as f64 / total) as f32;
                step += 1;
                s.hidden.copy_from_slice(&doc);
                let mut n = 1usize;
                if self.hyper.algorithm == Algorithm::Dm {
                    let lo = t.saturating_sub(window);
                    let hi = (t + window + 1).min(words.len());
                    for c in (lo..hi).filter(|&c| c != t) {
                        for (h, w) in s.hidden.iter_mut().zip(self.word_in.row(words[c])) {
                            *h += w;
                        }
                        n += 1;
                    }
                    let inv = 1.0 / n as f32;
                    s.hidden.iter_mut().for_each(|h| *h *= inv);
                }
                s.neu1e.iter_mut().for_each(|e| *e = 0.0);
                negative_sampling_step(&self.word_out, &self.vocab, words[t], k, alpha, rng, &mut s);
                let inv = 1.0 / n as f32;
                for (x, e) in doc.iter_mut().zip(&s.neu1e) {
                    *x += inv * e;
                }
            }
        }
        Ok(doc)
    }
}
