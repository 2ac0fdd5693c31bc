use std::collections::{BTreeMap, HashMap, HashSet};

use super::EvalError;

/// Number of features kept when none is given.
pub const DEFAULT_TOP_K: usize = 1471;

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfVectorizer {
    pub features: Vec<String>,
    pub idf: Vec<f64>,
    index: HashMap<String, usize>,
}

impl TfidfVectorizer {
    /// Keeps the `top_k` tokens with the highest document frequency in
    /// `train_docs`, ties broken alphabetically. `idf = ln((1+N)/(1+df)) + 1`.
    pub fn fit<S: AsRef<str>>(train_docs: &[Vec<S>], top_k: usize) -> Result<Self, EvalError> {
        if top_k == 0 {
            return Err(EvalError::InvalidHyper("top_k must be positive".into()));
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in train_docs {
            let distinct: HashSet<&str> = doc.iter().map(AsRef::as_ref).collect();
            for t in distinct {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        if df.is_empty() {
            return Err(EvalError::Empty("tf-idf vocabulary"));
        }
        let mut ranked: Vec<(&str, usize)> = df.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(top_k);
        let n = train_docs.len() as f64;
        let features: Vec<String> = ranked.iter().map(|(t, _)| t.to_string()).collect();
        let idf = ranked.iter().map(|&(_, df)| ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0).collect();
        let index = features.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(TfidfVectorizer { features, idf, index })
    }

    /// Raw counts times idf, L2-normalized; unknown tokens are ignored.
    pub fn transform<S: AsRef<str>>(&self, doc: &[S]) -> Vec<f64> {
        let mut v = vec![0.0; self.features.len()];
        for t in doc {
            if let Some(&i) = self.index.get(t.as_ref()) {
                v[i] += 1.0;
            }
        }
        for (x, idf) in v.iter_mut().zip(&self.idf) {
            *x *= idf;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// Fits on `train_docs` and transforms both sets.
pub fn tfidf_vectorize<S: AsRef<str>>(
    train_docs: &[Vec<S>],
    test_docs: &[Vec<S>],
    top_k: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), EvalError> {
    let v = TfidfVectorizer::fit(train_docs, top_k)?;
    Ok((
        train_docs.iter().map(|d| v.transform(d)).collect(),
        test_docs.iter().map(|d| v.transform(d)).collect(),
    ))
}
