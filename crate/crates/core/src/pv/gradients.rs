use super::{EmbeddingModel, PvError};

/// Gradients of the negative-sampling loss for one positive pair.
#[derive(Debug, Clone, PartialEq)]
pub struct NegSamplingGradients {
    pub grad_h: Vec<f64>,
    pub grad_target: Vec<f64>,
    pub grad_negatives: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-log σ(u_w·h) - Σ_j log σ(-u_j·h)`.
pub fn negative_sampling_loss(h: &[f64], target: &[f64], negatives: &[&[f64]]) -> f64 {
    // ln σ(x) = -ln(1 + e^{-x}), evaluated stably.
    let log_sigmoid = |x: f64| -> f64 {
        if x >= 0.0 {
            -(-x).exp().ln_1p()
        } else {
            x - x.exp().ln_1p()
        }
    };
    -log_sigmoid(dot(target, h)) - negatives.iter().map(|u| log_sigmoid(-dot(u, h))).sum::<f64>()
}

/// Closed-form gradients of [`negative_sampling_loss`].
pub fn negative_sampling_gradients(
    h: &[f64],
    target: &[f64],
    negatives: &[&[f64]],
) -> NegSamplingGradients {
    let st = sigmoid(dot(target, h)) - 1.0;
    let mut grad_h: Vec<f64> = target.iter().map(|u| st * u).collect();
    let grad_target = h.iter().map(|x| st * x).collect();
    let grad_negatives = negatives
        .iter()
        .map(|u| {
            let sj = sigmoid(dot(u, h));
            for (g, uj) in grad_h.iter_mut().zip(u.iter()) {
                *g += sj * uj;
            }
            h.iter().map(|x| sj * x).collect()
        })
        .collect();
    NegSamplingGradients {
        grad_h,
        grad_target,
        grad_negatives,
    }
}

impl EmbeddingModel {
    /// Gradients for hidden vector `h` against the model's output rows.
    pub fn sgd_step_gradients(
        &self,
        h: &[f64],
        target_index: usize,
        negative_indices: &[usize],
    ) -> Result<NegSamplingGradients, PvError> {
        let v = self.vocab.len();
        if h.len() != self.dim() {
            return Err(PvError::IndexOutOfRange {
                index: h.len(),
                len: self.dim(),
            });
        }
        let row = |i: usize| -> Result<Vec<f64>, PvError> {
            if i >= v {
                return Err(PvError::IndexOutOfRange { index: i, len: v });
            }
            Ok(self.word_out.row(i).iter().map(|&x| f64::from(x)).collect())
        };
        let target = row(target_index)?;
        let mut negs = Vec::with_capacity(negative_indices.len());
        for &j in negative_indices {
            if j == target_index {
                return Err(PvError::NegativeIsTarget(j));
            }
            negs.push(row(j)?);
        }
        let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        Ok(negative_sampling_gradients(h, &target, &refs))
    }
}
