use serde::{Deserialize, Serialize};

use super::{Classifier, ClassifierTrainer, EvalError};
use crate::corpus::RoleLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogRegHyper {
    pub l2: f64,
    pub lr: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Rescale features to zero mean and unit variance over the training set.
    pub standardize: bool,
}

impl Default for LogRegHyper {
    fn default() -> Self {
        LogRegHyper {
            l2: 1e-4,
            lr: 0.5,
            tol: 1e-6,
            max_iters: 2000,
            standardize: true,
        }
    }
}

impl LogRegHyper {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidHyper(m.into()));
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be finite and nonnegative");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be finite and positive");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        Ok(())
    }
}

/// Multinomial logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    /// `C × d`, one row per entry of `classes`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub classes: Vec<RoleLabel>,
    pub hyper: LogRegHyper,
    /// Per-feature `(mean, scale)` applied before the linear map.
    pub scaling: Option<Vec<(f64, f64)>>,
    /// Objective value after each accepted step.
    pub loss_history: Vec<f64>,
}

/// Regularized cross-entropy over the dataset and its gradient with respect
/// to `weights` (`C × d`) and `bias`.
pub struct Problem<'a> {
    pub x: &'a [Vec<f64>],
    /// Class index of each row.
    pub y: &'a [usize],
    pub classes: usize,
    pub l2: f64,
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Mean cross-entropy plus `(l2 / 2)·‖W‖²`.
    pub fn loss(&self, weights: &[Vec<f64>], bias: &[f64]) -> f64 {
        let n = self.x.len() as f64;
        let mut total = 0.0;
        let mut logits = vec![0.0; self.classes];
        for (xi, &yi) in self.x.iter().zip(self.y) {
            compute_logits(weights, bias, xi, &mut logits);
            total += log_sum_exp(&logits) - logits[yi];
        }
        let reg: f64 = weights.iter().flatten().map(|w| w * w).sum();
        total / n + 0.5 * self.l2 * reg
    }

    /// `(loss, grad_weights, grad_bias)`.
    pub fn loss_and_gradient(&self, weights: &[Vec<f64>], bias: &[f64]) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
        let n = self.x.len() as f64;
        let d = self.dim();
        let mut gw = vec![vec![0.0; d]; self.classes];
        let mut gb = vec![0.0; self.classes];
        let mut total = 0.0;
        let mut p = vec![0.0; self.classes];
        for (xi, &yi) in self.x.iter().zip(self.y) {
            compute_logits(weights, bias, xi, &mut p);
            let lse = log_sum_exp(&p);
            total += lse - p[yi];
            for (c, pc) in p.iter_mut().enumerate() {
                let r = (*pc - lse).exp() - if c == yi { 1.0 } else { 0.0 };
                *pc = r;
                gb[c] += r / n;
                for (g, x) in gw[c].iter_mut().zip(xi) {
                    *g += r * x / n;
                }
            }
        }
        let mut reg = 0.0;
        for (gr, wr) in gw.iter_mut().zip(weights) {
            for (g, w) in gr.iter_mut().zip(wr) {
                *g += self.l2 * w;
                reg += w * w;
            }
        }
        (total / n + 0.5 * self.l2 * reg, gw, gb)
    }
}

fn compute_logits(weights: &[Vec<f64>], bias: &[f64], x: &[f64], out: &mut [f64]) {
    for ((o, w), b) in out.iter_mut().zip(weights).zip(bias) {
        *o = b + w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(v);
    v.iter().map(|x| (x - lse).exp()).collect()
}

/// Fits by full-batch gradient descent from zero. Each iteration starts at
/// step `lr` and halves it until the objective does not increase; training
/// stops once the gradient's largest entry is at most `tol`.
pub fn train_logreg(x: &[Vec<f64>], y: &[RoleLabel], hyper: &LogRegHyper) -> Result<LogRegModel, EvalError> {
    hyper.validate()?;
    if x.len() != y.len() {
        return Err(EvalError::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.is_empty() {
        return Err(EvalError::Empty("training set"));
    }
    let d = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != d) {
        return Err(EvalError::DimensionMismatch {
            expected: d,
            found: row.len(),
        });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(EvalError::NonFiniteFeature);
    }
    let mut classes: Vec<RoleLabel> = y.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(EvalError::SingleClass);
    }
    let y_idx: Vec<usize> = y
        .iter()
        .map(|l| classes.binary_search(l).expect("collected above"))
        .collect();

    let scaling = hyper.standardize.then(|| feature_scaling(x));
    let xs: Vec<Vec<f64>> = match &scaling {
        Some(s) => x.iter().map(|r| apply_scaling(s, r)).collect(),
        None => x.to_vec(),
    };
    let problem = Problem {
        x: &xs,
        y: &y_idx,
        classes: classes.len(),
        l2: hyper.l2,
    };
    let mut weights = vec![vec![0.0; d]; classes.len()];
    let mut bias = vec![0.0; classes.len()];
    let mut loss_history = Vec::new();
    for _ in 0..hyper.max_iters {
        let (loss, gw, gb) = problem.loss_and_gradient(&weights, &bias);
        let gmax = gw.iter().flatten().chain(&gb).fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax <= hyper.tol {
            break;
        }
        let mut step = hyper.lr;
        let mut accepted = false;
        while step > 1e-12 {
            let cand_w: Vec<Vec<f64>> = weights
                .iter()
                .zip(&gw)
                .map(|(w, g)| w.iter().zip(g).map(|(w, g)| w - step * g).collect())
                .collect();
            let cand_b: Vec<f64> = bias.iter().zip(&gb).map(|(b, g)| b - step * g).collect();
            let new_loss = problem.loss(&cand_w, &cand_b);
            if new_loss <= loss {
                weights = cand_w;
                bias = cand_b;
                loss_history.push(new_loss);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(LogRegModel {
        weights,
        bias,
        classes,
        hyper: hyper.clone(),
        scaling,
        loss_history,
    })
}

fn feature_scaling(x: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = x.len() as f64;
    (0..x[0].len())
        .map(|j| {
            let mean = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            (mean, if sd > 1e-12 { sd } else { 1.0 })
        })
        .collect()
}

fn apply_scaling(s: &[(f64, f64)], x: &[f64]) -> Vec<f64> {
    x.iter().zip(s).map(|(v, (m, sd))| (v - m) / sd).collect()
}

impl LogRegModel {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        if x.len() != self.dim() {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let scaled;
        let x = match &self.scaling {
            Some(s) => {
                scaled = apply_scaling(s, x);
                &scaled[..]
            }
            None => x,
        };
        let mut out = vec![0.0; self.classes.len()];
        compute_logits(&self.weights, &self.bias, x, &mut out);
        Ok(out)
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Most probable class; ties go to the earliest entry of `classes`.
    pub fn predict(&self, x: &[f64]) -> Result<RoleLabel, EvalError> {
        let logits = self.logits(x)?;
        let mut best = 0;
        for (i, &l) in logits.iter().enumerate() {
            if l > logits[best] {
                best = i;
            }
        }
        Ok(self.classes[best])
    }
}

impl Classifier for LogRegModel {
    fn predict(&self, x: &[f64]) -> Result<RoleLabel, EvalError> {
        LogRegModel::predict(self, x)
    }
}

impl ClassifierTrainer for LogRegHyper {
    type Model = LogRegModel;

    fn name(&self) -> &'static str {
        "logistic_regression"
    }

    fn fit(&self, x: &[Vec<f64>], y: &[RoleLabel]) -> Result<LogRegModel, EvalError> {
        train_logreg(x, y, self)
    }
}
