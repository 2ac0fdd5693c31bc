use std::path::Path;

use nalgebra::DMatrix;
use serde_json::json;

use super::PipelineError;
use crate::pv::{read_container, write_container, Container, Matrix, PvError};

/// Components whose variance falls below this are reported as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

const PCA_KIND: &str = "pca";

/// Linear projection onto the leading principal directions of a fit set.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` rows of length `D`, orthonormal, by decreasing variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

/// Fits `k` components to the rows of `vectors`.
///
/// `k` may reach `D` even when the data has lower rank; the trailing
/// directions then complete an orthonormal basis and a warning is logged.
pub fn pca_fit(vectors: &[Vec<f64>], k: usize) -> Result<PcaModel, PipelineError> {
    let n = vectors.len();
    if n < 2 {
        return Err(PipelineError::Pca(format!("need at least 2 vectors, got {n}")));
    }
    let d = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != d) {
        return Err(PipelineError::DimensionMismatch {
            expected: d,
            found: v.len(),
        });
    }
    if k == 0 || k > d {
        return Err(PipelineError::Pca(format!("k must be in 1..={d}, got {k}")));
    }
    let mut mean = vec![0.0; d];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| vectors[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = cov.symmetric_eigen();

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &c in order.iter().take(k) {
        let mut row: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
        // Fix the sign so the largest-magnitude entry is positive.
        let pivot = row
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            row.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(row);
        explained_variance.push(eig.eigenvalues[c].max(0.0));
    }
    if explained_variance[k - 1] < RANK_TOLERANCE {
        log::warn!("pca: component {k} explains no variance; the data has rank below {k}");
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.explained_variance.last().is_some_and(|&v| v < RANK_TOLERANCE)
    }

    /// `components · (v − mean)`.
    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>, PipelineError> {
        if v.len() != self.input_dim() {
            return Err(PipelineError::DimensionMismatch {
                expected: self.input_dim(),
                found: v.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(v).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
            .collect())
    }

    /// `mean + componentsᵀ · z`.
    pub fn inverse_transform(&self, z: &[f64]) -> Result<Vec<f64>, PipelineError> {
        if z.len() != self.output_dim() {
            return Err(PipelineError::DimensionMismatch {
                expected: self.output_dim(),
                found: z.len(),
            });
        }
        let mut out = self.mean.clone();
        for (c, &w) in self.components.iter().zip(z) {
            for (o, x) in out.iter_mut().zip(c) {
                *o += w * x;
            }
        }
        Ok(out)
    }

    /// Stored with single-precision matrices; `explained_variance` keeps
    /// full precision in the header.
    pub fn to_container(&self) -> Container {
        let d = self.input_dim();
        let to_f32 = |xs: &[f64]| xs.iter().map(|&x| x as f32).collect::<Vec<f32>>();
        let components: Vec<f32> = self.components.iter().flat_map(|c| to_f32(c)).collect();
        Container {
            header: json!({
                "kind": PCA_KIND,
                "explained_variance": self.explained_variance,
            }),
            matrices: vec![
                Matrix::from_vec(1, d, to_f32(&self.mean)),
                Matrix::from_vec(self.output_dim(), d, components),
            ],
        }
    }

    pub fn from_container(c: Container) -> Result<Self, PvError> {
        if c.kind() != Some(PCA_KIND) {
            return Err(PvError::CorruptModel(format!("expected a `{PCA_KIND}` model, found {:?}", c.kind())));
        }
        let explained_variance: Vec<f64> = c
            .header
            .get("explained_variance")
            .cloned()
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| PvError::CorruptModel(format!("explained_variance: {e}")))?
            .ok_or_else(|| PvError::CorruptModel("missing explained_variance".into()))?;
        let [mean, comps]: [Matrix; 2] = c
            .matrices
            .try_into()
            .map_err(|_| PvError::CorruptModel("expected two matrices".into()))?;
        if mean.rows() != 1 || comps.cols() != mean.cols() || comps.rows() != explained_variance.len() {
            return Err(PvError::CorruptModel("pca matrix shapes disagree".into()));
        }
        let widen = |xs: &[f32]| xs.iter().map(|&x| f64::from(x)).collect::<Vec<f64>>();
        Ok(PcaModel {
            mean: widen(mean.row(0)),
            components: (0..comps.rows()).map(|r| widen(comps.row(r))).collect(),
            explained_variance,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), PvError> {
        write_container(path, &self.to_container())
    }

    pub fn load(path: &Path) -> Result<Self, PvError> {
        Self::from_container(read_container(path)?)
    }
}
