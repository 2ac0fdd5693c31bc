use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::RoleLabel;

/// Mean cosine of each role's members to each role's centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterIntraMatrix {
    pub roles: Vec<RoleLabel>,
    /// `values[r][c]`: members of `roles[r]` against the centroid of `roles[c]`.
    pub values: Vec<Vec<f64>>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn inter_intra_matrix(groups: &[(RoleLabel, Vec<Vec<f64>>)]) -> Result<InterIntraMatrix, EvalError> {
    let mut centroids = Vec::with_capacity(groups.len());
    for (role, members) in groups {
        let Some(first) = members.first() else {
            return Err(EvalError::Empty("role group"));
        };
        let d = first.len();
        let mut c = vec![0.0; d];
        for m in members {
            if m.len() != d {
                return Err(EvalError::DimensionMismatch { expected: d, found: m.len() });
            }
            if norm(m) == 0.0 {
                return Err(EvalError::ZeroVector(format!("member of {role}")));
            }
            for (a, x) in c.iter_mut().zip(m) {
                *a += x;
            }
        }
        c.iter_mut().for_each(|a| *a /= members.len() as f64);
        let n = norm(&c);
        if n == 0.0 {
            return Err(EvalError::ZeroVector(format!("centroid of {role}")));
        }
        centroids.push((c, n));
    }
    let values = groups
        .iter()
        .map(|(_, members)| {
            centroids
                .iter()
                .map(|(c, cn)| {
                    if c.len() != members[0].len() {
                        return Err(EvalError::DimensionMismatch { expected: c.len(), found: members[0].len() });
                    }
                    let total: f64 = members
                        .iter()
                        .map(|m| m.iter().zip(c).map(|(a, b)| a * b).sum::<f64>() / (norm(m) * cn))
                        .sum();
                    Ok(total / members.len() as f64)
                })
                .collect::<Result<Vec<f64>, EvalError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InterIntraMatrix {
        roles: groups.iter().map(|(r, _)| *r).collect(),
        values,
    })
}

impl InterIntraMatrix {
    /// Role names as the header row and first column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("role");
        for r in &self.roles {
            let _ = write!(out, ",{r}");
        }
        out.push('\n');
        for (r, row) in self.roles.iter().zip(&self.values) {
            out.push_str(r.name());
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}
