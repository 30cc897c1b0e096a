//! Linear kernel (Gram) matrices over sparse embeddings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1)).take(self.n)
    }

    /// `self += weight * other`.
    pub fn add_scaled(&mut self, weight: f64, other: &KernelMatrix) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += weight * b;
        }
        Ok(())
    }

    /// First `(i, j)` with `|K_ij - K_ji| > tol`.
    pub fn asymmetry(&self, tol: f64) -> Option<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .find(|&(i, j)| (self.get(i, j) - self.get(j, i)).abs() > tol)
    }

    /// `Σ_ij a_i a_j K_ij`.
    pub fn quadratic_form(&self, a: &[f64]) -> f64 {
        self.rows()
            .zip(a)
            .filter(|(_, &ai)| ai != 0.0)
            .map(|(row, &ai)| ai * row.iter().zip(a).map(|(k, aj)| k * aj).sum::<f64>())
            .sum()
    }
}

fn check_dims(vectors: &[SparseVector]) -> Result<()> {
    if let Some(first) = vectors.first() {
        if let Some(bad) = vectors.iter().find(|v| v.dim() != first.dim()) {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: bad.dim(),
            });
        }
    }
    Ok(())
}

/// `M[i][j] = ⟨v_i, v_j⟩`, computed over the upper triangle in parallel rows.
pub fn kernel_matrix(vectors: &[SparseVector]) -> Result<KernelMatrix> {
    check_dims(vectors)?;
    let n = vectors.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| vectors[i].dot_unchecked(&vectors[j])).collect())
        .collect();
    let mut data = vec![0.0; n * n];
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + off;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(KernelMatrix { n, data })
}

/// Rectangular `⟨a_i, b_j⟩`, one row per `a`.
pub fn cross_kernel(a: &[SparseVector], b: &[SparseVector]) -> Result<Vec<Vec<f64>>> {
    if let (Some(x), Some(y)) = (a.first(), b.first()) {
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch {
                expected: y.dim(),
                found: x.dim(),
            });
        }
    }
    check_dims(a)?;
    check_dims(b)?;
    Ok(a.par_iter()
        .map(|x| b.iter().map(|y| x.dot_unchecked(y)).collect())
        .collect())
}
