//! Sparse feature vectors stored as index-sorted `(index, value)` pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sparse vector of fixed dimension.
///
/// Entries are kept sorted by index with no duplicates and no stored zeros,
/// so dot products are a linear merge.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds a vector from unordered pairs. Duplicate indices are summed and
    /// zero results dropped.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut entries: Vec<(u32, f64)> = pairs.into_iter().collect();
        entries.sort_unstable_by_key(|&(i, _)| i);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if i as usize >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: i as usize + 1,
                });
            }
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        Ok(Self {
            dim,
            entries: merged,
        })
    }

    /// Builds a vector from a dense slice, keeping non-zero components.
    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .collect();
        Self {
            dim: values.len(),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|&(i, v)| (i as usize, v))
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&(index as u32), |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i as usize] = v;
        }
        out
    }

    pub fn dot(&self, other: &SparseVector) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(self.dot_unchecked(other))
    }

    pub(crate) fn dot_unchecked(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn dot_dense(&self, dense: &[f64]) -> Result<f64> {
        if self.dim != dense.len() {
            return Err(Error::DimensionMismatch {
                expected: dense.len(),
                found: self.dim,
            });
        }
        Ok(self.entries.iter().map(|&(i, v)| v * dense[i as usize]).sum())
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        if factor == 0.0 {
            return SparseVector::zeros(self.dim);
        }
        SparseVector {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, v)| (i, v * factor)).collect(),
        }
    }

    /// Returns the unit-length rescaling and the factor applied. Zero vectors
    /// stay zero with factor 1.
    pub fn normalized(&self) -> (SparseVector, f64) {
        let norm = self.norm();
        if norm == 0.0 {
            (self.clone(), 1.0)
        } else {
            let factor = 1.0 / norm;
            (self.scaled(factor), factor)
        }
    }

    /// Adds `factor * self` into a dense accumulator.
    pub fn axpy_into(&self, factor: f64, acc: &mut [f64]) {
        for &(i, v) in &self.entries {
            acc[i as usize] += factor * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_pairs_merges_and_drops_zeros() {
        let v = SparseVector::from_pairs(5, [(3, 1.0), (1, 2.0), (3, -1.0), (4, 0.5)]).unwrap();
        assert_eq!(v.entries(), &[(1, 2.0), (4, 0.5)]);
        assert_eq!(v.get(3), 0.0);
        assert_eq!(v.get(4), 0.5);
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        assert!(SparseVector::from_pairs(2, [(2, 1.0)]).is_err());
    }

    #[test]
    fn dot_matches_dense() {
        let a = SparseVector::from_dense(&[1.0, 0.0, 2.0, 3.0]);
        let b = SparseVector::from_dense(&[0.0, 5.0, -1.0, 2.0]);
        assert_eq!(a.dot(&b).unwrap(), 4.0);
        assert_eq!(a.dot_dense(&b.to_dense()).unwrap(), 4.0);
        assert!(a.dot(&SparseVector::zeros(3)).is_err());
    }

    #[test]
    fn zero_vector_normalizes_to_zero() {
        let (v, f) = SparseVector::zeros(3).normalized();
        assert!(v.is_zero());
        assert_eq!(f, 1.0);
        let (u, _) = SparseVector::from_dense(&[3.0, 4.0]).normalized();
        assert!((u.norm() - 1.0).abs() < 1e-15);
    }
}
