//! Chi-squared feature selection over binary feature presence.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cwlk::{NodeFeatureTrace, Vocabulary};
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionMask {
    pub view: String,
    /// Dimension of the unmasked feature space.
    pub dim: usize,
    /// Original indices, by descending score (ties by ascending index).
    pub kept: Vec<usize>,
    /// Chi-squared statistic of every original feature; empty for identity masks.
    pub scores: Vec<f64>,
}

impl SelectionMask {
    /// Keeps every feature in its original order.
    pub fn identity(view: &str, dim: usize) -> Self {
        Self {
            view: view.to_string(),
            dim,
            kept: (0..dim).collect(),
            scores: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn score(&self, original: usize) -> Option<f64> {
        self.scores.get(original).copied()
    }

    /// `new_index<TAB>old_index<TAB>label<TAB>score` lines.
    pub fn write_tsv(&self, vocab: &Vocabulary, mut w: impl Write) -> std::io::Result<()> {
        for (new, &old) in self.kept.iter().enumerate() {
            let label = vocab.label(old).unwrap_or("");
            match self.score(old) {
                Some(s) => writeln!(w, "{new}\t{old}\t{label}\t{s}")?,
                None => writeln!(w, "{new}\t{old}\t{label}\t")?,
            }
        }
        w.flush()
    }

    fn remap_table(&self) -> Vec<u32> {
        let mut table = vec![u32::MAX; self.dim];
        for (new, &old) in self.kept.iter().enumerate() {
            table[old] = new as u32;
        }
        table
    }
}

/// `N (ad - bc)^2 / ((a+b)(c+d)(a+c)(b+d))` for the 2×2 table
/// `[[a, b], [c, d]]`; zero when a margin is empty.
pub fn chi2_statistic(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let n = a + b + c + d;
    let denom = (a + b) * (c + d) * (a + c) * (b + d);
    if denom == 0.0 {
        return 0.0;
    }
    let diff = a * d - b * c;
    n * diff * diff / denom
}

/// Scores every feature by the chi-squared statistic of presence versus class
/// and keeps the top `k`.
pub fn chi2_select(view: &str, vectors: &[SparseVector], labels: &[i8], k: usize) -> Result<SelectionMask> {
    if vectors.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: vectors.len(),
            found: labels.len(),
        });
    }
    if k < 1 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y > 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let dim = vectors.first().map_or(0, SparseVector::dim);
    let mut present_pos = vec![0u32; dim];
    let mut present_neg = vec![0u32; dim];
    for (v, &y) in vectors.iter().zip(labels) {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        let counts = if y > 0 { &mut present_pos } else { &mut present_neg };
        for (i, x) in v.iter() {
            if x > 0.0 {
                counts[i] += 1;
            }
        }
    }
    let scores: Vec<f64> = (0..dim)
        .into_par_iter()
        .map(|f| {
            let a = present_pos[f] as f64;
            let b = present_neg[f] as f64;
            chi2_statistic(a, b, n_pos as f64 - a, n_neg as f64 - b)
        })
        .collect();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    order.truncate(k);
    Ok(SelectionMask {
        view: view.to_string(),
        dim,
        kept: order,
        scores,
    })
}

/// Restricts `v` to the kept features, renumbered in kept order.
pub fn apply_mask(v: &SparseVector, mask: &SelectionMask) -> Result<SparseVector> {
    if v.dim() != mask.dim {
        return Err(Error::DimensionMismatch {
            expected: mask.dim,
            found: v.dim(),
        });
    }
    let table = mask.remap_table();
    let pairs = v
        .entries()
        .iter()
        .filter(|&&(i, _)| table[i as usize] != u32::MAX)
        .map(|&(i, x)| (table[i as usize], x));
    SparseVector::from_pairs(mask.len(), pairs)
}

pub fn apply_mask_trace(trace: &NodeFeatureTrace, mask: &SelectionMask) -> Result<NodeFeatureTrace> {
    if trace.dim() != mask.dim {
        return Err(Error::DimensionMismatch {
            expected: mask.dim,
            found: trace.dim(),
        });
    }
    trace.remap(&mask.kept)
}
