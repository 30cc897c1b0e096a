//! Per-view featurization: vocabulary, raw CWL counts, optional chi-squared
//! selection, then normalization.
//!
//! Selection runs on raw counts so the kept vector can be normalized as a
//! whole afterwards. Node traces stay in raw counts; `scale` maps them onto
//! the final vector.

use rayon::prelude::*;

use crate::cwlk::{embed, CwlConfig, NodeFeatureTrace, Vocabulary};
use crate::error::Result;
use crate::graph::ContextualGraph;
use crate::select::{apply_mask, apply_mask_trace, chi2_select, SelectionMask};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq)]
pub struct ViewFeatures {
    pub vector: SparseVector,
    pub trace: NodeFeatureTrace,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewFeaturizer {
    pub cwl: CwlConfig,
    pub vocabulary: Vocabulary,
    pub mask: SelectionMask,
}

impl ViewFeaturizer {
    /// Fits on training graphs and returns their features. Selection applies
    /// only when `k_select` is set and the vocabulary is larger than it.
    pub fn fit(
        view: &str,
        graphs: &[&ContextualGraph],
        labels: &[i8],
        cwl: &CwlConfig,
        k_select: Option<usize>,
    ) -> Result<(Self, Vec<ViewFeatures>)> {
        let vocabulary = Vocabulary::build(view, graphs, cwl);
        let raw_cfg = CwlConfig {
            normalize: false,
            ..*cwl
        };
        let raw: Vec<_> = graphs
            .par_iter()
            .map(|g| embed(g, &vocabulary, &raw_cfg))
            .collect::<Result<_>>()?;
        let mask = match k_select {
            Some(k) if vocabulary.len() > k => {
                let vectors: Vec<SparseVector> = raw.iter().map(|e| e.vector.clone()).collect();
                chi2_select(view, &vectors, labels, k)?
            }
            _ => SelectionMask::identity(view, vocabulary.len()),
        };
        let this = Self {
            cwl: *cwl,
            vocabulary,
            mask,
        };
        let features = raw
            .into_par_iter()
            .map(|e| this.finish(e.vector, &e.trace))
            .collect::<Result<_>>()?;
        Ok((this, features))
    }

    pub fn view(&self) -> &str {
        self.vocabulary.view()
    }

    /// Dimension after selection.
    pub fn dim(&self) -> usize {
        self.mask.len()
    }

    pub fn transform(&self, g: &ContextualGraph) -> Result<ViewFeatures> {
        let raw_cfg = CwlConfig {
            normalize: false,
            ..self.cwl
        };
        let e = embed(g, &self.vocabulary, &raw_cfg)?;
        self.finish(e.vector, &e.trace)
    }

    pub fn transform_all(&self, graphs: &[&ContextualGraph]) -> Result<Vec<ViewFeatures>> {
        graphs.par_iter().map(|g| self.transform(g)).collect()
    }

    fn finish(&self, raw: SparseVector, trace: &NodeFeatureTrace) -> Result<ViewFeatures> {
        let masked = apply_mask(&raw, &self.mask)?;
        let trace = apply_mask_trace(trace, &self.mask)?;
        let (vector, scale) = if self.cwl.normalize {
            masked.normalized()
        } else {
            (masked, 1.0)
        };
        Ok(ViewFeatures {
            vector,
            trace,
            scale,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeRecord;

    fn chain(labels: &[&str], ctx: &str) -> ContextualGraph {
        let nodes = labels
            .iter()
            .enumerate()
            .map(|(i, l)| NodeRecord::new(format!("n{i}"), &[l], &[ctx]))
            .collect();
        let edges: Vec<(String, String)> = (1..labels.len())
            .map(|i| (format!("n{}", i - 1), format!("n{i}")))
            .collect();
        ContextualGraph::new(nodes, &edges).unwrap()
    }

    #[test]
    fn selection_caps_dimension_and_keeps_unit_norm() {
        let graphs = [
            chain(&["a", "b", "c"], "u"),
            chain(&["a", "b", "d"], "u"),
            chain(&["x", "y"], "w"),
            chain(&["x", "z"], "w"),
        ];
        let refs: Vec<&ContextualGraph> = graphs.iter().collect();
        let labels = [1, 1, -1, -1];
        let (fz, feats) = ViewFeaturizer::fit("v", &refs, &labels, &CwlConfig::with_h(1), Some(4)).unwrap();
        assert!(fz.vocabulary.len() > 4);
        assert_eq!(fz.dim(), 4);
        for f in &feats {
            assert_eq!(f.vector.dim(), 4);
            if !f.vector.is_zero() {
                assert!((f.vector.norm() - 1.0).abs() < 1e-12);
            }
            let raw = f.vector.scaled(1.0 / f.scale);
            for (i, v) in f.trace.totals().iter() {
                assert!((raw.get(i) - v).abs() < 1e-9);
            }
        }
        assert_eq!(fz.transform(&graphs[0]).unwrap(), feats[0]);
    }

    #[test]
    fn small_vocabulary_is_not_selected() {
        let g = chain(&["a", "b"], "u");
        let h = chain(&["c"], "u");
        let (fz, _) = ViewFeaturizer::fit("v", &[&g, &h], &[1, -1], &CwlConfig::default(), Some(5000)).unwrap();
        assert_eq!(fz.mask, SelectionMask::identity("v", fz.vocabulary.len()));
    }
}
