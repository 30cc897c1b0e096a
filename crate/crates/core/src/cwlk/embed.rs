use serde::{Deserialize, Serialize};

use super::intern::relabel_ids;
use super::label;
use super::relabel::{neighborhood_strings, CwlConfig};
use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::graph::ContextualGraph;
use crate::sparse::SparseVector;

/// Per-node feature counts. For every feature, the node-local counts sum to
/// the raw (unnormalized) embedding count.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeFeatureTrace {
    dim: usize,
    nodes: Vec<(String, Vec<(u32, u32)>)>,
}

impl NodeFeatureTrace {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(node id, [(feature, count)])`, nodes in id order, features ascending.
    pub fn nodes(&self) -> &[(String, Vec<(u32, u32)>)] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&[(u32, u32)]> {
        self.nodes
            .binary_search_by(|(n, _)| n.as_str().cmp(id))
            .ok()
            .map(|i| self.nodes[i].1.as_slice())
    }

    /// Sum of node-local counts per feature.
    pub fn totals(&self) -> SparseVector {
        let pairs = self
            .nodes
            .iter()
            .flat_map(|(_, f)| f.iter().map(|&(i, c)| (i, c as f64)));
        SparseVector::from_pairs(self.dim, pairs).expect("trace indices are in range")
    }

    /// Index of the first feature whose node counts do not sum to `raw`.
    pub fn partition_violation(&self, raw: &SparseVector) -> Option<usize> {
        if raw.dim() != self.dim {
            return Some(0);
        }
        let totals = self.totals();
        let mismatch = |a: &SparseVector, b: &SparseVector| {
            a.iter().find(|&(i, v)| b.get(i) != v).map(|(i, _)| i)
        };
        mismatch(&totals, raw).or_else(|| mismatch(raw, &totals))
    }

    /// Keeps the features listed in `kept` and renumbers them `0..kept.len()`.
    pub fn remap(&self, kept: &[usize]) -> Result<NodeFeatureTrace> {
        let mut new_index = vec![u32::MAX; self.dim];
        for (new, &old) in kept.iter().enumerate() {
            if old >= self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: old + 1,
                });
            }
            new_index[old] = new as u32;
        }
        let nodes = self
            .nodes
            .iter()
            .map(|(id, feats)| {
                let mut f: Vec<(u32, u32)> = feats
                    .iter()
                    .filter(|&&(i, _)| new_index[i as usize] != u32::MAX)
                    .map(|&(i, c)| (new_index[i as usize], c))
                    .collect();
                f.sort_unstable();
                (id.clone(), f)
            })
            .collect();
        Ok(NodeFeatureTrace {
            dim: kept.len(),
            nodes,
        })
    }
}

/// Explicit embedding of one graph in one view.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// Counts, or their unit-length rescaling when normalization is on.
    pub vector: SparseVector,
    /// Raw node-local counts.
    pub trace: NodeFeatureTrace,
    /// Factor that maps raw counts to `vector` (1 when not normalized).
    pub scale: f64,
}

/// Embeds `g` against a frozen vocabulary. Labels outside the vocabulary are
/// dropped.
pub fn embed(g: &ContextualGraph, vocab: &Vocabulary, cfg: &CwlConfig) -> Result<Embedding> {
    if cfg.h != vocab.h() {
        return Err(Error::Config(format!(
            "vocabulary for view {:?} was built with h={}, embedding requested h={}",
            vocab.view(),
            vocab.h(),
            cfg.h
        )));
    }
    if cfg.collapse_sinks != vocab.collapse_sinks() {
        return Err(Error::Config(format!(
            "vocabulary for view {:?} uses collapse_sinks={}",
            vocab.view(),
            vocab.collapse_sinks()
        )));
    }
    let per_node = if cfg.compress {
        node_features_compressed(g, vocab, cfg)
    } else {
        node_features_strings(g, vocab, cfg)
    };
    let dim = vocab.len();
    let mut nodes = Vec::with_capacity(per_node.len());
    let mut all: Vec<(u32, f64)> = Vec::new();
    for (node, mut feats) in g.nodes().iter().zip(per_node) {
        feats.sort_unstable();
        let mut counted: Vec<(u32, u32)> = Vec::new();
        for f in feats {
            match counted.last_mut() {
                Some((last, c)) if *last == f => *c += 1,
                _ => counted.push((f, 1)),
            }
        }
        all.extend(counted.iter().map(|&(f, c)| (f, c as f64)));
        nodes.push((node.id.clone(), counted));
    }
    let raw = SparseVector::from_pairs(dim, all)?;
    let trace = NodeFeatureTrace { dim, nodes };
    let (vector, scale) = if cfg.normalize {
        raw.normalized()
    } else {
        (raw, 1.0)
    };
    Ok(Embedding {
        vector,
        trace,
        scale,
    })
}

fn node_features_compressed(g: &ContextualGraph, vocab: &Vocabulary, cfg: &CwlConfig) -> Vec<Vec<u32>> {
    let heights = relabel_ids(g, cfg.h, cfg.collapse_sinks, |key, _| vocab.lookup_label(&key));
    let ctx_ids: Vec<Vec<u32>> = g
        .nodes()
        .iter()
        .map(|n| n.contexts.iter().filter_map(|c| vocab.context_id(c)).collect())
        .collect();
    let mut out = vec![Vec::new(); g.node_count()];
    for level in &heights {
        for (n, id) in level.iter().enumerate() {
            if let Some(id) = *id {
                out[n].extend(ctx_ids[n].iter().filter_map(|&c| vocab.feature(c, id)));
            }
        }
    }
    out
}

fn node_features_strings(g: &ContextualGraph, vocab: &Vocabulary, cfg: &CwlConfig) -> Vec<Vec<u32>> {
    let heights = neighborhood_strings(g, cfg.h, cfg.collapse_sinks);
    let mut out = vec![Vec::new(); g.node_count()];
    for level in &heights {
        for (n, (lambda, _)) in level.iter().enumerate() {
            for c in &g.nodes()[n].contexts {
                if let Some(i) = vocab.index_of(&label::contextual(c, lambda)) {
                    out[n].push(i as u32);
                }
            }
        }
    }
    out
}
