use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::label;
use crate::graph::ContextualGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CwlConfig {
    /// Number of relabeling iterations.
    pub h: usize,
    /// Compress neighborhood labels to integer ids between iterations.
    /// Output is identical either way; compression keeps relabeling linear
    /// in the edge count.
    pub compress: bool,
    /// Scale each view embedding to unit Euclidean length.
    pub normalize: bool,
    /// When set, a node without successors keeps its previous label instead
    /// of appending an empty multiset, so its label repeats across heights
    /// and those occurrences share one feature.
    #[serde(default)]
    pub collapse_sinks: bool,
}

impl Default for CwlConfig {
    fn default() -> Self {
        Self {
            h: 2,
            compress: true,
            normalize: true,
            collapse_sinks: false,
        }
    }
}

impl CwlConfig {
    pub fn with_h(h: usize) -> Self {
        Self {
            h,
            ..Self::default()
        }
    }
}

/// Uncompressed neighborhood labels `λ_i(n)` for heights `0..=h`, indexed
/// `[height][node index]`, plus whether each label needs bracketing as a
/// multiset element.
pub(crate) fn neighborhood_strings(
    g: &ContextualGraph,
    h: usize,
    collapse_sinks: bool,
) -> Vec<Vec<(String, bool)>> {
    let mut heights = Vec::with_capacity(h + 1);
    let base: Vec<(String, bool)> = g
        .nodes()
        .iter()
        .map(|n| (label::base_label(&n.labels), n.labels.len() > 1))
        .collect();
    heights.push(base);
    for _ in 1..=h {
        let prev: &Vec<(String, bool)> = heights.last().unwrap();
        let cur = (0..g.node_count())
            .map(|n| {
                let succ = g.successors(n);
                if succ.is_empty() && collapse_sinks {
                    return prev[n].clone();
                }
                let mut elems: Vec<String> = succ
                    .iter()
                    .map(|&m| label::element(&prev[m].0, prev[m].1))
                    .collect();
                (label::extend(&prev[n].0, &mut elems), true)
            })
            .collect();
        heights.push(cur);
    }
    heights
}

/// Contextual relabeling: for each height `0..=h`, every node's contextual
/// neighborhood labels, one per context, in context order.
pub fn contextual_relabel(g: &ContextualGraph, h: usize) -> Vec<BTreeMap<String, Vec<String>>> {
    contextual_relabel_with(g, h, false)
}

pub fn contextual_relabel_with(
    g: &ContextualGraph,
    h: usize,
    collapse_sinks: bool,
) -> Vec<BTreeMap<String, Vec<String>>> {
    neighborhood_strings(g, h, collapse_sinks)
        .into_iter()
        .map(|level| {
            g.nodes()
                .iter()
                .zip(level)
                .map(|(node, (lambda, _))| {
                    let labels = node
                        .contexts
                        .iter()
                        .map(|c| label::contextual(c, &lambda))
                        .collect();
                    (node.id.clone(), labels)
                })
                .collect()
        })
        .collect()
}
