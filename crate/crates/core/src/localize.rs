//! Node-, method- and class-level attribution of a decision value.
//!
//! A feature's contribution `W_f · X_f` is split across the nodes it was
//! emitted from in proportion to their local counts, so node scores sum to
//! the raw decision value exactly (the model has no intercept).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::ViewFeatures;
use crate::graph::Sample;
use crate::mkl::MklFit;
use crate::model::MklModel;
use crate::svm::decide;

/// Group id collecting nodes without a method or class tag.
pub const UNTAGGED: &str = "(untagged)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MScoreReport {
    pub sample_id: String,
    pub prediction: i8,
    pub raw_score: f64,
    pub node_scores: BTreeMap<String, f64>,
    pub per_view_node_scores: BTreeMap<String, BTreeMap<String, f64>>,
    pub method_scores: BTreeMap<String, f64>,
    pub class_scores: BTreeMap<String, f64>,
    /// Tagged classes by descending score, ties by ascending id.
    pub ranked_classes: Vec<(String, f64)>,
}

impl MScoreReport {
    pub fn top_classes(&self, k: usize) -> &[(String, f64)] {
        &self.ranked_classes[..k.min(self.ranked_classes.len())]
    }
}

/// Per-node scores summed over views, and the per-view breakdown.
pub type NodeScores = (BTreeMap<String, f64>, BTreeMap<String, BTreeMap<String, f64>>);

/// Scores every traced node: `Σ_v Σ_f W[off_v + f] · √β_v · scale_v · count_{n,f}`.
///
/// `features` must be in the fit's view order.
pub fn award_mscores(features: &[ViewFeatures], fit: &MklFit) -> Result<NodeScores> {
    if features.len() != fit.views.len() {
        return Err(Error::LengthMismatch {
            what: "view features",
            expected: fit.views.len(),
            found: features.len(),
        });
    }
    let weights = &fit.composite_weights;
    let mut combined: BTreeMap<String, f64> = BTreeMap::new();
    let mut per_view = BTreeMap::new();
    for (block, f) in fit.views.iter().zip(features) {
        if f.trace.dim() != block.len || f.vector.dim() != block.len {
            return Err(Error::DimensionMismatch {
                expected: block.len,
                found: f.trace.dim(),
            });
        }
        let totals = f.trace.totals();
        let tol = 1e-9 * f.vector.iter().fold(1.0f64, |m, (_, v)| m.max(v.abs()));
        let bad = totals
            .iter()
            .find(|&(i, c)| (c * f.scale - f.vector.get(i)).abs() > tol)
            .or_else(|| f.vector.iter().find(|&(i, v)| (totals.get(i) * f.scale - v).abs() > tol));
        if let Some((feature, _)) = bad {
            return Err(Error::TracePartition {
                view: block.name.clone(),
                feature,
            });
        }
        let factor = block.beta.sqrt() * f.scale;
        let mut scores = BTreeMap::new();
        for (node, feats) in f.trace.nodes() {
            let s: f64 = feats
                .iter()
                .map(|&(i, c)| weights.get(block.offset + i as usize) * factor * c as f64)
                .sum();
            *combined.entry(node.clone()).or_insert(0.0) += s;
            scores.insert(node.clone(), s);
        }
        per_view.insert(block.name.clone(), scores);
    }
    Ok((combined, per_view))
}

/// Sums node scores per method and per class tag. A node's tags come from the
/// first view (in name order) that contains it.
pub fn aggregate_groups(
    node_scores: &BTreeMap<String, f64>,
    sample: &Sample,
) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let mut tags: BTreeMap<&str, (Option<&str>, Option<&str>)> = BTreeMap::new();
    for graph in sample.views.values() {
        for node in graph.nodes() {
            tags.entry(node.id.as_str())
                .or_insert((node.method.as_deref(), node.class.as_deref()));
        }
    }
    let mut methods = BTreeMap::new();
    let mut classes = BTreeMap::new();
    for (node, &score) in node_scores {
        let (method, class) = tags.get(node.as_str()).copied().unwrap_or((None, None));
        *methods.entry(method.unwrap_or(UNTAGGED).to_string()).or_insert(0.0) += score;
        *classes.entry(class.unwrap_or(UNTAGGED).to_string()).or_insert(0.0) += score;
    }
    (methods, classes)
}

pub fn rank_groups(scores: &BTreeMap<String, f64>) -> Vec<(String, f64)> {
    let mut ranked: Vec<(String, f64)> = scores
        .iter()
        .filter(|(g, _)| g.as_str() != UNTAGGED)
        .map(|(g, &s)| (g.clone(), s))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// Predicts in primal form and attributes the decision value to nodes,
/// methods and classes.
pub fn predict_and_interpret(sample: &Sample, model: &MklModel) -> Result<MScoreReport> {
    let features = model.featurize(sample)?;
    let raw = model.fit.decision_value(&model.view_vectors(&features))?;
    let (node_scores, per_view_node_scores) = award_mscores(&features, &model.fit)?;
    let (method_scores, class_scores) = aggregate_groups(&node_scores, sample);
    let ranked_classes = rank_groups(&class_scores);
    Ok(MScoreReport {
        sample_id: sample.id.clone(),
        prediction: decide(raw),
        raw_score: raw,
        node_scores,
        per_view_node_scores,
        method_scores,
        class_scores,
        ranked_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cwlk::NodeFeatureTrace;
    use crate::graph::{ContextualGraph, NodeRecord};
    use crate::mkl::ViewBlock;
    use crate::sparse::SparseVector;
    use crate::svm::DualSolution;

    fn fit_with(weights: &[f64], beta: f64) -> MklFit {
        MklFit {
            views: vec![ViewBlock {
                name: "v".into(),
                beta,
                offset: 0,
                len: weights.len(),
            }],
            alpha: DualSolution {
                alpha: vec![],
                objective: 0.0,
                iterations: 0,
                max_violation: 0.0,
                converged: true,
            },
            labels: vec![],
            composite_weights: SparseVector::from_dense(weights),
            objective_trace: vec![],
            outer_iterations: 0,
            converged: true,
            uniform: false,
        }
    }

    fn features(nodes: Vec<(String, Vec<(u32, u32)>)>, dim: usize) -> ViewFeatures {
        let trace: NodeFeatureTrace =
            serde_json::from_value(serde_json::json!({ "dim": dim, "nodes": nodes })).unwrap();
        ViewFeatures {
            vector: trace.totals(),
            trace,
            scale: 1.0,
        }
    }

    #[test]
    fn hand_computed_two_node_scores() {
        // w = (2, -1, 0.5), β = 4 so √β = 2
        let fit = fit_with(&[2.0, -1.0, 0.5], 4.0);
        let f = features(vec![("a".into(), vec![(0, 3)]), ("b".into(), vec![(1, 1), (2, 2)])], 3);
        let (scores, per_view) = award_mscores(std::slice::from_ref(&f), &fit).unwrap();
        assert_eq!(scores["a"], 2.0 * 2.0 * 3.0);
        assert_eq!(scores["b"], 2.0 * (-1.0 + 0.5 * 2.0));
        assert_eq!(per_view["v"], scores);
        let raw = fit.composite_weights.dot(&f.vector.scaled(2.0)).unwrap();
        assert!((scores.values().sum::<f64>() - raw).abs() < 1e-12);
    }

    #[test]
    fn node_without_features_scores_zero() {
        let fit = fit_with(&[1.0], 1.0);
        let f = features(vec![("a".into(), vec![(0, 1)]), ("b".into(), vec![])], 1);
        let (scores, _) = award_mscores(&[f], &fit).unwrap();
        assert_eq!(scores["b"], 0.0);
        assert_eq!(scores["a"], 1.0);
    }

    #[test]
    fn inconsistent_trace_is_rejected() {
        let fit = fit_with(&[1.0, 1.0], 1.0);
        let mut f = features(vec![("a".into(), vec![(0, 1)])], 2);
        f.vector = SparseVector::from_dense(&[1.0, 1.0]);
        assert!(matches!(award_mscores(&[f], &fit), Err(Error::TracePartition { .. })));
    }

    #[test]
    fn groups_sum_node_scores() {
        let nodes = vec![
            NodeRecord::new("a", &["x"], &["c"]).with_groups(Some("K.m"), Some("K")),
            NodeRecord::new("b", &["x"], &["c"]).with_groups(Some("K.m"), Some("K")),
            NodeRecord::new("z", &["x"], &["c"]),
        ];
        let g = ContextualGraph::new(nodes, &[] as &[(&str, &str)]).unwrap();
        let sample = Sample {
            id: "s".into(),
            label: None,
            views: BTreeMap::from([("v".to_string(), g)]),
            malice_groups: None,
        };
        let scores = BTreeMap::from([("a".to_string(), 1.5), ("b".to_string(), -0.5), ("z".to_string(), 2.0)]);
        let (m, c) = aggregate_groups(&scores, &sample);
        assert_eq!(m["K.m"], 1.0);
        assert_eq!(c["K"], 1.0);
        assert_eq!(c[UNTAGGED], 2.0);
        assert!(!c.contains_key("Other"));
        assert_eq!(rank_groups(&c), vec![("K".to_string(), 1.0)]);
    }

    #[test]
    fn ranking_breaks_ties_by_id() {
        let scores = BTreeMap::from([("b".to_string(), 1.0), ("a".to_string(), 1.0), ("c".to_string(), 3.0)]);
        let ranked: Vec<String> = rank_groups(&scores).into_iter().map(|(g, _)| g).collect();
        assert_eq!(ranked, vec!["c", "a", "b"]);
    }
}
