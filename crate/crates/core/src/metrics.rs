//! Detection and localization metrics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dataset, MALICIOUS};
use crate::localize::{MScoreReport, UNTAGGED};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub accuracy: f64,
}

/// Precision, recall and F over `(truth, predicted)` pairs with +1 positive.
/// Empty denominators give 0.
pub fn detection(pairs: impl IntoIterator<Item = (i8, i8)>) -> Detection {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (truth, pred) in pairs {
        match (truth == MALICIOUS, pred == MALICIOUS) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f_measure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Detection {
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
        precision,
        recall,
        f_measure,
        accuracy: ratio(tp + tn, tp + fp + tn + fn_),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub sample_id: String,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub fpr: f64,
    pub fnr: f64,
    pub precision_at_k: f64,
    pub recall_at_k: f64,
}

/// Scores one report's top-`k` classes against the ground-truth malice
/// classes. `classes` is the sample's full tagged class set.
pub fn localize_sample(
    report: &MScoreReport,
    malice: &BTreeSet<String>,
    classes: &BTreeSet<String>,
    k: usize,
) -> Localization {
    let top = report.top_classes(k);
    let tp = top.iter().filter(|(c, _)| malice.contains(c)).count();
    let fp = top.len() - tp;
    let fn_ = malice.len() - tp;
    let benign = classes.iter().filter(|c| !malice.contains(*c)).count();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Localization {
        sample_id: report.sample_id.clone(),
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        fpr: ratio(fp, benign),
        fnr: ratio(fn_, malice.len()),
        precision_at_k: ratio(tp, k.min(top.len())),
        recall_at_k: ratio(tp, malice.len()),
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub k: usize,
    pub detection: Detection,
    pub localized_samples: usize,
    pub fpr_at_k: Summary,
    pub fnr_at_k: Summary,
    pub precision_at_k: Summary,
    pub recall_at_k: Summary,
    pub per_sample: Vec<Localization>,
}

impl Metrics {
    pub const CSV_HEADER: &'static str =
        "k,precision,recall,f_measure,accuracy,localized,fpr_mean,fpr_std,fnr_mean,fnr_std,p_at_k_mean,p_at_k_std,r_at_k_mean,r_at_k_std";

    pub fn csv_row(&self) -> String {
        let d = &self.detection;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.k,
            d.precision,
            d.recall,
            d.f_measure,
            d.accuracy,
            self.localized_samples,
            self.fpr_at_k.mean,
            self.fpr_at_k.std,
            self.fnr_at_k.mean,
            self.fnr_at_k.std,
            self.precision_at_k.mean,
            self.precision_at_k.std,
            self.recall_at_k.mean,
            self.recall_at_k.std,
        )
    }
}

/// Detection metrics over every labeled sample with a prediction, and
/// localization averages over every sample with ground-truth malice classes.
pub fn evaluate(
    predictions: &BTreeMap<String, i8>,
    reports: &[MScoreReport],
    ds: &Dataset,
    k: usize,
) -> Result<Metrics> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let by_id: BTreeMap<&str, &MScoreReport> = reports.iter().map(|r| (r.sample_id.as_str(), r)).collect();
    let mut pairs = Vec::new();
    let mut per_sample = Vec::new();
    for sample in ds.samples() {
        if let (Some(truth), Some(&pred)) = (sample.label, predictions.get(&sample.id)) {
            pairs.push((truth, pred));
        }
        let Some(malice) = sample.malice_groups.as_ref().filter(|m| !m.is_empty()) else {
            continue;
        };
        let report = by_id
            .get(sample.id.as_str())
            .ok_or_else(|| Error::invalid(&sample.id, "no localization report for a malicious sample"))?;
        let classes: BTreeSet<String> = sample
            .views
            .values()
            .flat_map(|g| g.nodes().iter().filter_map(|n| n.class.clone()))
            .filter(|c| c != UNTAGGED)
            .collect();
        per_sample.push(localize_sample(report, malice, &classes, k));
    }
    for id in predictions.keys() {
        if !ds.samples().iter().any(|s| &s.id == id) {
            return Err(Error::invalid(id, "prediction for a sample not in the dataset"));
        }
    }
    let stat = |f: fn(&Localization) -> f64| Summary::of(&per_sample.iter().map(f).collect::<Vec<_>>());
    Ok(Metrics {
        k,
        detection: detection(pairs),
        localized_samples: per_sample.len(),
        fpr_at_k: stat(|l| l.fpr),
        fnr_at_k: stat(|l| l.fnr),
        precision_at_k: stat(|l| l.precision_at_k),
        recall_at_k: stat(|l| l.recall_at_k),
        per_sample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(ranked: &[&str]) -> MScoreReport {
        MScoreReport {
            sample_id: "s".into(),
            prediction: 1,
            raw_score: 1.0,
            node_scores: BTreeMap::new(),
            per_view_node_scores: BTreeMap::new(),
            method_scores: BTreeMap::new(),
            class_scores: BTreeMap::new(),
            ranked_classes: ranked
                .iter()
                .enumerate()
                .map(|(i, c)| (c.to_string(), -(i as f64)))
                .collect(),
        }
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("C{i:02}")).collect()
    }

    #[test]
    fn both_malice_classes_found() {
        let all = names(70);
        let refs: Vec<&str> = all.iter().map(String::as_str).collect();
        let malice = BTreeSet::from(["C00".to_string(), "C05".to_string()]);
        let classes: BTreeSet<String> = all.iter().cloned().collect();
        let l = localize_sample(&report(&refs), &malice, &classes, 10);
        assert_eq!(l.recall_at_k, 1.0);
        assert_eq!(l.fnr, 0.0);
        assert_eq!(l.false_positives, 8);
        assert!((l.fpr - 8.0 / 68.0).abs() < 1e-15);
        assert!((l.precision_at_k - 0.2).abs() < 1e-15);
    }

    #[test]
    fn missed_class_counts_as_false_negative() {
        let malice = BTreeSet::from(["A".to_string(), "Z".to_string()]);
        let classes: BTreeSet<String> = ["A", "B", "Z"].iter().map(|s| s.to_string()).collect();
        let l = localize_sample(&report(&["A", "B", "Z"]), &malice, &classes, 2);
        assert_eq!((l.true_positives, l.false_positives, l.false_negatives), (1, 1, 1));
        assert_eq!(l.fnr, 0.5);
        assert_eq!(l.fpr, 1.0);
    }

    #[test]
    fn short_ranking_uses_ranked_count() {
        let malice = BTreeSet::from(["A".to_string()]);
        let classes = BTreeSet::from(["A".to_string()]);
        let l = localize_sample(&report(&["A"]), &malice, &classes, 10);
        assert_eq!(l.precision_at_k, 1.0);
        assert_eq!(l.fpr, 0.0);
    }

    #[test]
    fn perfect_detection() {
        let d = detection([(1, 1), (-1, -1), (1, 1)]);
        assert_eq!(d.f_measure, 1.0);
        assert_eq!(d.accuracy, 1.0);
        let none = detection([(-1, -1)]);
        assert_eq!(none.f_measure, 0.0);
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 3.0]);
        assert_eq!((s.mean, s.std), (2.0, 1.0));
        assert_eq!(Summary::of(&[]).mean, 0.0);
    }
}
