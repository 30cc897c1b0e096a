//! End-to-end training on a [`Dataset`] and the persisted model document.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cwlk::{CwlConfig, Vocabulary};
use crate::error::{Error, Result};
use crate::featurize::{ViewFeaturizer, ViewFeatures};
use crate::graph::{Dataset, Sample};
use crate::mkl::{self, MklConfig, MklFit};
use crate::select::SelectionMask;
use crate::sparse::SparseVector;

pub const MODEL_FORMAT: &str = "cwlmkl-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub cwl: CwlConfig,
    /// Features kept per view by chi-squared selection; views with a smaller
    /// vocabulary are left unselected.
    pub k_select: Option<usize>,
    pub mkl: MklConfig,
    /// Fix β at `1/|V|` instead of learning it.
    pub uniform: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            cwl: CwlConfig::default(),
            k_select: Some(5000),
            mkl: MklConfig::default(),
            uniform: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MklModel {
    pub config: TrainConfig,
    pub featurizers: Vec<ViewFeaturizer>,
    pub fit: MklFit,
    pub training_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSummary {
    pub view: String,
    pub beta: f64,
    pub beta_normalized: f64,
    pub vocabulary_size: usize,
    pub selected_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub samples: usize,
    pub views: Vec<ViewSummary>,
    pub objective_trace: Vec<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub svm_converged: bool,
    pub support_vectors: usize,
    pub training_accuracy: f64,
}

/// Featurized training data, kept so callers can inspect or reuse it.
pub struct TrainingData {
    pub per_view: Vec<(String, Vec<SparseVector>)>,
    pub labels: Vec<i8>,
}

impl MklModel {
    pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<(Self, TrainReport)> {
        let (model, data) = Self::train_with_data(ds, cfg)?;
        let report = model.report(&data)?;
        Ok((model, report))
    }

    pub fn train_with_data(ds: &Dataset, cfg: &TrainConfig) -> Result<(Self, TrainingData)> {
        let labels = ds.labels()?;
        let fitted: Vec<(ViewFeaturizer, Vec<ViewFeatures>)> = ds
            .view_names()
            .iter()
            .map(|view| {
                let graphs = ds.view_graphs(view)?;
                ViewFeaturizer::fit(view, &graphs, &labels, &cfg.cwl, cfg.k_select)
            })
            .collect::<Result<_>>()?;
        let mut featurizers = Vec::with_capacity(fitted.len());
        let mut per_view = Vec::with_capacity(fitted.len());
        for (fz, feats) in fitted {
            per_view.push((fz.view().to_string(), feats.into_iter().map(|f| f.vector).collect()));
            featurizers.push(fz);
        }
        let fit = if cfg.uniform {
            mkl::uniform_combine(&per_view, &labels, &cfg.mkl)?
        } else {
            mkl::mkl_train(&per_view, &labels, &cfg.mkl)?
        };
        let model = Self {
            config: *cfg,
            featurizers,
            fit,
            training_ids: ds.samples().iter().map(|s| s.id.clone()).collect(),
        };
        Ok((model, TrainingData { per_view, labels }))
    }

    fn report(&self, data: &TrainingData) -> Result<TrainReport> {
        let norm = self.fit.normalized_betas();
        let views = self
            .featurizers
            .iter()
            .zip(&self.fit.views)
            .map(|(fz, block)| ViewSummary {
                view: block.name.clone(),
                beta: block.beta,
                beta_normalized: norm[&block.name],
                vocabulary_size: fz.vocabulary.len(),
                selected_features: fz.dim(),
            })
            .collect();
        let correct = (0..data.labels.len())
            .into_par_iter()
            .map(|i| {
                let sample: BTreeMap<String, SparseVector> = data
                    .per_view
                    .iter()
                    .map(|(n, vs)| (n.clone(), vs[i].clone()))
                    .collect();
                let raw = self.fit.decision_value(&sample)?;
                Ok(crate::svm::decide(raw) == data.labels[i])
            })
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&c| c)
            .count();
        Ok(TrainReport {
            samples: data.labels.len(),
            views,
            objective_trace: self.fit.objective_trace.clone(),
            outer_iterations: self.fit.outer_iterations,
            converged: self.fit.converged,
            svm_converged: self.fit.alpha.converged,
            support_vectors: self.fit.alpha.support_count(),
            training_accuracy: correct as f64 / data.labels.len().max(1) as f64,
        })
    }

    pub fn view_names(&self) -> Vec<&str> {
        self.featurizers.iter().map(ViewFeaturizer::view).collect()
    }

    /// Features of every model view of `sample`, in model view order.
    pub fn featurize(&self, sample: &Sample) -> Result<Vec<ViewFeatures>> {
        self.featurizers
            .iter()
            .map(|fz| fz.transform(sample.view(fz.view())?))
            .collect()
    }

    pub fn view_vectors(&self, features: &[ViewFeatures]) -> BTreeMap<String, SparseVector> {
        self.featurizers
            .iter()
            .zip(features)
            .map(|(fz, f)| (fz.view().to_string(), f.vector.clone()))
            .collect()
    }

    /// `(sign, raw)` of the primal decision function.
    pub fn predict(&self, sample: &Sample) -> Result<(i8, f64)> {
        let feats = self.featurize(sample)?;
        let raw = self.fit.decision_value(&self.view_vectors(&feats))?;
        Ok((crate::svm::decide(raw), raw))
    }

    pub fn to_writer(&self, mut w: impl Write) -> Result<()> {
        let raw = RawModel {
            format: MODEL_FORMAT.to_string(),
            config: self.config,
            views: self
                .featurizers
                .iter()
                .map(|fz| RawView {
                    name: fz.view().to_string(),
                    vocabulary: fz.vocabulary.labels().to_vec(),
                    mask: fz.mask.clone(),
                })
                .collect(),
            training_ids: self.training_ids.clone(),
            fit: self.fit.clone(),
        };
        serde_json::to_writer_pretty(&mut w, &raw)?;
        w.write_all(b"\n").map_err(serde_json::Error::io)?;
        Ok(())
    }

    pub fn from_reader(r: impl std::io::Read) -> Result<Self> {
        let raw: RawModel = serde_json::from_reader(r)?;
        if raw.format != MODEL_FORMAT {
            return Err(Error::ModelMismatch(format!(
                "unsupported model format {:?}, expected {MODEL_FORMAT:?}",
                raw.format
            )));
        }
        if raw.views.len() != raw.fit.views.len() {
            return Err(Error::ModelMismatch("view count differs from fitted blocks".into()));
        }
        if raw.training_ids.len() != raw.fit.alpha.alpha.len() {
            return Err(Error::ModelMismatch("training ids do not match alpha".into()));
        }
        let cwl = raw.config.cwl;
        let featurizers = raw
            .views
            .into_iter()
            .zip(&raw.fit.views)
            .map(|(v, block)| {
                if v.name != block.name || v.mask.len() != block.len || v.mask.view != v.name {
                    return Err(Error::ModelMismatch(format!("view {:?} is inconsistent", v.name)));
                }
                if v.mask.dim != v.vocabulary.len() {
                    return Err(Error::ModelMismatch(format!(
                        "mask of view {:?} does not match its vocabulary",
                        v.name
                    )));
                }
                let vocabulary = Vocabulary::from_labels(&v.name, cwl.h, cwl.collapse_sinks, v.vocabulary)?;
                Ok(ViewFeaturizer {
                    cwl,
                    vocabulary,
                    mask: v.mask,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            config: raw.config,
            featurizers,
            fit: raw.fit,
            training_ids: raw.training_ids,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.to_writer(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file))
    }
}

#[derive(Serialize, Deserialize)]
struct RawView {
    name: String,
    vocabulary: Vec<String>,
    mask: SelectionMask,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    format: String,
    config: TrainConfig,
    views: Vec<RawView>,
    training_ids: Vec<String>,
    fit: MklFit,
}
