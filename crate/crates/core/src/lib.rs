//! Contextual Weisfeiler-Lehman graph embeddings, multiple kernel learning
//! and node-level attribution for multi-view program graphs.
//!
//! The pipeline is: [`Dataset`] → per-view [`Vocabulary`] and sparse
//! embeddings → optional chi-squared selection → [`MklModel`] (an SVM over a
//! learned non-negative kernel combination) → [`MScoreReport`]s that
//! attribute each decision to nodes, methods and classes.

pub mod cwlk;
pub mod error;
pub mod featurize;
pub mod graph;
pub mod kernel;
pub mod localize;
pub mod metrics;
pub mod mkl;
pub mod model;
pub mod select;
pub mod sparse;
pub mod svm;
pub mod synth;

pub use cwlk::{embed, CwlConfig, Embedding, NodeFeatureTrace, Vocabulary};
pub use error::{Error, Result};
pub use featurize::{ViewFeaturizer, ViewFeatures};
pub use graph::{load_dataset, save_dataset, ContextualGraph, Dataset, NodeRecord, Sample, BENIGN, MALICIOUS};
pub use kernel::{kernel_matrix, KernelMatrix};
pub use localize::{predict_and_interpret, MScoreReport};
pub use metrics::{evaluate, Metrics};
pub use mkl::{mkl_train, MklConfig, MklFit};
pub use model::{MklModel, TrainConfig, TrainReport};
pub use select::{chi2_select, SelectionMask};
pub use sparse::SparseVector;
pub use svm::{smo_train, DualSolution, SvmConfig};
pub use synth::{generate, GenConfig, MotifSpec};
