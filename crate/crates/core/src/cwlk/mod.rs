//! Contextual Weisfeiler-Lehman relabeling and explicit feature maps.
//!
//! Each node contributes, at every height `0..=h` and for every one of its
//! contexts, the feature `context ⊕ λ_i(node)`. The dot product of two
//! unnormalized embeddings is the sum over heights of the per-height label
//! multiset dot products.

mod embed;
mod intern;
pub mod label;
mod relabel;
mod vocab;

pub use embed::{embed, Embedding, NodeFeatureTrace};
pub use relabel::{contextual_relabel, contextual_relabel_with, CwlConfig};
pub use vocab::Vocabulary;
