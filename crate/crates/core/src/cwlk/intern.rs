//! Label compression: neighborhood labels interned as dense integer ids.
//!
//! Two nodes share an id at height `i` exactly when their uncompressed
//! labels `λ_i` are equal strings, so relabeling runs on integers and
//! strings are rendered once per distinct label.

use std::collections::HashMap;

use super::label::{self, Lambda};
use crate::graph::ContextualGraph;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum LabelKey {
    /// Escaped, joined node labels.
    Base(String),
    /// Previous label id and the successor label ids, sorted.
    Extend(u32, Box<[u32]>),
}

#[derive(Debug, Clone, Default)]
pub(crate) struct LabelTable {
    keys: Vec<LabelKey>,
    compound: Vec<bool>,
    ids: HashMap<LabelKey, u32>,
}

impl LabelTable {
    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn intern(&mut self, key: LabelKey, compound: bool) -> u32 {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.keys.len() as u32;
        self.keys.push(key.clone());
        self.compound.push(compound);
        self.ids.insert(key, id);
        id
    }

    pub fn get(&self, key: &LabelKey) -> Option<u32> {
        self.ids.get(key).copied()
    }

    pub fn intern_lambda(&mut self, lambda: &Lambda) -> u32 {
        match lambda {
            Lambda::Base(labels) => {
                self.intern(LabelKey::Base(label::base_label(labels)), labels.len() > 1)
            }
            Lambda::Extend(prev, children) => {
                let prev = self.intern_lambda(prev);
                let mut ids: Vec<u32> = children.iter().map(|c| self.intern_lambda(c)).collect();
                ids.sort_unstable();
                self.intern(LabelKey::Extend(prev, ids.into_boxed_slice()), true)
            }
        }
    }

    /// Renders every interned label. Ids are assigned children-first, so a
    /// single ascending pass suffices.
    pub fn render_all(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::with_capacity(self.keys.len());
        for key in &self.keys {
            let text = match key {
                LabelKey::Base(s) => s.clone(),
                LabelKey::Extend(prev, children) => {
                    let mut elems: Vec<String> = children
                        .iter()
                        .map(|&c| label::element(&out[c as usize], self.compound[c as usize]))
                        .collect();
                    label::extend(&out[*prev as usize], &mut elems)
                }
            };
            out.push(text);
        }
        out
    }
}

/// Runs compressed relabeling for heights `0..=h`, resolving each label key
/// through `resolve`. `None` marks a label unknown to the table; every label
/// built on top of it is unknown as well.
pub(crate) fn relabel_ids(
    g: &ContextualGraph,
    h: usize,
    collapse_sinks: bool,
    mut resolve: impl FnMut(LabelKey, bool) -> Option<u32>,
) -> Vec<Vec<Option<u32>>> {
    let mut heights: Vec<Vec<Option<u32>>> = Vec::with_capacity(h + 1);
    let base = g
        .nodes()
        .iter()
        .map(|n| resolve(LabelKey::Base(label::base_label(&n.labels)), n.labels.len() > 1))
        .collect();
    heights.push(base);
    let mut scratch: Vec<u32> = Vec::new();
    for _ in 1..=h {
        let prev = heights.last().unwrap();
        let mut cur = Vec::with_capacity(g.node_count());
        for (n, &own) in prev.iter().enumerate() {
            let succ = g.successors(n);
            if succ.is_empty() && collapse_sinks {
                cur.push(own);
                continue;
            }
            let Some(own) = own else {
                cur.push(None);
                continue;
            };
            scratch.clear();
            let mut known = true;
            for &m in succ {
                match prev[m] {
                    Some(id) => scratch.push(id),
                    None => {
                        known = false;
                        break;
                    }
                }
            }
            if !known {
                cur.push(None);
                continue;
            }
            scratch.sort_unstable();
            let key = LabelKey::Extend(own, scratch.as_slice().into());
            cur.push(resolve(key, true));
        }
        heights.push(cur);
    }
    heights
}
