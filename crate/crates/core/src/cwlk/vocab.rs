use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use super::intern::{relabel_ids, LabelKey, LabelTable};
use super::label;
use super::relabel::{contextual_relabel_with, CwlConfig};
use crate::error::{Error, Result};
use crate::graph::ContextualGraph;

/// Bijection between contextual neighborhood labels and feature indices for
/// one view. Indices follow the lexicographic order of the label strings.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    view: String,
    h: usize,
    collapse_sinks: bool,
    labels: Vec<String>,
    index: HashMap<String, u32>,
    table: LabelTable,
    contexts: HashMap<String, u32>,
    features: HashMap<(u32, u32), u32>,
}

impl Vocabulary {
    /// Collects every contextual label at heights `0..=cfg.h` across `graphs`.
    pub fn build(view: &str, graphs: &[&ContextualGraph], cfg: &CwlConfig) -> Self {
        if !cfg.compress {
            let labels: BTreeSet<String> = graphs
                .par_iter()
                .map(|g| {
                    contextual_relabel_with(g, cfg.h, cfg.collapse_sinks)
                        .into_iter()
                        .flat_map(|level| level.into_values().flatten())
                        .collect::<BTreeSet<String>>()
                })
                .reduce(BTreeSet::new, |mut a, mut b| {
                    if a.len() < b.len() {
                        std::mem::swap(&mut a, &mut b);
                    }
                    a.extend(b);
                    a
                });
            return Self::from_labels(view, cfg.h, cfg.collapse_sinks, labels.into_iter().collect())
                .expect("relabeling emits canonical labels");
        }

        let mut table = LabelTable::default();
        let mut contexts: HashMap<String, u32> = HashMap::new();
        let mut seen: HashSet<(u32, u32)> = HashSet::new();
        for g in graphs {
            let ctx_ids: Vec<Vec<u32>> = g
                .nodes()
                .iter()
                .map(|n| {
                    n.contexts
                        .iter()
                        .map(|c| {
                            let next = contexts.len() as u32;
                            *contexts.entry(c.clone()).or_insert(next)
                        })
                        .collect()
                })
                .collect();
            let heights = relabel_ids(g, cfg.h, cfg.collapse_sinks, |key, compound| {
                Some(table.intern(key, compound))
            });
            for level in &heights {
                for (n, id) in level.iter().enumerate() {
                    let id = id.expect("interning never fails");
                    for &c in &ctx_ids[n] {
                        seen.insert((c, id));
                    }
                }
            }
        }
        let rendered = table.render_all();
        let mut ctx_text = vec![String::new(); contexts.len()];
        for (c, &i) in &contexts {
            ctx_text[i as usize] = c.clone();
        }
        let mut entries: Vec<(String, (u32, u32))> = seen
            .into_iter()
            .map(|(c, l)| {
                (
                    label::contextual(&ctx_text[c as usize], &rendered[l as usize]),
                    (c, l),
                )
            })
            .collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut labels = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        let mut features = HashMap::with_capacity(entries.len());
        for (i, (text, key)) in entries.into_iter().enumerate() {
            index.insert(text.clone(), i as u32);
            features.insert(key, i as u32);
            labels.push(text);
        }
        Self {
            view: view.to_string(),
            h: cfg.h,
            collapse_sinks: cfg.collapse_sinks,
            labels,
            index,
            table,
            contexts,
            features,
        }
    }

    /// Rebuilds a vocabulary from its label strings (in index order).
    pub fn from_labels(view: &str, h: usize, collapse_sinks: bool, labels: Vec<String>) -> Result<Self> {
        if let Some(w) = labels.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Label {
                label: w[1].clone(),
                message: "vocabulary labels must be strictly increasing".into(),
            });
        }
        let mut table = LabelTable::default();
        let mut contexts: HashMap<String, u32> = HashMap::new();
        let mut index = HashMap::with_capacity(labels.len());
        let mut features = HashMap::with_capacity(labels.len());
        for (i, text) in labels.iter().enumerate() {
            let (ctx, lambda) = label::parse_contextual(text)?;
            let next = contexts.len() as u32;
            let c = *contexts.entry(ctx).or_insert(next);
            let l = table.intern_lambda(&lambda);
            index.insert(text.clone(), i as u32);
            features.insert((c, l), i as u32);
        }
        Ok(Self {
            view: view.to_string(),
            h,
            collapse_sinks,
            labels,
            index,
            table,
            contexts,
            features,
        })
    }

    pub fn view(&self) -> &str {
        &self.view
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn collapse_sinks(&self) -> bool {
        self.collapse_sinks
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).map(|&i| i as usize)
    }

    pub(crate) fn context_id(&self, context: &str) -> Option<u32> {
        self.contexts.get(context).copied()
    }

    pub(crate) fn lookup_label(&self, key: &LabelKey) -> Option<u32> {
        self.table.get(key)
    }

    pub(crate) fn feature(&self, context: u32, label: u32) -> Option<u32> {
        self.features.get(&(context, label)).copied()
    }

    #[cfg(test)]
    pub(crate) fn interned_labels(&self) -> usize {
        self.table.len()
    }

    /// Writes `index<TAB>label` lines.
    pub fn write_tsv(&self, mut w: impl Write) -> std::io::Result<()> {
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(w, "{i}\t{l}")?;
        }
        w.flush()
    }

    pub fn read_tsv(view: &str, h: usize, collapse_sinks: bool, r: impl BufRead) -> Result<Self> {
        let mut labels = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            let (idx, text) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: "expected index<TAB>label".into(),
            })?;
            if idx.parse::<usize>().ok() != Some(lineno) {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("index {idx:?} out of sequence"),
                });
            }
            labels.push(text.to_string());
        }
        Self::from_labels(view, h, collapse_sinks, labels)
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.view == other.view
            && self.h == other.h
            && self.collapse_sinks == other.collapse_sinks
            && self.labels == other.labels
    }
}
