//! Deterministic multi-view corpora with planted malicious motifs.
//!
//! Every sample is an app made of classes, methods and basic blocks. All
//! views share the block set and edges (they are abstractions of one
//! control-flow graph) but draw node labels from per-view alphabets.
//!
//! Malicious samples are benign hosts plus "rider" classes, each carrying one
//! motif instance whose nodes run under the malice context. Hosts of both
//! classes contain decoys: the motif wired up under a benign context, and
//! motif labels scattered without motif edges under the malice context. Only
//! the combination of topology and context separates the classes.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ContextualGraph, Dataset, NodeRecord, Sample, BENIGN, MALICIOUS};

/// Inclusive integer range `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span(pub usize, pub usize);

impl Span {
    fn sample(&self, rng: &mut impl Rng) -> usize {
        rng.gen_range(self.0..=self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSpec {
    pub name: String,
    /// Number of ordinary labels; label `k` renders as `name:k`.
    pub alphabet: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotifSpec {
    pub name: String,
    /// Number of motif nodes (2–6).
    pub nodes: usize,
    /// Directed edges between motif node positions.
    pub edges: Vec<(usize, usize)>,
    /// Reserved labels per view, one per motif node. Views not listed get
    /// ordinary random labels on motif nodes.
    pub labels: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub n_benign: usize,
    pub n_malicious: usize,
    pub views: Vec<ViewSpec>,
    pub classes_per_app: Span,
    pub methods_per_class: Span,
    /// Basic blocks per host method.
    pub host_nodes: Span,
    /// Probability of each extra intra-method edge.
    pub host_edge_prob: f64,
    /// Probability that a method calls another method of the app.
    pub call_prob: f64,
    /// Probability that a block carries two labels instead of one.
    pub multi_label_prob: f64,
    pub motifs: Vec<MotifSpec>,
    pub context_alphabet: Vec<String>,
    pub malice_context: String,
    pub malice_classes_per_app: Span,
    /// Per-host probability of a motif wired under a non-malice context.
    pub decoy_motif_prob: f64,
    /// Per-host probability of motif labels scattered under the malice context.
    pub decoy_scatter_prob: f64,
}

fn leak_motif() -> MotifSpec {
    MotifSpec {
        name: "location-leak".into(),
        nodes: 3,
        edges: vec![(0, 1), (1, 2)],
        labels: BTreeMap::from([
            (
                "api".to_string(),
                vec!["getLatitude".into(), "getLongitude".into(), "writeBytes".into()],
            ),
            (
                "perm".to_string(),
                vec!["ACCESS_FINE_LOCATION".into(), "ACCESS_FINE_LOCATION".into(), "INTERNET".into()],
            ),
        ]),
    }
}

fn sms_motif() -> MotifSpec {
    MotifSpec {
        name: "premium-sms".into(),
        nodes: 3,
        edges: vec![(0, 1), (1, 2), (0, 2)],
        labels: BTreeMap::from([
            (
                "api".to_string(),
                vec!["getDeviceId".into(), "getLine1Number".into(), "sendTextMessage".into()],
            ),
            (
                "perm".to_string(),
                vec!["READ_PHONE_STATE".into(), "READ_PHONE_STATE".into(), "SEND_SMS".into()],
            ),
        ]),
    }
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_benign: 100,
            n_malicious: 100,
            views: vec![
                ViewSpec {
                    name: "api".into(),
                    alphabet: 60,
                },
                ViewSpec {
                    name: "perm".into(),
                    alphabet: 15,
                },
            ],
            classes_per_app: Span(8, 16),
            methods_per_class: Span(1, 3),
            host_nodes: Span(2, 5),
            host_edge_prob: 0.2,
            call_prob: 0.3,
            multi_label_prob: 0.1,
            motifs: vec![leak_motif(), sms_motif()],
            context_alphabet: vec!["user-aware".into(), "user-unaware".into()],
            malice_context: "user-unaware".into(),
            malice_classes_per_app: Span(1, 2),
            decoy_motif_prob: 0.5,
            decoy_scatter_prob: 0.5,
        }
    }
}

impl GenConfig {
    /// One informative view and one view whose labels ignore the class.
    pub fn signal_noise(seed: u64) -> Self {
        let mut motif = leak_motif();
        motif.labels = BTreeMap::from([("signal".to_string(), motif.labels["api"].clone())]);
        Self {
            seed,
            n_benign: 60,
            n_malicious: 60,
            views: vec![
                ViewSpec {
                    name: "signal".into(),
                    alphabet: 40,
                },
                ViewSpec {
                    name: "noise".into(),
                    alphabet: 40,
                },
            ],
            classes_per_app: Span(4, 8),
            motifs: vec![motif],
            malice_classes_per_app: Span(1, 1),
            ..Self::default()
        }
    }

    /// Piggybacked corpus for localization: ~70 classes per app and 2–3
    /// rider classes per malicious app.
    pub fn piggyback(seed: u64, n_benign: usize, n_malicious: usize) -> Self {
        Self {
            seed,
            n_benign,
            n_malicious,
            classes_per_app: Span(60, 78),
            methods_per_class: Span(1, 2),
            host_nodes: Span(2, 4),
            malice_classes_per_app: Span(2, 3),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.views.is_empty() {
            return bad("at least one view is required".into());
        }
        let names: BTreeSet<&str> = self.views.iter().map(|v| v.name.as_str()).collect();
        if names.len() != self.views.len() {
            return bad("view names must be unique".into());
        }
        if let Some(v) = self.views.iter().find(|v| v.alphabet == 0) {
            return bad(format!("view {:?} has an empty alphabet", v.name));
        }
        for (what, s) in [
            ("classes_per_app", self.classes_per_app),
            ("methods_per_class", self.methods_per_class),
            ("host_nodes", self.host_nodes),
            ("malice_classes_per_app", self.malice_classes_per_app),
        ] {
            if s.0 > s.1 {
                return bad(format!("{what}: min {} exceeds max {}", s.0, s.1));
            }
        }
        if self.classes_per_app.0 == 0 || self.methods_per_class.0 == 0 || self.host_nodes.0 == 0 {
            return bad("classes, methods and blocks per method must be at least 1".into());
        }
        if !(self.host_edge_prob > 0.0 && self.host_edge_prob < 1.0) {
            return bad(format!("host_edge_prob {} is not in (0, 1)", self.host_edge_prob));
        }
        for (what, p) in [
            ("call_prob", self.call_prob),
            ("multi_label_prob", self.multi_label_prob),
            ("decoy_motif_prob", self.decoy_motif_prob),
            ("decoy_scatter_prob", self.decoy_scatter_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{what} {p} is not in [0, 1]"));
            }
        }
        if self.context_alphabet.is_empty() {
            return bad("context alphabet is empty".into());
        }
        if !self.context_alphabet.contains(&self.malice_context) {
            return bad(format!("malice context {:?} is not in the alphabet", self.malice_context));
        }
        if self.decoy_motif_prob > 0.0 && self.context_alphabet.len() < 2 {
            return bad("motif decoys need a context other than the malice context".into());
        }
        if self.n_malicious > 0 && (self.motifs.is_empty() || self.malice_classes_per_app.1 == 0) {
            return bad("malicious samples need at least one motif and one rider class".into());
        }
        for m in &self.motifs {
            if !(2..=6).contains(&m.nodes) {
                return bad(format!("motif {:?} has {} nodes, expected 2-6", m.name, m.nodes));
            }
            // scattered decoys put each motif label in its own host method
            let min_methods = self.classes_per_app.0 * self.methods_per_class.0;
            if self.decoy_scatter_prob > 0.0 && m.nodes > min_methods {
                return bad(format!(
                    "motif {:?} has {} nodes but the smallest host has {min_methods} methods",
                    m.name, m.nodes
                ));
            }
            if let Some(e) = m.edges.iter().find(|&&(s, t)| s >= m.nodes || t >= m.nodes) {
                return bad(format!("motif {:?} edge {e:?} is out of range", m.name));
            }
            for (view, labels) in &m.labels {
                if !names.contains(view.as_str()) {
                    return bad(format!("motif {:?} names unknown view {view:?}", m.name));
                }
                if labels.len() != m.nodes || labels.iter().any(|l| l.is_empty()) {
                    return bad(format!("motif {:?} needs one label per node in view {view:?}", m.name));
                }
            }
        }
        Ok(())
    }
}

/// SplitMix64 finalizer; derives independent per-sample seeds.
fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Block {
    id: String,
    method: String,
    class: String,
    contexts: BTreeSet<String>,
    /// Per-view labels, in `cfg.views` order.
    labels: Vec<Vec<String>>,
}

struct AppBuilder<'a> {
    cfg: &'a GenConfig,
    rng: ChaCha8Rng,
    blocks: Vec<Block>,
    edges: Vec<(usize, usize)>,
    /// Entry block of every method.
    entries: Vec<usize>,
    next_class: usize,
}

impl<'a> AppBuilder<'a> {
    fn new(cfg: &'a GenConfig, rng: ChaCha8Rng) -> Self {
        Self {
            cfg,
            rng,
            blocks: Vec::new(),
            edges: Vec::new(),
            entries: Vec::new(),
            next_class: 0,
        }
    }

    fn random_label(&mut self, view: usize) -> String {
        let vspec = &self.cfg.views[view];
        let u: f64 = self.rng.gen();
        // skewed towards small indices, like API popularity
        let k = ((u * u) * vspec.alphabet as f64) as usize;
        format!("{}:{}", vspec.name, k.min(vspec.alphabet - 1))
    }

    fn random_labels(&mut self) -> Vec<Vec<String>> {
        (0..self.cfg.views.len())
            .map(|v| {
                let mut ls = vec![self.random_label(v)];
                if self.rng.gen_bool(self.cfg.multi_label_prob) {
                    ls.push(self.random_label(v));
                }
                ls.sort();
                ls.dedup();
                ls
            })
            .collect()
    }

    fn random_context(&mut self) -> String {
        self.cfg.context_alphabet.choose(&mut self.rng).unwrap().clone()
    }

    fn benign_context(&mut self) -> String {
        let others: Vec<&String> = self
            .cfg
            .context_alphabet
            .iter()
            .filter(|c| **c != self.cfg.malice_context)
            .collect();
        (*others.choose(&mut self.rng).unwrap()).clone()
    }

    fn new_class(&mut self) -> String {
        let c = format!("C{:03}", self.next_class);
        self.next_class += 1;
        c
    }

    /// Adds a method of `n` chained blocks; returns their indices.
    fn add_method(&mut self, class: &str, method: usize, n: usize, context: &str) -> Vec<usize> {
        let method_id = format!("{class}.m{method}");
        let start = self.blocks.len();
        for b in 0..n {
            let labels = self.random_labels();
            self.blocks.push(Block {
                id: format!("{method_id}@bb{b}"),
                method: method_id.clone(),
                class: class.to_string(),
                contexts: BTreeSet::from([context.to_string()]),
                labels,
            });
        }
        let idx: Vec<usize> = (start..start + n).collect();
        for w in idx.windows(2) {
            self.edges.push((w[0], w[1]));
        }
        for &s in &idx {
            for &t in &idx {
                if s != t && t != s + 1 && self.rng.gen_bool(self.cfg.host_edge_prob) {
                    self.edges.push((s, t));
                }
            }
        }
        self.entries.push(start);
        idx
    }

    fn add_host(&mut self) {
        let classes = self.cfg.classes_per_app.sample(&mut self.rng);
        for _ in 0..classes {
            let class = self.new_class();
            let methods = self.cfg.methods_per_class.sample(&mut self.rng);
            for m in 0..methods {
                let n = self.cfg.host_nodes.sample(&mut self.rng);
                let ctx = self.random_context();
                self.add_method(&class, m, n, &ctx);
            }
        }
    }

    fn add_calls(&mut self) {
        let entries = self.entries.clone();
        if entries.len() < 2 {
            return;
        }
        for (i, &entry) in entries.iter().enumerate() {
            if self.rng.gen_bool(self.cfg.call_prob) {
                let mut j = self.rng.gen_range(0..entries.len() - 1);
                if j >= i {
                    j += 1;
                }
                let src = entry + self.rng.gen_range(0..1 + self.method_len(entry));
                self.edges.push((src.min(self.blocks.len() - 1), entries[j]));
            }
        }
    }

    fn method_len(&self, entry: usize) -> usize {
        let m = &self.blocks[entry].method;
        self.blocks[entry..].iter().take_while(|b| &b.method == m).count() - 1
    }

    /// Writes the motif's reserved labels onto `nodes` (views without motif
    /// labels keep their random labels).
    fn label_motif(&mut self, motif: &MotifSpec, nodes: &[usize]) {
        for (v, vspec) in self.cfg.views.iter().enumerate() {
            if let Some(labels) = motif.labels.get(&vspec.name) {
                for (pos, &n) in nodes.iter().enumerate() {
                    self.blocks[n].labels[v] = vec![labels[pos].clone()];
                }
            }
        }
    }

    /// Adds a method holding one motif instance, wired per the motif edges,
    /// after a filler entry block.
    fn add_motif_method(&mut self, class: &str, method: usize, motif: &MotifSpec, context: &str) -> Vec<usize> {
        let method_id = format!("{class}.m{method}");
        let start = self.blocks.len();
        for b in 0..=motif.nodes {
            let labels = self.random_labels();
            self.blocks.push(Block {
                id: format!("{method_id}@bb{b}"),
                method: method_id.clone(),
                class: class.to_string(),
                contexts: BTreeSet::from([context.to_string()]),
                labels,
            });
        }
        let nodes: Vec<usize> = (start + 1..=start + motif.nodes).collect();
        self.edges.push((start, nodes[0]));
        for &(s, t) in &motif.edges {
            self.edges.push((nodes[s], nodes[t]));
        }
        self.label_motif(motif, &nodes);
        self.entries.push(start);
        nodes
    }

    fn add_decoys(&mut self) {
        let cfg = self.cfg;
        if cfg.motifs.is_empty() {
            return;
        }
        if self.rng.gen_bool(cfg.decoy_motif_prob) {
            let motif = cfg.motifs.choose(&mut self.rng).unwrap();
            let class = self.new_class();
            let ctx = self.benign_context();
            self.add_motif_method(&class, 0, motif, &ctx);
        }
        if self.rng.gen_bool(cfg.decoy_scatter_prob) {
            let motif = cfg.motifs.choose(&mut self.rng).unwrap();
            // one motif label per distinct host method, no motif edges
            let mut entries = self.entries.clone();
            entries.shuffle(&mut self.rng);
            for (pos, &entry) in entries.iter().take(motif.nodes).enumerate() {
                let target = entry + self.rng.gen_range(0..1 + self.method_len(entry));
                for (v, vspec) in cfg.views.iter().enumerate() {
                    if let Some(labels) = motif.labels.get(&vspec.name) {
                        self.blocks[target].labels[v] = vec![labels[pos].clone()];
                    }
                }
                self.blocks[target].contexts = BTreeSet::from([cfg.malice_context.clone()]);
            }
        }
    }

    /// Adds rider classes; returns their class ids.
    fn add_riders(&mut self) -> BTreeSet<String> {
        let cfg = self.cfg;
        let riders = cfg.malice_classes_per_app.sample(&mut self.rng);
        let mut classes = BTreeSet::new();
        let host_entries = self.entries.clone();
        for r in 0..riders {
            let class = self.new_class();
            let motif = &cfg.motifs[(r + self.rng.gen_range(0..cfg.motifs.len())) % cfg.motifs.len()];
            let first = self.blocks.len();
            self.add_motif_method(&class, 0, motif, &cfg.malice_context);
            if let Some(&host) = host_entries.choose(&mut self.rng) {
                self.edges.push((host, first));
            }
            classes.insert(class);
        }
        classes
    }

    fn finish(mut self, id: String, label: i8, malice: Option<BTreeSet<String>>) -> Result<Sample> {
        // shuffle class numbering so rider classes are not the highest ids
        let n_classes = self.next_class;
        let mut perm: Vec<usize> = (0..n_classes).collect();
        perm.shuffle(&mut self.rng);
        let rename = |c: &str| -> String {
            let k: usize = c[1..].parse().expect("class ids are C<number>");
            format!("C{:03}", perm[k])
        };
        let edges: Vec<(String, String)> = {
            let mut e: Vec<(usize, usize)> = self.edges.clone();
            e.sort_unstable();
            e.dedup();
            e.into_iter()
                .map(|(s, t)| {
                    let (a, b) = (&self.blocks[s], &self.blocks[t]);
                    (
                        format!("{}{}", rename(&a.class), &a.id[a.class.len()..]),
                        format!("{}{}", rename(&b.class), &b.id[b.class.len()..]),
                    )
                })
                .collect()
        };
        let mut views = BTreeMap::new();
        for (v, vspec) in self.cfg.views.iter().enumerate() {
            let nodes: Vec<NodeRecord> = self
                .blocks
                .iter()
                .map(|b| {
                    let class = rename(&b.class);
                    NodeRecord {
                        id: format!("{class}{}", &b.id[b.class.len()..]),
                        labels: b.labels[v].clone(),
                        contexts: b.contexts.clone(),
                        method: Some(format!("{class}{}", &b.method[b.class.len()..])),
                        class: Some(class),
                    }
                })
                .collect();
            let g = ContextualGraph::new(nodes, &edges).map_err(|m| Error::invalid(&id, m))?;
            views.insert(vspec.name.clone(), g);
        }
        let malice_groups = malice.map(|m| m.iter().map(|c| rename(c)).collect());
        Ok(Sample {
            id,
            label: Some(label),
            views,
            malice_groups,
        })
    }
}

fn generate_sample(cfg: &GenConfig, index: usize, label: i8) -> Result<Sample> {
    let rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, index as u64 + 1));
    let mut app = AppBuilder::new(cfg, rng);
    app.add_host();
    app.add_decoys();
    let malice = (label == MALICIOUS).then(|| app.add_riders());
    app.add_calls();
    app.finish(format!("app-{index:05}"), label, malice)
}

/// Generates the corpus; identical configs give identical datasets.
pub fn generate(cfg: &GenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut labels: Vec<i8> = std::iter::repeat_n(BENIGN, cfg.n_benign)
        .chain(std::iter::repeat_n(MALICIOUS, cfg.n_malicious))
        .collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0)));
    let samples = labels
        .par_iter()
        .enumerate()
        .map(|(i, &y)| generate_sample(cfg, i, y))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples)
}

/// Whether `sample` contains `motif` in `view` as an exact labeled subgraph
/// whose nodes all carry `context` and lie in classes from `within`.
pub fn contains_motif(
    sample: &Sample,
    view: &str,
    motif: &MotifSpec,
    context: &str,
    within: &BTreeSet<String>,
) -> bool {
    let Some(g) = sample.views.get(view) else {
        return false;
    };
    let Some(labels) = motif.labels.get(view) else {
        return false;
    };
    let candidates: Vec<Vec<usize>> = labels
        .iter()
        .map(|l| {
            g.nodes()
                .iter()
                .enumerate()
                .filter(|(_, n)| {
                    n.labels.iter().any(|x| x == l)
                        && n.contexts.contains(context)
                        && n.class.as_ref().is_some_and(|c| within.contains(c))
                })
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let edges: BTreeSet<(usize, usize)> = g.edges().iter().copied().collect();
    fn search(
        pos: usize,
        chosen: &mut Vec<usize>,
        cands: &[Vec<usize>],
        motif: &MotifSpec,
        edges: &BTreeSet<(usize, usize)>,
    ) -> bool {
        if pos == cands.len() {
            return motif
                .edges
                .iter()
                .all(|&(s, t)| edges.contains(&(chosen[s], chosen[t])));
        }
        for &c in &cands[pos] {
            if chosen.contains(&c) {
                continue;
            }
            chosen.push(c);
            if search(pos + 1, chosen, cands, motif, edges) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    search(0, &mut Vec::new(), &candidates, motif, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::write_dataset;

    fn small() -> GenConfig {
        GenConfig {
            n_benign: 6,
            n_malicious: 6,
            ..GenConfig::default()
        }
    }

    fn bytes(ds: &Dataset) -> Vec<u8> {
        let mut out = Vec::new();
        write_dataset(ds, &mut out).unwrap();
        out
    }

    #[test]
    fn no_malicious_samples_means_no_malice_groups() {
        let ds = generate(&GenConfig {
            n_malicious: 0,
            ..small()
        })
        .unwrap();
        assert!(ds.samples().iter().all(|s| s.label == Some(-1) && s.malice_groups.is_none()));
    }

    #[test]
    fn same_seed_same_bytes() {
        assert_eq!(bytes(&generate(&small()).unwrap()), bytes(&generate(&small()).unwrap()));
        let other = GenConfig { seed: 8, ..small() };
        assert_ne!(bytes(&generate(&small()).unwrap()), bytes(&generate(&other).unwrap()));
    }

    #[test]
    fn every_malicious_sample_contains_a_planted_motif() {
        let cfg = small();
        let ds = generate(&cfg).unwrap();
        for s in ds.samples().iter().filter(|s| s.label == Some(1)) {
            let groups = s.malice_groups.as_ref().unwrap();
            assert!(!groups.is_empty());
            for view in ["api", "perm"] {
                let found = cfg
                    .motifs
                    .iter()
                    .any(|m| contains_motif(s, view, m, &cfg.malice_context, groups));
                assert!(found, "sample {} view {view}", s.id);
            }
            // each rider class holds a full motif on its own
            for g in groups {
                let one = BTreeSet::from([g.clone()]);
                assert!(cfg.motifs.iter().any(|m| contains_motif(s, "api", m, &cfg.malice_context, &one)));
            }
        }
    }

    #[test]
    fn views_share_nodes_and_edges() {
        let ds = generate(&small()).unwrap();
        for s in ds.samples() {
            let api = &s.views["api"];
            let perm = &s.views["perm"];
            assert_eq!(api.edges(), perm.edges());
            let ids = |g: &ContextualGraph| g.nodes().iter().map(|n| n.id.clone()).collect::<Vec<_>>();
            assert_eq!(ids(api), ids(perm));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = small();
        cfg.host_edge_prob = 1.0;
        assert!(generate(&cfg).is_err());
        let mut cfg = small();
        cfg.motifs[0].nodes = 9;
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.classes_per_app = Span(1, 4);
        cfg.methods_per_class = Span(1, 1);
        assert!(cfg.validate().is_err());
        cfg.decoy_scatter_prob = 0.0;
        assert!(cfg.validate().is_ok());
        let mut cfg = small();
        cfg.malice_context = "nowhere".into();
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.classes_per_app = Span(5, 2);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = GenConfig::signal_noise(3);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<GenConfig>(&text).unwrap(), cfg);
        assert!(serde_json::from_str::<GenConfig>(&text.replace("\"seed\":3", "\"seed\":\"x\"")).is_err());
    }
}
