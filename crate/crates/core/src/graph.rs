//! Context-annotated dependency graphs, multi-view samples, and the
//! line-delimited JSON dataset format.
//!
//! Graphs are stored canonically: nodes sorted by id, edges sorted by
//! `(source, target)`. This makes `save_dataset` byte-stable and
//! `load_dataset(save_dataset(ds)) == ds`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label value for benign samples.
pub const BENIGN: i8 = -1;
/// Label value for malicious samples.
pub const MALICIOUS: i8 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord {
    pub id: String,
    /// Sorted, duplicate-free, non-empty.
    pub labels: Vec<String>,
    /// Non-empty.
    pub contexts: BTreeSet<String>,
    pub method: Option<String>,
    pub class: Option<String>,
}

impl NodeRecord {
    pub fn new(id: impl Into<String>, labels: &[&str], contexts: &[&str]) -> Self {
        let mut labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        labels.sort();
        labels.dedup();
        Self {
            id: id.into(),
            labels,
            contexts: contexts.iter().map(|s| s.to_string()).collect(),
            method: None,
            class: None,
        }
    }

    pub fn with_groups(mut self, method: Option<&str>, class: Option<&str>) -> Self {
        self.method = method.map(str::to_string);
        self.class = class.map(str::to_string);
        self
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.labels.is_empty() {
            return Err(format!("node {:?} has no labels", self.id));
        }
        if self.labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!(
                "node {:?} labels must be sorted and duplicate-free",
                self.id
            ));
        }
        if self.contexts.is_empty() {
            return Err(format!("node {:?} has no contexts", self.id));
        }
        // vocabulary files are line- and tab-delimited
        let bad = |s: &String| s.is_empty() || s.chars().any(char::is_control);
        if self.labels.iter().chain(&self.contexts).any(bad) {
            return Err(format!(
                "node {:?} has an empty label or context, or one with control characters",
                self.id
            ));
        }
        Ok(())
    }
}

/// A directed graph whose nodes carry label lists, context sets and
/// optional method/class group tags.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContextualGraph {
    nodes: Vec<NodeRecord>,
    edges: Vec<(usize, usize)>,
    successors: Vec<Vec<usize>>,
}

impl ContextualGraph {
    /// Validates and canonicalizes a graph given by node records and
    /// `(source id, target id)` edges.
    pub fn new<S: AsRef<str>>(mut nodes: Vec<NodeRecord>, edges: &[(S, S)]) -> Result<Self, String> {
        for node in &nodes {
            node.validate()?;
        }
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = nodes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(format!("duplicate node id {:?}", w[0].id));
        }
        let index: HashMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let mut dense = Vec::with_capacity(edges.len());
        for (src, dst) in edges {
            let (src, dst) = (src.as_ref(), dst.as_ref());
            let s = *index
                .get(src)
                .ok_or_else(|| format!("edge source {src:?} is not a node"))?;
            let t = *index
                .get(dst)
                .ok_or_else(|| format!("edge target {dst:?} is not a node"))?;
            dense.push((s, t));
        }
        dense.sort_unstable();
        let mut successors = vec![Vec::new(); nodes.len()];
        for &(s, t) in &dense {
            successors[s].push(t);
        }
        Ok(Self {
            nodes,
            edges: dense,
            successors,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as dense node indices, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Out-neighbors of node `index` (with multiplicity for parallel edges).
    pub fn successors(&self, index: usize) -> &[usize] {
        &self.successors[index]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.id.as_str().cmp(id)).ok()
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges
            .iter()
            .map(|&(s, t)| (self.nodes[s].id.as_str(), self.nodes[t].id.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    /// `-1` benign, `+1` malicious, `None` for unlabeled inputs.
    pub label: Option<i8>,
    pub views: BTreeMap<String, ContextualGraph>,
    /// Ground-truth class group ids of injected code, for localization scoring.
    pub malice_groups: Option<BTreeSet<String>>,
}

impl Sample {
    pub fn view(&self, name: &str) -> Result<&ContextualGraph> {
        self.views.get(name).ok_or_else(|| Error::MissingView {
            sample: self.id.clone(),
            view: name.to_string(),
        })
    }

    pub fn view_names(&self) -> Vec<String> {
        self.views.keys().cloned().collect()
    }
}

/// An ordered collection of samples sharing one set of view names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    samples: Vec<Sample>,
    view_names: Vec<String>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let view_names = samples.first().map(Sample::view_names).unwrap_or_default();
        if !samples.is_empty() && view_names.is_empty() {
            return Err(Error::invalid(&samples[0].id, "sample has no views"));
        }
        let mut seen = BTreeSet::new();
        for sample in &samples {
            if !seen.insert(sample.id.as_str()) {
                return Err(Error::invalid(&sample.id, "duplicate sample id"));
            }
            if let Some(label) = sample.label {
                if label != BENIGN && label != MALICIOUS {
                    return Err(Error::invalid(&sample.id, format!("label {label} is not -1 or +1")));
                }
            }
            if !sample.views.keys().eq(view_names.iter()) {
                return Err(Error::invalid(
                    &sample.id,
                    format!(
                        "view set {:?} differs from dataset views {:?}",
                        sample.view_names(),
                        view_names
                    ),
                ));
            }
        }
        Ok(Self {
            samples,
            view_names,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn view_names(&self) -> &[String] {
        &self.view_names
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.id == id)
    }

    /// Labels of every sample; fails if any sample is unlabeled.
    pub fn labels(&self) -> Result<Vec<i8>> {
        self.samples
            .iter()
            .map(|s| {
                s.label
                    .ok_or_else(|| Error::invalid(&s.id, "sample is unlabeled"))
            })
            .collect()
    }

    /// Graphs of one view, in sample order.
    pub fn view_graphs(&self, view: &str) -> Result<Vec<&ContextualGraph>> {
        if !self.view_names.iter().any(|v| v == view) {
            return Err(Error::UnknownView(view.to_string()));
        }
        self.samples.iter().map(|s| s.view(view)).collect()
    }

    /// A dataset holding the samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            view_names: self.view_names.clone(),
        }
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }
}

// On-disk records. Field order is alphabetical so serde_json emits sorted keys.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    label: Option<i64>,
    #[serde(default)]
    malice_groups: Option<Vec<String>>,
    views: BTreeMap<String, RawGraph>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    #[serde(default, skip_serializing)]
    directed: Option<bool>,
    edges: Vec<(String, String)>,
    nodes: Vec<RawNode>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    #[serde(default)]
    class: Option<String>,
    contexts: Vec<String>,
    id: String,
    labels: Vec<String>,
    #[serde(default)]
    method: Option<String>,
}

impl RawRecord {
    fn into_sample(self) -> Result<Sample> {
        let id = self.id;
        let label = match self.label {
            None => None,
            Some(1) => Some(MALICIOUS),
            Some(-1) => Some(BENIGN),
            Some(other) => return Err(Error::invalid(&id, format!("label {other} is not -1 or +1"))),
        };
        let mut views = BTreeMap::new();
        for (name, raw) in self.views {
            if raw.directed == Some(false) {
                return Err(Error::invalid(&id, format!("view {name:?} is undirected")));
            }
            let mut nodes = Vec::with_capacity(raw.nodes.len());
            for n in raw.nodes {
                let contexts: BTreeSet<String> = n.contexts.iter().cloned().collect();
                if contexts.len() != n.contexts.len() {
                    return Err(Error::invalid(
                        &id,
                        format!("view {name:?}: node {:?} has duplicate contexts", n.id),
                    ));
                }
                nodes.push(NodeRecord {
                    id: n.id,
                    labels: n.labels,
                    contexts,
                    method: n.method,
                    class: n.class,
                });
            }
            let graph = ContextualGraph::new(nodes, &raw.edges)
                .map_err(|m| Error::invalid(&id, format!("view {name:?}: {m}")))?;
            views.insert(name, graph);
        }
        let malice_groups = self.malice_groups.map(|g| g.into_iter().collect());
        Ok(Sample {
            id,
            label,
            views,
            malice_groups,
        })
    }

    fn from_sample(sample: &Sample) -> Self {
        let views = sample
            .views
            .iter()
            .map(|(name, g)| {
                let nodes = g
                    .nodes()
                    .iter()
                    .map(|n| RawNode {
                        class: n.class.clone(),
                        contexts: n.contexts.iter().cloned().collect(),
                        id: n.id.clone(),
                        labels: n.labels.clone(),
                        method: n.method.clone(),
                    })
                    .collect();
                let edges = g
                    .edge_ids()
                    .map(|(s, t)| (s.to_string(), t.to_string()))
                    .collect();
                (
                    name.clone(),
                    RawGraph {
                        directed: None,
                        edges,
                        nodes,
                    },
                )
            })
            .collect();
        RawRecord {
            id: sample.id.clone(),
            label: sample.label.map(i64::from),
            malice_groups: sample
                .malice_groups
                .as_ref()
                .map(|g| g.iter().cloned().collect()),
            views,
        }
    }
}

/// Parses a dataset from line-delimited JSON text. Blank lines are skipped.
pub fn parse_dataset(reader: impl BufRead) -> Result<Dataset> {
    let mut samples: Vec<Sample> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let sample = raw.into_sample().map_err(|e| match e {
            Error::Invalid { sample, message } => Error::Invalid {
                sample,
                message: format!("line {}: {message}", lineno + 1),
            },
            other => other,
        })?;
        samples.push(sample);
    }
    Dataset::new(samples)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(BufReader::new(file))
}

/// Writes the canonical serialization: one record per line, keys sorted.
pub fn write_dataset(ds: &Dataset, mut writer: impl Write) -> std::io::Result<()> {
    for sample in &ds.samples {
        let line = serde_json::to_string(&RawRecord::from_sample(sample))?;
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(ds, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_dataset(text.as_bytes())
    }

    const ONE: &str = r#"{"id":"s1","label":1,"malice_groups":null,"views":{"api":{"edges":[["a","b"]],"nodes":[{"class":"C","contexts":["user-aware"],"id":"a","labels":["x"],"method":"C.m"},{"class":null,"contexts":["user-unaware"],"id":"b","labels":["y","z"],"method":null}]}}}"#;

    #[test]
    fn empty_input_gives_empty_dataset() {
        let ds = parse("").unwrap();
        assert!(ds.is_empty());
        assert!(ds.view_names().is_empty());
        let mut out = Vec::new();
        write_dataset(&ds, &mut out).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn single_sample_round_trips_bytes() {
        let ds = parse(ONE).unwrap();
        assert_eq!(ds.len(), 1);
        let g = ds.samples()[0].view("api").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.successors(0), &[1]);
        let mut out = Vec::new();
        write_dataset(&ds, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{ONE}\n"));
    }

    #[test]
    fn inconsistent_views_name_the_offending_sample() {
        let first = r#"{"id":"s1","label":-1,"views":{"api":{"edges":[],"nodes":[]},"perm":{"edges":[],"nodes":[]}}}"#;
        let second = r#"{"id":"s2","label":-1,"views":{"api":{"edges":[],"nodes":[]}}}"#;
        let err = parse(&format!("{first}\n{second}\n")).unwrap_err();
        match err {
            Error::Invalid { sample, .. } => assert_eq!(sample, "s2"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse(&format!("{ONE}\n{{not json\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn invariant_violations_are_rejected() {
        let cases = [
            // unknown edge endpoint
            r#"{"id":"s","label":1,"views":{"v":{"edges":[["a","q"]],"nodes":[{"contexts":["c"],"id":"a","labels":["x"]}]}}}"#,
            // empty context set
            r#"{"id":"s","label":1,"views":{"v":{"edges":[],"nodes":[{"contexts":[],"id":"a","labels":["x"]}]}}}"#,
            // unsorted labels
            r#"{"id":"s","label":1,"views":{"v":{"edges":[],"nodes":[{"contexts":["c"],"id":"a","labels":["y","x"]}]}}}"#,
            // duplicate node id
            r#"{"id":"s","label":1,"views":{"v":{"edges":[],"nodes":[{"contexts":["c"],"id":"a","labels":["x"]},{"contexts":["c"],"id":"a","labels":["x"]}]}}}"#,
            // empty label
            r#"{"id":"s","label":1,"views":{"v":{"edges":[],"nodes":[{"contexts":["c"],"id":"a","labels":[""]}]}}}"#,
            // tab inside a context
            r#"{"id":"s","label":1,"views":{"v":{"edges":[],"nodes":[{"contexts":["c\td"],"id":"a","labels":["x"]}]}}}"#,
            // bad label value
            r#"{"id":"s","label":0,"views":{"v":{"edges":[],"nodes":[]}}}"#,
            // undirected
            r#"{"id":"s","label":1,"views":{"v":{"directed":false,"edges":[],"nodes":[]}}}"#,
        ];
        for case in cases {
            let err = parse(case).unwrap_err();
            assert!(matches!(err, Error::Invalid { .. }), "{case}: {err}");
        }
    }

    #[test]
    fn duplicate_sample_ids_are_rejected() {
        let rec = r#"{"id":"s","label":1,"views":{"v":{"edges":[],"nodes":[]}}}"#;
        assert!(parse(&format!("{rec}\n{rec}")).is_err());
    }

    #[test]
    fn self_loops_are_ordinary_edges() {
        let g = ContextualGraph::new(vec![NodeRecord::new("a", &["x"], &["c"])], &[("a", "a")]).unwrap();
        assert_eq!(g.successors(0), &[0]);
    }
}
