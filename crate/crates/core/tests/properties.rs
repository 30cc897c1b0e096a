use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use cwlmkl::featurize::ViewFeatures;
use cwlmkl::graph::{parse_dataset, write_dataset};
use cwlmkl::localize::award_mscores;
use cwlmkl::mkl::{assemble, mkl_train, KernelSolution};
use cwlmkl::select::chi2_statistic;
use cwlmkl::svm::dual_objective;
use cwlmkl::{
    embed, kernel_matrix, smo_train, ContextualGraph, CwlConfig, Dataset, DualSolution, MklConfig, NodeRecord,
    Sample, SparseVector, SvmConfig, Vocabulary,
};

const LABELS: &[&str] = &["a", "b", "c", "x,y", "(z)"];
const CONTEXTS: &[&str] = &["aware", "unaware"];

#[derive(Debug, Clone)]
struct RawGraph {
    nodes: Vec<(Vec<usize>, Vec<usize>)>,
    edges: Vec<(usize, usize)>,
}

impl RawGraph {
    fn build(&self) -> ContextualGraph {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, (ls, cs))| {
                let ls: Vec<&str> = ls.iter().map(|&l| LABELS[l]).collect();
                let cs: Vec<&str> = cs.iter().map(|&c| CONTEXTS[c]).collect();
                NodeRecord::new(format!("n{i}"), &ls, &cs)
                    .with_groups(Some(&format!("K{}.m", i % 2)), Some(&format!("K{}", i % 2)))
            })
            .collect();
        let edges: Vec<(String, String)> = self.edges.iter().map(|(s, t)| (format!("n{s}"), format!("n{t}"))).collect();
        ContextualGraph::new(nodes, &edges).unwrap()
    }
}

fn raw_graph(max_nodes: usize) -> impl Strategy<Value = RawGraph> {
    (1..=max_nodes).prop_flat_map(|n| {
        let node = (
            prop::collection::btree_set(0..LABELS.len(), 1..=2).prop_map(|s| s.into_iter().collect()),
            prop::collection::btree_set(0..CONTEXTS.len(), 1..=2).prop_map(|s| s.into_iter().collect()),
        );
        (
            prop::collection::vec(node, n),
            prop::collection::vec((0..n, 0..n), 0..=2 * n),
        )
            .prop_map(|(nodes, edges)| RawGraph { nodes, edges })
    })
}

fn raw_embedding(g: &ContextualGraph, vocab: &Vocabulary, h: usize) -> SparseVector {
    let cfg = CwlConfig {
        normalize: false,
        ..CwlConfig::with_h(h)
    };
    embed(g, vocab, &cfg).unwrap().vector
}

fn dataset(graphs: Vec<(RawGraph, RawGraph)>, labels: Vec<Option<bool>>) -> Dataset {
    let samples = graphs
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, ((a, b), label))| Sample {
            id: format!("s\"{i}\t"),
            label: label.map(|m| if m { 1 } else { -1 }),
            views: BTreeMap::from([("api".to_string(), a.build()), ("perm ⊕".to_string(), b.build())]),
            malice_groups: label.filter(|&m| m).map(|_| BTreeSet::from(["K1".to_string()])),
        })
        .collect();
    Dataset::new(samples).unwrap()
}

fn vectors(n: usize, dim: usize) -> impl Strategy<Value = Vec<SparseVector>> {
    prop::collection::vec(prop::collection::vec(-2.0f64..2.0, dim), n)
        .prop_map(|rows| rows.iter().map(|r| SparseVector::from_dense(r)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dataset_round_trips_byte_stably(
        graphs in prop::collection::vec((raw_graph(5), raw_graph(5)), 1..4),
        labels in prop::collection::vec(prop::option::of(any::<bool>()), 3),
    ) {
        let labels = labels[..graphs.len()].to_vec();
        let ds = dataset(graphs, labels);
        let mut bytes = Vec::new();
        write_dataset(&ds, &mut bytes).unwrap();
        let back = parse_dataset(bytes.as_slice()).unwrap();
        prop_assert_eq!(&back, &ds);
        let mut again = Vec::new();
        write_dataset(&back, &mut again).unwrap();
        prop_assert_eq!(again, bytes);
    }

    #[test]
    fn corrupted_input_never_yields_an_invalid_dataset(
        g in raw_graph(4),
        pos in any::<prop::sample::Index>(),
        byte in any::<u8>(),
    ) {
        let ds = dataset(vec![(g.clone(), g)], vec![Some(true)]);
        let mut bytes = Vec::new();
        write_dataset(&ds, &mut bytes).unwrap();
        let i = pos.index(bytes.len());
        bytes[i] = byte;
        // either a diagnostic or a dataset that survives its own round trip
        if let Ok(parsed) = parse_dataset(bytes.as_slice()) {
            let mut out = Vec::new();
            write_dataset(&parsed, &mut out).unwrap();
            prop_assert_eq!(parse_dataset(out.as_slice()).unwrap(), parsed);
        }
    }

    #[test]
    fn changing_one_context_changes_every_height(g in raw_graph(6), node in any::<prop::sample::Index>(), h in 0usize..4) {
        let mut other = g.clone();
        let i = node.index(other.nodes.len());
        // both contexts → one; one context → the other
        other.nodes[i].1 = match other.nodes[i].1.as_slice() {
            [c] => vec![1 - c],
            _ => vec![0],
        };
        let (a, b) = (g.build(), other.build());
        let vocab = Vocabulary::build("v", &[&a, &b], &CwlConfig::with_h(h));
        let (ea, eb) = (raw_embedding(&a, &vocab, h), raw_embedding(&b, &vocab, h));
        prop_assert_ne!(&ea, &eb);
        // the changed node differs at each height, so each height's block differs
        for height in 0..=h {
            let va = Vocabulary::build("v", &[&a, &b], &CwlConfig::with_h(height));
            prop_assert_ne!(raw_embedding(&a, &va, height), raw_embedding(&b, &va, height));
        }
    }

    #[test]
    fn edges_that_change_a_successor_multiset_change_the_embedding(
        g in raw_graph(6),
        s in any::<prop::sample::Index>(),
        t in any::<prop::sample::Index>(),
        h in 1usize..4,
    ) {
        let mut other = g.clone();
        let n = other.nodes.len();
        other.edges.push((s.index(n), t.index(n)));
        let (a, b) = (g.build(), other.build());
        let vocab = Vocabulary::build("v", &[&a, &b], &CwlConfig::with_h(h));
        prop_assert_ne!(raw_embedding(&a, &vocab, h), raw_embedding(&b, &vocab, h));
    }

    #[test]
    fn chi2_is_non_negative_and_zero_exactly_for_independent_tables(
        a in 0u32..20, b in 0u32..20, c in 0u32..20, d in 0u32..20,
    ) {
        let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
        let x = chi2_statistic(a, b, c, d);
        prop_assert!(x >= 0.0);
        let margins_full = (a + b) * (c + d) * (a + c) * (b + d) > 0.0;
        if margins_full {
            prop_assert_eq!(x == 0.0, a * d == b * c);
        }
    }

    #[test]
    fn smo_never_decreases_the_objective_and_stays_in_the_box(
        xs in vectors(6, 3),
        signs in prop::collection::vec(any::<bool>(), 6),
        c in prop::sample::select(vec![0.1, 1.0, 10.0]),
    ) {
        let mut labels: Vec<i8> = signs.iter().map(|&s| if s { 1 } else { -1 }).collect();
        labels[0] = 1;
        labels[1] = -1;
        let k = kernel_matrix(&xs).unwrap();
        let mut last = 0.0;
        for passes in 1..=12 {
            let cfg = SvmConfig { c, tol: 1e-12, max_passes: Some(passes) };
            let sol = smo_train(&k, &labels, &cfg).unwrap();
            prop_assert!(sol.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
            let obj = dual_objective(&k, &labels, &sol.alpha);
            prop_assert!(obj >= last - 1e-12, "objective fell from {} to {}", last, obj);
            last = obj;
        }
    }

    #[test]
    fn composite_dot_products_reproduce_the_combined_kernel(
        a in vectors(5, 4),
        b in vectors(5, 3),
        betas in prop::collection::vec(0.0f64..3.0, 2),
        alpha in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let labels = vec![1, -1, 1, -1, 1];
        let per_view = vec![("a".to_string(), a.clone()), ("b".to_string(), b.clone())];
        let sol = KernelSolution {
            betas: betas.clone(),
            alpha: DualSolution { alpha, objective: 0.0, iterations: 0, max_violation: 0.0, converged: true },
            objective_trace: vec![],
            outer_iterations: 0,
            converged: true,
        };
        let fit = assemble(&per_view, &labels, sol, false).unwrap();
        let embed = |i: usize| {
            fit.composite_embed(&BTreeMap::from([("a".to_string(), a[i].clone()), ("b".to_string(), b[i].clone())]))
                .unwrap()
        };
        for i in 0..5 {
            for j in 0..5 {
                let want = betas[0] * a[i].dot(&a[j]).unwrap() + betas[1] * b[i].dot(&b[j]).unwrap();
                let got = embed(i).dot(&embed(j)).unwrap();
                prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn learned_weights_are_non_negative_and_follow_view_order(
        a in vectors(6, 3),
        b in vectors(6, 2),
    ) {
        let labels = vec![1, -1, 1, -1, 1, -1];
        let cfg = MklConfig::default();
        let forward = vec![("a".to_string(), a.clone()), ("b".to_string(), b.clone())];
        let reverse = vec![("b".to_string(), b.clone()), ("a".to_string(), a.clone())];
        let f = mkl_train(&forward, &labels, &cfg).unwrap();
        let r = mkl_train(&reverse, &labels, &cfg).unwrap();
        prop_assert!(f.views.iter().all(|v| v.beta >= 0.0));
        for (name, beta) in f.betas() {
            prop_assert!((beta - r.betas()[&name]).abs() <= 1e-6 * (1.0 + beta));
        }
        for i in 0..6 {
            let sample = BTreeMap::from([("a".to_string(), a[i].clone()), ("b".to_string(), b[i].clone())]);
            let (x, y) = (f.decision_value(&sample).unwrap(), r.decision_value(&sample).unwrap());
            prop_assert!((x - y).abs() <= 1e-6 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn node_scores_add_up_across_views_and_survive_rescaling(
        ga in raw_graph(6),
        gb in raw_graph(6),
        weights in prop::collection::vec(-1.0f64..1.0, 64),
        shift in 1i32..4,
    ) {
        let cfg = CwlConfig::with_h(1);
        let features: Vec<ViewFeatures> = [ga.build(), gb.build()]
            .iter()
            .map(|g| {
                let vocab = Vocabulary::build("v", &[g], &cfg);
                let e = embed(g, &vocab, &cfg).unwrap();
                ViewFeatures { vector: e.vector, trace: e.trace, scale: e.scale }
            })
            .collect();
        let per_view: Vec<(String, Vec<SparseVector>)> = features
            .iter()
            .enumerate()
            .map(|(v, f)| (format!("v{v}"), vec![f.vector.clone()]))
            .collect();
        let dim: usize = features.iter().map(|f| f.vector.dim()).sum();
        prop_assume!(dim <= weights.len());
        let sol = KernelSolution {
            betas: vec![0.7, 1.3],
            alpha: DualSolution { alpha: vec![1.0], objective: 0.0, iterations: 0, max_violation: 0.0, converged: true },
            objective_trace: vec![],
            outer_iterations: 0,
            converged: true,
        };
        let mut fit = assemble(&per_view, &[1], sol, false).unwrap();
        fit.composite_weights = SparseVector::from_dense(&weights[..dim]);
        let (combined, by_view) = award_mscores(&features, &fit).unwrap();
        for (node, total) in &combined {
            let sum: f64 = by_view.values().filter_map(|m| m.get(node)).sum();
            prop_assert!((total - sum).abs() <= 1e-12);
        }

        // scale view 0 by 2^shift and its weights by 2^-shift
        let factor = 2f64.powi(shift);
        let mut scaled = features.clone();
        scaled[0].vector = scaled[0].vector.scaled(factor);
        scaled[0].scale *= factor;
        let len0 = features[0].vector.dim();
        let mut w = weights[..dim].to_vec();
        for x in &mut w[..len0] {
            *x /= factor;
        }
        fit.composite_weights = SparseVector::from_dense(&w);
        let (again, _) = award_mscores(&scaled, &fit).unwrap();
        prop_assert_eq!(again, combined);
    }
}
