mod common;

use std::collections::BTreeSet;

use common::*;
use nnsql::graph::{GraphEdge, GraphNode};
use nnsql::oracle as native;
use nnsql::runner::{prunable_nodes, prune_cascade, stats};
use nnsql::sqlgen::{gen_unconnected_nodes, EdgeSource};
use nnsql::synth::{random_model, random_widths};
use nnsql::{model_to_graph, Activation, EngineSession, Error, Location, NetworkGraph, SessionOptions};
use rand::Rng;

fn node(id: i64, layer: usize) -> GraphNode {
    GraphNode { id, bias: 0.1, layer }
}

fn edge(src: i64, dst: i64, weight: f64) -> GraphEdge {
    GraphEdge { src, dst, weight }
}

fn unconnected(s: &EngineSession, source: EdgeSource) -> Vec<i64> {
    let t = s.execute(&gen_unconnected_nodes(0, &source).unwrap()).unwrap();
    (0..t.len()).map(|r| t.i64_at(r, "id").unwrap()).collect()
}

/// Inputs 0, 1; hidden 2, 3 then 4, 6; output 5.
fn crafted() -> NetworkGraph {
    NetworkGraph {
        nodes: vec![node(0, 0), node(1, 0), node(2, 1), node(3, 1), node(4, 2), node(5, 3), node(6, 2)],
        edges: vec![
            edge(0, 2, 0.001),
            edge(1, 2, -0.002),
            edge(0, 3, 0.5),
            edge(1, 3, 0.01),
            edge(2, 4, 0.8),
            edge(3, 4, 0.005),
            edge(3, 6, 0.9),
            edge(4, 5, 1.0),
            edge(6, 5, -0.7),
        ],
        activations: vec![Activation::Relu, Activation::Relu, Activation::Identity],
    }
}

#[test]
fn small_incoming_weights_are_prunable() {
    let s = session();
    load(&s, 0, &crafted());
    assert_eq!(prunable_nodes(&s, 0, 0.01).unwrap(), [2]);
}

#[test]
fn weight_equal_to_epsilon_is_kept() {
    let g = NetworkGraph {
        nodes: vec![node(0, 0), node(1, 0), node(2, 1), node(3, 1)],
        edges: vec![edge(0, 2, 0.25), edge(1, 2, 0.0), edge(0, 3, -0.25), edge(1, 3, 0.1)],
        activations: vec![Activation::Identity],
    };
    let s = session();
    load(&s, 0, &g);
    assert!(prunable_nodes(&s, 0, 0.25).unwrap().is_empty());
    assert_eq!(prunable_nodes(&s, 0, 0.25 + 1e-12).unwrap(), [2, 3]);
    assert!(native::prunable(&g, 0.25).is_empty());
}

#[test]
fn prunable_matches_native_scan() {
    let mut r = rng(50);
    for k in 0..4 {
        let depth = r.gen_range(1..=4);
        let widths = random_widths(&mut r, depth, 12, 8);
        let m = random_model(&mut r, &widths, Activation::Identity);
        let g = model_to_graph(&m);
        let s = session();
        load(&s, k, &g);
        let mut last = 0;
        for i in 1..=20 {
            let eps = i as f64 * 0.05;
            let got: BTreeSet<i64> = prunable_nodes(&s, k, eps).unwrap().into_iter().collect();
            assert_eq!(got, native::prunable(&g, eps));
            assert!(got.len() >= last);
            last = got.len();
        }
    }
}

#[test]
fn epsilon_must_be_positive() {
    let s = session();
    load(&s, 0, &crafted());
    for eps in [0.0, -1.0, f64::NAN] {
        assert!(matches!(prunable_nodes(&s, 0, eps), Err(Error::InvalidParameter(_))));
    }
}

#[test]
fn unconnected_after_pruning() {
    let s = session();
    load(&s, 0, &crafted());
    assert!(unconnected(&s, EdgeSource::Stored).is_empty());
    // both inputs of 2 drop below 0.01
    assert_eq!(unconnected(&s, EdgeSource::AboveThreshold(0.01)), [2]);
}

#[test]
fn intact_network_has_no_unconnected_units() {
    let s = session();
    load_model(&s, 0, &random_model(&mut rng(51), &[3, 4, 4, 2], Activation::Identity));
    assert!(unconnected(&s, EdgeSource::Stored).is_empty());
}

#[test]
fn cascade_reaches_native_fixpoint() {
    let g = crafted();
    let s = session();
    load(&s, 0, &g);
    let got = prune_cascade(&s, 0, 0.01).unwrap();
    let want = native::cascade(&g, 0.01);
    // 2 loses its inputs; with 3 -> 4 pruned, 4 is then fed by nothing
    assert_eq!(want.removed, BTreeSet::from([2, 4]));
    assert_eq!(got.removed_nodes.iter().copied().collect::<BTreeSet<_>>(), want.removed);
    assert_eq!(got.rounds, want.rounds);
    let mut kept = want.graph.edges.clone();
    kept.sort_by_key(|e| (e.dst, e.src));
    assert_eq!(got.kept_edges, kept);
    // the temporary table is gone and the stored model untouched
    assert_eq!(prune_cascade(&s, 0, 0.01).unwrap(), got);
    assert_eq!(nnsql::store::extract_graph(s.connection(), 0).unwrap().edges.len(), 9);
}

#[test]
fn random_cascades_match_native() {
    let mut r = rng(52);
    for k in 0..5 {
        let widths = random_widths(&mut r, 3, 6, 4);
        let m = random_model(&mut r, &widths, Activation::Identity);
        let g = model_to_graph(&m);
        let s = session();
        load(&s, 0, &g);
        let eps = 0.2 + 0.1 * k as f64;
        let got = prune_cascade(&s, 0, eps).unwrap();
        let want = native::cascade(&g, eps);
        assert_eq!(got.removed_nodes.iter().copied().collect::<BTreeSet<_>>(), want.removed);
        assert_eq!(got.kept_edges.len(), want.graph.edges.len());
    }
}

#[test]
fn stats_examples() {
    let s = session();
    load_model(&s, 0, &random_model(&mut rng(53), &[2, 3, 1], Activation::Identity));
    let st = stats(&s, 0).unwrap();
    assert_eq!((st.neurons, st.edges, st.depth), (6, 9, 2));

    let s = session();
    load_model(&s, 0, &random_model(&mut rng(54), &[1, 1], Activation::Identity));
    assert_eq!(stats(&s, 0).unwrap().depth, 1);
    assert!(matches!(stats(&s, 9), Err(Error::UnknownModel(9))));
}

#[test]
fn stats_depth_matches_construction() {
    let mut r = rng(55);
    for d in 1..=6 {
        let widths = random_widths(&mut r, d, 5, 4);
        let m = random_model(&mut r, &widths, Activation::Identity);
        let g = model_to_graph(&m);
        let s = session();
        load(&s, 0, &g);
        let st = stats(&s, 0).unwrap();
        assert_eq!(st.depth, d as i64);
        assert_eq!(native::depth(&g).unwrap(), d);
        assert_eq!(st.edges as usize, g.edges.len());
    }
}

#[test]
fn stats_without_recursion() {
    let opts = SessionOptions { probe_sql: Some("SELECT 1/0 WHERE false".into()), ..Default::default() };
    let s = EngineSession::open_with(&Location::InMemory, &opts).unwrap();
    assert!(!s.capabilities().recursive_aggregation);
    nnsql::store::create_schema(s.connection()).unwrap();
    load_model(&s, 0, &random_model(&mut rng(56), &[2, 3, 3, 1], Activation::Identity));
    assert_eq!(stats(&s, 0).unwrap().depth, 3);
}
