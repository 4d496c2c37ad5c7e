mod common;

use common::*;
use nnsql::graph::validate_layered;
use nnsql::store::{self, LoadOptions};
use nnsql::synth::{random_inputs, random_model};
use nnsql::{model_to_graph, Activation, EngineSession, Error, InputVector, Location};

fn count(s: &EngineSession, table: &str) -> i64 {
    s.connection().query_row(&format!("SELECT COUNT(*) FROM {table}"), [], |r| r.get(0)).unwrap()
}

fn sorted_edges(g: &nnsql::NetworkGraph) -> Vec<(i64, i64, u64)> {
    let mut e: Vec<_> = g.edges.iter().map(|e| (e.src, e.dst, e.weight.to_bits())).collect();
    e.sort_unstable();
    e
}

#[test]
fn fresh_schema_has_three_empty_tables() {
    let s = session();
    for t in ["Node", "Edge", "Input"] {
        assert!(store::table_exists(s.connection(), t).unwrap());
        assert_eq!(count(&s, t), 0);
    }
}

#[test]
fn schema_creation_is_idempotent() {
    let s = session();
    load_model(&s, 0, &random_model(&mut rng(1), &[2, 3, 1], Activation::Identity));
    store::create_schema(s.connection()).unwrap();
    assert_eq!(count(&s, "Node"), 6);
}

#[test]
fn catalog_lists_declared_columns() {
    let s = session();
    let cols = store::table_columns(s.connection(), "Edge").unwrap();
    let names: Vec<&str> = cols.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["model_id", "src", "dst", "weight"]);
    assert_eq!(cols[3].1, "DOUBLE");
    let cols = store::table_columns(s.connection(), "Input").unwrap();
    assert_eq!(cols.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(), ["vec_id", "in_id", "val"]);
}

#[test]
fn load_counts_rows() {
    let s = session();
    let g = model_to_graph(&random_model(&mut rng(2), &[2, 3, 1], Activation::Identity));
    let counts = store::load_graph(s.connection(), &g, 0, LoadOptions::default()).unwrap();
    assert_eq!((counts.nodes, counts.edges), (6, 9));
    assert_eq!((count(&s, "Node"), count(&s, "Edge")), (6, 9));
}

#[test]
fn duplicate_model_is_rejected_without_changes() {
    let s = session();
    let g = model_to_graph(&random_model(&mut rng(3), &[2, 3, 1], Activation::Identity));
    load(&s, 7, &g);
    let err = store::load_graph(s.connection(), &g, 7, LoadOptions::default()).unwrap_err();
    assert!(matches!(err, Error::DuplicateModel(7)));
    assert_eq!((count(&s, "Node"), count(&s, "Edge")), (6, 9));

    let other = model_to_graph(&random_model(&mut rng(4), &[2, 2, 1], Activation::Identity));
    store::load_graph(s.connection(), &other, 7, LoadOptions::replace()).unwrap();
    assert_eq!((count(&s, "Node"), count(&s, "Edge")), (5, 6));
}

#[test]
fn failed_load_leaves_nothing_behind() {
    let s = session();
    let g = model_to_graph(&random_model(&mut rng(5), &[3, 4, 2], Activation::Identity));
    let opts = LoadOptions { fail_after_rows: Some(10), ..Default::default() };
    assert!(store::load_graph(s.connection(), &g, 0, opts).is_err());
    assert_eq!((count(&s, "Node"), count(&s, "Edge")), (0, 0));

    let inputs = random_inputs(&mut rng(5), 3, 4);
    let opts = LoadOptions { fail_after_rows: Some(5), ..Default::default() };
    assert!(store::load_inputs(s.connection(), &inputs, opts).is_err());
    assert_eq!(count(&s, "Input"), 0);
}

#[test]
fn graph_round_trip_is_identity() {
    let s = session();
    let model = random_model(&mut rng(6), &[3, 5, 4, 2], Activation::Identity);
    let g = model_to_graph(&model);
    load(&s, 3, &g);
    let back = store::extract_graph(s.connection(), 3).unwrap();
    assert_eq!(sorted_edges(&back), sorted_edges(&g));
    let mut nodes = g.nodes.clone();
    nodes.sort_by_key(|n| n.id);
    assert_eq!(back.nodes, nodes);
    assert_eq!(back.to_model(model.name.clone()).unwrap(), model);
}

#[test]
fn extract_re_evaluates_like_the_source() {
    let s = session();
    let model = random_model(&mut rng(7), &[3, 4, 2], Activation::Identity);
    load_model(&s, 0, &model);
    let back = store::extract_graph(s.connection(), 0).unwrap().to_model("back").unwrap();
    for v in random_inputs(&mut rng(8), 3, 5) {
        let a = nnsql::oracle::eval(&model, &v.values).unwrap();
        let b = nnsql::oracle::eval(&back, &v.values).unwrap();
        assert!(max_abs_delta(&a, &b) <= 1e-12);
    }
}

#[test]
fn extract_with_tags_output_activation() {
    let s = session();
    load_model(&s, 0, &random_model(&mut rng(9), &[2, 3, 3], Activation::Softmax));
    let g = store::extract_graph_with(s.connection(), 0, Activation::Softmax).unwrap();
    assert_eq!(g.activations, [Activation::Relu, Activation::Softmax]);
    assert!(matches!(store::extract_graph(s.connection(), 1), Err(Error::UnknownModel(1))));
}

#[test]
fn input_rows_and_round_trip() {
    let s = session();
    let one = InputVector::new(0, (0..784).map(|i| i as f64 / 784.0).collect());
    assert_eq!(store::load_inputs(s.connection(), &[one.clone()], LoadOptions::default()).unwrap(), 784);
    assert_eq!(store::input_row_count(s.connection(), 0).unwrap(), 784);

    let s = session();
    let vs = random_inputs(&mut rng(10), 6, 2);
    load_inputs(&s, &vs);
    assert_eq!(count(&s, "Input"), 12);
    assert_eq!(store::input_row_count(s.connection(), 1).unwrap(), 6);
    assert_eq!(store::extract_inputs(s.connection(), None).unwrap(), vs);
    assert_eq!(store::extract_inputs(s.connection(), Some(&[1])).unwrap(), vs[1..]);
    assert!(matches!(store::extract_inputs(s.connection(), Some(&[5])), Err(Error::MissingBaseline(5))));
    assert!(matches!(
        store::load_inputs(s.connection(), &vs[..1], LoadOptions::default()),
        Err(Error::DuplicateVector(0))
    ));
}

#[test]
fn input_units_are_exactly_layer_zero() {
    let s = session();
    let model = random_model(&mut rng(11), &[4, 3, 2], Activation::Identity);
    load_model(&s, 0, &model);
    let mut stmt = s
        .connection()
        .prepare("SELECT id FROM Node n WHERE model_id = 0 AND NOT EXISTS (SELECT 1 FROM Edge e WHERE e.model_id = 0 AND e.dst = n.id) ORDER BY id")
        .unwrap();
    let ids: Vec<i64> = stmt.query_map([], |r| r.get(0)).unwrap().map(Result::unwrap).collect();
    let g = model_to_graph(&model);
    assert_eq!(ids, g.input_ids());
    assert_eq!(validate_layered(&g.node_ids(), &g.edges).unwrap().inputs(), ids);
}

#[test]
fn file_database_persists() {
    let dir = tempfile::tempdir().unwrap();
    let loc = Location::File(dir.path().join("store.duckdb"));
    let model = random_model(&mut rng(12), &[2, 3, 1], Activation::Identity);
    {
        let s = EngineSession::open(&loc).unwrap();
        store::create_schema(s.connection()).unwrap();
        load_model(&s, 4, &model);
    }
    let s = EngineSession::open(&loc).unwrap();
    assert_eq!(store::model_ids(s.connection()).unwrap(), [4]);
    assert_eq!(store::extract_graph(s.connection(), 4).unwrap().to_model(model.name.clone()).unwrap(), model);
}

#[test]
fn read_only_session_rejects_writes() {
    let dir = tempfile::tempdir().unwrap();
    let loc = Location::File(dir.path().join("ro.duckdb"));
    {
        let s = EngineSession::open(&loc).unwrap();
        store::create_schema(s.connection()).unwrap();
    }
    let ro = EngineSession::open_with(&loc, &nnsql::SessionOptions { read_only: true, ..Default::default() }).unwrap();
    let g = model_to_graph(&random_model(&mut rng(13), &[1, 1], Activation::Identity));
    assert!(store::load_graph(ro.connection(), &g, 0, LoadOptions::default()).is_err());
}

#[test]
fn missing_directory_is_engine_unavailable() {
    let loc = Location::File("/nonexistent/dir/x.duckdb".into());
    let err = EngineSession::open(&loc).unwrap_err();
    assert!(matches!(err, Error::EngineUnavailable(_)), "{err:?}");
    assert_eq!(err.kind(), nnsql::ErrorKind::Engine);
}
