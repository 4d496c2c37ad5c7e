#![allow(dead_code)]

pub mod catalogue;

use nnsql::store::{self, LoadOptions};
use nnsql::{model_to_graph, EngineSession, InputVector, Model, NetworkGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn session() -> EngineSession {
    let s = EngineSession::in_memory().expect("in-memory engine");
    store::create_schema(s.connection()).expect("schema");
    s
}

pub fn load(session: &EngineSession, model_id: i64, graph: &NetworkGraph) {
    store::load_graph(session.connection(), graph, model_id, LoadOptions::default()).expect("load graph");
}

pub fn load_model(session: &EngineSession, model_id: i64, model: &Model) {
    load(session, model_id, &model_to_graph(model));
}

pub fn load_inputs(session: &EngineSession, inputs: &[InputVector]) {
    store::load_inputs(session.connection(), inputs, LoadOptions::default()).expect("load inputs");
}

pub fn with_model(model: &Model, inputs: &[InputVector]) -> EngineSession {
    let s = session();
    load_model(&s, 0, model);
    load_inputs(&s, inputs);
    s
}

pub fn max_abs_delta(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn dense(weights: &[&[f64]], bias: &[f64], activation: nnsql::Activation) -> nnsql::DenseLayer {
    let rows = weights.len();
    let cols = weights[0].len();
    let flat: Vec<f64> = weights.iter().flat_map(|r| r.iter().copied()).collect();
    nnsql::DenseLayer::new(
        ndarray::Array2::from_shape_vec((rows, cols), flat).expect("rectangular weights"),
        ndarray::Array1::from_vec(bias.to_vec()),
        activation,
    )
}

pub fn model(layers: Vec<nnsql::DenseLayer>) -> Model {
    Model::new("test", layers).expect("valid model")
}

/// Output values of one vector, ordered by unit id.
pub fn outputs_of(rows: &[nnsql::runner::EvalRow], model_id: i64, vec_id: i64) -> Vec<f64> {
    let mut r: Vec<_> = rows.iter().filter(|r| r.model_id == model_id && r.vec_id == vec_id).collect();
    r.sort_by_key(|r| r.id);
    r.iter().map(|r| r.val).collect()
}
