//! Native reference implementations of every analysis the generated SQL
//! performs. Nothing here calls into `sqlgen` or the engine.

mod geometry;
mod whitebox;

use std::collections::{BTreeMap, HashMap, HashSet};

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::graph::{NetworkGraph, NodeId};
use crate::model::{Activation, Model};

pub use geometry::{exceeds, geometry, integral};
pub use whitebox::{cascade, depth, prunable, saliency, saliency_graph, Cascade, Mode, SaliencyMap, Targets};

fn activate(z: &mut Array1<f64>, act: Activation) {
    match act {
        Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
        Activation::Identity => {}
        Activation::Softmax => softmax(z.as_slice_mut().expect("contiguous")),
    }
}

fn softmax(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    z.iter_mut().for_each(|v| *v = (*v - m).exp());
    let total: f64 = z.iter().sum();
    z.iter_mut().for_each(|v| *v /= total);
}

/// Dense forward pass, layer by layer.
pub fn eval(model: &Model, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != model.input_dim() {
        return Err(Error::InvalidParameter(format!(
            "input has {} values, model expects {}",
            input.len(),
            model.input_dim()
        )));
    }
    let mut x = Array1::from_vec(input.to_vec());
    for layer in &model.layers {
        let mut z = layer.weights.dot(&x) + &layer.bias;
        activate(&mut z, layer.activation);
        x = z;
    }
    Ok(x.to_vec())
}

/// Output values before softmax.
pub fn logits(model: &Model, input: &[f64]) -> Result<Vec<f64>> {
    let mut m = model.clone();
    if let Some(last) = m.layers.last_mut() {
        if last.activation == Activation::Softmax {
            last.activation = Activation::Identity;
        }
    }
    eval(&m, input)
}

/// Argmax output index (smallest on ties) and its softmax probability.
pub fn classify(model: &Model, input: &[f64]) -> Result<(usize, f64)> {
    let mut z = logits(model, input)?;
    let best = z.iter().enumerate().fold(0, |best, (i, &v)| if v > z[best] { i } else { best });
    softmax(&mut z);
    Ok((best, z[best]))
}

/// A change applied to one unit before graph evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// The unit's value is forced to zero.
    Zero(NodeId),
    /// The unit and its incident edges are deleted.
    Remove(NodeId),
}

/// Evaluates the graph unit by unit in topological order.
///
/// Input units are the units without incoming edges and take their value
/// from `input` by id. A unit is reached when at least one predecessor is;
/// unreached units contribute nothing. Units without outgoing edges use the
/// last activation, all others ReLU. Returns the value of every output unit of
/// the unperturbed graph, `None` where unreached.
pub fn eval_graph(
    graph: &NetworkGraph,
    input: &BTreeMap<NodeId, f64>,
    perturbation: Option<Perturbation>,
) -> Result<BTreeMap<NodeId, Option<f64>>> {
    let has_out: HashSet<NodeId> = graph.edges.iter().map(|e| e.src).collect();
    let has_in: HashSet<NodeId> = graph.edges.iter().map(|e| e.dst).collect();
    let outputs: Vec<NodeId> =
        graph.nodes.iter().filter(|n| has_in.contains(&n.id) && !has_out.contains(&n.id)).map(|n| n.id).collect();
    let output_act = graph.activations.last().copied().unwrap_or(Activation::Identity);

    let removed = match perturbation {
        Some(Perturbation::Remove(id)) => Some(id),
        _ => None,
    };
    let mut incoming: HashMap<NodeId, Vec<(NodeId, f64)>> = HashMap::new();
    for e in &graph.edges {
        if Some(e.src) == removed || Some(e.dst) == removed {
            continue;
        }
        incoming.entry(e.dst).or_default().push((e.src, e.weight));
    }

    let mut order: Vec<_> = graph.nodes.iter().collect();
    order.sort_by_key(|n| (n.layer, n.id));
    let mut value: HashMap<NodeId, f64> = HashMap::new();
    let mut pre_softmax = Vec::new();
    for n in order {
        let v = if !has_in.contains(&n.id) {
            // input units are seeded even when removed; they simply feed nothing
            match input.get(&n.id) {
                Some(&v) => v,
                None => continue,
            }
        } else {
            let preds = incoming.get(&n.id).map(Vec::as_slice).unwrap_or(&[]);
            let reached: Vec<(f64, f64)> =
                preds.iter().filter_map(|(src, w)| value.get(src).map(|&v| (v, *w))).collect();
            if reached.is_empty() {
                continue;
            }
            let z = n.bias + reached.iter().map(|(v, w)| v * w).sum::<f64>();
            let is_out = !has_out.contains(&n.id);
            match (is_out, output_act) {
                (true, Activation::Identity) | (true, Activation::Softmax) => z,
                _ => z.max(0.0),
            }
        };
        let v = if perturbation == Some(Perturbation::Zero(n.id)) { 0.0 } else { v };
        value.insert(n.id, v);
        if outputs.contains(&n.id) {
            pre_softmax.push(n.id);
        }
    }

    if output_act == Activation::Softmax {
        let mut z: Vec<f64> = pre_softmax.iter().map(|id| value[id]).collect();
        softmax(&mut z);
        for (id, v) in pre_softmax.iter().zip(z) {
            value.insert(*id, v);
        }
    }
    Ok(outputs.into_iter().map(|id| (id, value.get(&id).copied())).collect())
}

/// [`eval_graph`] with the input given positionally over ids `0..n`.
pub fn eval_graph_dense(graph: &NetworkGraph, input: &[f64]) -> Result<BTreeMap<NodeId, Option<f64>>> {
    let map = input.iter().enumerate().map(|(i, &v)| (i as NodeId, v)).collect();
    eval_graph(graph, &map, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::model_to_graph;
    use crate::model::DenseLayer;
    use ndarray::array;

    fn chain(activation: Activation) -> Model {
        Model::new(
            "chain",
            vec![
                DenseLayer::new(array![[1.0]], array![0.0], Activation::Relu),
                DenseLayer::new(array![[1.0]], array![0.0], activation),
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_chain() {
        assert_eq!(eval(&chain(Activation::Identity), &[3.0]).unwrap(), vec![3.0]);
    }

    #[test]
    fn relu_clamps() {
        let m = Model::new(
            "clamp",
            vec![
                DenseLayer::new(array![[1.0]], array![-1.0], Activation::Relu),
                DenseLayer::new(array![[1.0]], array![0.0], Activation::Identity),
            ],
        )
        .unwrap();
        assert_eq!(eval(&m, &[-1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn classify_closed_form() {
        let m = Model::new(
            "two",
            vec![DenseLayer::new(array![[0.0], [1.0]], array![0.0, 0.0], Activation::Softmax)],
        )
        .unwrap();
        let (i, p) = classify(&m, &[3f64.ln()]).unwrap();
        assert_eq!(i, 1);
        assert!((p - 0.75).abs() < 1e-12);
        let (i, p) = classify(&m, &[0.0]).unwrap();
        assert_eq!((i, p), (0, 0.5));
    }

    #[test]
    fn graph_matches_dense() {
        let m = chain(Activation::Identity);
        let out = eval_graph_dense(&model_to_graph(&m), &[2.5]).unwrap();
        assert_eq!(out.into_iter().collect::<Vec<_>>(), vec![(2, Some(2.5))]);
    }

    #[test]
    fn removed_path_is_unreached() {
        let g = model_to_graph(&chain(Activation::Identity));
        let input = BTreeMap::from([(0, 1.0)]);
        let out = eval_graph(&g, &input, Some(Perturbation::Remove(1))).unwrap();
        assert_eq!(out[&2], None);
        let out = eval_graph(&g, &input, Some(Perturbation::Zero(1))).unwrap();
        assert_eq!(out[&2], Some(0.0));
    }
}
