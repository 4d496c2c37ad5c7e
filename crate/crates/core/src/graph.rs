//! Node/edge form of a network, the shape that is stored relationally.
//!
//! Ids are assigned breadth-first per layer: input units get `0..n`, the
//! first hidden layer continues from `n`, and so on.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::{Activation, DenseLayer, Model};

pub type NodeId = i64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphNode {
    pub id: NodeId,
    pub bias: f64,
    pub layer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    /// Activation of layers `1..=depth`; entry `k - 1` belongs to layer `k`.
    pub activations: Vec<Activation>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GraphOptions {
    /// Skip matrix entries that are exactly zero.
    pub drop_zero_edges: bool,
}

pub fn model_to_graph(model: &Model) -> NetworkGraph {
    model_to_graph_with(model, GraphOptions::default())
}

pub fn model_to_graph_with(model: &Model, options: GraphOptions) -> NetworkGraph {
    let widths = model.widths();
    let mut offsets = Vec::with_capacity(widths.len());
    let mut next = 0i64;
    for &w in &widths {
        offsets.push(next);
        next += w as i64;
    }

    let mut nodes = Vec::with_capacity(next as usize);
    nodes.extend((0..widths[0]).map(|i| GraphNode { id: i as NodeId, bias: 0.0, layer: 0 }));
    let mut edges = Vec::new();
    for (k, layer) in model.layers.iter().enumerate() {
        let (src_base, dst_base) = (offsets[k], offsets[k + 1]);
        for (r, &b) in layer.bias.iter().enumerate() {
            nodes.push(GraphNode { id: dst_base + r as NodeId, bias: b, layer: k + 1 });
        }
        for ((r, c), &w) in layer.weights.indexed_iter() {
            if options.drop_zero_edges && w == 0.0 {
                continue;
            }
            edges.push(GraphEdge { src: src_base + c as NodeId, dst: dst_base + r as NodeId, weight: w });
        }
    }

    NetworkGraph { nodes, edges, activations: model.layers.iter().map(|l| l.activation).collect() }
}

/// Layer index per node, as recovered from the edge structure alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerAssignment {
    pub layers: BTreeMap<NodeId, usize>,
}

impl LayerAssignment {
    pub fn depth(&self) -> usize {
        self.layers.values().copied().max().unwrap_or(0)
    }

    /// Nodes of layer 0, which are exactly the nodes without an incoming edge.
    pub fn inputs(&self) -> Vec<NodeId> {
        self.layer(0)
    }

    pub fn layer(&self, k: usize) -> Vec<NodeId> {
        self.layers.iter().filter(|(_, &l)| l == k).map(|(&id, _)| id).collect()
    }
}

/// Recomputes layers from edges and rejects anything that is not a strictly
/// layered DAG.
pub fn validate_layered(nodes: &[NodeId], edges: &[GraphEdge]) -> Result<LayerAssignment> {
    let mut index = HashMap::with_capacity(nodes.len());
    for (i, &id) in nodes.iter().enumerate() {
        if index.insert(id, i).is_some() {
            return Err(Error::InvariantViolation(format!("duplicate node id {id}")));
        }
    }
    let mut succ = vec![Vec::new(); nodes.len()];
    let mut indegree = vec![0usize; nodes.len()];
    for e in edges {
        let (Some(&s), Some(&d)) = (index.get(&e.src), index.get(&e.dst)) else {
            return Err(Error::InvariantViolation(format!(
                "edge ({}, {}) references an unknown node",
                e.src, e.dst
            )));
        };
        succ[s].push(d);
        indegree[d] += 1;
    }

    // Kahn's algorithm, tracking shortest and longest distance from any source.
    let mut shortest = vec![usize::MAX; nodes.len()];
    let mut longest = vec![0usize; nodes.len()];
    let mut remaining = indegree.clone();
    let mut queue: VecDeque<usize> = (0..nodes.len()).filter(|&i| indegree[i] == 0).collect();
    for &i in &queue {
        shortest[i] = 0;
    }
    let mut visited = 0;
    while let Some(u) = queue.pop_front() {
        visited += 1;
        for &v in &succ[u] {
            shortest[v] = shortest[v].min(shortest[u] + 1);
            longest[v] = longest[v].max(longest[u] + 1);
            remaining[v] -= 1;
            if remaining[v] == 0 {
                queue.push_back(v);
            }
        }
    }
    if visited < nodes.len() {
        let stuck = (0..nodes.len()).find(|&i| remaining[i] > 0).expect("unvisited node");
        return Err(Error::CyclicGraph(nodes[stuck]));
    }

    let mut layers = BTreeMap::new();
    for (i, &id) in nodes.iter().enumerate() {
        if shortest[i] != longest[i] {
            return Err(Error::NonLayered { node: id, shortest: shortest[i], longest: longest[i] });
        }
        layers.insert(id, shortest[i]);
    }
    Ok(LayerAssignment { layers })
}

impl NetworkGraph {
    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.iter().map(|n| n.id).collect()
    }

    pub fn layer_assignment(&self) -> Result<LayerAssignment> {
        validate_layered(&self.node_ids(), &self.edges)
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.layer).max().unwrap_or(0)
    }

    pub fn input_ids(&self) -> Vec<NodeId> {
        self.ids_in_layer(0)
    }

    /// Output units: nodes without an outgoing edge, excluding isolated inputs.
    pub fn output_ids(&self) -> Vec<NodeId> {
        let sources: std::collections::HashSet<NodeId> = self.edges.iter().map(|e| e.src).collect();
        let mut ids: Vec<NodeId> =
            self.nodes.iter().filter(|n| n.layer > 0 && !sources.contains(&n.id)).map(|n| n.id).collect();
        ids.sort_unstable();
        ids
    }

    pub fn ids_in_layer(&self, k: usize) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.nodes.iter().filter(|n| n.layer == k).map(|n| n.id).collect();
        ids.sort_unstable();
        ids
    }

    /// Checks the stored layer tags against a recomputation from the edges,
    /// and that input units are numbered `0..n`.
    pub fn validate(&self) -> Result<()> {
        let assignment = self.layer_assignment()?;
        for n in &self.nodes {
            if assignment.layers[&n.id] != n.layer {
                return Err(Error::InvariantViolation(format!(
                    "node {} is tagged layer {} but its edges place it in layer {}",
                    n.id, n.layer, assignment.layers[&n.id]
                )));
            }
        }
        let inputs = self.input_ids();
        if inputs.iter().enumerate().any(|(i, &id)| id != i as NodeId) {
            return Err(Error::InvariantViolation("input units must occupy ids 0..n".into()));
        }
        Ok(())
    }

    /// Rebuilds a dense model; absent edges become zero weights.
    ///
    /// Units of each layer are ordered by id, which inverts
    /// [`model_to_graph`].
    pub fn to_model(&self, name: impl Into<String>) -> Result<Model> {
        self.validate()?;
        let depth = self.depth();
        if depth == 0 {
            return Err(Error::InvariantViolation("graph has no edges".into()));
        }
        let per_layer: Vec<Vec<NodeId>> = (0..=depth).map(|k| self.ids_in_layer(k)).collect();
        let position: HashMap<NodeId, usize> =
            per_layer.iter().flat_map(|ids| ids.iter().enumerate().map(|(i, &id)| (id, i))).collect();
        let bias_of: HashMap<NodeId, f64> = self.nodes.iter().map(|n| (n.id, n.bias)).collect();
        let layer_of: HashMap<NodeId, usize> = self.nodes.iter().map(|n| (n.id, n.layer)).collect();

        let mut layers: Vec<DenseLayer> = (1..=depth)
            .map(|k| {
                let act = self.activations.get(k - 1).copied().unwrap_or(if k == depth {
                    Activation::Identity
                } else {
                    Activation::Relu
                });
                DenseLayer::new(
                    Array2::zeros((per_layer[k].len(), per_layer[k - 1].len())),
                    Array1::from_iter(per_layer[k].iter().map(|id| bias_of[id])),
                    act,
                )
            })
            .collect();
        for e in &self.edges {
            let k = layer_of[&e.dst];
            layers[k - 1].weights[[position[&e.dst], position[&e.src]]] += e.weight;
        }
        Model::new(name, layers)
    }

    /// Writes `edges.csv` (`src,dst,weight`) and `nodes.csv` (`id,bias,layer`).
    pub fn write_csv(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let mut w = csv::Writer::from_path(dir.join("edges.csv"))?;
        w.write_record(["src", "dst", "weight"])?;
        for e in &self.edges {
            w.write_record([e.src.to_string(), e.dst.to_string(), e.weight.to_string()])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("nodes.csv"))?;
        w.write_record(["id", "bias", "layer"])?;
        for n in &self.nodes {
            w.write_record([n.id.to_string(), n.bias.to_string(), n.layer.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the pair written by [`NetworkGraph::write_csv`]. Activations
    /// default to ReLU on hidden layers and identity on the output.
    pub fn read_csv(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut nodes = Vec::new();
        for rec in csv::Reader::from_path(dir.join("nodes.csv"))?.records() {
            let rec = rec?;
            nodes.push(GraphNode {
                id: parse_field(&rec, 0, "nodes.csv")?,
                bias: parse_field(&rec, 1, "nodes.csv")?,
                layer: parse_field(&rec, 2, "nodes.csv")?,
            });
        }
        let mut edges = Vec::new();
        for rec in csv::Reader::from_path(dir.join("edges.csv"))?.records() {
            let rec = rec?;
            edges.push(GraphEdge {
                src: parse_field(&rec, 0, "edges.csv")?,
                dst: parse_field(&rec, 1, "edges.csv")?,
                weight: parse_field(&rec, 2, "edges.csv")?,
            });
        }
        let depth = nodes.iter().map(|n| n.layer).max().unwrap_or(0);
        let activations = default_activations(depth);
        let graph = NetworkGraph { nodes, edges, activations };
        graph.validate()?;
        Ok(graph)
    }
}

pub(crate) fn default_activations(depth: usize) -> Vec<Activation> {
    (1..=depth).map(|k| if k == depth { Activation::Identity } else { Activation::Relu }).collect()
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, file: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(i).ok_or_else(|| Error::Parse {
        source_name: file.to_string(),
        message: format!("line {line}: missing field {i}"),
    })?;
    raw.trim().parse().map_err(|_| Error::Parse {
        source_name: file.to_string(),
        message: format!("line {line}: cannot parse field {i} ('{raw}')"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn chain() -> Model {
        Model::new(
            "chain",
            vec![
                DenseLayer::new(array![[1.0]], array![0.0], Activation::Relu),
                DenseLayer::new(array![[1.0]], array![0.0], Activation::Identity),
            ],
        )
        .unwrap()
    }

    fn edge(src: NodeId, dst: NodeId) -> GraphEdge {
        GraphEdge { src, dst, weight: 1.0 }
    }

    #[test]
    fn identity_chain_graph() {
        let g = model_to_graph(&chain());
        assert_eq!(g.node_ids(), vec![0, 1, 2]);
        assert_eq!(g.edges, vec![edge(0, 1), edge(1, 2)]);
    }

    #[test]
    fn counts_for_2_3_1() {
        let m = Model::new(
            "m",
            vec![
                DenseLayer::new(Array2::ones((3, 2)), Array1::zeros(3), Activation::Relu),
                DenseLayer::new(Array2::ones((1, 3)), Array1::zeros(1), Activation::Identity),
            ],
        )
        .unwrap();
        let g = model_to_graph(&m);
        assert_eq!((g.nodes.len(), g.edges.len()), (6, 9));
    }

    #[test]
    fn zero_edges_kept_unless_dropped() {
        let m = Model::new("m", vec![DenseLayer::new(array![[0.0, 2.0]], array![0.0], Activation::Identity)]).unwrap();
        assert_eq!(model_to_graph(&m).edges.len(), 2);
        let g = model_to_graph_with(&m, GraphOptions { drop_zero_edges: true });
        assert_eq!(g.edges, vec![GraphEdge { src: 1, dst: 2, weight: 2.0 }]);
    }

    #[test]
    fn chain_layers() {
        let a = validate_layered(&[0, 1, 2], &[edge(0, 1), edge(1, 2)]).unwrap();
        assert_eq!(a.layers, BTreeMap::from([(0, 0), (1, 1), (2, 2)]));
        assert_eq!(a.inputs(), vec![0]);
    }

    #[test]
    fn skip_connection_is_not_layered() {
        let err = validate_layered(&[0, 1, 2], &[edge(0, 2), edge(0, 1), edge(1, 2)]).unwrap_err();
        assert!(matches!(err, Error::NonLayered { node: 2, shortest: 1, longest: 2 }));
    }

    #[test]
    fn cycle_detected() {
        let err = validate_layered(&[0, 1, 2], &[edge(0, 1), edge(1, 2), edge(2, 1)]).unwrap_err();
        assert!(matches!(err, Error::CyclicGraph(_)));
    }

    #[test]
    fn to_model_inverts_model_to_graph() {
        let m = chain();
        assert_eq!(model_to_graph(&m).to_model("chain").unwrap(), m);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = model_to_graph(&chain());
        g.write_csv(dir.path()).unwrap();
        let header = std::fs::read_to_string(dir.path().join("edges.csv")).unwrap();
        assert!(header.starts_with("src,dst,weight\n"));
        assert_eq!(NetworkGraph::read_csv(dir.path()).unwrap(), g);
    }
}
