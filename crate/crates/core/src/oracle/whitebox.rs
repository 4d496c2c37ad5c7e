use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::{eval_graph, Perturbation};
use crate::error::{Error, Result};
use crate::graph::{model_to_graph, GraphEdge, NetworkGraph, NodeId};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// The unit's value is set to zero.
    Zero,
    /// The unit and its incident edges are deleted.
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Targets {
    Input,
    Hidden,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    /// Absolute output change per dropped unit.
    pub entries: BTreeMap<NodeId, f64>,
    /// Output values on the unperturbed input.
    pub baseline: BTreeMap<NodeId, f64>,
    /// The output unit whose change is measured: the baseline argmax.
    pub measured: NodeId,
}

pub fn saliency(model: &Model, input: &[f64], mode: Mode, targets: Targets) -> Result<SaliencyMap> {
    saliency_graph(&model_to_graph(model), input, mode, targets)
}

/// Saliency over an explicit graph, which may be sparse.
pub fn saliency_graph(graph: &NetworkGraph, input: &[f64], mode: Mode, targets: Targets) -> Result<SaliencyMap> {
    let input: BTreeMap<NodeId, f64> = input.iter().enumerate().map(|(i, &v)| (i as NodeId, v)).collect();
    let baseline: BTreeMap<NodeId, f64> = eval_graph(graph, &input, None)?
        .into_iter()
        .filter_map(|(id, v)| v.map(|v| (id, v)))
        .collect();
    let measured = baseline
        .iter()
        .fold(None, |best: Option<(NodeId, f64)>, (&id, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((id, v)),
        })
        .map(|(id, _)| id)
        .ok_or_else(|| Error::InvariantViolation("no output unit is reached on the baseline input".into()))?;

    let has_in: HashSet<NodeId> = graph.edges.iter().map(|e| e.dst).collect();
    let has_out: HashSet<NodeId> = graph.edges.iter().map(|e| e.src).collect();
    let mut candidates: Vec<NodeId> = graph
        .nodes
        .iter()
        .map(|n| n.id)
        .filter(|id| match targets {
            Targets::Input => !has_in.contains(id),
            Targets::Hidden => has_in.contains(id) && has_out.contains(id),
        })
        .collect();
    candidates.sort_unstable();

    let mut entries = BTreeMap::new();
    for d in candidates {
        let p = match mode {
            Mode::Zero => Perturbation::Zero(d),
            Mode::Remove => Perturbation::Remove(d),
        };
        let out = eval_graph(graph, &input, Some(p))?;
        let v = out.get(&measured).copied().flatten().unwrap_or(0.0);
        entries.insert(d, (v - baseline[&measured]).abs());
    }
    Ok(SaliencyMap { entries, baseline, measured })
}

fn inside(w: f64, epsilon: f64) -> bool {
    -epsilon < w && w < epsilon
}

/// Units with at least one incoming edge, all of weight strictly inside
/// `(-epsilon, epsilon)`.
pub fn prunable(graph: &NetworkGraph, epsilon: f64) -> BTreeSet<NodeId> {
    let mut all_small: BTreeMap<NodeId, bool> = BTreeMap::new();
    for e in &graph.edges {
        *all_small.entry(e.dst).or_insert(true) &= inside(e.weight, epsilon);
    }
    all_small.into_iter().filter(|&(_, small)| small).map(|(id, _)| id).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    pub graph: NetworkGraph,
    pub removed: BTreeSet<NodeId>,
    pub rounds: usize,
}

/// Deletes every edge with weight inside `(-epsilon, epsilon)`, then keeps
/// deleting hidden units (units that had both incoming and outgoing edges)
/// left without incoming or outgoing edges, with their edges, until none
/// remain.
pub fn cascade(graph: &NetworkGraph, epsilon: f64) -> Cascade {
    let hidden: BTreeSet<NodeId> = {
        let has_in: HashSet<NodeId> = graph.edges.iter().map(|e| e.dst).collect();
        let has_out: HashSet<NodeId> = graph.edges.iter().map(|e| e.src).collect();
        graph.nodes.iter().map(|n| n.id).filter(|id| has_in.contains(id) && has_out.contains(id)).collect()
    };
    let mut edges: Vec<GraphEdge> = graph.edges.iter().filter(|e| !inside(e.weight, epsilon)).copied().collect();
    let mut removed = BTreeSet::new();
    let mut rounds = 0;
    loop {
        let has_in: HashSet<NodeId> = edges.iter().map(|e| e.dst).collect();
        let has_out: HashSet<NodeId> = edges.iter().map(|e| e.src).collect();
        let fresh: Vec<NodeId> = hidden
            .iter()
            .copied()
            .filter(|id| !removed.contains(id) && !(has_in.contains(id) && has_out.contains(id)))
            .collect();
        if fresh.is_empty() {
            break;
        }
        rounds += 1;
        removed.extend(fresh.iter().copied());
        edges.retain(|e| !removed.contains(&e.src) && !removed.contains(&e.dst));
    }
    let nodes = graph.nodes.iter().filter(|n| !removed.contains(&n.id)).copied().collect();
    Cascade { graph: NetworkGraph { nodes, edges, activations: graph.activations.clone() }, removed, rounds }
}

/// Length of the longest path from a unit without incoming edges.
pub fn depth(graph: &NetworkGraph) -> Result<usize> {
    let mut succ: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    let mut indegree: HashMap<NodeId, usize> = graph.nodes.iter().map(|n| (n.id, 0)).collect();
    for e in &graph.edges {
        succ.entry(e.src).or_default().push(e.dst);
        *indegree.get_mut(&e.dst).ok_or_else(|| Error::InvariantViolation(format!("edge to unknown unit {}", e.dst)))? +=
            1;
    }
    let mut frontier: Vec<NodeId> = indegree.iter().filter(|&(_, &d)| d == 0).map(|(&id, _)| id).collect();
    let mut longest: HashMap<NodeId, usize> = frontier.iter().map(|&id| (id, 0)).collect();
    let mut seen = 0;
    while let Some(id) = frontier.pop() {
        seen += 1;
        let here = longest[&id];
        for &next in succ.get(&id).map(Vec::as_slice).unwrap_or(&[]) {
            let l = longest.entry(next).or_insert(0);
            *l = (*l).max(here + 1);
            let d = indegree.get_mut(&next).expect("known unit");
            *d -= 1;
            if *d == 0 {
                frontier.push(next);
            }
        }
    }
    if seen != indegree.len() {
        return Err(Error::CyclicGraph(indegree.iter().find(|&(_, &d)| d > 0).map(|(&id, _)| id).unwrap_or(0)));
    }
    Ok(longest.values().copied().max().unwrap_or(0))
}
