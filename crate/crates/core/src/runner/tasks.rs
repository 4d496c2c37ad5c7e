//! Task-level helpers: generate, execute and decode in one call.

use std::collections::{BTreeMap, BTreeSet};

use super::EngineSession;
use crate::error::{Error, Result};
use crate::graph::{GraphEdge, NodeId};
use crate::pwl::{Breakpoint, PwlFunction};
use crate::sqlgen::{
    gen_breakpoints, gen_classify, gen_eval, gen_final_slope, gen_initial_slope, gen_integral, gen_intercept,
    gen_prunable_nodes, gen_stats, gen_threshold_check, gen_unconnected_nodes, EdgeSource, EvalOptions,
    GeometryOptions,
};
use crate::store;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRow {
    pub model_id: i64,
    pub vec_id: i64,
    pub id: NodeId,
    pub val: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassRow {
    pub model_id: i64,
    pub vec_id: i64,
    pub class_id: NodeId,
    pub probability: f64,
}

/// Without recursive aggregation the recursive strategy is replaced by a
/// fixed composition of the stored network's depth.
fn effective(session: &EngineSession, opts: &EvalOptions, model_id: i64) -> Result<EvalOptions> {
    if opts.depth.is_some() || session.capabilities().recursive_aggregation {
        return Ok(*opts);
    }
    let depth = store::extract_graph(session.connection(), model_id)?.depth();
    Ok(EvalOptions { model_id, batch_over_model: false, ..opts.fixed(depth) })
}

/// Runs `f` once for the whole request, or once per stored model when the
/// request spans models and has to be downgraded.
fn per_model<T>(
    session: &EngineSession,
    opts: &EvalOptions,
    mut f: impl FnMut(&EvalOptions) -> Result<Vec<T>>,
) -> Result<Vec<T>> {
    if opts.batch_over_model && opts.depth.is_none() && !session.capabilities().recursive_aggregation {
        let mut out = Vec::new();
        for id in store::model_ids(session.connection())? {
            out.extend(f(&effective(session, opts, id)?)?);
        }
        return Ok(out);
    }
    f(&effective(session, opts, opts.model_id)?)
}

fn key(table: &super::ResultTable, row: usize, name: &str, present: bool, fallback: i64) -> Result<i64> {
    if present {
        table.i64_at(row, name)
    } else {
        Ok(fallback)
    }
}

pub fn evaluate(session: &EngineSession, opts: &EvalOptions) -> Result<Vec<EvalRow>> {
    per_model(session, opts, |o| {
        let table = session.execute(&gen_eval(o)?)?;
        (0..table.len())
            .map(|r| {
                Ok(EvalRow {
                    model_id: key(&table, r, "model_id", o.batch_over_model, o.model_id)?,
                    vec_id: key(&table, r, "vec_id", o.batch_over_vec, o.vec_id)?,
                    id: table.i64_at(r, "id")?,
                    val: table.f64_at(r, "val")?,
                })
            })
            .collect()
    })
}

pub fn classify(session: &EngineSession, opts: &EvalOptions) -> Result<Vec<ClassRow>> {
    per_model(session, opts, |o| {
        let table = session.execute(&gen_classify(o)?)?;
        (0..table.len())
            .map(|r| {
                Ok(ClassRow {
                    model_id: key(&table, r, "model_id", o.batch_over_model, o.model_id)?,
                    vec_id: key(&table, r, "vec_id", o.batch_over_vec, o.vec_id)?,
                    class_id: table.i64_at(r, "class_id")?,
                    probability: table.f64_at(r, "probability")?,
                })
            })
            .collect()
    })
}

fn check_geometry_shape(session: &EngineSession, model_id: i64) -> Result<()> {
    let graph = store::extract_graph(session.connection(), model_id)?;
    let shape: Vec<usize> = (0..=graph.depth()).map(|k| graph.ids_in_layer(k).len()).collect();
    if shape.len() != 3 || shape[0] != 1 || shape[2] != 1 {
        return Err(Error::NotGeometryEligible(format!(
            "model {model_id} has layer widths {shape:?}; geometry needs 1 input, one hidden layer and 1 output"
        )));
    }
    Ok(())
}

fn single_f64(session: &EngineSession, query: &crate::sqlgen::SqlQuery, column: &str) -> Result<f64> {
    let table = session.execute(query)?;
    if table.len() != 1 {
        return Err(Error::SchemaMismatch(format!("expected one row of '{column}', got {}", table.len())));
    }
    table.f64_at(0, column)
}

/// Assembles the piecewise-linear function from the geometry queries.
pub fn reconstruct_pwl(session: &EngineSession, opts: &GeometryOptions) -> Result<PwlFunction> {
    check_geometry_shape(session, opts.model_id)?;
    let table = session.execute(&gen_breakpoints(opts)?)?;
    let points = (0..table.len())
        .map(|r| Ok(Breakpoint { x: table.f64_at(r, "x")?, y: table.f64_at(r, "y")? }))
        .collect::<Result<Vec<_>>>()?;
    let s0 = single_f64(session, &gen_initial_slope(opts)?, "s0")?;
    let s_end = single_f64(session, &gen_final_slope(opts)?, "s")?;
    if points.is_empty() {
        let intercept = single_f64(session, &gen_intercept(opts)?, "y")?;
        return Ok(PwlFunction::affine(s0, intercept));
    }
    PwlFunction::through_points(s0, points, s_end)
}

pub fn integral(session: &EngineSession, opts: &GeometryOptions, lower: f64, upper: f64) -> Result<f64> {
    let query = gen_integral(opts, lower, upper)?;
    check_geometry_shape(session, opts.model_id)?;
    single_f64(session, &query, "integral")
}

pub fn threshold_exceeded(session: &EngineSession, opts: &GeometryOptions, threshold: f64) -> Result<bool> {
    let query = gen_threshold_check(opts, threshold)?;
    check_geometry_shape(session, opts.model_id)?;
    let table = session.execute(&query)?;
    table.bool_at(0, "exceeds")
}

fn ids(table: &super::ResultTable) -> Result<Vec<NodeId>> {
    (0..table.len()).map(|r| table.i64_at(r, "id")).collect()
}

pub fn prunable_nodes(session: &EngineSession, model_id: i64, epsilon: f64) -> Result<Vec<NodeId>> {
    ids(&session.execute(&gen_prunable_nodes(model_id, epsilon)?)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOutcome {
    /// Hidden units left unconnected, in removal order per round.
    pub removed_nodes: Vec<NodeId>,
    /// Surviving edges ordered by `(dst, src)`.
    pub kept_edges: Vec<GraphEdge>,
    pub rounds: usize,
}

const CASCADE_TABLE: &str = "CascadeEdge";

/// Drops edges with `|weight| < epsilon`, then repeatedly removes hidden units
/// that lost all incoming or all outgoing edges, until nothing changes.
///
/// Works on a temporary table private to this session.
pub fn prune_cascade(session: &EngineSession, model_id: i64, epsilon: f64) -> Result<CascadeOutcome> {
    let conn = session.connection();
    let find = gen_unconnected_nodes(model_id, &EdgeSource::Table(CASCADE_TABLE.into()))?;
    gen_prunable_nodes(model_id, epsilon)?; // validates epsilon
    if !store::model_ids(conn)?.contains(&model_id) {
        return Err(Error::UnknownModel(model_id));
    }
    conn.execute(
        &format!(
            "CREATE OR REPLACE TEMP TABLE {CASCADE_TABLE} AS
SELECT model_id, src, dst, weight FROM Edge
WHERE model_id = ? AND NOT (-? < weight AND weight < ?)"
        ),
        duckdb::params![model_id, epsilon, epsilon],
    )?;
    let mut removed: BTreeSet<NodeId> = BTreeSet::new();
    let mut order = Vec::new();
    let mut rounds = 0;
    loop {
        let fresh: Vec<NodeId> = ids(&session.execute(&find)?)?.into_iter().filter(|id| !removed.contains(id)).collect();
        if fresh.is_empty() {
            break;
        }
        rounds += 1;
        let mut delete = conn.prepare(&format!("DELETE FROM {CASCADE_TABLE} WHERE src = ? OR dst = ?"))?;
        for &id in &fresh {
            delete.execute(duckdb::params![id, id])?;
            removed.insert(id);
        }
        order.extend(fresh);
    }
    let mut stmt = conn.prepare(&format!("SELECT src, dst, weight FROM {CASCADE_TABLE} ORDER BY dst, src"))?;
    let kept_edges = stmt
        .query_map([], |r| Ok(GraphEdge { src: r.get(0)?, dst: r.get(1)?, weight: r.get(2)? }))?
        .collect::<duckdb::Result<Vec<_>>>()?;
    conn.execute_batch(&format!("DROP TABLE {CASCADE_TABLE}"))?;
    Ok(CascadeOutcome { removed_nodes: order, kept_edges, rounds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkStats {
    pub neurons: i64,
    pub edges: i64,
    pub depth: i64,
}

pub fn stats(session: &EngineSession, model_id: i64) -> Result<NetworkStats> {
    let [neurons, edges, depth]: [_; 3] = gen_stats(model_id).try_into().expect("three statistics queries");
    let count = |q, col| -> Result<i64> { session.execute(q)?.i64_at(0, col) };
    let neurons = count(&neurons, "neurons")?;
    if neurons == 0 {
        return Err(Error::UnknownModel(model_id));
    }
    let edges = count(&edges, "edges")?;
    let depth = if session.capabilities().recursive_aggregation {
        count(&depth, "depth")?
    } else {
        store::extract_graph(session.connection(), model_id)?.depth() as i64
    };
    Ok(NetworkStats { neurons, edges, depth })
}

/// Runs one monolithic saliency query.
pub fn saliency(session: &EngineSession, family: &super::SaliencyFamily) -> Result<BTreeMap<NodeId, f64>> {
    family.check_baseline(session)?;
    decode_saliency(&session.execute(&family.monolithic())?)
}

pub(super) fn decode_saliency(table: &super::ResultTable) -> Result<BTreeMap<NodeId, f64>> {
    (0..table.len()).map(|r| Ok((table.i64_at(r, "d_id")?, table.f64_at(r, "saliency")?))).collect()
}

