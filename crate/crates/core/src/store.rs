//! Relational schema for networks and input vectors, with bulk load and
//! extraction.
//!
//! `Node(model_id, id, bias)` holds every unit, `Edge(model_id, src, dst,
//! weight)` every connection and `Input(vec_id, in_id, val)` the input
//! vectors. No layer column is stored; layers are recomputed from the edges.

use std::collections::BTreeMap;
use std::sync::Mutex;

use duckdb::{params, Connection};

use crate::error::{Error, Result};
use crate::graph::{default_activations, validate_layered, GraphEdge, GraphNode, NetworkGraph};
use crate::model::{Activation, InputVector};

pub const NODE_DDL: &str = "CREATE TABLE Node(model_id BIGINT, id BIGINT, bias DOUBLE)";
pub const EDGE_DDL: &str = "CREATE TABLE Edge(model_id BIGINT, src BIGINT, dst BIGINT, weight DOUBLE)";
pub const INPUT_DDL: &str = "CREATE TABLE Input(vec_id BIGINT, in_id BIGINT, val DOUBLE)";

static DDL_LOCK: Mutex<()> = Mutex::new(());

pub fn create_schema(conn: &Connection) -> Result<()> {
    let _guard = DDL_LOCK.lock().unwrap_or_else(|e| e.into_inner());
    for (table, ddl) in [("Node", NODE_DDL), ("Edge", EDGE_DDL), ("Input", INPUT_DDL)] {
        if !table_exists(conn, table)? {
            conn.execute_batch(ddl).map_err(|e| Error::engine_with_sql(e, ddl))?;
        }
    }
    Ok(())
}

pub fn table_exists(conn: &Connection, table: &str) -> Result<bool> {
    let n: i64 = conn.query_row(
        "SELECT COUNT(*) FROM information_schema.tables WHERE lower(table_name) = lower(?)",
        [table],
        |r| r.get(0),
    )?;
    Ok(n > 0)
}

/// `(column_name, data_type)` pairs of a table, in declaration order.
pub fn table_columns(conn: &Connection, table: &str) -> Result<Vec<(String, String)>> {
    let mut stmt = conn.prepare(
        "SELECT column_name, data_type FROM information_schema.columns \
         WHERE lower(table_name) = lower(?) ORDER BY ordinal_position",
    )?;
    let rows = stmt.query_map([table], |r| Ok((r.get(0)?, r.get(1)?)))?;
    Ok(rows.collect::<duckdb::Result<_>>()?)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Replace rows already stored under the same key.
    pub replace: bool,
    #[doc(hidden)]
    pub fail_after_rows: Option<usize>,
}

impl LoadOptions {
    pub fn replace() -> Self {
        LoadOptions { replace: true, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadCounts {
    pub nodes: usize,
    pub edges: usize,
}

pub fn load_graph(conn: &Connection, graph: &NetworkGraph, model_id: i64, options: LoadOptions) -> Result<LoadCounts> {
    in_transaction(conn, || {
        let existing: i64 =
            conn.query_row("SELECT COUNT(*) FROM Node WHERE model_id = ?", [model_id], |r| r.get(0))?;
        if existing > 0 {
            if !options.replace {
                return Err(Error::DuplicateModel(model_id));
            }
            conn.execute("DELETE FROM Node WHERE model_id = ?", [model_id])?;
            conn.execute("DELETE FROM Edge WHERE model_id = ?", [model_id])?;
        }
        let mut written = 0usize;
        {
            let mut app = conn.appender("Node")?;
            for n in &graph.nodes {
                check_injected(options, written)?;
                app.append_row(params![model_id, n.id, n.bias])?;
                written += 1;
            }
            app.flush()?;
        }
        {
            let mut app = conn.appender("Edge")?;
            for e in &graph.edges {
                check_injected(options, written)?;
                app.append_row(params![model_id, e.src, e.dst, e.weight])?;
                written += 1;
            }
            app.flush()?;
        }
        Ok(LoadCounts { nodes: graph.nodes.len(), edges: graph.edges.len() })
    })
}

/// Returns the number of rows written.
pub fn load_inputs(conn: &Connection, vectors: &[InputVector], options: LoadOptions) -> Result<usize> {
    in_transaction(conn, || {
        let mut written = 0usize;
        for v in vectors {
            let existing: i64 =
                conn.query_row("SELECT COUNT(*) FROM Input WHERE vec_id = ?", [v.vec_id], |r| r.get(0))?;
            if existing > 0 {
                if !options.replace {
                    return Err(Error::DuplicateVector(v.vec_id));
                }
                conn.execute("DELETE FROM Input WHERE vec_id = ?", [v.vec_id])?;
            }
        }
        let mut app = conn.appender("Input")?;
        for v in vectors {
            for (i, &val) in v.values.iter().enumerate() {
                check_injected(options, written)?;
                app.append_row(params![v.vec_id, i as i64, val])?;
                written += 1;
            }
        }
        app.flush()?;
        Ok(written)
    })
}

fn check_injected(options: LoadOptions, written: usize) -> Result<()> {
    match options.fail_after_rows {
        Some(limit) if written >= limit => {
            Err(Error::Engine { message: format!("injected failure after {limit} rows"), sql: None })
        }
        _ => Ok(()),
    }
}

fn in_transaction<T>(conn: &Connection, body: impl FnOnce() -> Result<T>) -> Result<T> {
    conn.execute_batch("BEGIN TRANSACTION")?;
    match body() {
        Ok(v) => {
            conn.execute_batch("COMMIT")?;
            Ok(v)
        }
        Err(e) => {
            // the original error is more useful than a failed rollback
            let _ = conn.execute_batch("ROLLBACK");
            Err(e)
        }
    }
}

pub fn model_ids(conn: &Connection) -> Result<Vec<i64>> {
    let mut stmt = conn.prepare("SELECT DISTINCT model_id FROM Node ORDER BY model_id")?;
    let ids = stmt.query_map([], |r| r.get(0))?;
    Ok(ids.collect::<duckdb::Result<_>>()?)
}

/// Reads a stored model back. Hidden layers are tagged ReLU and the output
/// layer identity, since activations are not part of the schema.
pub fn extract_graph(conn: &Connection, model_id: i64) -> Result<NetworkGraph> {
    let mut stmt = conn.prepare("SELECT id, bias FROM Node WHERE model_id = ? ORDER BY id")?;
    let nodes: Vec<(i64, f64)> =
        stmt.query_map([model_id], |r| Ok((r.get(0)?, r.get(1)?)))?.collect::<duckdb::Result<_>>()?;
    if nodes.is_empty() {
        return Err(Error::UnknownModel(model_id));
    }
    let mut stmt = conn.prepare("SELECT src, dst, weight FROM Edge WHERE model_id = ? ORDER BY dst, src")?;
    let edges: Vec<GraphEdge> = stmt
        .query_map([model_id], |r| Ok(GraphEdge { src: r.get(0)?, dst: r.get(1)?, weight: r.get(2)? }))?
        .collect::<duckdb::Result<_>>()?;

    let ids: Vec<i64> = nodes.iter().map(|n| n.0).collect();
    let layers = validate_layered(&ids, &edges)?;
    let nodes: Vec<GraphNode> =
        nodes.into_iter().map(|(id, bias)| GraphNode { id, bias, layer: layers.layers[&id] }).collect();
    let activations = default_activations(layers.depth());
    Ok(NetworkGraph { nodes, edges, activations })
}

/// Like [`extract_graph`] with an explicit output activation.
pub fn extract_graph_with(conn: &Connection, model_id: i64, output: Activation) -> Result<NetworkGraph> {
    let mut g = extract_graph(conn, model_id)?;
    if let Some(last) = g.activations.last_mut() {
        *last = output;
    }
    Ok(g)
}

/// Stored input vectors ordered by `vec_id`; `None` selects all of them.
pub fn extract_inputs(conn: &Connection, vec_ids: Option<&[i64]>) -> Result<Vec<InputVector>> {
    let mut stmt = conn.prepare("SELECT vec_id, in_id, val FROM Input ORDER BY vec_id, in_id")?;
    let rows = stmt.query_map([], |r| Ok((r.get::<_, i64>(0)?, r.get::<_, i64>(1)?, r.get::<_, f64>(2)?)))?;
    let mut grouped: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for row in rows {
        let (vec_id, in_id, val) = row?;
        if vec_ids.is_some_and(|ids| !ids.contains(&vec_id)) {
            continue;
        }
        let values = grouped.entry(vec_id).or_default();
        if in_id != values.len() as i64 {
            return Err(Error::InvariantViolation(format!(
                "input vector {vec_id} is not dense: expected in_id {} but found {in_id}",
                values.len()
            )));
        }
        values.push(val);
    }
    if let Some(ids) = vec_ids {
        if let Some(missing) = ids.iter().find(|id| !grouped.contains_key(id)) {
            return Err(Error::MissingBaseline(*missing));
        }
    }
    Ok(grouped.into_iter().map(|(vec_id, values)| InputVector { vec_id, values }).collect())
}

pub fn input_row_count(conn: &Connection, vec_id: i64) -> Result<i64> {
    Ok(conn.query_row("SELECT COUNT(*) FROM Input WHERE vec_id = ?", [vec_id], |r| r.get(0))?)
}
