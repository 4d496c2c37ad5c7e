//! Execution of generated queries on an embedded DuckDB database.

mod fanout;
mod tasks;

use std::fmt;
use std::path::PathBuf;

use duckdb::types::Value;
use duckdb::{AccessMode, Config, Connection, ToSql};

use crate::error::{Error, Result};
use crate::sqlgen::{ParamValue, SqlQuery};

pub use fanout::{memory_copy, run_saliency_concurrent, SaliencyFamily};
pub use tasks::{
    classify, evaluate, prune_cascade, prunable_nodes, reconstruct_pwl, saliency, stats, threshold_exceeded,
    integral, CascadeOutcome, ClassRow, EvalRow, NetworkStats,
};

/// Minimal recursive CTE with aggregation in the recursive term. Engines
/// that reject it can only run fixed-depth evaluation.
pub const PROBE_SQL: &str = "WITH RECURSIVE r(n, s) AS (SELECT 0, 1 UNION ALL \
                             SELECT n + 1, SUM(s) FROM r WHERE n < 2 GROUP BY n) SELECT COUNT(*) FROM r";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    InMemory,
    File(PathBuf),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::InMemory => f.write_str(":memory:"),
            Location::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub recursive_aggregation: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SessionOptions {
    pub read_only: bool,
    /// Engine worker threads; `None` keeps the engine default.
    pub threads: Option<usize>,
    /// Replaces [`PROBE_SQL`].
    pub probe_sql: Option<String>,
}

pub struct EngineSession {
    conn: Connection,
    capabilities: Capabilities,
    location: Location,
}

impl fmt::Debug for EngineSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EngineSession")
            .field("location", &self.location)
            .field("capabilities", &self.capabilities)
            .finish()
    }
}

impl EngineSession {
    pub fn open(location: &Location) -> Result<Self> {
        Self::open_with(location, &SessionOptions::default())
    }

    pub fn in_memory() -> Result<Self> {
        Self::open(&Location::InMemory)
    }

    pub fn open_with(location: &Location, options: &SessionOptions) -> Result<Self> {
        let unavailable = |e: duckdb::Error| Error::EngineUnavailable(format!("{location}: {e}"));
        let conn = match location {
            Location::InMemory => Connection::open_in_memory().map_err(unavailable)?,
            Location::File(path) => {
                let mode = if options.read_only { AccessMode::ReadOnly } else { AccessMode::ReadWrite };
                let config = Config::default().access_mode(mode).map_err(unavailable)?;
                Connection::open_with_flags(path, config).map_err(unavailable)?
            }
        };
        if let Some(n) = options.threads {
            conn.execute_batch(&format!("SET threads = {}", n.max(1)))?;
        }
        let probe = options.probe_sql.as_deref().unwrap_or(PROBE_SQL);
        let recursive_aggregation = conn.query_row(probe, [], |r| r.get::<_, i64>(0)).is_ok_and(|n| n == 3);
        Ok(EngineSession { conn, capabilities: Capabilities { recursive_aggregation }, location: location.clone() })
    }

    /// Another connection to the same database, with the same capabilities.
    pub fn try_clone(&self) -> Result<Self> {
        Ok(EngineSession {
            conn: self.conn.try_clone()?,
            capabilities: self.capabilities,
            location: self.location.clone(),
        })
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    pub fn capabilities(&self) -> Capabilities {
        self.capabilities
    }

    pub fn location(&self) -> &Location {
        &self.location
    }

    pub fn dialect(&self) -> &'static str {
        "duckdb"
    }

    pub fn execute(&self, query: &SqlQuery) -> Result<ResultTable> {
        if query.requires_recursive_aggregation && !self.capabilities.recursive_aggregation {
            return Err(Error::CapabilityMissing("aggregation inside recursive common table expressions"));
        }
        let with_sql = |e| Error::engine_with_sql(e, &query.text);
        let mut stmt = self.conn.prepare(&query.text).map_err(with_sql)?;
        let bound: Vec<(&str, &dyn ToSql)> = query
            .params
            .iter()
            .map(|p| {
                let value: &dyn ToSql = match &p.value {
                    ParamValue::Int(v) => v,
                    ParamValue::Real(v) => v,
                };
                (p.name, value)
            })
            .collect();

        let mut rows = Vec::new();
        let width;
        {
            let mut result = if bound.is_empty() {
                stmt.query([]).map_err(with_sql)?
            } else {
                stmt.query(bound.as_slice()).map_err(with_sql)?
            };
            width = result.as_ref().map_or(0, |s| s.column_count());
            while let Some(row) = result.next().map_err(with_sql)? {
                let mut values = Vec::with_capacity(width);
                for i in 0..width {
                    values.push(Scalar::from(row.get::<_, Value>(i).map_err(with_sql)?));
                }
                rows.push(values);
            }
        }
        let columns = stmt.column_names();
        if columns.len() != query.result_schema.len()
            || columns.iter().zip(&query.result_schema).any(|(c, s)| !c.eq_ignore_ascii_case(&s.name))
        {
            return Err(Error::SchemaMismatch(format!(
                "declared {:?}, engine returned {columns:?}",
                query.result_schema.iter().map(|c| c.name.as_str()).collect::<Vec<_>>()
            )));
        }
        Ok(ResultTable { columns, rows })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Null,
    Int(i64),
    Real(f64),
    Bool(bool),
    Text(String),
}

impl Scalar {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Scalar::Real(v) => Some(v),
            Scalar::Int(v) => Some(v as f64),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Scalar::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Scalar::Bool(v) => Some(v),
            _ => None,
        }
    }
}

impl From<Value> for Scalar {
    fn from(v: Value) -> Self {
        match v {
            Value::Null => Scalar::Null,
            Value::Boolean(b) => Scalar::Bool(b),
            Value::TinyInt(i) => Scalar::Int(i.into()),
            Value::SmallInt(i) => Scalar::Int(i.into()),
            Value::Int(i) => Scalar::Int(i.into()),
            Value::BigInt(i) => Scalar::Int(i),
            Value::HugeInt(i) => i64::try_from(i).map_or(Scalar::Real(i as f64), Scalar::Int),
            Value::UTinyInt(i) => Scalar::Int(i.into()),
            Value::USmallInt(i) => Scalar::Int(i.into()),
            Value::UInt(i) => Scalar::Int(i.into()),
            Value::UBigInt(i) => i64::try_from(i).map_or(Scalar::Real(i as f64), Scalar::Int),
            Value::Float(f) => Scalar::Real(f.into()),
            Value::Double(f) => Scalar::Real(f),
            Value::Text(s) => Scalar::Text(s),
            other => match format!("{other:?}") {
                // decimals print as e.g. Decimal(0.5)
                s if s.starts_with("Decimal(") => {
                    s["Decimal(".len()..s.len() - 1].parse().map_or(Scalar::Text(s), Scalar::Real)
                }
                s => Scalar::Text(s),
            },
        }
    }
}

/// Rows returned by one query, in the query's `ORDER BY` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Scalar>>,
}

impl ResultTable {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::SchemaMismatch(format!("no column '{name}' in {:?}", self.columns)))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn cell(&self, row: usize, name: &str) -> Result<&Scalar> {
        let c = self.column(name)?;
        self.rows
            .get(row)
            .map(|r| &r[c])
            .ok_or_else(|| Error::SchemaMismatch(format!("row {row} out of range ({} rows)", self.rows.len())))
    }

    pub fn f64_at(&self, row: usize, name: &str) -> Result<f64> {
        let cell = self.cell(row, name)?;
        cell.as_f64().ok_or_else(|| Error::SchemaMismatch(format!("column '{name}' holds {cell:?}, not a number")))
    }

    pub fn i64_at(&self, row: usize, name: &str) -> Result<i64> {
        let cell = self.cell(row, name)?;
        cell.as_i64().ok_or_else(|| Error::SchemaMismatch(format!("column '{name}' holds {cell:?}, not an integer")))
    }

    pub fn bool_at(&self, row: usize, name: &str) -> Result<bool> {
        let cell = self.cell(row, name)?;
        cell.as_bool().ok_or_else(|| Error::SchemaMismatch(format!("column '{name}' holds {cell:?}, not a boolean")))
    }
}
