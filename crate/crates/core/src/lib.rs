//! Feedforward ReLU networks stored as relations, with analysis tasks
//! compiled to SQL and executed on an embedded DuckDB database.
//!
//! A [`Model`] is converted to a [`NetworkGraph`], loaded into the `Node` and
//! `Edge` tables by [`store`], and queried with text produced by [`sqlgen`]
//! through a [`runner::EngineSession`]. [`oracle`] recomputes every result
//! natively.

pub mod bench;
pub mod conv;
pub mod error;
pub mod graph;
pub mod model;
pub mod oracle;
pub mod pwl;
pub mod runner;
pub mod sqlgen;
pub mod store;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use graph::{model_to_graph, model_to_graph_with, GraphEdge, GraphNode, GraphOptions, NetworkGraph, NodeId};
pub use model::{export_inputs, export_model, import_inputs, import_model, Activation, DenseLayer, InputVector, Model};
pub use pwl::{pwl_to_network, Breakpoint, PwlFunction};
pub use runner::{EngineSession, Location, ResultTable, Scalar, SessionOptions};
pub use sqlgen::SqlQuery;
