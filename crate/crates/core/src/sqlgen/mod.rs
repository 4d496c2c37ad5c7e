//! Compilation of analysis tasks into SQL text.
//!
//! Every generator is a pure function returning a [`SqlQuery`]: one statement
//! (a chain of common table expressions ending in a `SELECT`), its result
//! schema, whether it needs aggregation inside a recursive term, and the named
//! parameters it references as `$name`. Identical options always yield
//! byte-identical text.

mod eval;
mod geometry;
mod saliency;
mod whitebox;

use std::collections::BTreeSet;
use std::fmt::Write as _;

pub use eval::{gen_classify, gen_eval, gen_eval_fixed, gen_eval_recursive, EvalOptions};
pub use geometry::{
    gen_breakpoints, gen_final_slope, gen_initial_slope, gen_integral, gen_intercept, gen_slopes,
    gen_threshold_check, GeometryOptions,
};
pub use saliency::{gen_saliency_medges, gen_saliency_pinputs, DropTargets, SaliencyOptions};
pub use whitebox::{gen_depth, gen_distinct_edges, gen_neuron_count, gen_prunable_nodes, gen_stats, gen_unconnected_nodes, EdgeSource};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Integer,
    Real,
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub ty: ColumnType,
}

impl Column {
    fn new(name: &str, ty: ColumnType) -> Self {
        Column { name: name.to_string(), ty }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: &'static str,
    pub value: ParamValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqlQuery {
    pub text: String,
    pub result_schema: Vec<Column>,
    pub requires_recursive_aggregation: bool,
    pub params: Vec<Param>,
}

impl SqlQuery {
    /// Names referenced as `$name` in the text.
    pub fn referenced_params(&self) -> BTreeSet<String> {
        let bytes = self.text.as_bytes();
        let mut names = BTreeSet::new();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] == b'$' {
                let start = i + 1;
                let mut end = start;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                if end > start {
                    names.insert(self.text[start..end].to_string());
                }
                i = end;
            } else {
                i += 1;
            }
        }
        names
    }

    /// Declared and referenced parameters must coincide.
    pub fn check_params(&self) -> Result<()> {
        let declared: BTreeSet<String> = self.params.iter().map(|p| p.name.to_string()).collect();
        let referenced = self.referenced_params();
        if declared != referenced {
            return Err(Error::InvalidParameter(format!(
                "declared parameters {declared:?} differ from referenced {referenced:?}"
            )));
        }
        Ok(())
    }

    pub fn param(&self, name: &str) -> Option<ParamValue> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    /// Rebinds an existing parameter, keeping the text unchanged.
    pub fn with_param(mut self, name: &str, value: ParamValue) -> Result<Self> {
        let slot = self
            .params
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::InvalidParameter(format!("query has no parameter ${name}")))?;
        slot.value = value;
        Ok(self)
    }
}

/// How ReLU is spelled. `Case` is portable; `Greatest` needs engine support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReluStyle {
    #[default]
    Case,
    Greatest,
}

pub(crate) fn relu_expr(z: &str, style: ReluStyle) -> String {
    match style {
        ReluStyle::Case => format!("CASE WHEN {z} > 0 THEN {z} ELSE 0.0 END"),
        ReluStyle::Greatest => format!("GREATEST(0.0, {z})"),
    }
}

/// Accumulates common table expressions and renders the final statement.
#[derive(Debug, Default)]
pub(crate) struct With {
    recursive: bool,
    ctes: Vec<(String, String)>,
    params: Vec<Param>,
}

impl With {
    pub(crate) fn new() -> Self {
        With::default()
    }

    pub(crate) fn recursive(&mut self) {
        self.recursive = true;
    }

    /// `head` is the CTE name, optionally with a column list.
    pub(crate) fn cte(&mut self, head: impl Into<String>, body: impl AsRef<str>) {
        self.ctes.push((head.into(), body.as_ref().trim_matches('\n').to_string()));
    }

    pub(crate) fn param(&mut self, name: &'static str, value: ParamValue) {
        if !self.params.iter().any(|p| p.name == name) {
            self.params.push(Param { name, value });
        }
    }

    pub(crate) fn finish(self, select: &str, result_schema: Vec<Column>, requires_recursive_aggregation: bool) -> SqlQuery {
        let mut text = String::new();
        if !self.ctes.is_empty() {
            text.push_str(if self.recursive { "WITH RECURSIVE\n" } else { "WITH\n" });
            for (i, (head, body)) in self.ctes.iter().enumerate() {
                let sep = if i + 1 < self.ctes.len() { "," } else { "" };
                let _ = writeln!(text, "{head} AS (");
                for line in body.lines() {
                    if line.is_empty() {
                        text.push('\n');
                    } else {
                        let _ = writeln!(text, "    {line}");
                    }
                }
                let _ = writeln!(text, "){sep}");
            }
        }
        text.push_str(select.trim_matches('\n'));
        text.push('\n');
        SqlQuery { text, result_schema, requires_recursive_aggregation, params: self.params }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn referenced_params_are_scanned() {
        let q = SqlQuery {
            text: "SELECT $a, $b_2 FROM t WHERE x = $a".into(),
            result_schema: vec![],
            requires_recursive_aggregation: false,
            params: vec![Param { name: "a", value: ParamValue::Int(1) }, Param { name: "b_2", value: ParamValue::Real(0.5) }],
        };
        assert_eq!(q.referenced_params().into_iter().collect::<Vec<_>>(), vec!["a", "b_2"]);
        q.check_params().unwrap();
    }

    #[test]
    fn builder_renders_ctes_in_order() {
        let mut w = With::new();
        w.cte("A", "SELECT 1 AS x");
        w.cte("B(y)", "SELECT x FROM A");
        let q = w.finish("SELECT y FROM B", vec![Column::new("y", ColumnType::Integer)], false);
        assert_eq!(q.text, "WITH\nA AS (\n    SELECT 1 AS x\n),\nB(y) AS (\n    SELECT x FROM A\n)\nSELECT y FROM B\n");
    }
}
