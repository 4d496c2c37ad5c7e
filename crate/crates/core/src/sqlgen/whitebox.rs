use super::{Column, ColumnType, ParamValue, SqlQuery, With};
use crate::error::{Error, Result};

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    Ok(())
}

/// Nodes all of whose incoming weights lie strictly inside
/// `(-epsilon, epsilon)`.
pub fn gen_prunable_nodes(model_id: i64, epsilon: f64) -> Result<SqlQuery> {
    check_epsilon(epsilon)?;
    let mut w = With::new();
    w.param("model_id", ParamValue::Int(model_id));
    w.param("epsilon", ParamValue::Real(epsilon));
    Ok(w.finish(
        "SELECT dst AS id FROM Edge WHERE model_id = $model_id GROUP BY dst
HAVING -$epsilon < MIN(weight) AND MAX(weight) < $epsilon
ORDER BY dst",
        vec![Column::new("id", ColumnType::Integer)],
        false,
    ))
}

/// Edge relation that connectivity is judged against.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeSource {
    /// The stored `Edge` table.
    Stored,
    /// Stored edges minus those with `|weight| < epsilon`.
    AboveThreshold(f64),
    /// A caller-maintained table with the columns of `Edge`.
    Table(String),
}

/// Hidden units (neither input nor output in the stored structure) that have
/// no incoming or no outgoing edge in `source`.
pub fn gen_unconnected_nodes(model_id: i64, source: &EdgeSource) -> Result<SqlQuery> {
    let mut w = With::new();
    w.param("model_id", ParamValue::Int(model_id));
    let kept = match source {
        EdgeSource::Stored => "SELECT src, dst FROM Edge WHERE model_id = $model_id".to_string(),
        EdgeSource::AboveThreshold(epsilon) => {
            check_epsilon(*epsilon)?;
            w.param("epsilon", ParamValue::Real(*epsilon));
            "SELECT src, dst FROM Edge
WHERE model_id = $model_id AND NOT (-$epsilon < weight AND weight < $epsilon)"
                .to_string()
        }
        EdgeSource::Table(name) => {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::InvalidParameter(format!("'{name}' is not a plain table name")));
            }
            format!("SELECT src, dst FROM {name} WHERE model_id = $model_id")
        }
    };
    w.cte("Structure", "SELECT src, dst FROM Edge WHERE model_id = $model_id");
    w.cte("Kept", kept);
    w.cte(
        "Hidden",
        "SELECT n.id FROM Node n
WHERE n.model_id = $model_id
    AND EXISTS (SELECT 1 FROM Structure s WHERE s.dst = n.id)
    AND EXISTS (SELECT 1 FROM Structure s WHERE s.src = n.id)",
    );
    Ok(w.finish(
        "SELECT h.id FROM Hidden h
WHERE NOT EXISTS (SELECT 1 FROM Kept k WHERE k.dst = h.id)
    OR NOT EXISTS (SELECT 1 FROM Kept k WHERE k.src = h.id)
ORDER BY h.id",
        vec![Column::new("id", ColumnType::Integer)],
        false,
    ))
}

pub fn gen_neuron_count(model_id: i64) -> SqlQuery {
    let mut w = With::new();
    w.param("model_id", ParamValue::Int(model_id));
    w.finish(
        "SELECT COUNT(*) AS neurons FROM Node WHERE model_id = $model_id",
        vec![Column::new("neurons", ColumnType::Integer)],
        false,
    )
}

pub fn gen_distinct_edges(model_id: i64) -> SqlQuery {
    let mut w = With::new();
    w.param("model_id", ParamValue::Int(model_id));
    w.finish(
        "SELECT COUNT(*) AS edges FROM (SELECT DISTINCT src, dst FROM Edge WHERE model_id = $model_id) d",
        vec![Column::new("edges", ColumnType::Integer)],
        false,
    )
}

/// Longest path from an input unit, grown by a recursive view.
pub fn gen_depth(model_id: i64) -> SqlQuery {
    let mut w = With::new();
    w.recursive();
    w.param("model_id", ParamValue::Int(model_id));
    w.cte("Edges", "SELECT src, dst FROM Edge WHERE model_id = $model_id");
    w.cte(
        "Reach(id, len)",
        "SELECT n.id, 0 FROM Node n
WHERE n.model_id = $model_id AND NOT EXISTS (SELECT 1 FROM Edges e WHERE e.dst = n.id)
UNION
SELECT e.dst, r.len + 1
FROM Reach r JOIN Edges e ON e.src = r.id
GROUP BY e.dst, r.len",
    );
    w.finish(
        "SELECT COALESCE(MAX(len), 0) AS depth FROM Reach",
        vec![Column::new("depth", ColumnType::Integer)],
        true,
    )
}

/// Neuron count, distinct edge count and depth.
pub fn gen_stats(model_id: i64) -> Vec<SqlQuery> {
    vec![gen_neuron_count(model_id), gen_distinct_edges(model_id), gen_depth(model_id)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_must_be_positive() {
        assert!(gen_prunable_nodes(0, 0.0).is_err());
        assert!(gen_prunable_nodes(0, -1.0).is_err());
        assert!(gen_prunable_nodes(0, f64::NAN).is_err());
    }

    #[test]
    fn prunable_keeps_strict_having() {
        let q = gen_prunable_nodes(0, 0.1).unwrap();
        assert!(q.text.contains("HAVING -$epsilon < MIN(weight) AND MAX(weight) < $epsilon"));
        q.check_params().unwrap();
    }

    #[test]
    fn stats_flags() {
        let qs = gen_stats(2);
        assert_eq!(qs.iter().map(|q| q.requires_recursive_aggregation).collect::<Vec<_>>(), vec![false, false, true]);
        for q in &qs {
            q.check_params().unwrap();
        }
    }

    #[test]
    fn table_name_is_checked() {
        assert!(gen_unconnected_nodes(0, &EdgeSource::Table("x; DROP TABLE Edge".into())).is_err());
        gen_unconnected_nodes(0, &EdgeSource::AboveThreshold(0.1)).unwrap().check_params().unwrap();
    }
}
