//! Perturbation saliency in a single query.
//!
//! Both variants evaluate every perturbation side by side with the baseline
//! and report, per dropped unit `d_id`, the absolute change of the output unit
//! that is largest on the baseline (smallest id on ties).
//!
//! * PInputs zeroes one input value; `d_id` acts as the vector key and the
//!   baseline uses key -1.
//! * MEdges deletes every edge touching one unit; `d_id` acts as the model
//!   key and the baseline uses key -1. A unit left without incoming edges is
//!   never reached and contributes nothing, and an unreached output reads
//!   as 0.

use super::eval::{edges_cte, finalize, recursive_core, units_cte, Frame};
use super::{Column, ColumnType, ParamValue, ReluStyle, SqlQuery, With};
use crate::model::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropTargets {
    Input,
    Hidden,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaliencyOptions {
    pub model_id: i64,
    /// The baseline input vector.
    pub vec_id: i64,
    pub output_activation: Activation,
    pub relu: ReluStyle,
    /// Restrict to one dropped unit, bound as `$d_id`.
    pub single_drop: Option<i64>,
}

impl SaliencyOptions {
    pub fn new(model_id: i64, vec_id: i64) -> Self {
        SaliencyOptions {
            model_id,
            vec_id,
            output_activation: Activation::Identity,
            relu: ReluStyle::Case,
            single_drop: None,
        }
    }

    pub fn output(mut self, activation: Activation) -> Self {
        self.output_activation = activation;
        self
    }

    pub fn only(mut self, d_id: i64) -> Self {
        self.single_drop = Some(d_id);
        self
    }
}

fn schema() -> Vec<Column> {
    vec![Column::new("d_id", ColumnType::Integer), Column::new("saliency", ColumnType::Real)]
}

fn baseline_cte(w: &mut With, opts: &SaliencyOptions) {
    w.param("vec_id", ParamValue::Int(opts.vec_id));
    w.cte("Baseline", "SELECT in_id, val FROM Input WHERE vec_id = $vec_id");
}

fn target_cte(w: &mut With, relation: &str, key: &str) {
    w.cte(
        "Target",
        format!(
            "SELECT MIN(id) AS id FROM {relation}
WHERE {key} = -1 AND val = (SELECT MAX(val) FROM {relation} WHERE {key} = -1)"
        ),
    );
}

/// Zeroing saliency over input units.
pub fn gen_saliency_pinputs(opts: &SaliencyOptions) -> SqlQuery {
    let mut w = With::new();
    edges_cte(&mut w, Some(opts.model_id));
    units_cte(&mut w, Some(opts.model_id), true);
    baseline_cte(&mut w, opts);
    let only = match opts.single_drop {
        Some(d) => {
            w.param("d_id", ParamValue::Int(d));
            "\nWHERE I2.in_id = $d_id"
        }
        None => "",
    };
    w.cte(
        "PInputs",
        format!(
            "SELECT I2.in_id AS d_id, I1.in_id,
    (CASE WHEN I1.in_id = I2.in_id THEN 0 ELSE I1.val END) AS val
FROM Baseline I1, Baseline I2{only}"
        ),
    );
    w.cte(
        "Seed",
        "SELECT u.model_id, p.d_id AS vec_id, u.id, p.val
FROM Units u JOIN PInputs p ON p.in_id = u.id
WHERE NOT EXISTS (SELECT 1 FROM Edges e WHERE e.model_id = u.model_id AND e.dst = u.id)
UNION ALL
SELECT u.model_id, -1 AS vec_id, u.id, b.val
FROM Units u JOIN Baseline b ON b.in_id = u.id
WHERE NOT EXISTS (SELECT 1 FROM Edges e WHERE e.model_id = u.model_id AND e.dst = u.id)",
    );
    recursive_core(&mut w, &Frame { edges: "Edges", units: "Units", seed: "Seed" }, opts.output_activation, opts.relu);
    let out = finalize(&mut w, "Out", opts.output_activation);
    target_cte(&mut w, &out, "vec_id");
    w.finish(
        &format!(
            "SELECT p.vec_id AS d_id, ABS(p.val - b.val) AS saliency
FROM {out} p
JOIN {out} b ON b.model_id = p.model_id AND b.id = p.id AND b.vec_id = -1
WHERE p.vec_id <> -1 AND p.id = (SELECT id FROM Target)
ORDER BY d_id"
        ),
        schema(),
        true,
    )
}

/// Removal saliency over input or hidden units.
pub fn gen_saliency_medges(targets: DropTargets, opts: &SaliencyOptions) -> SqlQuery {
    let mut w = With::new();
    edges_cte(&mut w, Some(opts.model_id));
    units_cte(&mut w, Some(opts.model_id), true);
    w.cte("InputUnits", "SELECT u.id FROM Units u WHERE NOT EXISTS (SELECT 1 FROM Edges e WHERE e.dst = u.id)");
    let candidates = match targets {
        DropTargets::Input => "SELECT id FROM InputUnits",
        DropTargets::Hidden => "SELECT u.id FROM Units u WHERE NOT u.is_out AND u.id NOT IN (SELECT id FROM InputUnits)",
    };
    let drops = match opts.single_drop {
        Some(d) => {
            w.param("d_id", ParamValue::Int(d));
            format!("SELECT id FROM ({candidates}) c WHERE id = $d_id")
        }
        None => candidates.to_string(),
    };
    w.cte("Drops(d_id)", drops);
    w.cte("Variants(d_id)", "SELECT d_id FROM Drops\nUNION ALL\nSELECT -1");
    w.cte(
        "MEdges(d_id, src, dst, weight)",
        "SELECT d.d_id, e.src, e.dst, e.weight
FROM Variants d CROSS JOIN Edges e
WHERE e.src <> d.d_id AND e.dst <> d.d_id",
    );
    w.cte("VariantEdges(model_id, src, dst, weight)", "SELECT d_id, src, dst, weight FROM MEdges");
    w.cte(
        "VariantUnits(model_id, id, bias, is_out)",
        "SELECT d.d_id, u.id, u.bias, u.is_out FROM Variants d CROSS JOIN Units u",
    );
    baseline_cte(&mut w, opts);
    w.cte(
        "Seed",
        "SELECT d.d_id AS model_id, 0 AS vec_id, i.id, b.val
FROM Variants d CROSS JOIN InputUnits i
JOIN Baseline b ON b.in_id = i.id",
    );
    recursive_core(
        &mut w,
        &Frame { edges: "VariantEdges", units: "VariantUnits", seed: "Seed" },
        opts.output_activation,
        opts.relu,
    );
    let out = finalize(&mut w, "Out", opts.output_activation);
    target_cte(&mut w, &out, "model_id");
    w.finish(
        &format!(
            "SELECT d.d_id, ABS(COALESCE(p.val, 0.0) - b.val) AS saliency
FROM Drops d
JOIN {out} b ON b.model_id = -1 AND b.id = (SELECT id FROM Target)
LEFT JOIN {out} p ON p.model_id = d.d_id AND p.id = b.id
ORDER BY d.d_id"
        ),
        schema(),
        true,
    )
}
