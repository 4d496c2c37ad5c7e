use super::{relu_expr, Column, ColumnType, ParamValue, ReluStyle, SqlQuery, With};
use crate::error::{Error, Result};
use crate::model::Activation;

/// Options for network evaluation queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// `Some(d)` composes `d` fixed layer views; `None` evaluates recursively.
    pub depth: Option<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    /// Evaluate every stored input vector instead of `$vec_id` only.
    pub batch_over_vec: bool,
    /// Evaluate every stored model instead of `$model_id` only.
    pub batch_over_model: bool,
    pub model_id: i64,
    pub vec_id: i64,
    pub relu: ReluStyle,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            depth: None,
            hidden_activation: Activation::Relu,
            output_activation: Activation::Identity,
            batch_over_vec: true,
            batch_over_model: false,
            model_id: 0,
            vec_id: 0,
            relu: ReluStyle::Case,
        }
    }
}

impl EvalOptions {
    pub fn for_model(model_id: i64) -> Self {
        EvalOptions { model_id, ..Default::default() }
    }

    pub fn fixed(mut self, depth: usize) -> Self {
        self.depth = Some(depth);
        self
    }

    pub fn recursive(mut self) -> Self {
        self.depth = None;
        self
    }

    pub fn output(mut self, activation: Activation) -> Self {
        self.output_activation = activation;
        self
    }

    pub fn single_vec(mut self, vec_id: i64) -> Self {
        self.batch_over_vec = false;
        self.vec_id = vec_id;
        self
    }

    pub fn all_models(mut self) -> Self {
        self.batch_over_model = true;
        self
    }

    fn check(&self) -> Result<()> {
        if self.hidden_activation != Activation::Relu {
            return Err(Error::UnsupportedActivation {
                activation: self.hidden_activation.to_string(),
                context: "hidden layers".into(),
            });
        }
        Ok(())
    }
}

/// Relation names an evaluation core reads. All three carry a `model_id`
/// column; `seed` holds `(model_id, vec_id, id, val)` for input units.
pub(crate) struct Frame<'a> {
    pub edges: &'a str,
    pub units: &'a str,
    pub seed: &'a str,
}

const STORED: Frame<'static> = Frame { edges: "Edges", units: "Units", seed: "Seed" };

fn model_filter(w: &mut With, model_id: Option<i64>, alias: &str) -> String {
    match model_id {
        Some(id) => {
            w.param("model_id", ParamValue::Int(id));
            format!(" WHERE {alias}model_id = $model_id")
        }
        None => String::new(),
    }
}

/// `Edges(model_id, src, dst, weight)` over the stored `Edge` table.
pub(crate) fn edges_cte(w: &mut With, model_id: Option<i64>) {
    let filter = model_filter(w, model_id, "");
    w.cte("Edges", format!("SELECT model_id, src, dst, weight FROM Edge{filter}"));
}

/// `Units(model_id, id, bias[, is_out])`; output units have no outgoing edge.
pub(crate) fn units_cte(w: &mut With, model_id: Option<i64>, with_is_out: bool) {
    let filter = model_filter(w, model_id, "n.");
    if with_is_out {
        w.cte(
            "Units",
            format!(
                "SELECT n.model_id, n.id, n.bias,
    NOT EXISTS (SELECT 1 FROM Edges o WHERE o.model_id = n.model_id AND o.src = n.id) AS is_out
FROM Node n{filter}"
            ),
        );
    } else {
        w.cte("Units", format!("SELECT n.model_id, n.id, n.bias FROM Node n{filter}"));
    }
}

pub(crate) fn inputs_cte(w: &mut With, vec_id: Option<i64>) {
    let filter = match vec_id {
        Some(id) => {
            w.param("vec_id", ParamValue::Int(id));
            " WHERE vec_id = $vec_id"
        }
        None => "",
    };
    w.cte("Inputs", format!("SELECT vec_id, in_id, val FROM Input{filter}"));
}

/// Input units are the units without an incoming edge.
pub(crate) fn seed_cte(w: &mut With, name: &str) {
    w.cte(
        name,
        "SELECT u.model_id, i.vec_id, u.id, i.val
FROM Units u JOIN Inputs i ON i.in_id = u.id
WHERE NOT EXISTS (SELECT 1 FROM Edges e WHERE e.model_id = u.model_id AND e.dst = u.id)",
    );
}

const PRE_ACTIVATION: &str = "u.bias + SUM(e.weight * v.val)";

/// Pre-activation for softmax outputs; softmax itself is applied by
/// [`finalize`].
fn output_expr(output: Activation, relu: ReluStyle) -> String {
    match output {
        Activation::Relu => relu_expr(PRE_ACTIVATION, relu),
        Activation::Identity | Activation::Softmax => PRE_ACTIVATION.to_string(),
    }
}

/// Adds `Vals(model_id, vec_id, id, val, layer)`, grown one layer per
/// iteration by aggregating over incoming edges, and `Out` restricted to
/// output units.
pub(crate) fn recursive_core(w: &mut With, frame: &Frame<'_>, output: Activation, relu: ReluStyle) {
    w.recursive();
    let hidden = relu_expr(PRE_ACTIVATION, relu);
    let value = if output == Activation::Relu {
        hidden
    } else {
        format!("CASE WHEN u.is_out THEN {} ELSE {hidden} END", output_expr(output, relu))
    };
    let Frame { edges, units, seed } = frame;
    w.cte(
        "Vals(model_id, vec_id, id, val, layer)",
        format!(
            "SELECT model_id, vec_id, id, val, 0 FROM {seed}
UNION ALL
SELECT v.model_id, v.vec_id, e.dst,
    {value},
    v.layer + 1
FROM Vals v
JOIN {edges} e ON e.model_id = v.model_id AND e.src = v.id
JOIN {units} u ON u.model_id = e.model_id AND u.id = e.dst
GROUP BY v.model_id, v.vec_id, e.dst, u.bias, u.is_out, v.layer"
        ),
    );
    w.cte(
        "Out",
        format!(
            "SELECT v.model_id, v.vec_id, v.id, v.val
FROM Vals v JOIN {units} u ON u.model_id = v.model_id AND u.id = v.id
WHERE u.is_out AND v.layer > 0"
        ),
    );
}

/// Adds `Layer1..Layer{depth}` on top of `Layer0`; returns the last name.
pub(crate) fn fixed_core(w: &mut With, edges: &str, units: &str, depth: usize, output: Activation, relu: ReluStyle) -> String {
    for k in 1..=depth {
        let value = if k == depth { output_expr(output, relu) } else { relu_expr(PRE_ACTIVATION, relu) };
        w.cte(
            format!("Layer{k}"),
            format!(
                "SELECT v.model_id, v.vec_id, e.dst AS id,
    {value} AS val
FROM Layer{prev} v
JOIN {edges} e ON e.model_id = v.model_id AND e.src = v.id
JOIN {units} u ON u.model_id = e.model_id AND u.id = e.dst
GROUP BY v.model_id, v.vec_id, e.dst, u.bias",
                prev = k - 1
            ),
        );
    }
    format!("Layer{depth}")
}

/// Applies softmax to `out` when required; returns the relation holding
/// final output values.
pub(crate) fn finalize(w: &mut With, out: &str, output: Activation) -> String {
    if output != Activation::Softmax {
        return out.to_string();
    }
    w.cte("OutMax", format!("SELECT model_id, vec_id, MAX(val) AS m FROM {out} GROUP BY model_id, vec_id"));
    w.cte(
        "Final",
        format!(
            "SELECT o.model_id, o.vec_id, o.id,
    EXP(o.val - x.m) / SUM(EXP(o.val - x.m)) OVER (PARTITION BY o.model_id, o.vec_id) AS val
FROM {out} o JOIN OutMax x ON x.model_id = o.model_id AND x.vec_id = o.vec_id"
        ),
    );
    "Final".to_string()
}

fn key_columns(opts: &EvalOptions) -> Vec<&'static str> {
    let mut keys = Vec::new();
    if opts.batch_over_vec {
        keys.push("vec_id");
    }
    if opts.batch_over_model {
        keys.push("model_id");
    }
    keys
}

fn eval_select(opts: &EvalOptions, relation: &str) -> (String, Vec<Column>) {
    let mut cols: Vec<&str> = key_columns(opts);
    cols.push("id");
    let order = cols.join(", ");
    cols.push("val");
    let schema = cols
        .iter()
        .map(|&c| Column::new(c, if c == "val" { ColumnType::Real } else { ColumnType::Integer }))
        .collect();
    (format!("SELECT {} FROM {relation} ORDER BY {order}", cols.join(", ")), schema)
}

fn stored_prelude(w: &mut With, opts: &EvalOptions, with_is_out: bool) {
    let model = (!opts.batch_over_model).then_some(opts.model_id);
    let vec = (!opts.batch_over_vec).then_some(opts.vec_id);
    edges_cte(w, model);
    units_cte(w, model, with_is_out);
    inputs_cte(w, vec);
}

/// Composition of `depth` non-recursive layer views.
pub fn gen_eval_fixed(opts: &EvalOptions) -> Result<SqlQuery> {
    opts.check()?;
    let depth = match opts.depth {
        Some(d) if d >= 1 => d,
        other => return Err(Error::InvalidDepth(other.unwrap_or(0))),
    };
    let mut w = With::new();
    stored_prelude(&mut w, opts, false);
    seed_cte(&mut w, "Layer0");
    let out = fixed_core(&mut w, "Edges", "Units", depth, opts.output_activation, opts.relu);
    let out = finalize(&mut w, &out, opts.output_activation);
    let (select, schema) = eval_select(opts, &out);
    Ok(w.finish(&select, schema, false))
}

/// Single recursive view over all units; depth need not be known.
pub fn gen_eval_recursive(opts: &EvalOptions) -> Result<SqlQuery> {
    opts.check()?;
    let mut w = With::new();
    stored_prelude(&mut w, opts, true);
    seed_cte(&mut w, "Seed");
    recursive_core(&mut w, &STORED, opts.output_activation, opts.relu);
    let out = finalize(&mut w, "Out", opts.output_activation);
    let (select, schema) = eval_select(opts, &out);
    Ok(w.finish(&select, schema, true))
}

/// Dispatches on `opts.depth`.
pub fn gen_eval(opts: &EvalOptions) -> Result<SqlQuery> {
    match opts.depth {
        Some(_) => gen_eval_fixed(opts),
        None => gen_eval_recursive(opts),
    }
}

/// Argmax output unit per input vector and its softmax probability. Ties go
/// to the smallest unit id.
pub fn gen_classify(opts: &EvalOptions) -> Result<SqlQuery> {
    if opts.output_activation != Activation::Softmax {
        return Err(Error::UnsupportedActivation {
            activation: opts.output_activation.to_string(),
            context: "classification (softmax output required)".into(),
        });
    }
    opts.check()?;
    let mut w = With::new();
    let out = match opts.depth {
        Some(d) => {
            if d == 0 {
                return Err(Error::InvalidDepth(0));
            }
            stored_prelude(&mut w, opts, false);
            seed_cte(&mut w, "Layer0");
            fixed_core(&mut w, "Edges", "Units", d, Activation::Softmax, opts.relu)
        }
        None => {
            stored_prelude(&mut w, opts, true);
            seed_cte(&mut w, "Seed");
            recursive_core(&mut w, &STORED, Activation::Softmax, opts.relu);
            "Out".to_string()
        }
    };
    w.cte("OutMax", format!("SELECT model_id, vec_id, MAX(val) AS m FROM {out} GROUP BY model_id, vec_id"));
    w.cte(
        "Scored",
        format!(
            "SELECT o.model_id, o.vec_id,
    MIN(CASE WHEN o.val = x.m THEN o.id END) AS class_id,
    SUM(EXP(o.val - x.m)) AS mass
FROM {out} o JOIN OutMax x ON x.model_id = o.model_id AND x.vec_id = o.vec_id
GROUP BY o.model_id, o.vec_id"
        ),
    );
    let mut cols = key_columns(opts);
    let order = if cols.is_empty() { "class_id".to_string() } else { cols.join(", ") };
    cols.push("class_id");
    let select =
        format!("SELECT {}, 1.0 / mass AS probability FROM Scored ORDER BY {order}", cols.join(", "));
    let mut schema: Vec<Column> = cols.iter().map(|&c| Column::new(c, ColumnType::Integer)).collect();
    schema.push(Column::new("probability", ColumnType::Real));
    Ok(w.finish(&select, schema, opts.depth.is_none()))
}
