//! Geometry of 1-input, 1-hidden-layer, 1-output networks.
//!
//! Hidden unit `u` with input weight `w != 0` bends the function at
//! `x = -u.bias / w`. The y values come from running the ordinary evaluation
//! layers on those x values, each breakpoint acting as one input vector.
//! Vector 0 probes `x = 0` for the intercept.

use super::eval::{edges_cte, fixed_core, units_cte};
use super::{Column, ColumnType, ParamValue, ReluStyle, SqlQuery, With};
use crate::error::{Error, Result};
use crate::model::Activation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryOptions {
    pub model_id: i64,
    /// Must be identity; the reconstruction assumes an affine output unit.
    pub output_activation: Activation,
    pub relu: ReluStyle,
}

impl GeometryOptions {
    pub fn for_model(model_id: i64) -> Self {
        GeometryOptions { model_id, output_activation: Activation::Identity, relu: ReluStyle::Case }
    }
}

/// Adds every geometry view: `Breakpoints(x, y)`, `Slopes(x, s)`,
/// `InitialSlope(s0)`, `FinalSlope(s)` and `Intercept(y)`.
fn geometry_views(opts: &GeometryOptions) -> Result<With> {
    if opts.output_activation != Activation::Identity {
        return Err(Error::NotGeometryEligible(format!(
            "output activation is {}, geometry needs identity",
            opts.output_activation
        )));
    }
    let mut w = With::new();
    edges_cte(&mut w, Some(opts.model_id));
    units_cte(&mut w, Some(opts.model_id), false);
    w.cte(
        "InputUnit",
        "SELECT u.model_id, u.id FROM Units u
WHERE NOT EXISTS (SELECT 1 FROM Edges e WHERE e.dst = u.id)",
    );
    w.cte(
        "Hidden",
        "SELECT e.dst AS id, e.weight AS w, u.bias, o.weight AS w_out
FROM Edges e
JOIN InputUnit i ON e.src = i.id
JOIN Units u ON u.id = e.dst
JOIN Edges o ON o.src = e.dst",
    );
    // + 0.0 folds -0.0 into 0.0 so equal breakpoints merge
    w.cte("BreakX", "SELECT DISTINCT -bias / w + 0.0 AS x FROM Hidden WHERE w <> 0");
    w.cte(
        "Layer0",
        "SELECT i.model_id, p.vec_id, i.id, p.x AS val
FROM InputUnit i CROSS JOIN (
    SELECT 0 AS vec_id, 0.0 AS x
    UNION ALL
    SELECT ROW_NUMBER() OVER (ORDER BY x) AS vec_id, x FROM BreakX
) p",
    );
    fixed_core(&mut w, "Edges", "Units", 2, Activation::Identity, opts.relu);
    w.cte(
        "Breakpoints(x, y)",
        "SELECT p.val, l.val FROM Layer0 p JOIN Layer2 l ON l.vec_id = p.vec_id WHERE p.vec_id > 0",
    );
    w.cte("Intercept(y)", "SELECT val FROM Layer2 WHERE vec_id = 0");
    // units with w < 0 are the ones active as x -> -inf, w > 0 as x -> +inf
    w.cte("InitialSlope(s0)", "SELECT COALESCE(SUM(w_out * w), 0.0) FROM Hidden WHERE w < 0");
    w.cte("FinalSlope(s)", "SELECT COALESCE(SUM(w_out * w), 0.0) FROM Hidden WHERE w > 0");
    w.cte(
        "Succ",
        "SELECT x, y, LEAD(x) OVER (ORDER BY x) AS x_next, LEAD(y) OVER (ORDER BY x) AS y_next
FROM Breakpoints",
    );
    w.cte("Slopes(x, s)", "SELECT x, (y_next - y) / (x_next - x) FROM Succ WHERE x_next IS NOT NULL");
    Ok(w)
}

fn real(name: &str) -> Column {
    Column::new(name, ColumnType::Real)
}

pub fn gen_breakpoints(opts: &GeometryOptions) -> Result<SqlQuery> {
    let w = geometry_views(opts)?;
    Ok(w.finish("SELECT x, y FROM Breakpoints ORDER BY x", vec![real("x"), real("y")], false))
}

pub fn gen_slopes(opts: &GeometryOptions) -> Result<SqlQuery> {
    let w = geometry_views(opts)?;
    Ok(w.finish("SELECT x, s FROM Slopes ORDER BY x", vec![real("x"), real("s")], false))
}

pub fn gen_initial_slope(opts: &GeometryOptions) -> Result<SqlQuery> {
    let w = geometry_views(opts)?;
    Ok(w.finish("SELECT s0 FROM InitialSlope", vec![real("s0")], false))
}

/// Slope of the unbounded piece right of the last breakpoint.
pub fn gen_final_slope(opts: &GeometryOptions) -> Result<SqlQuery> {
    let w = geometry_views(opts)?;
    Ok(w.finish("SELECT s FROM FinalSlope", vec![real("s")], false))
}

pub fn gen_intercept(opts: &GeometryOptions) -> Result<SqlQuery> {
    let w = geometry_views(opts)?;
    Ok(w.finish("SELECT y FROM Intercept", vec![real("y")], false))
}

/// Definite integral over `[lower, upper]`, summing the exact area of every
/// piece clipped to the interval.
pub fn gen_integral(opts: &GeometryOptions, lower: f64, upper: f64) -> Result<SqlQuery> {
    if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
        return Err(Error::InvalidInterval { lo: lower, hi: upper });
    }
    let mut w = geometry_views(opts)?;
    w.param("lower", ParamValue::Real(lower));
    w.param("upper", ParamValue::Real(upper));
    // (lo, hi) bounds with NULL for an unbounded side, anchored at (ax, ay)
    w.cte(
        "Pieces(lo, hi, ax, ay, s)",
        "SELECT CAST(NULL AS DOUBLE), b.x, b.x, b.y, (SELECT s0 FROM InitialSlope)
FROM Breakpoints b WHERE b.x = (SELECT MIN(x) FROM Breakpoints)
UNION ALL
SELECT n.x, n.x_next, n.x, n.y, s.s
FROM Slopes s JOIN Succ n ON n.x = s.x
UNION ALL
SELECT b.x, CAST(NULL AS DOUBLE), b.x, b.y, (SELECT s FROM FinalSlope)
FROM Breakpoints b WHERE b.x = (SELECT MAX(x) FROM Breakpoints)
UNION ALL
SELECT CAST(NULL AS DOUBLE), CAST(NULL AS DOUBLE), 0.0, (SELECT y FROM Intercept), (SELECT s0 FROM InitialSlope)
WHERE NOT EXISTS (SELECT 1 FROM Breakpoints)",
    );
    w.cte(
        "Clipped",
        "SELECT GREATEST(COALESCE(lo, $lower), $lower) AS l, LEAST(COALESCE(hi, $upper), $upper) AS r, ax, ay, s
FROM Pieces",
    );
    Ok(w.finish(
        "SELECT COALESCE(SUM((r - l) * (ay + s * ((l + r) / 2 - ax))), 0.0) AS integral
FROM Clipped WHERE l < r",
        vec![real("integral")],
        false,
    ))
}

/// Whether the function exceeds `threshold` anywhere on the real line: the
/// largest breakpoint value is above it, or an unbounded end piece rises
/// without limit.
pub fn gen_threshold_check(opts: &GeometryOptions, threshold: f64) -> Result<SqlQuery> {
    if !threshold.is_finite() {
        return Err(Error::InvalidParameter(format!("threshold must be finite, got {threshold}")));
    }
    let mut w = geometry_views(opts)?;
    w.param("threshold", ParamValue::Real(threshold));
    Ok(w.finish(
        "SELECT CASE WHEN (SELECT COUNT(*) FROM Breakpoints) = 0
    THEN (SELECT s0 FROM InitialSlope) <> 0 OR (SELECT y FROM Intercept) > $threshold
    ELSE (SELECT MAX(y) FROM Breakpoints) > $threshold
        OR (SELECT s0 FROM InitialSlope) < 0
        OR (SELECT s FROM FinalSlope) > 0
END AS exceeds",
        vec![Column::new("exceeds", ColumnType::Boolean)],
        false,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requires_identity_output() {
        let opts = GeometryOptions { output_activation: Activation::Relu, ..GeometryOptions::for_model(0) };
        assert!(matches!(gen_breakpoints(&opts), Err(Error::NotGeometryEligible(_))));
    }

    #[test]
    fn integral_interval_checked() {
        let opts = GeometryOptions::for_model(0);
        assert!(matches!(gen_integral(&opts, 1.0, 1.0), Err(Error::InvalidInterval { .. })));
        assert!(matches!(gen_integral(&opts, 2.0, 1.0), Err(Error::InvalidInterval { .. })));
        let q = gen_integral(&opts, 0.0, 1.0).unwrap();
        q.check_params().unwrap();
        assert_eq!(q.param("upper"), Some(ParamValue::Real(1.0)));
    }

    #[test]
    fn threshold_params() {
        gen_threshold_check(&GeometryOptions::for_model(4), 0.5).unwrap().check_params().unwrap();
    }
}
