use crate::error::{Error, Result};
use crate::model::{Activation, Model};
use crate::pwl::{Breakpoint, PwlFunction};

/// Exact piecewise-linear form of a 1-input, one-hidden-layer, 1-output
/// network with identity output.
pub fn geometry(model: &Model) -> Result<PwlFunction> {
    let widths = model.widths();
    if widths.len() != 3 || widths[0] != 1 || widths[2] != 1 {
        return Err(Error::NotGeometryEligible(format!("layer widths {widths:?}")));
    }
    let (hidden, out) = (&model.layers[0], &model.layers[1]);
    if hidden.activation != Activation::Relu || out.activation != Activation::Identity {
        return Err(Error::NotGeometryEligible(format!(
            "activations {} / {}, expected relu / identity",
            hidden.activation, out.activation
        )));
    }

    let mut s0 = 0.0;
    let mut s_end = 0.0;
    let mut xs = Vec::new();
    for j in 0..widths[1] {
        let (w, b, v) = (hidden.weights[[j, 0]], hidden.bias[j], out.weights[[0, j]]);
        if w < 0.0 {
            s0 += v * w;
        } else if w > 0.0 {
            s_end += v * w;
        }
        if w != 0.0 {
            xs.push(-b / w + 0.0);
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let f = |x: f64| super::eval(model, &[x]).map(|v| v[0]);
    if xs.is_empty() {
        return Ok(PwlFunction::affine(s0, f(0.0)?));
    }
    let points = xs.into_iter().map(|x| Ok(Breakpoint { x, y: f(x)? })).collect::<Result<Vec<_>>>()?;
    PwlFunction::through_points(s0, points, s_end)
}

/// Exact `∫_a^b pwl` from the antiderivative of each linear piece.
pub fn integral(pwl: &PwlFunction, a: f64, b: f64) -> Result<f64> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInterval { lo: a, hi: b });
    }
    // a piece is linear through (x0, y0) with slope s; F(x) = y0 (x - x0) + s (x - x0)^2 / 2
    let area = |x0: f64, y0: f64, s: f64, l: f64, r: f64| {
        let big_f = |x: f64| y0 * (x - x0) + s * (x - x0) * (x - x0) / 2.0;
        big_f(r) - big_f(l)
    };
    let bps = &pwl.breakpoints;
    if bps.is_empty() {
        return Ok(area(0.0, pwl.anchor, pwl.initial_slope, a, b));
    }

    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(bps.iter().map(|p| p.x));
    edges.push(f64::INFINITY);
    let mut total = 0.0;
    for (i, span) in edges.windows(2).enumerate() {
        let (l, r) = (span[0].max(a), span[1].min(b));
        if !(l < r) {
            continue;
        }
        let (anchor, s) = match i {
            0 => (bps[0], pwl.initial_slope),
            i if i == bps.len() => (bps[i - 1], pwl.final_slope),
            i => (bps[i - 1], pwl.slopes[i - 1]),
        };
        total += area(anchor.x, anchor.y, s, l, r);
    }
    Ok(total)
}

/// Whether `pwl` takes a value above `threshold` anywhere on the real line.
pub fn exceeds(pwl: &PwlFunction, threshold: f64) -> bool {
    if pwl.breakpoints.is_empty() {
        return pwl.initial_slope != 0.0 || pwl.anchor > threshold;
    }
    // f grows without bound to the left when s0 < 0 and to the right when the last slope is positive
    if pwl.initial_slope < 0.0 || pwl.final_slope > 0.0 {
        return true;
    }
    pwl.breakpoints.iter().any(|p| p.y > threshold)
}
