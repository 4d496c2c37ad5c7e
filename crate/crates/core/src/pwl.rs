//! Piecewise-linear functions of one variable and their exact realization as
//! one-hidden-layer ReLU networks.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::{Activation, DenseLayer, Model};

const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub x: f64,
    pub y: f64,
}

/// A continuous piecewise-linear function on the whole real line.
///
/// With breakpoints `x_1 < ... < x_n` there are `n + 1` pieces: the left
/// unbounded piece with `initial_slope`, `n - 1` bounded pieces with
/// `slopes[i]` between `x_{i+1}` and `x_{i+2}`, and the right unbounded piece
/// with `final_slope`. `anchor` is the value at the first breakpoint, or the
/// intercept `f(0)` when there are no breakpoints (then the function is affine
/// and both end slopes coincide).
#[derive(Debug, Clone, PartialEq)]
pub struct PwlFunction {
    pub initial_slope: f64,
    pub breakpoints: Vec<Breakpoint>,
    pub slopes: Vec<f64>,
    pub final_slope: f64,
    pub anchor: f64,
}

impl PwlFunction {
    pub fn affine(slope: f64, intercept: f64) -> Self {
        PwlFunction { initial_slope: slope, breakpoints: Vec::new(), slopes: Vec::new(), final_slope: slope, anchor: intercept }
    }

    /// Builds the function through `points` (sorted by x) with the given end
    /// slopes, deriving interior slopes from successive points.
    pub fn through_points(initial_slope: f64, points: Vec<Breakpoint>, final_slope: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvariantViolation("use PwlFunction::affine for functions without breakpoints".into()));
        }
        let slopes = points.windows(2).map(|p| (p[1].y - p[0].y) / (p[1].x - p[0].x)).collect();
        let anchor = points[0].y;
        let f = PwlFunction { initial_slope, breakpoints: points, slopes, final_slope, anchor };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.breakpoints.len();
        if self.slopes.len() != n.saturating_sub(1) {
            return Err(Error::InvariantViolation(format!(
                "{} breakpoints need {} interior slopes, got {}",
                n,
                n.saturating_sub(1),
                self.slopes.len()
            )));
        }
        if n == 0 && self.initial_slope != self.final_slope {
            return Err(Error::InvariantViolation("an affine function has a single slope".into()));
        }
        if let Some(first) = self.breakpoints.first() {
            if first.y != self.anchor {
                return Err(Error::InvariantViolation("anchor must equal the first breakpoint's y".into()));
            }
        }
        for (i, pair) in self.breakpoints.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            if !(a.x < b.x) {
                return Err(Error::InvariantViolation(format!("breakpoint x values not increasing at index {i}")));
            }
            let predicted = a.y + self.slopes[i] * (b.x - a.x);
            if (predicted - b.y).abs() > CONSISTENCY_TOL * b.y.abs().max(1.0) {
                return Err(Error::InvariantViolation(format!(
                    "slope {i} predicts y = {predicted} at x = {} but the breakpoint has y = {}",
                    b.x, b.y
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let bps = &self.breakpoints;
        let Some(first) = bps.first() else {
            return self.anchor + self.initial_slope * x;
        };
        if x <= first.x {
            return first.y + self.initial_slope * (x - first.x);
        }
        let last = bps[bps.len() - 1];
        if x >= last.x {
            return last.y + self.final_slope * (x - last.x);
        }
        // first index with bp.x > x; the piece starts one before it
        let i = bps.partition_point(|b| b.x <= x) - 1;
        bps[i].y + self.slopes[i] * (x - bps[i].x)
    }

    pub fn max_breakpoint_y(&self) -> Option<f64> {
        self.breakpoints.iter().map(|b| b.y).reduce(f64::max)
    }
}

/// Realizes `pwl` on `[lo, hi]` as a 1-input, 1-hidden-layer, 1-output ReLU
/// network with identity output.
///
/// Hidden unit 0 carries the linear term: incoming weight 1, bias `-(lo - 1)`,
/// outgoing weight `initial_slope`. It is active on all of `[lo, hi]` but has
/// its own breakpoint at `lo - 1`, so the network only agrees with `pwl` on
/// `x >= lo - 1`. Unit `i + 1` sits at breakpoint `i` and adds the slope change
/// there.
pub fn pwl_to_network(pwl: &PwlFunction, lo: f64, hi: f64, name: &str) -> Result<Model> {
    if !(lo < hi) {
        return Err(Error::InvalidInterval { lo, hi });
    }
    pwl.validate()?;
    if let Some(b) = pwl.breakpoints.iter().find(|b| !(lo < b.x && b.x < hi)) {
        return Err(Error::BreakpointOutOfDomain { x: b.x, lo, hi });
    }

    let n = pwl.breakpoints.len();
    let in_weights = vec![1.0; n + 1];
    let mut biases = Vec::with_capacity(n + 1);
    let mut out_weights = Vec::with_capacity(n + 1);
    biases.push(-(lo - 1.0));
    out_weights.push(pwl.initial_slope);
    let mut left = pwl.initial_slope;
    for (i, b) in pwl.breakpoints.iter().enumerate() {
        let right = if i + 1 < n { pwl.slopes[i] } else { pwl.final_slope };
        biases.push(-b.x);
        out_weights.push(right - left);
        left = right;
    }
    // at x = lo only the carrier is active, with value 1
    let out_bias = pwl.eval(lo) - pwl.initial_slope;

    let hidden = DenseLayer::new(
        Array2::from_shape_vec((n + 1, 1), in_weights).expect("column"),
        Array1::from(biases),
        Activation::Relu,
    );
    let output = DenseLayer::new(
        Array2::from_shape_vec((1, n + 1), out_weights).expect("row"),
        Array1::from(vec![out_bias]),
        Activation::Identity,
    );
    Model::new(name, vec![hidden, output])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bp(x: f64, y: f64) -> Breakpoint {
        Breakpoint { x, y }
    }

    fn forward(m: &Model, x: f64) -> f64 {
        let h = &m.layers[0];
        let o = &m.layers[1];
        let hidden: Vec<f64> = (0..h.outputs()).map(|r| (h.weights[[r, 0]] * x + h.bias[r]).max(0.0)).collect();
        o.bias[0] + hidden.iter().enumerate().map(|(r, v)| o.weights[[0, r]] * v).sum::<f64>()
    }

    #[test]
    fn eval_pieces() {
        let f = PwlFunction::through_points(-1.0, vec![bp(0.0, 0.0), bp(1.0, 2.0)], 0.5).unwrap();
        assert_eq!(f.slopes, vec![2.0]);
        assert_eq!(f.eval(-2.0), 2.0);
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(3.0), 3.0);
        assert_eq!(PwlFunction::affine(2.0, 1.0).eval(3.0), 7.0);
    }

    #[test]
    fn inconsistent_slopes_rejected() {
        let f = PwlFunction {
            initial_slope: 0.0,
            breakpoints: vec![bp(0.0, 0.0), bp(1.0, 1.0)],
            slopes: vec![3.0],
            final_slope: 0.0,
            anchor: 0.0,
        };
        assert!(f.validate().is_err());
    }

    #[test]
    fn identity_on_unit_interval() {
        let m = pwl_to_network(&PwlFunction::affine(1.0, 0.0), 0.0, 1.0, "id").unwrap();
        assert_eq!(m.widths(), vec![1, 1, 1]);
        assert!((forward(&m, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn absolute_value() {
        let f = PwlFunction::through_points(-1.0, vec![bp(0.0, 0.0)], 1.0).unwrap();
        let m = pwl_to_network(&f, -3.0, 3.0, "abs").unwrap();
        assert_eq!(forward(&m, 2.0), 2.0);
        assert_eq!(forward(&m, -2.0), 2.0);
    }

    #[test]
    fn breakpoint_outside_domain() {
        let f = PwlFunction::through_points(0.0, vec![bp(2.0, 0.0)], 1.0).unwrap();
        assert!(matches!(pwl_to_network(&f, 0.0, 1.0, "x"), Err(Error::BreakpointOutOfDomain { .. })));
    }
}
