//! Scaling runs of the evaluation queries on generated networks.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{model_to_graph, NetworkGraph};
use crate::model::{Activation, InputVector, Model};
use crate::runner::{evaluate, EngineSession, EvalRow, Location, SessionOptions};
use crate::sqlgen::EvalOptions;
use crate::{oracle, store, synth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axis {
    InputLength,
    NumInputs,
    Depth,
    LayerSize,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::InputLength => "input_length",
            Axis::NumInputs => "num_inputs",
            Axis::Depth => "depth",
            Axis::LayerSize => "layer_size",
        }
    }

    pub const ALL: [Axis; 4] = [Axis::InputLength, Axis::NumInputs, Axis::Depth, Axis::LayerSize];
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown axis '{s}'")))
    }
}

/// The fixed dimensions of a benchmark network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub input_length: usize,
    /// Number of weight layers; `depth - 1` hidden layers.
    pub depth: usize,
    pub layer_size: usize,
    pub num_inputs: usize,
    pub output_width: usize,
}

impl Shape {
    /// Scaled-down default: 784 inputs, 4 weight layers, 512 units wide.
    pub fn desk() -> Self {
        Shape { input_length: 784, depth: 4, layer_size: 512, num_inputs: 1, output_width: 10 }
    }

    /// 10 000 hidden units per layer. Needs a lot of memory and time.
    pub fn large() -> Self {
        Shape { layer_size: 10_000, ..Shape::desk() }
    }

    pub fn with(self, axis: Axis, value: usize) -> Self {
        match axis {
            Axis::InputLength => Shape { input_length: value, ..self },
            Axis::NumInputs => Shape { num_inputs: value, ..self },
            Axis::Depth => Shape { depth: value, ..self },
            Axis::LayerSize => Shape { layer_size: value, ..self },
        }
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_length];
        w.extend(std::iter::repeat(self.layer_size).take(self.depth - 1));
        w.push(self.output_width);
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub axis: Axis,
    pub sizes: Vec<usize>,
    pub base: Shape,
    pub repetitions: usize,
    pub seed: u64,
    /// Engine threads; 1 keeps timings stable.
    pub threads: usize,
    /// Compare every run against the native forward pass.
    pub check: bool,
}

impl BenchConfig {
    pub fn new(axis: Axis, sizes: Vec<usize>) -> Self {
        BenchConfig { axis, sizes, base: Shape::desk(), repetitions: 3, seed: 0, threads: 1, check: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::InvalidParameter("sizes must be a nonempty list of positive integers".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter("repetitions must be positive".into()));
        }
        let b = self.base;
        if b.input_length == 0 || b.depth == 0 || b.layer_size == 0 || b.num_inputs == 0 || b.output_width == 0 {
            return Err(Error::InvalidParameter(format!("base shape has a zero dimension: {b:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub axis: Axis,
    pub value: usize,
    pub median_seconds: f64,
    pub checksum: String,
    /// Result rows of one evaluation.
    pub rows: usize,
    pub edges: usize,
    /// Edge count between each pair of successive hidden layers.
    pub hidden_junction_edges: Vec<usize>,
}

/// Generated network and inputs for one benchmark point.
pub struct Workload {
    pub shape: Shape,
    pub model: Model,
    pub graph: NetworkGraph,
    pub inputs: Vec<InputVector>,
}

impl Workload {
    pub fn generate(shape: Shape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = synth::random_model(&mut rng, &shape.widths(), Activation::Identity);
        let inputs = synth::random_inputs(&mut rng, shape.input_length, shape.num_inputs);
        let graph = model_to_graph(&model);
        Workload { shape, model, graph, inputs }
    }

    pub fn hidden_junction_edges(&self) -> Vec<usize> {
        let depth = self.graph.depth();
        let layer: BTreeMap<i64, usize> = self.graph.nodes.iter().map(|n| (n.id, n.layer)).collect();
        (1..depth.saturating_sub(1))
            .map(|k| self.graph.edges.iter().filter(|e| layer[&e.src] == k && layer[&e.dst] == k + 1).count())
            .collect()
    }

    /// Fresh in-memory database holding this workload as model 0.
    pub fn load(&self, threads: usize) -> Result<EngineSession> {
        let session =
            EngineSession::open_with(&Location::InMemory, &SessionOptions { threads: Some(threads), ..Default::default() })?;
        store::create_schema(session.connection())?;
        store::load_graph(session.connection(), &self.graph, 0, store::LoadOptions::default())?;
        store::load_inputs(session.connection(), &self.inputs, store::LoadOptions::default())?;
        Ok(session)
    }

    /// Largest absolute difference between `rows` and the native forward pass.
    pub fn oracle_delta(&self, rows: &[EvalRow]) -> Result<f64> {
        let outputs = self.graph.output_ids();
        let mut delta: f64 = 0.0;
        let mut seen = 0;
        for v in &self.inputs {
            let expected = oracle::eval(&self.model, &v.values)?;
            for r in rows.iter().filter(|r| r.vec_id == v.vec_id) {
                let i = outputs.binary_search(&r.id).map_err(|_| {
                    Error::InvariantViolation(format!("unit {} in the result is not an output", r.id))
                })?;
                delta = delta.max((r.val - expected[i]).abs());
                seen += 1;
            }
        }
        if seen != self.inputs.len() * outputs.len() {
            return Err(Error::InvariantViolation(format!(
                "expected {} result rows, got {seen}",
                self.inputs.len() * outputs.len()
            )));
        }
        Ok(delta)
    }
}

/// Hash of the result with values rounded to 9 decimals, so that summation
/// order does not change it.
pub fn checksum(rows: &[EvalRow]) -> String {
    let mut h = Sha256::new();
    for r in rows {
        let v = (r.val * 1e9).round() / 1e9 + 0.0;
        h.update(format!("{},{},{},{:.9}\n", r.model_id, r.vec_id, r.id, v));
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

const ORACLE_TOL: f64 = 1e-9;

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// One warm-up run, then `repetitions` timed runs.
fn timed(session: &EngineSession, opts: &EvalOptions, repetitions: usize) -> Result<(f64, Vec<EvalRow>)> {
    let reference = evaluate(session, opts)?;
    let reference_sum = checksum(&reference);
    let mut times = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        let rows = evaluate(session, opts)?;
        times.push(start.elapsed().as_secs_f64());
        if checksum(&rows) != reference_sum {
            return Err(Error::InvariantViolation("result changed between repetitions".into()));
        }
    }
    Ok((median(times), reference))
}

fn row(config: &BenchConfig, value: usize, w: &Workload, seconds: f64, rows: &[EvalRow]) -> BenchRow {
    BenchRow {
        axis: config.axis,
        value,
        median_seconds: seconds,
        checksum: checksum(rows),
        rows: rows.len(),
        edges: w.graph.edges.len(),
        hidden_junction_edges: w.hidden_junction_edges(),
    }
}

fn check_oracle(config: &BenchConfig, w: &Workload, rows: &[EvalRow]) -> Result<()> {
    if config.check {
        let delta = w.oracle_delta(rows)?;
        if !(delta <= ORACLE_TOL) {
            return Err(Error::InvariantViolation(format!("SQL and native evaluation differ by {delta:e}")));
        }
    }
    Ok(())
}

/// Recursive evaluation at each size along the configured axis.
pub fn run_scaling(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    config.validate()?;
    config
        .sizes
        .iter()
        .map(|&value| {
            let w = Workload::generate(config.base.with(config.axis, value), config.seed);
            let session = w.load(config.threads)?;
            let (seconds, rows) = timed(&session, &EvalOptions::for_model(0), config.repetitions)?;
            check_oracle(config, &w, &rows)?;
            Ok(row(config, value, &w, seconds, &rows))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub recursive: Vec<BenchRow>,
    pub fixed: Vec<BenchRow>,
}

/// Recursive and fixed-depth evaluation on the same data, `depth` weight
/// layers deep. Fails if the two strategies disagree.
pub fn compare_recursive_vs_fixed(depth: usize, config: &BenchConfig) -> Result<Comparison> {
    config.validate()?;
    if depth == 0 {
        return Err(Error::InvalidDepth(0));
    }
    let mut out = Comparison { recursive: Vec::new(), fixed: Vec::new() };
    for &value in &config.sizes {
        let shape = Shape { depth, ..config.base }.with(config.axis, value);
        let w = Workload::generate(shape, config.seed);
        let session = w.load(config.threads)?;
        let rec_opts = EvalOptions::for_model(0);
        let (rec_s, rec_rows) = timed(&session, &rec_opts, config.repetitions)?;
        let (fix_s, fix_rows) = timed(&session, &rec_opts.fixed(w.graph.depth()), config.repetitions)?;
        let agree = rec_rows.len() == fix_rows.len()
            && rec_rows.iter().zip(&fix_rows).all(|(a, b)| {
                (a.vec_id, a.id) == (b.vec_id, b.id) && (a.val - b.val).abs() <= ORACLE_TOL
            });
        if !agree {
            return Err(Error::InvariantViolation(format!(
                "recursive and fixed evaluation disagree at {} = {value}",
                config.axis
            )));
        }
        check_oracle(config, &w, &rec_rows)?;
        out.recursive.push(row(config, value, &w, rec_s, &rec_rows));
        out.fixed.push(row(config, value, &w, fix_s, &fix_rows));
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "axis,value,median_seconds,checksum,rows";

pub fn write_csv<W: Write>(mut out: W, rows: &[BenchRow]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{:.9},{},{}", r.axis, r.value, r.median_seconds, r.checksum, r.rows)?;
    }
    Ok(())
}

pub fn write_comparison_csv<W: Write>(mut out: W, cmp: &Comparison) -> Result<()> {
    writeln!(out, "axis,value,recursive_seconds,fixed_seconds,checksum,rows")?;
    for (r, f) in cmp.recursive.iter().zip(&cmp.fixed) {
        writeln!(out, "{},{},{:.9},{:.9},{},{}", r.axis, r.value, r.median_seconds, f.median_seconds, r.checksum, r.rows)?;
    }
    Ok(())
}

/// Least-squares slope of `ln(seconds)` against `ln(value)`.
pub fn loglog_slope(rows: &[BenchRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.median_seconds > 0.0)
        .map(|r| ((r.value as f64).ln(), r.median_seconds.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_widths() {
        let s = Shape { input_length: 3, depth: 4, layer_size: 5, num_inputs: 1, output_width: 2 };
        assert_eq!(s.widths(), vec![3, 5, 5, 5, 2]);
        assert_eq!(s.with(Axis::Depth, 1).widths(), vec![3, 2]);
    }

    #[test]
    fn slope_of_power_law() {
        let rows: Vec<BenchRow> = [1usize, 2, 4, 8]
            .iter()
            .map(|&v| BenchRow {
                axis: Axis::LayerSize,
                value: v,
                median_seconds: (v * v) as f64,
                checksum: String::new(),
                rows: 0,
                edges: 0,
                hidden_junction_edges: vec![],
            })
            .collect();
        assert!((loglog_slope(&rows).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn config_checks() {
        assert!(BenchConfig::new(Axis::Depth, vec![]).validate().is_err());
        assert!(BenchConfig::new(Axis::Depth, vec![0]).validate().is_err());
        assert!("width".parse::<Axis>().is_err());
        assert_eq!("layer_size".parse::<Axis>().unwrap(), Axis::LayerSize);
    }
}
