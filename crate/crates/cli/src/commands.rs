use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use nnsql::bench::{self, BenchConfig, Shape};
use nnsql::graph::GraphOptions;
use nnsql::oracle;
use nnsql::runner::{self, SaliencyFamily};
use nnsql::sqlgen::{self, DropTargets, EdgeSource, EvalOptions, GeometryOptions, SaliencyOptions, SqlQuery};
use nnsql::store::{self, LoadOptions};
use nnsql::{synth, Activation, EngineSession, Location, SessionOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::output::{g17, Cell, Check, Format, Report, Table};
use crate::{BenchArgs, Cli, Command, ModelArgs, SaliencyMode, SaliencyTargets, SqlTask, Strategy, SynthKind};

const TOL: f64 = 1e-9;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Lib(nnsql::Error),
}

impl From<nnsql::Error> for Failure {
    fn from(e: nnsql::Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

struct Ctx {
    db: String,
    read_only: bool,
}

impl Ctx {
    fn open(&self) -> Result<EngineSession> {
        let location = if self.db == ":memory:" { Location::InMemory } else { Location::File(self.db.clone().into()) };
        let session = EngineSession::open_with(&location, &SessionOptions { read_only: self.read_only, ..Default::default() })?;
        if !self.read_only {
            store::create_schema(session.connection())?;
        }
        Ok(session)
    }
}

pub fn run(cli: Cli) -> Result<Report> {
    let format = cli.format;
    let ctx = Ctx { db: cli.db, read_only: cli.read_only };
    match cli.command {
        Command::Import { file, model_id, replace, sparse } => import(&ctx, &file, model_id, replace, sparse),
        Command::LoadInputs { file, replace } => load_inputs(&ctx, &file, replace),
        Command::Export { file, model } => export(&ctx, &file, model),
        Command::Eval { model, vec_id, strategy, check } => eval(&ctx, model, vec_id, strategy, check),
        Command::Classify { model_id, vec_id, strategy, check } => classify(&ctx, model_id, vec_id, strategy, check),
        Command::Geometry { model_id, check } => geometry(&ctx, model_id, check),
        Command::Integral { model_id, from, to, check } => integral(&ctx, model_id, from, to, check),
        Command::Verify { model_id, threshold, check } => verify(&ctx, model_id, threshold, check),
        Command::Prune { model_id, epsilon, sweep, cascade, check } => match sweep {
            Some(spec) => prune_sweep(&ctx, model_id, &spec, check),
            None => prune(&ctx, model_id, epsilon.expect("clap requires epsilon"), cascade, check),
        },
        Command::Stats { model_id, check } => stats(&ctx, model_id, check),
        Command::Saliency { model, vec_id, mode, targets, concurrent, copy, pgm, width, check } => {
            saliency(&ctx, model, vec_id, mode, targets, concurrent, copy, pgm.as_deref().zip(width), check)
        }
        Command::Bench(args) => bench_cmd(args),
        Command::Sql { task } => sql(task, format),
        Command::Synth { kind } => synth_cmd(kind),
    }
}

fn import(ctx: &Ctx, file: &Path, model_id: i64, replace: bool, sparse: bool) -> Result<Report> {
    let model = nnsql::import_model(file)?;
    let graph = nnsql::model_to_graph_with(&model, GraphOptions { drop_zero_edges: sparse });
    let session = ctx.open()?;
    let counts = store::load_graph(session.connection(), &graph, model_id, LoadOptions { replace, ..Default::default() })?;
    let mut t = Table::new("import", &["model_id", "nodes", "edges"]);
    t.push(vec![model_id.into(), counts.nodes.into(), counts.edges.into()]);
    Ok(Report::single(t))
}

fn load_inputs(ctx: &Ctx, file: &Path, replace: bool) -> Result<Report> {
    let vectors = nnsql::import_inputs(file)?;
    let session = ctx.open()?;
    let rows = store::load_inputs(session.connection(), &vectors, LoadOptions { replace, ..Default::default() })?;
    let mut t = Table::new("load_inputs", &["vectors", "rows"]);
    t.push(vec![vectors.len().into(), rows.into()]);
    Ok(Report::single(t))
}

fn export(ctx: &Ctx, file: &Path, model: ModelArgs) -> Result<Report> {
    let session = ctx.open()?;
    let graph = store::extract_graph_with(session.connection(), model.model_id, model.output_activation.into())?;
    let m = graph.to_model(format!("model-{}", model.model_id))?;
    nnsql::export_model(&m, file)?;
    let mut t = Table::new("export", &["model_id", "layers", "file"]);
    t.push(vec![model.model_id.into(), m.depth().into(), Cell::Text(file.display().to_string())]);
    Ok(Report::single(t))
}

fn eval_options(model_id: i64, vec_id: Option<i64>, strategy: Strategy, output: Activation) -> EvalOptions {
    let mut opts = EvalOptions::for_model(model_id).output(output);
    if let Some(v) = vec_id {
        opts = opts.single_vec(v);
    }
    if let Some(d) = strategy.fixed_depth {
        opts = opts.fixed(d);
    }
    opts
}

fn stored_inputs(session: &EngineSession, vec_id: Option<i64>) -> Result<BTreeMap<i64, Vec<f64>>> {
    let ids = vec_id.map(|v| vec![v]);
    Ok(store::extract_inputs(session.connection(), ids.as_deref())?.into_iter().map(|v| (v.vec_id, v.values)).collect())
}

fn eval(ctx: &Ctx, model: ModelArgs, vec_id: Option<i64>, strategy: Strategy, check: bool) -> Result<Report> {
    let session = ctx.open()?;
    let output = model.output_activation.into();
    let rows = runner::evaluate(&session, &eval_options(model.model_id, vec_id, strategy, output))?;
    let mut t = Table::new("eval", &["vec_id", "id", "val"]);
    for r in &rows {
        t.push(vec![r.vec_id.into(), r.id.into(), r.val.into()]);
    }
    let mut report = Report::single(t);
    if check {
        let graph = store::extract_graph_with(session.connection(), model.model_id, output)?;
        let inputs = stored_inputs(&session, vec_id)?;
        let mut delta: f64 = 0.0;
        let mut expected_rows = 0;
        for (v, values) in &inputs {
            let out = oracle::eval_graph_dense(&graph, values)?;
            expected_rows += out.values().filter(|o| o.is_some()).count();
            for r in rows.iter().filter(|r| r.vec_id == *v) {
                delta = delta.max(match out.get(&r.id).copied().flatten() {
                    Some(x) => (x - r.val).abs(),
                    None => f64::INFINITY,
                });
            }
        }
        if expected_rows != rows.len() {
            delta = f64::INFINITY;
        }
        report.check = Some(Check { max_abs_delta: delta, tolerance: TOL });
    }
    Ok(report)
}

fn classify(ctx: &Ctx, model_id: i64, vec_id: Option<i64>, strategy: Strategy, check: bool) -> Result<Report> {
    let session = ctx.open()?;
    let rows = runner::classify(&session, &eval_options(model_id, vec_id, strategy, Activation::Softmax))?;
    let mut t = Table::new("classify", &["vec_id", "class_id", "probability"]);
    for r in &rows {
        t.push(vec![r.vec_id.into(), r.class_id.into(), r.probability.into()]);
    }
    let mut report = Report::single(t);
    if check {
        let graph = store::extract_graph_with(session.connection(), model_id, Activation::Softmax)?;
        let model = graph.to_model("check")?;
        let outputs = graph.output_ids();
        let inputs = stored_inputs(&session, vec_id)?;
        let mut delta: f64 = if inputs.len() == rows.len() { 0.0 } else { f64::INFINITY };
        for r in &rows {
            let (i, p) = oracle::classify(&model, &inputs[&r.vec_id])?;
            delta = delta.max(if outputs[i] == r.class_id { (p - r.probability).abs() } else { f64::INFINITY });
        }
        report.check = Some(Check { max_abs_delta: delta, tolerance: TOL });
    }
    Ok(report)
}

fn geometry_model(session: &EngineSession, model_id: i64) -> Result<nnsql::Model> {
    Ok(store::extract_graph_with(session.connection(), model_id, Activation::Identity)?.to_model("check")?)
}

fn geometry(ctx: &Ctx, model_id: i64, check: bool) -> Result<Report> {
    let session = ctx.open()?;
    let opts = GeometryOptions::for_model(model_id);
    let pwl = runner::reconstruct_pwl(&session, &opts)?;
    let breakpoints = session.execute(&sqlgen::gen_breakpoints(&opts)?)?;
    let slopes = session.execute(&sqlgen::gen_slopes(&opts)?)?;
    let mut ends = Table::new("end_slopes", &["initial_slope", "final_slope"]);
    ends.push(vec![pwl.initial_slope.into(), pwl.final_slope.into()]);
    let mut report = Report {
        tables: vec![Table::from_result("breakpoints", breakpoints), Table::from_result("slopes", slopes), ends],
        ..Default::default()
    };
    if check {
        let native = oracle::geometry(&geometry_model(&session, model_id)?)?;
        let mut delta = (native.initial_slope - pwl.initial_slope).abs().max((native.final_slope - pwl.final_slope).abs());
        if native.breakpoints.len() != pwl.breakpoints.len() {
            delta = f64::INFINITY;
        } else {
            for (a, b) in native.breakpoints.iter().zip(&pwl.breakpoints) {
                delta = delta.max((a.x - b.x).abs()).max((a.y - b.y).abs());
            }
            for (a, b) in native.slopes.iter().zip(&pwl.slopes) {
                delta = delta.max((a - b).abs());
            }
        }
        report.check = Some(Check { max_abs_delta: delta, tolerance: TOL });
    }
    Ok(report)
}

fn integral(ctx: &Ctx, model_id: i64, from: f64, to: f64, check: bool) -> Result<Report> {
    let session = ctx.open()?;
    let value = runner::integral(&session, &GeometryOptions::for_model(model_id), from, to)?;
    let mut t = Table::new("integral", &["from", "to", "integral"]);
    t.push(vec![from.into(), to.into(), value.into()]);
    let mut report = Report::single(t);
    if check {
        let native = oracle::integral(&oracle::geometry(&geometry_model(&session, model_id)?)?, from, to)?;
        report.check = Some(Check { max_abs_delta: (native - value).abs(), tolerance: TOL });
    }
    Ok(report)
}

fn verify(ctx: &Ctx, model_id: i64, threshold: f64, check: bool) -> Result<Report> {
    let session = ctx.open()?;
    let exceeds = runner::threshold_exceeded(&session, &GeometryOptions::for_model(model_id), threshold)?;
    let mut t = Table::new("verify", &["threshold", "exceeds"]);
    t.push(vec![threshold.into(), exceeds.into()]);
    let mut report = Report::single(t);
    if check {
        let native = oracle::exceeds(&oracle::geometry(&geometry_model(&session, model_id)?)?, threshold);
        report.check = Some(Check { max_abs_delta: if native == exceeds { 0.0 } else { 1.0 }, tolerance: TOL });
    }
    Ok(report)
}

fn set_check(sql: &BTreeSet<i64>, native: &BTreeSet<i64>) -> f64 {
    if sql == native {
        0.0
    } else {
        sql.symmetric_difference(native).count() as f64
    }
}

fn prune(ctx: &Ctx, model_id: i64, epsilon: f64, cascade: bool, check: bool) -> Result<Report> {
    let session = ctx.open()?;
    let ids = runner::prunable_nodes(&session, model_id, epsilon)?;
    let mut t = Table::new("prunable", &["id"]);
    for &id in &ids {
        t.push(vec![id.into()]);
    }
    let mut report = Report::single(t);
    let graph = if check || cascade { Some(store::extract_graph(session.connection(), model_id)?) } else { None };
    let mut delta: f64 = 0.0;
    if check {
        let native = oracle::prunable(graph.as_ref().expect("extracted"), epsilon);
        delta = delta.max(set_check(&ids.iter().copied().collect(), &native));
    }
    if cascade {
        let outcome = runner::prune_cascade(&session, model_id, epsilon)?;
        let mut removed = Table::new("cascade_removed", &["id"]);
        for &id in &outcome.removed_nodes {
            removed.push(vec![id.into()]);
        }
        let mut summary = Table::new("cascade", &["rounds", "removed_nodes", "kept_edges"]);
        summary.push(vec![outcome.rounds.into(), outcome.removed_nodes.len().into(), outcome.kept_edges.len().into()]);
        report.tables.push(removed);
        report.tables.push(summary);
        if check {
            let native = oracle::cascade(graph.as_ref().expect("extracted"), epsilon);
            delta = delta.max(set_check(&outcome.removed_nodes.iter().copied().collect(), &native.removed));
            let key = |g: &[nnsql::GraphEdge]| g.iter().map(|e| (e.src, e.dst)).collect::<BTreeSet<_>>();
            if key(&outcome.kept_edges) != key(&native.graph.edges) {
                delta = f64::INFINITY;
            }
        }
    }
    if check {
        report.check = Some(Check { max_abs_delta: delta, tolerance: TOL });
    }
    Ok(report)
}

/// `start:end:steps`, evenly spaced and inclusive of both ends.
fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let bad = || Failure::Usage(format!("--sweep expects START:END:STEPS, got '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts.as_slice() else { return Err(bad()) };
    let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    let n: usize = n.parse().map_err(|_| bad())?;
    if n == 0 || !(a >= 0.0) || !(b >= a) || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn prune_sweep(ctx: &Ctx, model_id: i64, spec: &str, check: bool) -> Result<Report> {
    let epsilons = parse_sweep(spec)?;
    let session = ctx.open()?;
    let graph = store::extract_graph(session.connection(), model_id)?;
    let mut t = Table::new("sweep", &["epsilon", "count"]);
    let mut delta: f64 = 0.0;
    for eps in epsilons {
        // the open interval (-0, 0) is empty, so nothing is prunable at 0
        let ids: BTreeSet<i64> =
            if eps == 0.0 { BTreeSet::new() } else { runner::prunable_nodes(&session, model_id, eps)?.into_iter().collect() };
        if check {
            delta = delta.max(set_check(&ids, &oracle::prunable(&graph, eps)));
        }
        t.push(vec![eps.into(), ids.len().into()]);
    }
    let mut report = Report::single(t);
    if check {
        report.check = Some(Check { max_abs_delta: delta, tolerance: TOL });
    }
    Ok(report)
}

fn stats(ctx: &Ctx, model_id: i64, check: bool) -> Result<Report> {
    let session = ctx.open()?;
    let s = runner::stats(&session, model_id)?;
    let mut t = Table::new("stats", &["neurons", "edges", "depth"]);
    t.push(vec![s.neurons.into(), s.edges.into(), s.depth.into()]);
    let mut report = Report::single(t);
    if check {
        let g = store::extract_graph(session.connection(), model_id)?;
        let distinct: BTreeSet<(i64, i64)> = g.edges.iter().map(|e| (e.src, e.dst)).collect();
        let native = [g.nodes.len() as i64, distinct.len() as i64, oracle::depth(&g)? as i64];
        let delta = [s.neurons, s.edges, s.depth].iter().zip(native).map(|(a, b)| (a - b).abs() as f64).fold(0.0, f64::max);
        report.check = Some(Check { max_abs_delta: delta, tolerance: TOL });
    }
    Ok(report)
}

fn family(model: ModelArgs, vec_id: i64, mode: SaliencyMode, targets: SaliencyTargets) -> Result<SaliencyFamily> {
    let opts = SaliencyOptions::new(model.model_id, vec_id).output(model.output_activation.into());
    match (mode, targets) {
        (SaliencyMode::Zero, SaliencyTargets::Input) => Ok(SaliencyFamily::Zero(opts)),
        (SaliencyMode::Zero, SaliencyTargets::Hidden) => {
            Err(Failure::Usage("zero mode applies to input units; use --mode remove for hidden units".into()))
        }
        (SaliencyMode::Remove, SaliencyTargets::Input) => Ok(SaliencyFamily::Remove(DropTargets::Input, opts)),
        (SaliencyMode::Remove, SaliencyTargets::Hidden) => Ok(SaliencyFamily::Remove(DropTargets::Hidden, opts)),
    }
}

/// Plain (P2) grayscale image, values scaled so the largest is 255.
fn write_pgm(path: &Path, values: &[f64], width: usize) -> Result<f64> {
    if width == 0 {
        return Err(Failure::Usage("--width must be positive".into()));
    }
    let height = values.len().div_ceil(width);
    let max = values.iter().copied().fold(0.0, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let mut text = format!("P2\n# saliency scale {} per unit\n{width} {height}\n255\n", g17(scale));
    for r in 0..height {
        let row: Vec<String> = (0..width)
            .map(|c| values.get(r * width + c).map_or(0, |v| (v * scale).round() as u32).to_string())
            .collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(scale)
}

#[allow(clippy::too_many_arguments)]
fn saliency(
    ctx: &Ctx,
    model: ModelArgs,
    vec_id: i64,
    mode: SaliencyMode,
    targets: SaliencyTargets,
    concurrent: Option<usize>,
    copy: bool,
    pgm: Option<(&Path, usize)>,
    check: bool,
) -> Result<Report> {
    let session = ctx.open()?;
    let fam = family(model, vec_id, mode, targets)?;
    let map = match concurrent {
        None => runner::saliency(&session, &fam)?,
        Some(workers) => {
            let drops = fam.candidates(&session)?;
            let open = || if copy { runner::memory_copy(&session, model.model_id, vec_id) } else { session.try_clone() };
            runner::run_saliency_concurrent(open, &fam, &drops, Some(workers.max(1)))?
        }
    };
    let mut t = Table::new("saliency", &["d_id", "saliency"]);
    for (&d, &v) in &map {
        t.push(vec![d.into(), v.into()]);
    }
    let mut report = Report::single(t);
    if let Some((path, width)) = pgm {
        let scale = write_pgm(path, &map.values().copied().collect::<Vec<_>>(), width)?;
        eprintln!("wrote {} (scale {} per unit)", path.display(), g17(scale));
    }
    if check {
        let graph = store::extract_graph_with(session.connection(), model.model_id, model.output_activation.into())?;
        let input = &stored_inputs(&session, Some(vec_id))?[&vec_id];
        let (m, tg) = match (mode, targets) {
            (SaliencyMode::Zero, _) => (oracle::Mode::Zero, oracle::Targets::Input),
            (SaliencyMode::Remove, SaliencyTargets::Input) => (oracle::Mode::Remove, oracle::Targets::Input),
            (SaliencyMode::Remove, SaliencyTargets::Hidden) => (oracle::Mode::Remove, oracle::Targets::Hidden),
        };
        report.check = Some(Check { max_abs_delta: map_delta(&map, &oracle::saliency_graph(&graph, input, m, tg)?.entries), tolerance: TOL });
    }
    Ok(report)
}

fn map_delta(a: &BTreeMap<i64, f64>, b: &BTreeMap<i64, f64>) -> f64 {
    if a.keys().ne(b.keys()) {
        return f64::INFINITY;
    }
    a.values().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn bench_cmd(args: BenchArgs) -> Result<Report> {
    let mut base = if args.large_scale {
        eprintln!("warning: large scale uses 10 000 units per layer; expect long runtimes and several GB of memory");
        Shape::large()
    } else {
        Shape::desk()
    };
    base.input_length = args.input_length.unwrap_or(base.input_length);
    base.depth = args.depth.unwrap_or(base.depth);
    base.layer_size = args.layer_size.unwrap_or(base.layer_size);
    base.num_inputs = args.num_inputs.unwrap_or(base.num_inputs);
    let config = BenchConfig {
        axis: args.axis.into(),
        sizes: args.sizes,
        base,
        repetitions: args.repetitions,
        seed: args.seed,
        threads: args.threads,
        check: !args.no_check,
    };
    let mut csv = Vec::new();
    let rows = match args.compare_depth {
        Some(d) => {
            let cmp = bench::compare_recursive_vs_fixed(d, &config)?;
            bench::write_comparison_csv(&mut csv, &cmp)?;
            cmp.recursive
        }
        None => {
            let rows = bench::run_scaling(&config)?;
            bench::write_csv(&mut csv, &rows)?;
            rows
        }
    };
    if args.slope {
        match bench::loglog_slope(&rows) {
            Some(s) => eprintln!("log-log slope of time against {}: {s:.3}", config.axis),
            None => eprintln!("log-log slope needs at least two distinct sizes"),
        }
    }
    let csv = String::from_utf8(csv).expect("utf-8 csv");
    match args.out {
        Some(path) => {
            fs::write(&path, csv)?;
            Ok(Report { raw: Some(String::new()), ..Default::default() })
        }
        None => Ok(Report { raw: Some(csv), ..Default::default() }),
    }
}

fn sql(task: SqlTask, format: Format) -> Result<Report> {
    let queries: Vec<(&str, SqlQuery)> = match task {
        SqlTask::Eval { model, vec_id, strategy, all_models } => {
            let mut opts = eval_options(model.model_id, vec_id, strategy, model.output_activation.into());
            if all_models {
                opts = opts.all_models();
            }
            vec![("eval", sqlgen::gen_eval(&opts)?)]
        }
        SqlTask::Classify { model_id, vec_id, strategy } => {
            vec![("classify", sqlgen::gen_classify(&eval_options(model_id, vec_id, strategy, Activation::Softmax))?)]
        }
        SqlTask::Breakpoints { model_id } => {
            vec![("breakpoints", sqlgen::gen_breakpoints(&GeometryOptions::for_model(model_id))?)]
        }
        SqlTask::Slopes { model_id } => vec![("slopes", sqlgen::gen_slopes(&GeometryOptions::for_model(model_id))?)],
        SqlTask::InitialSlope { model_id } => {
            vec![("initial_slope", sqlgen::gen_initial_slope(&GeometryOptions::for_model(model_id))?)]
        }
        SqlTask::Integral { model_id, from, to } => {
            vec![("integral", sqlgen::gen_integral(&GeometryOptions::for_model(model_id), from, to)?)]
        }
        SqlTask::Verify { model_id, threshold } => {
            vec![("verify", sqlgen::gen_threshold_check(&GeometryOptions::for_model(model_id), threshold)?)]
        }
        SqlTask::Prune { model_id, epsilon } => vec![("prune", sqlgen::gen_prunable_nodes(model_id, epsilon)?)],
        SqlTask::Unconnected { model_id } => {
            vec![("unconnected", sqlgen::gen_unconnected_nodes(model_id, &EdgeSource::Stored)?)]
        }
        SqlTask::Stats { model_id } => {
            let qs = sqlgen::gen_stats(model_id);
            ["neurons", "edges", "depth"].into_iter().zip(qs).collect()
        }
        SqlTask::Saliency { model, vec_id, mode, targets } => {
            vec![("saliency", family(model, vec_id, mode, targets)?.monolithic())]
        }
    };
    if format != Format::Json {
        let raw = match queries.as_slice() {
            [(_, q)] => q.text.clone(),
            many => many.iter().map(|(name, q)| format!("-- {name}\n{}", q.text)).collect::<Vec<_>>().join("\n"),
        };
        return Ok(Report { raw: Some(raw), ..Default::default() });
    }
    let mut t = Table::new("sql", &["name", "sql", "params", "recursive"]);
    for (name, q) in queries {
        let params = q
            .params
            .iter()
            .map(|p| match p.value {
                sqlgen::ParamValue::Int(v) => format!("{}={v}", p.name),
                sqlgen::ParamValue::Real(v) => format!("{}={}", p.name, g17(v)),
            })
            .collect::<Vec<_>>()
            .join(" ");
        t.push(vec![Cell::Text(name.into()), Cell::Text(q.text), Cell::Text(params), q.requires_recursive_aggregation.into()]);
    }
    Ok(Report::single(t))
}

fn synth_cmd(kind: SynthKind) -> Result<Report> {
    let mut t = Table::new("synth", &["file", "description"]);
    match kind {
        SynthKind::Sine16 { out } => {
            let m = synth::sine16();
            nnsql::export_model(&m, &out)?;
            t.push(vec![Cell::Text(out.display().to_string()), Cell::Text(format!("{:?}", m.widths()))]);
        }
        SynthKind::Random { out, widths, seed, output_activation } => {
            if widths.len() < 2 || widths.contains(&0) {
                return Err(Failure::Usage("--widths needs at least two positive unit counts".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = synth::random_model(&mut rng, &widths, output_activation.into());
            nnsql::export_model(&m, &out)?;
            t.push(vec![Cell::Text(out.display().to_string()), Cell::Text(format!("{:?}", m.widths()))]);
        }
        SynthKind::Inputs { out, dim, count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vectors = synth::random_inputs(&mut rng, dim, count);
            nnsql::export_inputs(&vectors, &out)?;
            t.push(vec![Cell::Text(out.display().to_string()), Cell::Text(format!("{count} x {dim}"))]);
        }
    }
    Ok(Report::single(t))
}
