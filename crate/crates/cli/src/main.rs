mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nnsql::bench::Axis;
use nnsql::{Activation, ErrorKind};

use crate::output::Format;

#[derive(Parser)]
#[command(name = "nnsql", version, about = "Store ReLU networks in DuckDB and analyse them with generated SQL")]
pub struct Cli {
    /// Database file, or `:memory:`.
    #[arg(long, env = "NNSQL_DB", default_value = "nnsql.duckdb", global = true)]
    pub db: String,

    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    pub format: Format,

    /// Open the database read-only.
    #[arg(long, global = true)]
    pub read_only: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputActivation {
    Identity,
    Relu,
    Softmax,
}

impl From<OutputActivation> for Activation {
    fn from(a: OutputActivation) -> Self {
        match a {
            OutputActivation::Identity => Activation::Identity,
            OutputActivation::Relu => Activation::Relu,
            OutputActivation::Softmax => Activation::Softmax,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0)]
    pub model_id: i64,

    /// Activation of the output units; it is not stored in the database.
    #[arg(long, value_enum, default_value_t = OutputActivation::Identity)]
    pub output_activation: OutputActivation,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Strategy {
    /// Compose this many non-recursive layer views.
    #[arg(long, conflicts_with = "recursive")]
    pub fixed_depth: Option<usize>,

    /// Evaluate with one recursive view (the default).
    #[arg(long)]
    pub recursive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SaliencyMode {
    Zero,
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SaliencyTargets {
    Input,
    Hidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchAxis {
    InputLength,
    NumInputs,
    Depth,
    LayerSize,
}

impl From<BenchAxis> for Axis {
    fn from(a: BenchAxis) -> Self {
        match a {
            BenchAxis::InputLength => Axis::InputLength,
            BenchAxis::NumInputs => Axis::NumInputs,
            BenchAxis::Depth => Axis::Depth,
            BenchAxis::LayerSize => Axis::LayerSize,
        }
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Parse a model file, validate it and store it.
    Import {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        model_id: i64,
        /// Overwrite an existing model with the same id.
        #[arg(long)]
        replace: bool,
        /// Do not store zero weights as edges.
        #[arg(long)]
        sparse: bool,
    },
    /// Store input vectors from a JSON array of {"vec_id", "values"} objects.
    LoadInputs {
        file: PathBuf,
        #[arg(long)]
        replace: bool,
    },
    /// Write a stored model back to a JSON model file.
    Export {
        file: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Evaluate a stored model on stored input vectors.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        /// Only this vector; all vectors when omitted.
        #[arg(long)]
        vec_id: Option<i64>,
        #[command(flatten)]
        strategy: Strategy,
        /// Compare against the native forward pass.
        #[arg(long)]
        check: bool,
    },
    /// Argmax output unit and its softmax probability.
    Classify {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
        #[arg(long)]
        vec_id: Option<i64>,
        #[command(flatten)]
        strategy: Strategy,
        #[arg(long)]
        check: bool,
    },
    /// Breakpoints, slopes and end slopes of a 1-input, 1-output network.
    Geometry {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
        #[arg(long)]
        check: bool,
    },
    /// Definite integral of a 1-input, 1-output network.
    Integral {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        check: bool,
    },
    /// Whether a 1-input, 1-output network ever exceeds a threshold.
    Verify {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
        #[arg(long, allow_negative_numbers = true)]
        threshold: f64,
        #[arg(long)]
        check: bool,
    },
    /// Units whose incoming weights all lie strictly inside (-epsilon, epsilon).
    Prune {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
        #[arg(long, required_unless_present = "sweep")]
        epsilon: Option<f64>,
        /// Count prunable units for `steps` epsilons from `start` to `end`.
        #[arg(long, value_name = "START:END:STEPS", conflicts_with_all = ["epsilon", "cascade"])]
        sweep: Option<String>,
        /// Also remove units left unconnected, repeatedly.
        #[arg(long)]
        cascade: bool,
        #[arg(long)]
        check: bool,
    },
    /// Neuron count, distinct edge count and depth.
    Stats {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
        #[arg(long)]
        check: bool,
    },
    /// Output change when each input or hidden unit is dropped.
    Saliency {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        vec_id: i64,
        #[arg(long, value_enum, default_value_t = SaliencyMode::Zero)]
        mode: SaliencyMode,
        #[arg(long, value_enum, default_value_t = SaliencyTargets::Input)]
        targets: SaliencyTargets,
        /// Evaluate each drop separately on this many workers.
        #[arg(long)]
        concurrent: Option<usize>,
        /// Give each worker its own in-memory copy of the model.
        #[arg(long, requires = "concurrent")]
        copy: bool,
        /// Write the map as a plain PGM image.
        #[arg(long, requires = "width")]
        pgm: Option<PathBuf>,
        /// Image width in pixels.
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        check: bool,
    },
    /// Time recursive evaluation on generated networks and write CSV.
    Bench(BenchArgs),
    /// Print the SQL generated for a task without running it.
    Sql {
        #[command(subcommand)]
        task: SqlTask,
    },
    /// Write generated model or input files.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub axis: BenchAxis,
    /// Comma separated sizes along the axis.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub input_length: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub layer_size: Option<usize>,
    #[arg(long)]
    pub num_inputs: Option<usize>,
    /// Base shape with 10 000 units per layer.
    #[arg(long)]
    pub large_scale: bool,
    /// Compare recursive and fixed-depth evaluation at this depth instead.
    #[arg(long)]
    pub compare_depth: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Skip the native cross-check of every result.
    #[arg(long)]
    pub no_check: bool,
    /// Print the log-log slope of time against size.
    #[arg(long)]
    pub slope: bool,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum SqlTask {
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        vec_id: Option<i64>,
        #[command(flatten)]
        strategy: Strategy,
        /// Evaluate every stored model.
        #[arg(long)]
        all_models: bool,
    },
    Classify {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
        #[arg(long)]
        vec_id: Option<i64>,
        #[command(flatten)]
        strategy: Strategy,
    },
    Breakpoints {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
    },
    Slopes {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
    },
    InitialSlope {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
    },
    Integral {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
    },
    Verify {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
        #[arg(long, allow_negative_numbers = true)]
        threshold: f64,
    },
    Prune {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
        #[arg(long)]
        epsilon: f64,
    },
    Unconnected {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
    },
    Stats {
        #[arg(long, default_value_t = 0)]
        model_id: i64,
    },
    Saliency {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        vec_id: i64,
        #[arg(long, value_enum, default_value_t = SaliencyMode::Zero)]
        mode: SaliencyMode,
        #[arg(long, value_enum, default_value_t = SaliencyTargets::Input)]
        targets: SaliencyTargets,
    },
}

#[derive(Subcommand)]
pub enum SynthKind {
    /// 16-knot interpolant of sin on [0, 2π] (1 input, 17 hidden, 1 output).
    Sine16 { out: PathBuf },
    /// Fully connected network with random weights.
    Random {
        out: PathBuf,
        /// Comma separated unit counts, input layer first.
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OutputActivation::Identity)]
        output_activation: OutputActivation,
    },
    /// Random input vectors.
    Inputs {
        out: PathBuf,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Exit statuses.
pub mod exit {
    pub const USAGE: u8 = 2;
    pub const DATA: u8 = 3;
    pub const ENGINE: u8 = 4;
    pub const MISMATCH: u8 = 5;
}

fn wants_json() -> bool {
    let args: Vec<String> = std::env::args().collect();
    args.iter().any(|a| a == "--format=json") || args.windows(2).any(|w| w[0] == "--format" && w[1] == "json")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() && wants_json() => {
            let message = e.render().to_string().trim().to_string();
            eprintln!("{}", serde_json::json!({ "error": { "kind": "usage", "message": message } }));
            return ExitCode::from(exit::USAGE);
        }
        Err(e) => e.exit(),
    };
    let format = cli.format;
    match commands::run(cli) {
        Ok(report) => {
            print!("{}", report.render(format));
            match &report.check {
                Some(c) if !c.ok() => {
                    eprintln!("nnsql: SQL and native results differ by {}", output::g17(c.max_abs_delta));
                    ExitCode::from(exit::MISMATCH)
                }
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            let (code, kind) = match &e {
                commands::Failure::Usage(_) => (exit::USAGE, "usage"),
                commands::Failure::Lib(e) => match e.kind() {
                    ErrorKind::Data => (exit::DATA, "data"),
                    ErrorKind::Engine => (exit::ENGINE, "engine"),
                },
            };
            if format == Format::Json {
                eprintln!("{}", serde_json::json!({ "error": { "kind": kind, "message": e.to_string() } }));
            } else {
                eprintln!("nnsql: {e}");
            }
            ExitCode::from(code)
        }
    }
}
