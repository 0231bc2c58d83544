//! `hierens` command-line front end.
//!
//! Exit codes: 0 success, 2 input or usage error, 3 inputs that load but do
//! not fit together (shapes, lengths, k, non-leveled cascades).

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "hierens",
    version,
    about = "Post-hoc hierarchical ensembles over exported classifier scores"
)]
struct Cli {
    /// Worker threads for row-parallel math; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a hierarchy file and print its shape.
    Validate {
        #[arg(long)]
        hierarchy: PathBuf,
    },
    /// Apply a decision rule; writes predictions plus combined scores or a ranking.
    Infer {
        #[command(flatten)]
        inputs: ScoreInputs,
        #[arg(long, value_enum)]
        method: Method,
        /// Prediction file; scores go to `<out>.scores.csv`, rankings to `<out>.ranking.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate one method, score file, ranking or prediction file.
    Eval(EvalArgs),
    /// Evaluate several methods on the same inputs.
    Compare(CompareArgs),
    /// Write the leaf × leaf LCA-height cost matrix.
    Costs {
        #[arg(long)]
        hierarchy: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded synthetic data set.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ScoreInputs {
    #[arg(long)]
    pub hierarchy: PathBuf,
    /// Leaf-level scores.
    #[arg(long)]
    pub fine: Option<PathBuf>,
    /// Scores over the parents of the leaves.
    #[arg(long)]
    pub coarse: Option<PathBuf>,
    /// Scores for one depth of a leveled tree, for cascades. Repeatable.
    #[arg(long = "level", value_name = "DEPTH=PATH", value_parser = parse_level)]
    pub levels: Vec<(usize, PathBuf)>,
    /// What the score files hold. A conflicting kind header in a file is an
    /// error; files without one default to logits.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["method", "scores", "ranking", "predictions"])))]
pub struct EvalArgs {
    #[command(flatten)]
    pub inputs: ScoreInputs,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Final class scores, ranked by descending value.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Ranking file with `rank_1..rank_w` columns of leaf names.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    /// One predicted leaf name per line; only k = 1 applies.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub labels: PathBuf,
    /// Comma-separated k values for hier-dist@k [default: 1,5,20; 1 for --predictions].
    #[arg(long)]
    pub k: Option<String>,
    /// Method name recorded in the report and table.
    #[arg(long)]
    pub name: Option<String>,
    /// Report file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub inputs: ScoreInputs,
    /// Comma-separated methods, evaluated and printed in this order.
    #[arg(long)]
    pub methods: String,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value = "1,5,20")]
    pub k: String,
    /// Report file holding one entry per method.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Comma-separated children per node, top down.
    #[arg(long)]
    pub branching: String,
    /// Comma-separated logit noise per level, top down; the last is the fine classifier.
    #[arg(long)]
    pub noise: String,
    #[arg(long)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Logits,
    Probs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Method {
    Argmax,
    Hie,
    HieSelf,
    Crm,
    HieCrm,
    Cascade,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Argmax => "argmax",
            Method::Hie => "hie",
            Method::HieSelf => "hie-self",
            Method::Crm => "crm",
            Method::HieCrm => "hie-crm",
            Method::Cascade => "cascade",
        }
    }
}

fn parse_level(s: &str) -> Result<(usize, PathBuf), String> {
    let (depth, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected DEPTH=PATH, got {s:?}"))?;
    let depth = depth
        .trim()
        .parse()
        .map_err(|_| format!("depth {depth:?} is not a non-negative integer"))?;
    if path.is_empty() {
        return Err("empty path".into());
    }
    Ok((depth, PathBuf::from(path)))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Validate { hierarchy } => commands::validate(&hierarchy),
        Command::Infer {
            inputs,
            method,
            out,
        } => commands::infer(&inputs, method, &out),
        Command::Eval(args) => commands::eval(&args),
        Command::Compare(args) => commands::compare(&args),
        Command::Costs { hierarchy, out } => commands::costs(&hierarchy, &out),
        Command::Synth(args) => commands::synth(&args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
