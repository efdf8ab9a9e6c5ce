//! `submeasure`: evaluate, transport and analyze strong submeasures on
//! finite models from the command line.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid input, 3 non-convergence.

mod models;
mod report;
mod scenario;
mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use scenario::{Op, Scenario};

/// Default seed for random models and the verification suites.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug)]
pub enum CliError {
    Core(submeasure::Error),
    Usage(String),
    Io { path: String, message: String },
    VerifyFailed(usize),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(e) if e.is_non_convergence() => 3,
            CliError::Core(_) | CliError::Io { .. } | CliError::VerifyFailed(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io { path, message } => write!(f, "{path}: {message}"),
            CliError::VerifyFailed(n) => write!(f, "{n} verification check(s) failed"),
        }
    }
}

impl From<submeasure::Error> for CliError {
    fn from(e: submeasure::Error) -> Self {
        CliError::Core(e)
    }
}

/// Prefixes the JSON path of a located error with the document it came from.
pub trait Within {
    fn within(self, prefix: &str) -> Self;
}

impl Within for submeasure::Error {
    fn within(self, prefix: &str) -> Self {
        use submeasure::Error as E;
        let join = |p: String| if p.is_empty() || p == "." { prefix.to_string() } else { format!("{prefix}.{p}") };
        match self {
            E::Json { path, message } => E::Json { path: join(path), message },
            E::UnknownLabel { path, label } => E::UnknownLabel { path: join(path), label },
            E::InvalidModel { path, reason } => E::InvalidModel { path: join(path), reason },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    Leq,
    Geq,
}

#[derive(Parser, Debug)]
#[command(name = "submeasure", version, about = "Strong submeasures on finite models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario JSON file, or a report whose inputs should be replayed.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Model reference overriding the scenario's: a builder spec such as
    /// `cremona:3` or a path to a JSON document.
    #[arg(long)]
    model: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Add wall-clock timings to the report; the report is then no longer
    /// byte-deterministic.
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a submeasure on probing functions.
    Eval(Common),
    /// Push a submeasure forward along a correspondence.
    Pushforward(Common),
    /// Pull a submeasure back along a correspondence.
    Pullback(Common),
    /// Cesàro averages of iterated pushforwards, with per-step traces.
    Cesaro {
        #[command(flatten)]
        common: Common,
        /// Number of averaged terms.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Extremal invariant submeasure below (`leq`) or above (`geq`) a seed.
    Invariant {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        direction: Option<Direction>,
    },
    /// Entropy of an invariant submeasure on the orbit subshift.
    Entropy(Common),
    /// Least negative intersection of a family of signed measures.
    Intersect(Common),
    /// Write a bundled model as a JSON document.
    BuildModel {
        /// Builder spec; run with `--list` to see all.
        #[arg(long, required_unless_present = "list")]
        model: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// List the available builders.
        #[arg(long)]
        list: bool,
    },
    /// Run the property and regression suites.
    Verify {
        /// Run only suites or checks whose tag contains this string.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Also write the results table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io { path: "stdout".into(), message: e.to_string() })
        }
    }
}

fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(value).expect("values serialize") + "\n",
        Format::Csv => report::to_csv(value),
    }
}

/// Loads a scenario file. Reports are accepted too: their `inputs` are
/// replayed after checking them against the recorded digest.
fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = models::read_file(path)?;
    let value: Value = submeasure::io::from_json_str(&text)?;
    let value = match value.get("inputs_digest") {
        Some(recorded) => {
            let inputs = value.get("inputs").cloned().unwrap_or(Value::Null);
            if recorded.as_str() != Some(report::digest(&inputs).as_str()) {
                return Err(submeasure::Error::Json {
                    path: "inputs_digest".into(),
                    message: "digest does not match the recorded inputs".into(),
                }
                .into());
            }
            inputs
        }
        None => value,
    };
    Ok(submeasure::io::from_json_value(value)?)
}

fn run_op(common: &Common, op_hint: Op, n: Option<usize>, direction: Option<Direction>) -> Result<(), CliError> {
    let start = Instant::now();
    let (mut scenario, base) = match &common.scenario {
        Some(path) => (load_scenario(path)?, path.parent().map(Path::to_path_buf)),
        None => (Scenario::empty(), None),
    };
    let op = match (op_hint, scenario.op, direction) {
        (Op::InvLeq | Op::InvGeq, _, Some(Direction::Leq)) => Op::InvLeq,
        (Op::InvLeq | Op::InvGeq, _, Some(Direction::Geq)) => Op::InvGeq,
        (Op::InvLeq | Op::InvGeq, Some(s @ (Op::InvLeq | Op::InvGeq)), None) => s,
        (hint, Some(s), _) if s != hint && !matches!(hint, Op::InvLeq | Op::InvGeq) => {
            return Err(CliError::usage(format!(
                "scenario op '{}' does not match the '{}' subcommand",
                s.name(),
                hint.name()
            )))
        }
        (Op::InvLeq | Op::InvGeq, Some(s), None) => {
            return Err(CliError::usage(format!("scenario op '{}' is not an invariant solver", s.name())))
        }
        (hint, _, _) => hint,
    };
    if let Some(m) = &common.model {
        let reference = Value::String(m.clone());
        if op == Op::Intersect {
            scenario.family = Some(reference);
        } else {
            scenario.model = Some(reference);
        }
    }
    if common.tol.is_some() {
        scenario.params.tol = common.tol;
    }
    if common.max_iter.is_some() {
        scenario.params.max_iter = common.max_iter;
    }
    if common.seed.is_some() {
        scenario.params.seed = common.seed;
    }
    if n.is_some() {
        scenario.params.n = n;
    }
    let outcome = scenario::run(scenario, op, base.as_deref(), DEFAULT_SEED)?;
    let timings = common.timings.then(|| start.elapsed().as_secs_f64() * 1e3);
    let report = report::assemble(outcome, timings);
    write_output(common.out.as_deref(), &render(&report, common.format))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eval(c) => run_op(&c, Op::Eval, None, None),
        Command::Pushforward(c) => run_op(&c, Op::Pushforward, None, None),
        Command::Pullback(c) => run_op(&c, Op::Pullback, None, None),
        Command::Cesaro { common, n } => run_op(&common, Op::Cesaro, n, None),
        Command::Invariant { common, direction } => run_op(&common, Op::InvGeq, None, direction),
        Command::Entropy(c) => run_op(&c, Op::Entropy, None, None),
        Command::Intersect(c) => run_op(&c, Op::Intersect, None, None),
        Command::BuildModel { model, out, seed, list } => {
            if list {
                let mut text = String::new();
                for (_, help) in models::CORRESPONDENCE_BUILDERS.iter().chain(models::FAMILY_BUILDERS) {
                    text.push_str(help);
                    text.push('\n');
                }
                return write_output(out.as_deref(), &text);
            }
            let doc = models::model_document(model.as_deref().unwrap_or_default(), seed.unwrap_or(DEFAULT_SEED))?;
            write_output(out.as_deref(), &render(&doc, Format::Json))
        }
        Command::Verify { filter, seed, format, out } => {
            let seed = seed.unwrap_or(DEFAULT_SEED);
            let outcome = verify::run(filter.as_deref(), seed)?;
            if let Some(path) = out {
                write_output(Some(&path), &render(&outcome.to_json(seed), format))?;
            }
            if outcome.failures() > 0 {
                return Err(CliError::VerifyFailed(outcome.failures()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SUBMEASURE_LOG")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
