//! Command-line front end.

mod commands;
mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::engine::{Scheme, SimError, Target, DEFAULT_MAX_EVENTS};
use crate::experiments::{ExperimentError, Normalization};
use crate::model::{ModelError, ModelParams, PressureList};
use crate::oracle::OracleError;

pub use output::histogram_svg;

pub const OUT_ENV: &str = "POLARLAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Occupation,
    Consensus,
    Metastable,
    OracleCheck,
    GreedyCheck,
    MEvents,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Occupation => "occupation",
            Command::Consensus => "consensus",
            Command::Metastable => "metastable",
            Command::OracleCheck => "oracle-check",
            Command::GreedyCheck => "greedy-check",
            Command::MEvents => "m-events",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn jsonl(self) -> bool {
        matches!(self, Format::Jsonl | Format::Both)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "polarlab",
    version,
    about = "Simulate and analyse polarized opinion networks"
)]
struct Cli {
    command: Command,
    /// Number of actors
    #[arg(long)]
    n: Option<usize>,
    /// Polarization coefficient; comma-separated for a grid
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replications
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    max_events: Option<u64>,
    /// Time horizon (occupation run length, coupling time, hitting budget)
    #[arg(long)]
    max_time: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Truncation half-width for exact computations
    #[arg(long)]
    cap: Option<i64>,
    /// Start list, comma-separated integers
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Flat key=value file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Number of jumps for m-events
    #[arg(long)]
    m: Option<usize>,
    /// KS normalization for metastable: mean or cbeta
    #[arg(long)]
    normalize: Option<String>,
    /// Also write an SVG histogram of the samples
    #[arg(long)]
    svg: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Output(std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub beta: Vec<f64>,
    pub seed: u64,
    pub reps: usize,
    pub scheme: Scheme,
    pub max_events: u64,
    pub max_time: Option<f64>,
    pub delta: f64,
    pub cap: Option<i64>,
    pub start: PressureList,
    pub target: Option<Target>,
    pub out: PathBuf,
    pub format: Format,
    pub threads: Option<usize>,
    pub m: usize,
    pub normalize: Normalization,
    pub svg: bool,
}

const CONFIG_KEYS: [&str; 17] = [
    "n",
    "beta",
    "seed",
    "reps",
    "scheme",
    "max-events",
    "max-time",
    "delta",
    "cap",
    "start",
    "target",
    "out",
    "format",
    "threads",
    "m",
    "normalize",
    "svg",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let k = k.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&k.as_str()) {
            return Err(CliError::Usage(format!(
                "config line {}: unknown key '{k}'",
                i + 1
            )));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| CliError::Usage(format!("invalid value '{v}' for {key}: {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    v.split(',').map(|x| parse_value(key, x.trim())).collect()
}

fn parse_normalize(v: &str) -> Result<Normalization, CliError> {
    match v {
        "mean" => Ok(Normalization::Mean),
        "cbeta" => Ok(Normalization::Cbeta),
        other => Err(CliError::Usage(format!(
            "unknown normalization '{other}' (expected mean|cbeta)"
        ))),
    }
}

fn default_reps(c: Command) -> usize {
    match c {
        Command::Occupation => 1,
        Command::Consensus | Command::MEvents => 10_000,
        Command::Metastable => 2000,
        _ => 1,
    }
}

fn default_start(c: Command, n: usize) -> PressureList {
    match c {
        Command::Consensus | Command::MEvents => PressureList::single_one(n),
        Command::Metastable => PressureList::ladder(n),
        _ => PressureList::zeros(n),
    }
}

impl RunConfig {
    fn resolve(cli: Cli, env_out: Option<PathBuf>) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        let get = |key: &str, flag: Option<String>| flag.or_else(|| file.get(key).cloned());
        let command = cli.command;

        let n = match get("n", cli.n.map(|x| x.to_string())) {
            Some(v) => parse_value("n", &v)?,
            None => 3,
        };
        let beta = match get("beta", cli.beta) {
            Some(v) => parse_list("beta", &v)?,
            None => vec![1.0],
        };
        if beta.is_empty() {
            return Err(CliError::Usage("empty beta list".into()));
        }
        for &b in &beta {
            ModelParams::new(n, b)?;
        }
        let seed = get("seed", cli.seed.map(|x| x.to_string()))
            .map(|v| parse_value("seed", &v))
            .transpose()?
            .unwrap_or(0);
        let reps = get("reps", cli.reps.map(|x| x.to_string()))
            .map(|v| parse_value("reps", &v))
            .transpose()?
            .unwrap_or_else(|| default_reps(command));
        if reps == 0 {
            return Err(CliError::Usage("reps must be at least 1".into()));
        }
        let scheme = get("scheme", cli.scheme)
            .map(|v| v.parse::<Scheme>().map_err(CliError::Usage))
            .transpose()?
            .unwrap_or(Scheme::Direct);
        let max_events = get("max-events", cli.max_events.map(|x| x.to_string()))
            .map(|v| parse_value("max-events", &v))
            .transpose()?
            .unwrap_or(DEFAULT_MAX_EVENTS);
        let max_time: Option<f64> = get("max-time", cli.max_time.map(|x| x.to_string()))
            .map(|v| parse_value("max-time", &v))
            .transpose()?;
        if max_time.is_some_and(|t| !(t > 0.0)) {
            return Err(CliError::Usage("max-time must be positive".into()));
        }
        let delta = get("delta", cli.delta.map(|x| x.to_string()))
            .map(|v| parse_value("delta", &v))
            .transpose()?
            .unwrap_or(0.5);
        if !(delta > 0.0 && delta < 1.0) {
            return Err(CliError::Usage(format!("delta {delta} outside (0,1)")));
        }
        let cap: Option<i64> = get("cap", cli.cap.map(|x| x.to_string()))
            .map(|v| parse_value("cap", &v))
            .transpose()?;
        if cap.is_some_and(|c| c < 1) {
            return Err(CliError::Usage("cap must be at least 1".into()));
        }
        let start = match get("start", cli.start) {
            Some(v) => PressureList::new(parse_list("start", &v)?),
            None => default_start(command, n),
        };
        let p = ModelParams::new(n, beta[0])?;
        if !crate::model::validate_membership(&p, &start)? {
            return Err(CliError::Usage(format!(
                "start {start} has no zero coordinate"
            )));
        }
        let target = get("target", cli.target)
            .map(|v| v.parse::<Target>().map_err(CliError::Usage))
            .transpose()?
            .or((command == Command::Metastable).then_some(Target::LadderMinus));
        let out = env_out
            .or(cli.out)
            .or_else(|| file.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let format = match cli.format {
            Some(f) => f,
            None => match file.get("format") {
                Some(v) => Format::from_str(v, true).map_err(CliError::Usage)?,
                None if command == Command::Simulate => Format::Jsonl,
                None => Format::Csv,
            },
        };
        let threads: Option<usize> = get("threads", cli.threads.map(|x| x.to_string()))
            .map(|v| parse_value("threads", &v))
            .transpose()?;
        let m = get("m", cli.m.map(|x| x.to_string()))
            .map(|v| parse_value("m", &v))
            .transpose()?
            .unwrap_or(3 * (n - 1));
        let normalize = get("normalize", cli.normalize)
            .map(|v| parse_normalize(&v))
            .transpose()?
            .unwrap_or(Normalization::Mean);
        let svg = cli.svg || file.get("svg").is_some_and(|v| v == "true");
        Ok(RunConfig {
            command,
            n,
            beta,
            seed,
            reps,
            scheme,
            max_events,
            max_time,
            delta,
            cap,
            start,
            target,
            out,
            format,
            threads,
            m,
            normalize,
            svg,
        })
    }

    pub fn params(&self, beta: f64) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(self.n, beta)?)
    }
}

/// Runs one invocation: 0 on success, 1 when a check fails, 2 on any error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let env_out = std::env::var_os(OUT_ENV).map(PathBuf::from);
    let result = RunConfig::resolve(cli, env_out).and_then(|cfg| commands::execute(&cfg));
    match result {
        Ok(flags) => {
            let failed: Vec<&String> = flags
                .iter()
                .filter(|(_, &ok)| !ok)
                .map(|(k, _)| k)
                .collect();
            if failed.is_empty() {
                0
            } else {
                eprintln!(
                    "failed checks: {}",
                    failed
                        .iter()
                        .map(|s| s.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                );
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
