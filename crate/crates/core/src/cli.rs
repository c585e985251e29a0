//! The `requisites` command line.
//!
//! Exit codes: 0 success, 1 environment (I/O, bind failure), 2 invalid input, 3 evidence
//! with zero probability. Results go to stdout, diagnostics to stderr.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bn::format::{document_format, load_network, FormatError, NETWORK_FORMAT};
use crate::bn::{BayesianNetwork, BnError, Evidence, Posterior};
use crate::interchange::evidence_to_xml;
use crate::metrics::{load_dataset, EvidenceReport, MetricsError};
use crate::model::{
    build_requisites, calibrate, default_network, evidence_trajectory, load_constraints,
    CptParamSet, ModelError, DEFAULT_BUDGET, DEFAULT_SEED, DEGREE_OF_REVISION, PARAMS_FORMAT,
};
use crate::service::{self, propagate, AppState};

#[derive(Debug, Parser)]
#[command(name = "requisites", version, about = "Predict whether a requirements specification needs another revision")]
pub struct Cli {
    /// Network file (`format = "network"`) or parameter file (`format = "requisites-params"`).
    /// Defaults to the shipped Requisites network.
    #[arg(long, global = true, env = "REQUISITES_MODEL")]
    pub model: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    /// Repeat for more log output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect or validate the model.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Posterior distributions given evidence.
    Infer {
        /// Observed state as `variable=state`; repeatable.
        #[arg(short, long = "evidence", value_parser = parse_pair)]
        evidence: Vec<(String, String)>,
        /// Variable to report; repeatable. Defaults to every variable.
        #[arg(short, long = "target")]
        targets: Vec<String>,
    },
    /// Markov blanket of a variable.
    Blanket { variable: String },
    /// Extract evidence from a project dataset directory.
    Metrics {
        dir: PathBuf,
        /// Also write the extracted states as an evidence XML document.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Fit the Requisites parameters to a constraints file.
    Calibrate {
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        /// Where to write the fitted parameters; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Revision posterior as evidence is added one item at a time.
    Trajectory {
        /// Text file with one `variable=state` per line; `#` starts a comment.
        #[arg(long)]
        steps: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "REQUISITES_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Session snapshot file, restored at startup and written at shutdown.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ModelAction {
    /// Print variables, states and edges.
    Show,
    /// Build the model and report the first violation.
    Validate,
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((var, state)) if !var.is_empty() && !state.is_empty() => Ok((var.to_string(), state.to_string())),
        _ => Err(format!("expected `variable=state`, got `{s}`")),
    }
}

/// A failed command: exit code plus a one-line diagnostic.
#[derive(Debug)]
pub struct CliError {
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    pub const ENVIRONMENT: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const INCONSISTENT: i32 = 3;

    fn environment(message: impl Into<String>) -> Self {
        CliError {
            exit_code: Self::ENVIRONMENT,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        CliError {
            exit_code: Self::INPUT,
            message: message.into(),
        }
    }
}

impl From<BnError> for CliError {
    fn from(e: BnError) -> Self {
        CliError {
            exit_code: if e == BnError::InconsistentEvidence { Self::INCONSISTENT } else { Self::INPUT },
            message: format!("{}: {e}", e.code()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Network(inner) => inner.into(),
            other => CliError::input(format!("{}: {other}", other.code())),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Io { .. } => CliError::environment(e.to_string()),
            other => CliError::input(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::environment(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::environment(format!("{}: {e}", path.display())))
}

/// Loads a network file or a parameter file, told apart by their `format` key.
pub fn load_model(path: &Path) -> Result<BayesianNetwork, CliError> {
    let text = read(path)?;
    let invalid = |e: &dyn std::fmt::Display| CliError::input(format!("{}: {e}", path.display()));
    let format = document_format(&text).map_err(|e| invalid(&e))?;
    match format.as_str() {
        NETWORK_FORMAT => load_network(&text).map_err(|e| match e {
            FormatError::Invalid(inner) => {
                let mut err = CliError::from(inner);
                err.message = format!("{}: {}", path.display(), err.message);
                err
            }
            other => invalid(&format!("{}: {other}", other.code())),
        }),
        PARAMS_FORMAT => {
            let params = CptParamSet::from_toml(&text).map_err(|e| invalid(&format!("{}: {e}", e.code())))?;
            build_requisites(&params).map_err(|e| invalid(&format!("{}: {e}", e.code())))
        }
        other => Err(invalid(&format!(
            "unknown document format `{other}`; expected `{NETWORK_FORMAT}` or `{PARAMS_FORMAT}`"
        ))),
    }
}

fn model(cli: &Cli) -> Result<BayesianNetwork, CliError> {
    match &cli.model {
        Some(path) => load_model(path),
        None => Ok(default_network().clone()),
    }
}

/// Parses, runs and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CliError::INPUT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {}", e.message);
            e.exit_code
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    let _ = tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .try_init();
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let json = cli.format == OutputFormat::Json;
    match &cli.command {
        Command::Model { action: ModelAction::Show } => show_model(&model(cli)?, json, out),
        Command::Model { action: ModelAction::Validate } => {
            let net = model(cli)?;
            emit(out, json, &json!({ "valid": true, "variables": net.len(), "edges": net.edges().len() }), || {
                format!("valid: {} variables, {} edges\n", net.len(), net.edges().len())
            })
        }
        Command::Infer { evidence: pairs, targets } => {
            let net = model(cli)?;
            let evidence: Evidence = pairs.iter().cloned().collect();
            if evidence.len() != pairs.len() {
                return Err(CliError::input("a variable is given more than once in --evidence"));
            }
            let targets = if targets.is_empty() {
                net.variables().iter().map(|v| v.id.clone()).collect()
            } else {
                targets.clone()
            };
            let response = propagate(&net, &evidence, &targets)?;
            emit(out, json, &response, || {
                let mut text = posterior_table(response.posteriors.values());
                if !response.posteriors.contains_key(DEGREE_OF_REVISION) {
                    text.push_str(&posterior_table([&response.revision]));
                }
                text.push_str(&format!("prediction: {DEGREE_OF_REVISION} = {}\n", response.prediction));
                text
            })
        }
        Command::Blanket { variable } => {
            let net = model(cli)?;
            let blanket = net.markov_blanket(variable)?;
            emit(out, json, &json!({ "variable": variable, "blanket": blanket }), || {
                blanket.iter().map(|v| format!("{v}\n")).collect()
            })
        }
        Command::Metrics { dir, emit: xml_path } => {
            if !dir.is_dir() {
                return Err(CliError::input(format!("{}: not a dataset directory", dir.display())));
            }
            let report = load_dataset(dir)?.extract()?;
            if let Some(path) = xml_path {
                let xml = evidence_to_xml(&report.evidence()).map_err(|e| CliError::input(e.to_string()))?;
                write(path, &xml)?;
            }
            emit(out, json, &report, || report_table(&report))
        }
        Command::Calibrate {
            constraints,
            seed,
            budget,
            out: params_path,
        } => {
            let constraints = load_constraints(&read(constraints)?)?;
            let result = calibrate(&constraints, *seed, *budget)?;
            let params = result.params.to_toml();
            if let Some(path) = params_path {
                write(path, &params)?;
            }
            let summary = json!({
                "seed": seed,
                "budget": budget,
                "residual": result.residual,
                "evaluations": result.evaluations,
                "trace": result.trace,
            });
            emit(out, json, &summary, || {
                let mut text = format!(
                    "residual: {:e}\nevaluations: {}\nsweeps: {}\ntrace: {}\n",
                    result.residual,
                    result.evaluations,
                    result.trace.len().saturating_sub(1),
                    result.trace.iter().map(|t| format!("{t:.3e}")).collect::<Vec<_>>().join(" "),
                );
                if params_path.is_none() {
                    text.push('\n');
                    text.push_str(&params);
                }
                text
            })
        }
        Command::Trajectory { steps } => {
            let net = model(cli)?;
            let steps = parse_steps(&read(steps)?)?;
            let trajectory = evidence_trajectory(&net, &steps)?;
            let rows: Vec<_> = trajectory
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let added = k.checked_sub(1).map(|i| format!("{}={}", steps[i].0, steps[i].1));
                    json!({ "step": k, "added": added, "posterior": p })
                })
                .collect();
            emit(out, json, &rows, || trajectory_table(&steps, &trajectory))
        }
        Command::Serve { port, host, snapshot } => serve(cli, host, *port, snapshot.as_deref(), out),
    }
}

fn emit(
    out: &mut dyn Write,
    json: bool,
    value: &impl Serialize,
    table: impl FnOnce() -> String,
) -> Result<(), CliError> {
    let text = if json {
        let mut s = serde_json::to_string_pretty(value).expect("serializable output");
        s.push('\n');
        s
    } else {
        table()
    };
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::environment(format!("stdout: {e}")))
}

fn show_model(net: &BayesianNetwork, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    if json {
        let value = json!({ "variables": net.variables(), "edges": net.edges() });
        return emit(out, true, &value, String::new);
    }
    let width = net.variables().iter().map(|v| v.id.len()).max().unwrap_or(0);
    let mut text = String::from("variables:\n");
    for v in net.variables() {
        text.push_str(&format!("  {:width$}  {}\n", v.id, v.states.join(", ")));
    }
    text.push_str("edges:\n");
    for (p, c) in net.edges() {
        text.push_str(&format!("  {p} -> {c}\n"));
    }
    emit(out, false, &(), || text)
}

fn posterior_table<'a>(posteriors: impl IntoIterator<Item = &'a Posterior>) -> String {
    let mut text = String::new();
    for p in posteriors {
        let cells: Vec<String> = p
            .probabilities
            .iter()
            .map(|(s, v)| format!("{s}={v:.4}"))
            .collect();
        text.push_str(&format!("{:<28} {}\n", p.variable, cells.join("  ")));
    }
    text
}

fn report_table(report: &EvidenceReport) -> String {
    let mut text = String::new();
    for e in &report.entries {
        text.push_str(&format!("{:<28} {:<8} {}\n", e.variable, e.value.to_string(), e.note));
        for (k, v) in &e.statistics {
            text.push_str(&format!("    {k} = {}\n", format_stat(*v)));
        }
    }
    text
}

fn format_stat(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn trajectory_table(steps: &[(String, String)], trajectory: &[Posterior]) -> String {
    let states: Vec<&str> = trajectory[0].probabilities.iter().map(|(s, _)| s.as_str()).collect();
    let mut text = format!("{:<4} {:<40}", "step", "added evidence");
    for s in &states {
        text.push_str(&format!(" {s:>8}"));
    }
    text.push('\n');
    for (k, p) in trajectory.iter().enumerate() {
        let added = match k {
            0 => "(prior)".to_string(),
            _ => format!("{}={}", steps[k - 1].0, steps[k - 1].1),
        };
        text.push_str(&format!("{k:<4} {added:<40}"));
        for v in p.values() {
            text.push_str(&format!(" {v:>8.4}"));
        }
        text.push('\n');
    }
    text
}

/// One `variable=state` per line; blank lines and `#` comments are skipped.
pub fn parse_steps(text: &str) -> Result<Vec<(String, String)>, CliError> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then(|| parse_pair(line).map_err(|e| CliError::input(format!("line {}: {e}", i + 1))))
        })
        .collect()
}

fn serve(
    cli: &Cli,
    host: &str,
    port: u16,
    snapshot: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let net = Arc::new(model(cli)?);
    let mut state = AppState::new(net)?;
    if let Some(path) = snapshot {
        state = state
            .with_snapshot(path)
            .map_err(|e| CliError::environment(format!("{}: {e}", path.display())))?;
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::environment(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| CliError::environment(format!("cannot bind {host}:{port}: {e}")))?;
        let addr = listener
            .local_addr()
            .map_err(|e| CliError::environment(e.to_string()))?;
        writeln!(out, "listening on http://{addr}")
            .and_then(|_| out.flush())
            .map_err(|e| CliError::environment(e.to_string()))?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        };
        service::serve(listener, Arc::new(state), shutdown)
            .await
            .map_err(|e| CliError::environment(e.to_string()))
    })
}
