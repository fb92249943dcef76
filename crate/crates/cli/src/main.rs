//! Command line interface for boundary-value problems on weighted networks.
//!
//! Exit codes: 0 success, 1 input problems (files, schema, labels, network
//! validity), 2 violated solvability hypotheses, 3 singular operators,
//! 4 failed residual gates or verification checks.

mod problem;
mod verify;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde_json::{json, Map, Value};

use netlap_core::network::{cycle, funnel_b, funnel_b_folded, path_a};
use netlap_core::{
    bi_blocks, boundary_chain, hitting_matrix, transfer_matrix, Error as CoreError, Network,
    Partition, TransitionSystem,
};

use problem::{parse_problem, run_solve, SolveOverrides};

#[derive(Debug)]
pub enum CliError {
    Core(CoreError),
    Io { path: PathBuf, source: std::io::Error },
    Input(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Input(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Input(_) => 1,
            CliError::Core(e) => match e {
                CoreError::Parse { .. }
                | CoreError::Invalid(_)
                | CoreError::NotStronglyConnected(_)
                | CoreError::SupportMismatch { .. }
                | CoreError::EmptySubset(_)
                | CoreError::BadParameter(_) => 1,
                CoreError::Unsolvable { .. } | CoreError::Hypothesis { .. } => 2,
                CoreError::Singular { .. } => 3,
                CoreError::ResidualCheck { .. }
                | CoreError::Stationary { .. }
                | CoreError::StepCap { .. } => 4,
            },
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OutputKind {
    Table,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormalArg {
    Standard,
    Reversed,
    Subnetwork,
    Star,
    Override,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Identities,
    Montecarlo,
}

#[derive(Parser)]
#[command(
    name = "netlap",
    version,
    about = "Laplace and bi-Laplace boundary-value problems on strongly connected weighted networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a network file and print its random-walk diagnostics.
    Analyze {
        /// Network JSON file.
        network: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputKind::Table)]
        output: OutputKind,
    },
    /// Solve a problem file on a network.
    Solve {
        /// Network JSON file.
        network: PathBuf,
        /// Problem JSON file.
        problem: PathBuf,
        /// Gate applied to the reported residuals; exceeding it exits 4.
        #[arg(long)]
        tol: Option<f64>,
        /// Grounding vertex label (defaults to the network root).
        #[arg(long)]
        ground: Option<String>,
        /// Anchor vertex label for flux-to-value recovery.
        #[arg(long)]
        anchor: Option<String>,
        /// Outward-derivative variant.
        #[arg(long, value_enum)]
        normal: Option<NormalArg>,
        #[arg(long, value_enum, default_value_t = OutputKind::Json)]
        output: OutputKind,
    },
    /// Check the chain's algebraic identities or its Monte Carlo estimators.
    Verify {
        /// Network JSON file.
        network: PathBuf,
        #[arg(long, value_enum)]
        suite: SuiteArg,
        /// Seed for the check data; runs repeat exactly under the same seed.
        #[arg(long)]
        seed: u64,
        /// Walks per Monte Carlo estimate.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Residual gate for the identity checks.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Print a built-in example network with its expected quantities.
    Example {
        #[command(subcommand)]
        family: FamilyArg,
    },
}

#[derive(Subcommand)]
enum FamilyArg {
    /// Bidirectional unit-weight path on vertices 0..=n, boundary {0, n}.
    PathA {
        n: usize,
    },
    /// Descending chain: from the top vertex a jump down k-1 levels has
    /// weight w_k; every other vertex steps down one level. Weights are the
    /// jump distribution; with --allow-loop-fold the first entry is a
    /// retention probability that gets folded away by renormalization.
    FunnelB {
        #[arg(required = true, num_args = 1..)]
        weights: Vec<f64>,
        #[arg(long)]
        allow_loop_fold: bool,
    },
    /// Oriented unit-weight cycle with alternating boundary vertices.
    Cycle {
        len: usize,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    };
    std::process::exit(code);
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read_network(path: &Path) -> CliResult<Network> {
    Ok(Network::parse(&read_file(path)?)?)
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Analyze { network, output } => run_analyze(&read_network(&network)?, output),
        Command::Solve { network, problem, tol, ground, anchor, normal, output } => {
            let net = read_network(&network)?;
            let spec = parse_problem(&read_file(&problem)?)?;
            let gate = tol.or(spec.tol).unwrap_or(1e-9);
            let overrides = SolveOverrides { ground, anchor, normal };
            let outcome = run_solve(&net, &spec, &overrides)?;
            emit(&outcome.document, output);
            if outcome.worst > gate {
                eprintln!(
                    "residual gate: worst reported value {:.3e} exceeds {gate:.1e}",
                    outcome.worst
                );
                return Ok(4);
            }
            Ok(0)
        }
        Command::Verify { network, suite, seed, trials, tol } => {
            let net = read_network(&network)?;
            match suite {
                SuiteArg::Identities => verify::run_identities(&net, seed, tol),
                SuiteArg::Montecarlo => verify::run_montecarlo(&net, seed, trials),
            }
        }
        Command::Example { family } => run_example(family),
    }
}

fn emit(doc: &Value, output: OutputKind) {
    match output {
        OutputKind::Json => {
            println!("{}", serde_json::to_string_pretty(doc).expect("document serializes"))
        }
        OutputKind::Table => print_table(doc, 0),
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Bool(true) => "yes".to_string(),
        Value::Bool(false) => "no".to_string(),
        Value::Null => "-".to_string(),
        other => other.to_string(),
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Object(_) | Value::Array(_))
}

fn print_table(v: &Value, indent: usize) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (key, value) in map {
                match value {
                    Value::Array(items) if items.iter().all(is_scalar) => {
                        let joined: Vec<String> = items.iter().map(scalar_text).collect();
                        println!("{pad}{key}: {}", joined.join(", "));
                    }
                    Value::Object(_) | Value::Array(_) => {
                        println!("{pad}{key}:");
                        print_table(value, indent + 2);
                    }
                    scalar => println!("{pad}{key}: {}", scalar_text(scalar)),
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                if is_scalar(item) {
                    println!("{pad}- {}", scalar_text(item));
                } else if let Value::Array(row) = item {
                    let joined: Vec<String> = row.iter().map(scalar_text).collect();
                    println!("{pad}- {}", joined.join(", "));
                } else {
                    println!("{pad}-");
                    print_table(item, indent + 2);
                }
            }
        }
        scalar => println!("{pad}{}", scalar_text(scalar)),
    }
}

fn labels_of(net: &Network, vertices: &[usize]) -> Vec<String> {
    vertices.iter().map(|&v| net.label(v).to_string()).collect()
}

fn lu_verdict(singular: bool, report: netlap_core::linalg::LuReport) -> String {
    if singular {
        format!("SINGULAR (min pivot {:.3e})", report.min_pivot)
    } else {
        format!("REGULAR (condition {:.3e})", report.condition)
    }
}

fn run_analyze(net: &Network, output: OutputKind) -> CliResult<i32> {
    // Fields in presentation order; the JSON object sorts them by key.
    let mut fields: Vec<(&str, Value)> = vec![
        ("vertices", json!(net.vertex_count())),
        ("edges", json!(net.edge_count())),
        ("root", json!(net.label(net.root()))),
        ("boundary", json!(labels_of(net, &net.boundary_sorted()))),
        ("interior", json!(labels_of(net, &net.interior_sorted()))),
    ];

    match TransitionSystem::from_network(net) {
        Ok(ts) => {
            fields.push(("strongly_connected", json!(true)));
            fields.push(("reversible", json!(ts.is_reversible())));
            let mut stationary = Map::new();
            for x in 0..ts.n() {
                stationary.insert(ts.label(x).to_string(), json!(ts.pi()[x]));
            }
            fields.push(("stationary", Value::Object(stationary)));
            let part = Partition::from_network(net);
            if !part.boundary().is_empty() && !part.interior().is_empty() {
                let app = boundary_chain(&ts, &part)?;
                fields.push(("exit_boundary", json!(labels_of(net, app.exit_boundary()))));
                fields
                    .push(("entrance_boundary", json!(labels_of(net, app.entrance_boundary()))));
                // Where second-plate derivative data lives: interior vertices
                // with at least one arc escaping the interior.
                let interior_set: std::collections::BTreeSet<usize> =
                    part.interior().iter().copied().collect();
                let sub = net.subnetwork(&interior_set)?;
                fields.push(("interior_sub_boundary", json!(labels_of(net, sub.boundary()))));
                let blocks = bi_blocks(&ts, &part)?;
                fields.push((
                    "fourth_order_interior_block",
                    json!(lu_verdict(blocks.k().is_none(), blocks.s_report())),
                ));
                fields.push((
                    "boundary_return_operator",
                    json!(lu_verdict(blocks.ir_inverse().is_none(), blocks.ir_report())),
                ));
            }
        }
        Err(CoreError::NotStronglyConnected(components)) => {
            fields.push(("strongly_connected", json!(false)));
            fields.push(("components", json!(components)));
        }
        Err(other) => return Err(other.into()),
    }

    match output {
        OutputKind::Json => {
            let doc: Map<String, Value> =
                fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&Value::Object(doc)).expect("document serializes")
            );
        }
        OutputKind::Table => {
            for (key, value) in &fields {
                match value {
                    Value::Array(items) if items.iter().all(is_scalar) => {
                        let joined: Vec<String> = items.iter().map(scalar_text).collect();
                        println!("{key}: {}", joined.join(", "));
                    }
                    Value::Object(_) => {
                        println!("{key}:");
                        print_table(value, 2);
                    }
                    scalar => println!("{key}: {}", scalar_text(scalar)),
                }
            }
        }
    }
    Ok(0)
}

fn matrix_rows(m: &DMatrix<f64>) -> Value {
    let rows: Vec<Vec<f64>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
    json!(rows)
}

/// Kernel-computed reference quantities for an example chain, so the
/// emitted document can cross-check an independent implementation.
fn expectations(ts: &TransitionSystem, part: &Partition) -> CliResult<Value> {
    let app = boundary_chain(ts, part)?;
    let hm = hitting_matrix(ts, part)?;
    let blocks = bi_blocks(ts, part)?;
    let mut stationary = Map::new();
    for x in 0..ts.n() {
        stationary.insert(ts.label(x).to_string(), json!(ts.pi()[x]));
    }
    let labels = |vs: &[usize]| -> Vec<String> {
        vs.iter().map(|&v| ts.label(v).to_string()).collect()
    };
    let transfer = if blocks.invertible() {
        matrix_rows(&transfer_matrix(&blocks)?)
    } else {
        Value::Null
    };
    Ok(json!({
        "stationary": Value::Object(stationary),
        "interior_order": labels(part.interior()),
        "boundary_order": labels(part.boundary()),
        "hitting_rows": matrix_rows(&hm),
        "boundary_chain": matrix_rows(app.q()),
        "return_operator": matrix_rows(blocks.r()),
        "return_inverse": blocks.ir_inverse().map(matrix_rows).unwrap_or(Value::Null),
        "transfer": transfer,
        "fourth_order_singular": !blocks.invertible(),
    }))
}

fn run_example(family: FamilyArg) -> CliResult<i32> {
    let (name, params, net, chain) = match family {
        FamilyArg::PathA { n } => {
            ("path-a", json!({"n": n}), path_a(n)?, None)
        }
        FamilyArg::Cycle { len } => ("cycle", json!({"len": len}), cycle(len)?, None),
        FamilyArg::FunnelB { weights, allow_loop_fold } => {
            if allow_loop_fold {
                // The emitted network folds the retention weight away; the
                // expectations describe the chain as parameterized, with the
                // top vertex retaining mass weights[0] per step.
                let net = funnel_b_folded(&weights)?;
                let n = weights.len();
                let labels: Vec<String> = (1..=n).map(|k| k.to_string()).collect();
                let mut p = DMatrix::<f64>::zeros(n, n);
                for (k, &w) in weights.iter().enumerate() {
                    p[(0, k)] = w;
                }
                for k in 1..n {
                    p[(k, k - 1)] = 1.0;
                }
                let ts = TransitionSystem::from_stochastic_matrix(labels, p)?;
                let part = Partition::new(n, [n - 2, n - 1])?;
                let params =
                    json!({"weights": weights, "chain": "verbatim", "retention": weights[0]});
                ("funnel-b", params, net, Some((ts, part)))
            } else {
                let net = funnel_b(&weights)?;
                ("funnel-b", json!({"weights": weights, "chain": "loop-free"}), net, None)
            }
        }
    };
    let (ts, part) = match chain {
        Some(pair) => pair,
        None => (TransitionSystem::from_network(&net)?, Partition::from_network(&net)),
    };
    let network_value: Value =
        serde_json::from_str(&net.to_canonical_json()).expect("canonical network JSON parses");
    let doc = json!({
        "family": name,
        "parameters": params,
        "network": network_value,
        "expectations": expectations(&ts, &part)?,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("document serializes"));
    Ok(0)
}
