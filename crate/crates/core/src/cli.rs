// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. `main` only parses arguments and maps errors to
//! exit codes; everything else lives here so it can be driven from tests.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::elements::ElementKind;
use crate::engine::{run_tree, sample_runs, Board, MultiverseTree, NodeStatus, TreeConfig};
use crate::entanglement::entanglement_report;
use crate::io::{
    chsh_exact, detection_csv, fixtures, parse_setup, serialize_setup, IoError, SetupDocument,
};
use crate::photon::{ket_components, ComplexFormat, PolarizationBasis};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_BAD_SETUP: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Env var holding the default `serve` port.
pub const PORT_ENV: &str = "PHOTONLAB_PORT";
pub const DEFAULT_PORT: u16 = 7878;

#[derive(Debug, Parser)]
#[command(name = "photonlab", version, about = "Few-photon optics on a grid")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print detector and leaf probabilities from the exact tree.
    Run {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
        format: OutputFormat,
    },
    /// Emit the full tree as JSON.
    Tree {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value = "HV")]
        basis: PolarizationBasis,
    },
    /// Sample runs and emit a CSV detection log.
    Sample {
        #[command(flatten)]
        target: Target,
        #[arg(long, short = 'n', default_value_t = 1000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Kets, entropies and graph layout at one step, plus CHSH when wired.
    Analyze {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        step: Option<usize>,
        #[arg(long, default_value = "HV")]
        basis: PolarizationBasis,
        /// How amplitudes are written.
        #[arg(long = "format", default_value = "cartesian")]
        complex: ComplexFormat,
        #[arg(long = "output-format", value_enum, default_value_t = OutputFormat::Table)]
        format: OutputFormat,
    },
    /// Serve the lab protocol over local HTTP until interrupted.
    Serve {
        /// Defaults to $PHOTONLAB_PORT, then 7878.
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Check a setup without simulating it.
    Validate { setup: String },
    /// List the fixture library or write it to a directory.
    Fixtures {
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

/// A setup file or fixture name, with truncation overrides.
#[derive(Debug, Args)]
pub struct Target {
    /// Path to a setup JSON file, or the name of a fixture.
    pub setup: String,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub min_probability: Option<f64>,
    #[arg(long)]
    pub max_nodes: Option<usize>,
    /// Write to this file instead of stdout.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

impl Target {
    pub fn config(&self) -> TreeConfig {
        let d = TreeConfig::default();
        TreeConfig {
            max_steps: self.max_steps.unwrap_or(d.max_steps),
            min_branch_probability: self.min_probability.unwrap_or(d.min_branch_probability),
            max_nodes: self.max_nodes.unwrap_or(d.max_nodes),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Setup(String),
    /// The tree hit its node budget; the partial output was still written.
    #[error("node budget exhausted after {nodes} nodes; output is partial")]
    Budget { nodes: usize },
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Setup(_) => EXIT_BAD_SETUP,
            CliError::Budget { .. } => EXIT_BUDGET,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io(e) => CliError::Failure(e.to_string()),
            IoError::Csv(e) => CliError::Failure(e.to_string()),
            IoError::Engine(ref inner) if !is_setup_error(inner) => {
                CliError::Failure(e.to_string())
            }
            other => CliError::Setup(other.to_string()),
        }
    }
}

fn is_setup_error(e: &crate::engine::EngineError) -> bool {
    use crate::engine::EngineError as E;
    matches!(
        e,
        E::InvalidBoard(_) | E::InvalidElement { .. } | E::NoSource
    )
}

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

/// Load `setup` as a file when it looks like a path, else as a fixture.
pub fn load_setup(setup: &str) -> Result<SetupDocument, CliError> {
    let path = Path::new(setup);
    if path.exists() || setup.ends_with(".json") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Setup(format!("{}: {e}", path.display())))?;
        Ok(parse_setup(&text)?)
    } else {
        Ok(fixtures::fixture(setup)?)
    }
}

fn load_board(setup: &str) -> Result<(SetupDocument, Board), CliError> {
    let doc = load_setup(setup)?;
    let board = doc.to_board()?;
    Ok((doc, board))
}

fn simulate(board: &Board, config: TreeConfig) -> Result<MultiverseTree, CliError> {
    run_tree(board, config).map_err(failure)
}

fn budget_check(tree: &MultiverseTree) -> Result<(), CliError> {
    if tree.budget_exhausted {
        Err(CliError::Budget {
            nodes: tree.nodes.len(),
        })
    } else {
        Ok(())
    }
}

fn emit(output: &Option<PathBuf>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| failure(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(failure),
    }
}

/// Run a subcommand other than `serve`, writing to `out`.
pub fn run_command(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Run { target, format } => {
            let (doc, board) = load_board(&target.setup)?;
            let tree = simulate(&board, target.config())?;
            let text = match format {
                OutputFormat::Table => run_table(&doc, &board, &tree),
                OutputFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&run_json(&doc, &board, &tree))
                        .map_err(failure)?;
                    s.push('\n');
                    s
                }
            };
            emit(&target.output, &text, out)?;
            budget_check(&tree)
        }
        Command::Tree { target, basis } => {
            let (_, board) = load_board(&target.setup)?;
            let tree = simulate(&board, target.config())?;
            let mut s = tree.to_json_string(*basis);
            s.push('\n');
            emit(&target.output, &s, out)?;
            budget_check(&tree)
        }
        Command::Sample { target, n, seed } => {
            let (_, board) = load_board(&target.setup)?;
            let runs =
                sample_runs(&board, *seed, *n, target.config().max_steps).map_err(failure)?;
            emit(&target.output, &detection_csv(&board, &runs)?, out)
        }
        Command::Analyze {
            target,
            step,
            basis,
            complex,
            format,
        } => {
            let (_, board) = load_board(&target.setup)?;
            let tree = simulate(&board, target.config())?;
            let report = analyze(&board, &tree, *step, *basis, *complex)?;
            let text = match format {
                OutputFormat::Table => analyze_table(&report),
                OutputFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&report).map_err(failure)?;
                    s.push('\n');
                    s
                }
            };
            emit(&target.output, &text, out)?;
            budget_check(&tree)
        }
        Command::Validate { setup } => {
            let (doc, board) = load_board(setup)?;
            writeln!(
                out,
                "{}: ok ({} elements, {} wires, {} photons)",
                doc.name,
                board.elements().len(),
                board.wires().len(),
                board.photon_count()
            )
            .map_err(failure)
        }
        Command::Fixtures { export } => {
            for doc in fixtures::library() {
                match export {
                    Some(dir) => {
                        std::fs::create_dir_all(dir).map_err(failure)?;
                        let path = dir.join(format!("{}.json", doc.name));
                        std::fs::write(&path, serialize_setup(&doc)).map_err(failure)?;
                        writeln!(out, "{}", path.display()).map_err(failure)?;
                    }
                    None => {
                        writeln!(out, "{:<32} {}", doc.name, doc.description).map_err(failure)?
                    }
                }
            }
            Ok(())
        }
        Command::Serve { .. } => Err(failure("serve is handled by the binary entry point")),
    }
}

/// Port for `serve`: flag, then env var, then the default.
pub fn serve_port(flag: Option<u16>) -> Result<u16, CliError> {
    if let Some(p) = flag {
        return Ok(p);
    }
    match std::env::var(PORT_ENV) {
        Ok(v) => v
            .parse()
            .map_err(|_| failure(format!("{PORT_ENV}={v} is not a port number"))),
        Err(_) => Ok(DEFAULT_PORT),
    }
}

fn leaf_outcome(board: &Board, n: &crate::engine::SimulationNode) -> String {
    let mut parts: Vec<String> = board
        .detector_ids()
        .into_iter()
        .filter(|id| n.classical.detector_bit(id))
        .map(String::from)
        .collect();
    if n.classical.exploded {
        parts.push("exploded".into());
    }
    for e in &n.classical.record {
        if e.kind == crate::engine::EventKind::Absorbed {
            parts.push(format!("absorbed@{}", e.element.as_deref().unwrap_or("?")));
        }
    }
    if n.classical
        .record
        .iter()
        .any(|e| e.kind == crate::engine::EventKind::Lost)
    {
        parts.push("lost".into());
    }
    match n.status {
        NodeStatus::StepLimit => parts.push("in-flight".into()),
        NodeStatus::Unexpanded => parts.push("unexpanded".into()),
        _ => {}
    }
    if parts.is_empty() {
        "none".into()
    } else {
        parts.join(" ")
    }
}

fn run_json(doc: &SetupDocument, board: &Board, tree: &MultiverseTree) -> serde_json::Value {
    let detectors: serde_json::Map<String, serde_json::Value> = board
        .detector_ids()
        .into_iter()
        .map(|id| (id.to_string(), tree.detector_probability(id).into()))
        .collect();
    let leaves: Vec<serde_json::Value> = tree
        .leaves()
        .map(|n| {
            serde_json::json!({
                "node": n.id,
                "step": n.step,
                "probability": n.probability,
                "outcome": leaf_outcome(board, n),
            })
        })
        .collect();
    serde_json::json!({
        "setup": doc.name,
        "detectors": detectors,
        "leaves": leaves,
        "explored_mass": tree.explored_mass,
        "truncated_mass": tree.truncated_mass,
        "budget_exhausted": tree.budget_exhausted,
        "goals": doc.evaluate_goals(tree),
    })
}

fn run_table(doc: &SetupDocument, board: &Board, tree: &MultiverseTree) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "setup: {}", doc.name);
    let _ = writeln!(s, "{:<20} {:>12}", "detector", "probability");
    for id in board.detector_ids() {
        let _ = writeln!(s, "{:<20} {:>12.6}", id, tree.detector_probability(id));
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<8} {:>6} {:>12}  outcome",
        "leaf", "step", "probability"
    );
    for n in tree.leaves() {
        let _ = writeln!(
            s,
            "{:<8} {:>6} {:>12.6}  {}",
            n.id,
            n.step,
            n.probability,
            leaf_outcome(board, n)
        );
    }
    let _ = writeln!(
        s,
        "\nexplored mass {:.9}, truncated mass {:.3e}{}",
        tree.explored_mass,
        tree.truncated_mass,
        if tree.budget_exhausted {
            " (PARTIAL: node budget exhausted)"
        } else {
            ""
        }
    );
    for g in doc.evaluate_goals(tree) {
        let _ = writeln!(
            s,
            "goal {} >= {}: {:.6} {}",
            g.detector,
            g.threshold,
            g.probability,
            if g.reached { "reached" } else { "missed" }
        );
    }
    s
}

#[derive(Debug, serde::Serialize)]
pub struct NodeAnalysis {
    pub node: usize,
    pub step: usize,
    pub probability: f64,
    pub kets: Vec<crate::photon::KetComponent>,
    pub entanglement: Option<crate::entanglement::EntanglementReport>,
}

#[derive(Debug, serde::Serialize)]
pub struct Analysis {
    pub step: usize,
    pub basis: String,
    pub nodes: Vec<NodeAnalysis>,
    pub chsh: Option<crate::io::ChshEstimate>,
}

/// Per-node analysis at `step` (default: the last step of the tree).
pub fn analyze(
    board: &Board,
    tree: &MultiverseTree,
    step: Option<usize>,
    basis: PolarizationBasis,
    complex: ComplexFormat,
) -> Result<Analysis, CliError> {
    let last = tree.nodes.iter().map(|n| n.step).max().unwrap_or(0);
    let step = step.unwrap_or(last);
    let mut nodes = Vec::new();
    for n in tree.nodes.iter().filter(|n| n.step == step) {
        let kets = ket_components(&n.state, basis, complex).map_err(failure)?;
        let entanglement = if n.state.particles().is_empty() {
            None
        } else {
            let normalized = n.state.normalized().map_err(failure)?;
            Some(entanglement_report(&normalized).map_err(failure)?)
        };
        nodes.push(NodeAnalysis {
            node: n.id,
            step: n.step,
            probability: n.probability,
            kets,
            entanglement,
        });
    }
    let has_correlator = board
        .elements()
        .iter()
        .any(|e| e.kind == ElementKind::Correlator);
    let chsh = if has_correlator {
        Some(chsh_exact(board, tree)?)
    } else {
        None
    };
    Ok(Analysis {
        step,
        basis: basis.to_string(),
        nodes,
        chsh,
    })
}

fn analyze_table(a: &Analysis) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "step {} ({} basis), {} branches",
        a.step,
        a.basis,
        a.nodes.len()
    );
    for n in &a.nodes {
        let _ = writeln!(s, "\nnode {} p={:.6}", n.node, n.probability);
        for k in &n.kets {
            let _ = writeln!(
                s,
                "  {:<40} {:<28} {:.6}",
                k.basis,
                k.amplitude.to_string(),
                k.probability
            );
        }
        if let Some(e) = &n.entanglement {
            for ((p, h), w) in e.particles.iter().zip(&e.entropies).zip(&e.layout.widths) {
                let _ = writeln!(s, "  photon {p}: renyi-2 {h:.6} bits, width {w:.3}");
            }
            let [x, y] = e.layout.equilibrium;
            let _ = writeln!(s, "  blob center ({x:.4}, {y:.4})");
        }
    }
    if let Some(c) = &a.chsh {
        let _ = writeln!(s, "\nCHSH S = {:.9}", c.s);
        for (i, row) in c.correlators.iter().enumerate() {
            let _ = writeln!(
                s,
                "  E[{i}][0] = {:+.6}  E[{i}][1] = {:+.6}",
                row[0], row[1]
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (Result<(), CliError>, String) {
        let cli =
            Cli::try_parse_from(std::iter::once("photonlab").chain(args.iter().copied())).unwrap();
        let mut out = Vec::new();
        let r = run_command(&cli.command, &mut out);
        (r, String::from_utf8(out).unwrap())
    }

    #[test]
    fn run_mach_zehnder_table() {
        let (r, out) = run(&["run", "mach-zehnder"]);
        r.unwrap();
        assert!(out.contains("d1                       1.000000"), "{out}");
        assert!(out.contains("d2                       0.000000"), "{out}");
    }

    #[test]
    fn unknown_fixture_is_a_setup_error() {
        let (r, _) = run(&["run", "no-such-thing"]);
        assert_eq!(r.unwrap_err().exit_code(), EXIT_BAD_SETUP);
    }

    #[test]
    fn tiny_budget_exits_with_partial_output() {
        let (r, out) = run(&["tree", "bell-chsh", "--max-nodes", "3"]);
        assert_eq!(r.unwrap_err().exit_code(), EXIT_BUDGET);
        assert!(
            out.contains("\"budget_exhausted\": true") || out.contains("budget"),
            "{out}"
        );
    }

    #[test]
    fn sample_is_repeatable() {
        let a = run(&["sample", "bell-chsh", "-n", "200", "--seed", "7"]).1;
        let b = run(&["sample", "bell-chsh", "-n", "200", "--seed", "7"]).1;
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 201);
    }

    #[test]
    fn analyze_in_circular_basis() {
        let (r, out) = run(&[
            "analyze",
            "teleportation",
            "--step",
            "12",
            "--basis",
            "LR",
            "--format",
            "polar-tau",
        ]);
        r.unwrap();
        assert!(out.contains("step 12 (LR basis), 4 branches"), "{out}");
        assert!(out.contains("τ"), "{out}");
    }

    #[test]
    fn port_resolution() {
        assert_eq!(serve_port(Some(9000)).unwrap(), 9000);
    }
}
