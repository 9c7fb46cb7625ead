// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use super::board::{Board, ClassicalState, Event};
use super::step::{evolve_step, input_assignments};
use super::EngineError;
use crate::photon::{basis_label, PolarizationBasis};
use crate::tensor::SparseVector;

pub const TREE_FORMAT_VERSION: u32 = 1;

/// Truncation limits for [`run_tree`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeConfig {
    pub max_steps: usize,
    pub min_branch_probability: f64,
    pub max_nodes: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_steps: 200,
            min_branch_probability: 1e-9,
            max_nodes: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    /// Has children.
    Expanded,
    /// No photons left.
    Terminal,
    /// Reached `max_steps` with photons still in flight.
    StepLimit,
    /// Not expanded because the node budget ran out.
    Unexpanded,
}

#[derive(Clone, Debug)]
pub struct SimulationNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Absolute probability of reaching this node.
    pub probability: f64,
    pub step: usize,
    pub state: SparseVector,
    pub classical: ClassicalState,
    /// Events of the step that produced this node.
    pub events: Vec<Event>,
    pub status: NodeStatus,
}

impl SimulationNode {
    pub fn photon_count(&self) -> usize {
        self.state.particles().len()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct MultiverseTree {
    pub nodes: Vec<SimulationNode>,
    pub config: TreeConfig,
    /// Total probability of terminal leaves.
    pub explored_mass: f64,
    /// Probability of branches pruned, stopped at the step limit, or left
    /// unexpanded.
    pub truncated_mass: f64,
    pub budget_exhausted: bool,
    /// Largest number of stored amplitudes in any node.
    pub max_state_entries: usize,
}

impl MultiverseTree {
    pub fn root(&self) -> &SimulationNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> Option<&SimulationNode> {
        self.nodes.get(id)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &SimulationNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn terminal_leaves(&self) -> impl Iterator<Item = &SimulationNode> {
        self.nodes
            .iter()
            .filter(|n| n.status == NodeStatus::Terminal)
    }

    /// Total probability over terminal leaves satisfying `pred`.
    pub fn probability_where(&self, pred: impl Fn(&SimulationNode) -> bool) -> f64 {
        self.terminal_leaves()
            .filter(|n| pred(n))
            .map(|n| n.probability)
            .sum::<f64>()
            // An empty float sum is -0.0.
            + 0.0
    }

    /// Probability that detector `id` fired by the end of the run.
    pub fn detector_probability(&self, id: &str) -> f64 {
        self.probability_where(|n| n.classical.detector_bit(id))
    }

    /// Probability that some photon was absorbed or detected at element `id`.
    pub fn absorbed_probability(&self, id: &str) -> f64 {
        self.probability_where(|n| {
            n.classical
                .record
                .iter()
                .any(|e| e.element.as_deref() == Some(id))
        })
    }

    /// Path of node ids from the root to `id`.
    pub fn path_to(&self, id: usize) -> Vec<usize> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    pub fn to_json(&self, basis: PolarizationBasis) -> serde_json::Value {
        serde_json::to_value(TreeJson::new(self, basis)).expect("tree serializes")
    }

    /// Pretty JSON text; identical inputs give identical bytes.
    pub fn to_json_string(&self, basis: PolarizationBasis) -> String {
        serde_json::to_string_pretty(&TreeJson::new(self, basis)).expect("tree serializes")
    }
}

#[derive(Serialize)]
struct TreeJson<'a> {
    version: u32,
    config: TreeConfig,
    basis: PolarizationBasis,
    explored_mass: f64,
    truncated_mass: f64,
    budget_exhausted: bool,
    max_state_entries: usize,
    nodes: Vec<NodeJson<'a>>,
}

#[derive(Serialize)]
struct NodeJson<'a> {
    id: usize,
    parent: Option<usize>,
    children: &'a [usize],
    probability: f64,
    step: usize,
    status: NodeStatus,
    photons: usize,
    events: &'a [Event],
    classical: &'a ClassicalState,
    state: Vec<AmplitudeJson>,
}

#[derive(Serialize)]
struct AmplitudeJson {
    basis: String,
    re: f64,
    im: f64,
}

impl<'a> TreeJson<'a> {
    fn new(tree: &'a MultiverseTree, basis: PolarizationBasis) -> Self {
        Self {
            version: TREE_FORMAT_VERSION,
            config: tree.config,
            basis,
            explored_mass: tree.explored_mass,
            truncated_mass: tree.truncated_mass,
            budget_exhausted: tree.budget_exhausted,
            max_state_entries: tree.max_state_entries,
            nodes: tree
                .nodes
                .iter()
                .map(|n| NodeJson {
                    id: n.id,
                    parent: n.parent,
                    children: &n.children,
                    probability: n.probability,
                    step: n.step,
                    status: n.status,
                    photons: n.photon_count(),
                    events: &n.events,
                    classical: &n.classical,
                    state: state_json(&n.state, basis),
                })
                .collect(),
        }
    }
}

fn state_json(state: &SparseVector, basis: PolarizationBasis) -> Vec<AmplitudeJson> {
    let shown = if state.particles().is_empty() {
        state.clone()
    } else {
        crate::photon::to_polarization_basis(state, basis).unwrap_or_else(|_| state.clone())
    };
    shown
        .iter()
        .map(|(c, a)| AmplitudeJson {
            basis: basis_label(&shown, &c),
            re: a.re,
            im: a.im,
        })
        .collect()
}

/// Breadth-first expansion of every measurement outcome.
pub fn run_tree(board: &Board, config: TreeConfig) -> Result<MultiverseTree, EngineError> {
    run_tree_cancellable(board, config, &AtomicBool::new(false))
}

/// [`run_tree`] that stops with [`EngineError::Cancelled`] once `cancel` is set.
pub fn run_tree_cancellable(
    board: &Board,
    config: TreeConfig,
    cancel: &AtomicBool,
) -> Result<MultiverseTree, EngineError> {
    if board.photon_count() == 0 {
        return Err(EngineError::NoSource);
    }
    let state = board.initial_state()?;
    let mut tree = MultiverseTree {
        nodes: Vec::new(),
        config,
        explored_mass: 0.0,
        truncated_mass: 0.0,
        budget_exhausted: false,
        max_state_entries: state.len(),
    };
    let assignments = input_assignments(board);
    let mut root_classical = board.initial_classical(&Default::default());
    let random: Vec<String> = board
        .random_inputs()
        .iter()
        .map(|(id, _)| id.to_string())
        .collect();
    for id in &random {
        root_classical.inputs.remove(id);
    }
    tree.nodes.push(SimulationNode {
        id: 0,
        parent: None,
        children: Vec::new(),
        probability: 1.0,
        step: 0,
        state: state.clone(),
        classical: root_classical,
        events: Vec::new(),
        status: NodeStatus::Expanded,
    });
    let mut queue = VecDeque::new();
    if random.is_empty() {
        queue.push_back(0);
    } else {
        for (assign, p) in assignments {
            let id = tree.nodes.len();
            tree.nodes[0].children.push(id);
            tree.nodes.push(SimulationNode {
                id,
                parent: Some(0),
                children: Vec::new(),
                probability: p,
                step: 0,
                state: state.clone(),
                classical: board.initial_classical(&assign),
                events: Vec::new(),
                status: NodeStatus::Expanded,
            });
            queue.push_back(id);
        }
    }

    while let Some(id) = queue.pop_front() {
        if cancel.load(Ordering::Relaxed) {
            return Err(EngineError::Cancelled);
        }
        let node = &tree.nodes[id];
        if node.state.particles().is_empty() {
            tree.nodes[id].status = NodeStatus::Terminal;
            tree.explored_mass += tree.nodes[id].probability;
            continue;
        }
        if node.step >= config.max_steps {
            tree.nodes[id].status = NodeStatus::StepLimit;
            tree.truncated_mass += tree.nodes[id].probability;
            continue;
        }
        if tree.budget_exhausted {
            tree.nodes[id].status = NodeStatus::Unexpanded;
            tree.truncated_mass += tree.nodes[id].probability;
            continue;
        }
        let branches = evolve_step(board, &node.state, &node.classical, node.step + 1)?;
        let (parent_p, step) = (node.probability, node.step + 1);
        let mut children = Vec::with_capacity(branches.len());
        for b in branches {
            let p = parent_p * b.probability;
            if p < config.min_branch_probability {
                tree.truncated_mass += p;
                continue;
            }
            if tree.nodes.len() >= config.max_nodes {
                tree.budget_exhausted = true;
                tree.truncated_mass += p;
                continue;
            }
            let child = tree.nodes.len();
            tree.max_state_entries = tree.max_state_entries.max(b.state.len());
            tree.nodes.push(SimulationNode {
                id: child,
                parent: Some(id),
                children: Vec::new(),
                probability: p,
                step,
                state: b.state,
                classical: b.classical,
                events: b.events,
                status: NodeStatus::Expanded,
            });
            children.push(child);
            queue.push_back(child);
        }
        if children.is_empty() {
            tree.nodes[id].status = NodeStatus::Unexpanded;
        }
        tree.nodes[id].children = children;
    }
    Ok(tree)
}
