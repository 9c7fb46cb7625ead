// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Board simulation: the per-step evolution, the multiverse tree of
//! measurement outcomes, and seeded single-trajectory sampling.
//!
//! A step is free propagation, then measurement, then the local unitaries.
//! Photons leaving the grid are a weight-1 destructive "lost" outcome.
//! Wire values computed after a step's detections control elements from the
//! next step on.

mod board;
mod sample;
mod step;
mod tree;

use thiserror::Error;

use crate::photon::PhotonError;
use crate::tensor::TensorError;

pub use board::{Board, ClassicalState, Element, Event, EventKind, Wire, CORRELATOR_PORTS};
pub use sample::{sample_run, sample_runs, SampleRun};
pub use step::{
    canonical, evolve_step, input_assignments, measurement_step, propagation_step, shift,
    split_lost, unitary_step, Branch, LostComponent, Outcome, MIN_BRANCH_WEIGHT,
    PROBABILITY_TOLERANCE,
};
pub use tree::{
    run_tree, run_tree_cancellable, MultiverseTree, NodeStatus, SimulationNode, TreeConfig,
    TREE_FORMAT_VERSION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid board: {0}")]
    InvalidBoard(String),
    #[error("element `{id}`: {reason}")]
    InvalidElement { id: String, reason: String },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Photon(#[from] PhotonError),
    #[error("step {step}: branch probabilities sum to {found}, expected {expected}")]
    ProbabilityLeak {
        step: usize,
        expected: f64,
        found: f64,
    },
    #[error("board has no photon source")]
    NoSource,
    #[error("expansion cancelled")]
    Cancelled,
    #[error("internal error: {0}")]
    Internal(String),
}
