// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::engine::{Board, Element, MultiverseTree, Wire};
use crate::photon::Grid;

pub const SETUP_FORMAT_VERSION: u32 = 1;

/// A target probability for a detector. Parsed and evaluated against exact
/// tree probabilities only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Goal {
    pub detector: String,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalResult {
    pub detector: String,
    pub threshold: f64,
    pub probability: f64,
    pub reached: bool,
}

/// The setup file: board, wiring and goals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupDocument {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub grid: Grid,
    pub elements: Vec<Element>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub wires: Vec<Wire>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub goals: Vec<Goal>,
}

impl SetupDocument {
    pub fn new(name: impl Into<String>, grid: Grid) -> Self {
        Self {
            version: SETUP_FORMAT_VERSION,
            name: name.into(),
            description: String::new(),
            grid,
            elements: Vec::new(),
            wires: Vec::new(),
            goals: Vec::new(),
        }
    }

    pub fn describe(mut self, text: impl Into<String>) -> Self {
        self.description = text.into();
        self
    }

    pub fn element(mut self, e: Element) -> Self {
        self.elements.push(e);
        self
    }

    pub fn wire(mut self, w: Wire) -> Self {
        self.wires.push(w);
        self
    }

    pub fn goal(mut self, detector: impl Into<String>, threshold: f64) -> Self {
        self.goals.push(Goal {
            detector: detector.into(),
            threshold,
        });
        self
    }

    /// Validate and build the board.
    pub fn to_board(&self) -> Result<Board, IoError> {
        if self.version != SETUP_FORMAT_VERSION {
            return Err(IoError::Version(self.version));
        }
        let board = Board::new(self.grid, self.elements.clone(), self.wires.clone())?;
        for g in &self.goals {
            let ok = board
                .element(&g.detector)
                .is_some_and(|e| e.kind.is_detector());
            if !ok {
                return Err(IoError::Invalid(format!(
                    "goal refers to `{}`, which is not a detector on the board",
                    g.detector
                )));
            }
            if !(0.0..=1.0).contains(&g.threshold) {
                return Err(IoError::Invalid(format!(
                    "goal for `{}` has threshold {} outside [0, 1]",
                    g.detector, g.threshold
                )));
            }
        }
        Ok(board)
    }

    pub fn evaluate_goals(&self, tree: &MultiverseTree) -> Vec<GoalResult> {
        self.goals
            .iter()
            .map(|g| {
                let p = tree.detector_probability(&g.detector);
                GoalResult {
                    detector: g.detector.clone(),
                    threshold: g.threshold,
                    probability: p,
                    reached: p >= g.threshold,
                }
            })
            .collect()
    }
}

/// Parse a setup document. Errors carry the line and column of the problem.
pub fn parse_setup(text: &str) -> Result<SetupDocument, IoError> {
    let doc: SetupDocument = serde_json::from_str(text).map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.version != SETUP_FORMAT_VERSION {
        return Err(IoError::Version(doc.version));
    }
    Ok(doc)
}

/// Canonical text form: pretty JSON with a trailing newline.
pub fn serialize_setup(doc: &SetupDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("setup serializes");
    s.push('\n');
    s
}
