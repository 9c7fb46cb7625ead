// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::Serialize;

use super::IoError;
use crate::elements::ElementKind;
use crate::engine::{Board, ClassicalState, MultiverseTree, SampleRun, CORRELATOR_PORTS};

pub const LOCAL_BOUND: f64 = 2.0;
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Elements wired into the board's correlator, by port.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChshPorts {
    pub alice_setting: String,
    pub bob_setting: String,
    pub alice_plus: String,
    pub alice_minus: String,
    pub bob_plus: String,
    pub bob_minus: String,
}

impl ChshPorts {
    pub fn from_board(board: &Board) -> Result<Self, IoError> {
        let corr = board.ids_of(|e| e.kind == ElementKind::Correlator);
        let [corr] = corr.as_slice() else {
            return Err(IoError::Invalid(format!(
                "a Bell test needs exactly one correlator, found {}",
                corr.len()
            )));
        };
        let mut by_port = BTreeMap::new();
        for (src, port) in board.inputs_of(corr) {
            if let Some(p) = port {
                by_port.insert(p.to_string(), src.to_string());
            }
        }
        let mut get = |p: &str| {
            by_port.remove(p).ok_or_else(|| {
                IoError::Invalid(format!(
                    "correlator `{corr}` has nothing wired to port `{p}`"
                ))
            })
        };
        let ports = Self {
            alice_setting: get(CORRELATOR_PORTS[0])?,
            bob_setting: get(CORRELATOR_PORTS[1])?,
            alice_plus: get(CORRELATOR_PORTS[2])?,
            alice_minus: get(CORRELATOR_PORTS[3])?,
            bob_plus: get(CORRELATOR_PORTS[4])?,
            bob_minus: get(CORRELATOR_PORTS[5])?,
        };
        Ok(ports)
    }

    /// Settings and ±1 outcomes, or `None` unless each side fired exactly
    /// one of its detectors.
    fn read(&self, c: &ClassicalState) -> Option<(usize, usize, i32)> {
        let side = |plus: &str, minus: &str| match (c.detector_bit(plus), c.detector_bit(minus)) {
            (true, false) => Some(1),
            (false, true) => Some(-1),
            _ => None,
        };
        let x = side(&self.alice_plus, &self.alice_minus)?;
        let y = side(&self.bob_plus, &self.bob_minus)?;
        let a = c.control_bit(&self.alice_setting) as usize;
        let b = c.control_bit(&self.bob_setting) as usize;
        Some((a, b, x * y))
    }
}

/// Correlators `E[a][b]` (index 1 = primed setting) and
/// `S = E₀₀ + E₀₁ + E₁₀ − E₁₁`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChshEstimate {
    pub correlators: [[f64; 2]; 2],
    /// Coincidence weight per setting pair: probability mass when exact,
    /// run counts when sampled.
    pub weights: [[f64; 2]; 2],
    pub s: f64,
    /// Standard error of `S`, for sampled estimates.
    pub standard_error: Option<f64>,
}

fn finish(sum: [[f64; 2]; 2], weights: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2], IoError> {
    let mut e = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            if weights[a][b] <= 0.0 {
                return Err(IoError::Invalid(format!(
                    "no coincidences recorded for settings ({a}, {b})"
                )));
            }
            e[a][b] = sum[a][b] / weights[a][b];
        }
    }
    Ok(e)
}

fn s_of(e: &[[f64; 2]; 2]) -> f64 {
    e[0][0] + e[0][1] + e[1][0] - e[1][1]
}

/// Exact CHSH value from the leaves of a tree.
pub fn chsh_exact(board: &Board, tree: &MultiverseTree) -> Result<ChshEstimate, IoError> {
    let ports = ChshPorts::from_board(board)?;
    let mut sum = [[0.0; 2]; 2];
    let mut weights = [[0.0; 2]; 2];
    for leaf in tree.leaves() {
        if let Some((a, b, xy)) = ports.read(&leaf.classical) {
            sum[a][b] += leaf.probability * xy as f64;
            weights[a][b] += leaf.probability;
        }
    }
    let e = finish(sum, weights)?;
    Ok(ChshEstimate {
        correlators: e,
        weights,
        s: s_of(&e),
        standard_error: None,
    })
}

/// CHSH value from sampled runs with its standard error
/// `√(Σ (1 − E²)/n)` over the four setting pairs.
pub fn chsh_sampled(board: &Board, runs: &[SampleRun]) -> Result<ChshEstimate, IoError> {
    let ports = ChshPorts::from_board(board)?;
    let mut sum = [[0.0; 2]; 2];
    let mut weights = [[0.0; 2]; 2];
    for r in runs {
        if let Some((a, b, xy)) = ports.read(&r.classical) {
            sum[a][b] += xy as f64;
            weights[a][b] += 1.0;
        }
    }
    let e = finish(sum, weights)?;
    let var: f64 = (0..4)
        .map(|i| (1.0 - e[i / 2][i % 2].powi(2)) / weights[i / 2][i % 2])
        .sum();
    Ok(ChshEstimate {
        correlators: e,
        weights,
        s: s_of(&e),
        standard_error: Some(var.sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_tree, TreeConfig};
    use crate::io::fixtures;

    #[test]
    fn bell_fixture_reaches_tsirelson() {
        let board = fixtures::fixture("bell-chsh").unwrap().to_board().unwrap();
        let tree = run_tree(&board, TreeConfig::default()).unwrap();
        let est = chsh_exact(&board, &tree).unwrap();
        assert!((est.s - TSIRELSON_BOUND).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn product_fixture_is_local() {
        let board = fixtures::fixture("chsh-local").unwrap().to_board().unwrap();
        let tree = run_tree(&board, TreeConfig::default()).unwrap();
        let est = chsh_exact(&board, &tree).unwrap();
        assert!(est.s.abs() <= LOCAL_BOUND + 1e-9, "{est:?}");
    }

    #[test]
    fn board_without_correlator_is_rejected() {
        let board = fixtures::sagnac().to_board().unwrap();
        assert!(ChshPorts::from_board(&board).is_err());
    }
}
