// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use num_complex::Complex64;
use photonlab::engine::{run_tree, Board, MultiverseTree, SimulationNode, TreeConfig};
use photonlab::io::{fixtures, SetupDocument};
use photonlab::tensor::SparseVector;

pub fn tree_of(doc: &SetupDocument) -> (Board, MultiverseTree) {
    let board = doc
        .to_board()
        .unwrap_or_else(|e| panic!("{}: {e}", doc.name));
    let tree = run_tree(&board, TreeConfig::default()).unwrap();
    (board, tree)
}

pub fn named(name: &str) -> (Board, MultiverseTree) {
    tree_of(&fixtures::fixture(name).unwrap())
}

/// Probability that every listed detector fired.
pub fn joint(tree: &MultiverseTree, ids: &[&str]) -> f64 {
    tree.probability_where(|n| ids.iter().all(|id| n.classical.detector_bit(id)))
}

/// Polarization amplitudes of a single remaining photon, assuming it sits in
/// one spatial mode.
pub fn polarization_of(state: &SparseVector) -> [Complex64; 2] {
    let pol_axis = state
        .dims()
        .iter()
        .position(|d| d.name().starts_with("pol"))
        .expect("polarization axis");
    let mut amps = [Complex64::new(0.0, 0.0); 2];
    let mut mode: Option<Vec<usize>> = None;
    for (coords, a) in state.iter() {
        let mut spatial = coords.clone();
        spatial.remove(pol_axis);
        match &mode {
            None => mode = Some(spatial),
            Some(m) => assert_eq!(m, &spatial, "photon spread over several modes"),
        }
        amps[coords[pol_axis]] += a;
    }
    amps
}

pub fn fidelity(a: [Complex64; 2], b: [Complex64; 2]) -> f64 {
    let na = a[0].norm_sqr() + a[1].norm_sqr();
    let nb = b[0].norm_sqr() + b[1].norm_sqr();
    (a[0].conj() * b[0] + a[1].conj() * b[1]).norm_sqr() / (na * nb)
}

pub fn nodes_at_step(tree: &MultiverseTree, step: usize) -> Vec<&SimulationNode> {
    tree.nodes.iter().filter(|n| n.step == step).collect()
}
