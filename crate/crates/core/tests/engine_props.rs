// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Engine invariants over the whole fixture library.

mod common;

use std::collections::BTreeMap;

use common::tree_of;
use photonlab::engine::{
    evolve_step, run_tree, sample_runs, ClassicalState, NodeStatus, TreeConfig,
};
use photonlab::io::{detection_csv, fixtures};
use photonlab::photon::PolarizationBasis;

const TOL: f64 = 1e-9;

#[test]
fn every_step_conserves_probability() {
    for doc in fixtures::library() {
        let (board, tree) = tree_of(&doc);
        for node in tree
            .nodes
            .iter()
            .filter(|n| n.status == NodeStatus::Expanded)
        {
            if node.state.particles().is_empty() {
                continue;
            }
            let branches =
                evolve_step(&board, &node.state, &node.classical, node.step + 1).unwrap();
            let total: f64 = branches.iter().map(|b| b.probability).sum();
            assert!(
                (total - 1.0).abs() < TOL,
                "{}: node {} sums to {total}",
                doc.name,
                node.id
            );
            for b in &branches {
                if !b.state.particles().is_empty() {
                    assert!(
                        (b.state.norm() - 1.0).abs() < TOL,
                        "{}: child norm",
                        doc.name
                    );
                }
            }
        }
    }
}

#[test]
fn tree_children_partition_their_parent() {
    for doc in fixtures::library() {
        let (_, tree) = tree_of(&doc);
        for node in tree.nodes.iter().filter(|n| !n.children.is_empty()) {
            let sum: f64 = node
                .children
                .iter()
                .map(|&c| tree.nodes[c].probability)
                .sum();
            // Branches below the pruning threshold are dropped from the tree.
            let slack = TOL + node.children.len() as f64 * tree.config.min_branch_probability;
            assert!(
                sum <= node.probability + TOL,
                "{}: node {}",
                doc.name,
                node.id
            );
            assert!(
                node.probability - sum < slack + 1e-6,
                "{}: node {}",
                doc.name,
                node.id
            );
        }
        for node in &tree.nodes {
            if node.photon_count() > 0 {
                assert!(
                    (node.state.norm() - 1.0).abs() < TOL,
                    "{}: node {}",
                    doc.name,
                    node.id
                );
            }
        }
        let total = tree.explored_mass + tree.truncated_mass;
        assert!((total - 1.0).abs() < TOL, "{}: mass {total}", doc.name);
        assert!(
            tree.explored_mass >= 1.0 - 1e-6,
            "{}: explored {}",
            doc.name,
            tree.explored_mass
        );
        assert!(!tree.budget_exhausted, "{}", doc.name);
    }
}

#[test]
fn measurement_algebra_holds_on_every_board() {
    for doc in fixtures::library() {
        let board = doc.to_board().unwrap();
        assert!(board.povm_deviation() < 1e-10, "{}", doc.name);
        assert!(board.projection_deviation() < 1e-10, "{}", doc.name);
        for (id, u) in board.unitaries() {
            assert!(u.is_unitary(1e-10), "{}: {id}", doc.name);
        }
    }
}

fn outcome(c: &ClassicalState) -> String {
    let fired: Vec<&str> = c.detected.iter().map(String::as_str).collect();
    format!("{}|{}", fired.join(","), c.exploded)
}

/// Upper 0.1% point of χ² with `df` degrees of freedom (Wilson-Hilferty).
fn chi2_critical(df: f64) -> f64 {
    let z = 3.09;
    let a = 2.0 / (9.0 * df);
    df * (1.0 - a + z * a.sqrt()).powi(3)
}

#[test]
fn sampled_frequencies_match_the_tree() {
    const N: u64 = 10_000;
    for name in [
        "mach-zehnder-glass",
        "three-polarizer",
        "elitzur-vaidman",
        "nondemolition-interference",
        "bb84",
        "bell-chsh",
        "hong-ou-mandel-distinguishable",
    ] {
        let doc = fixtures::fixture(name).unwrap();
        let (board, tree) = tree_of(&doc);
        let mut expected: BTreeMap<String, f64> = BTreeMap::new();
        for leaf in tree.terminal_leaves() {
            *expected.entry(outcome(&leaf.classical)).or_default() += leaf.probability;
        }
        let mut seen: BTreeMap<String, f64> = BTreeMap::new();
        for run in sample_runs(&board, 7, N, 200).unwrap() {
            let key = outcome(&run.classical);
            assert!(
                expected.contains_key(&key),
                "{name}: impossible outcome {key}"
            );
            *seen.entry(key).or_default() += 1.0;
        }
        let cells: Vec<_> = expected.iter().filter(|(_, &p)| p > 1e-12).collect();
        let chi2: f64 = cells
            .iter()
            .map(|(k, &p)| {
                let e = p * N as f64;
                let o = seen.get(*k).copied().unwrap_or(0.0);
                (o - e).powi(2) / e
            })
            .sum();
        let df = (cells.len() as f64 - 1.0).max(1.0);
        assert!(
            chi2 < chi2_critical(df),
            "{name}: χ² = {chi2} over {df} dof"
        );
    }
}

#[test]
fn output_is_reproducible() {
    for name in ["teleportation", "bb84", "bell-chsh"] {
        let doc = fixtures::fixture(name).unwrap();
        let board = doc.to_board().unwrap();
        let a = run_tree(&board, TreeConfig::default()).unwrap();
        let b = run_tree(&board, TreeConfig::default()).unwrap();
        for basis in PolarizationBasis::ALL {
            assert_eq!(a.to_json_string(basis), b.to_json_string(basis), "{name}");
        }
        let csv =
            |seed| detection_csv(&board, &sample_runs(&board, seed, 200, 200).unwrap()).unwrap();
        assert_eq!(csv(11), csv(11), "{name}");
        assert_ne!(csv(11), csv(12), "{name}");
    }
}
