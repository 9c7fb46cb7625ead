// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Detection statistics of the fixture library against closed-form optics.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8};

use common::{fidelity, joint, named, nodes_at_step, polarization_of, tree_of};
use num_complex::Complex64;
use photonlab::entanglement::renyi2_entropy;
use photonlab::io::fixtures;

const TOL: f64 = 1e-9;

fn close(found: f64, want: f64, what: &str) {
    assert!((found - want).abs() < TOL, "{what}: {found} vs {want}");
}

#[test]
fn interferometers() {
    let (_, t) = named("michelson-morley");
    close(t.detector_probability("det"), 1.0, "michelson");
    let (_, t) = named("mach-zehnder");
    close(t.detector_probability("d1"), 1.0, "mz d1");
    close(t.detector_probability("d2"), 0.0, "mz d2");
    let (_, t) = named("mach-zehnder-glass");
    close(t.detector_probability("d1"), 0.5, "glass d1");
    close(t.detector_probability("d2"), 0.5, "glass d2");
    let (_, t) = named("sagnac");
    close(t.detector_probability("det"), 0.0, "sagnac det");
    close(t.absorbed_probability("src"), 1.0, "sagnac return");
}

#[test]
fn glass_phase_sweep_follows_cosine() {
    for i in 0..8 {
        let phi = i as f64 * 0.4;
        let (_, t) = tree_of(&fixtures::mach_zehnder(Some(phi)));
        // Upper-arm phase φ relative to a balanced interferometer.
        close(
            t.detector_probability("d1"),
            (phi / 2.0).cos().powi(2),
            "d1",
        );
        close(
            t.detector_probability("d2"),
            (phi / 2.0).sin().powi(2),
            "d2",
        );
    }
}

#[test]
fn polarizer_chains() {
    close(
        named("crossed-polarizers").1.detector_probability("det"),
        0.0,
        "crossed",
    );
    close(
        named("three-polarizer").1.detector_probability("det"),
        0.125,
        "three",
    );
    close(
        named("three-polarizer-h").1.detector_probability("det"),
        0.25,
        "three h",
    );
    for k in [1usize, 2, 4, 8, 11] {
        let (_, t) = tree_of(&fixtures::quantum_zeno(k));
        let want = (FRAC_PI_2 / k as f64).cos().powi(2 * k as i32);
        close(t.detector_probability("det"), want, "zeno");
    }
}

#[test]
fn optical_diode_is_one_way() {
    close(
        named("optical-diode").1.detector_probability("det"),
        1.0,
        "forward",
    );
    close(
        named("optical-diode-reverse").1.detector_probability("det"),
        0.0,
        "reverse",
    );
}

#[test]
fn bomb_tester() {
    let (_, t) = named("elitzur-vaidman");
    close(
        t.probability_where(|n| n.classical.exploded),
        0.5,
        "explode",
    );
    close(t.detector_probability("d1"), 0.25, "d1");
    close(t.detector_probability("d2"), 0.25, "d2");
}

#[test]
fn eraser_restores_interference() {
    let (_, t) = named("which-path");
    close(t.detector_probability("d1"), 0.5, "marked d1");
    close(t.detector_probability("d2"), 0.5, "marked d2");
    let (_, t) = named("quantum-eraser");
    close(t.detector_probability("d1"), 0.5, "erased d1");
    close(t.detector_probability("d2"), 0.0, "erased d2");
}

#[test]
fn partial_which_way_information() {
    for w in [0.0, 0.1, 0.5, 0.9, 1.0] {
        let (_, t) = tree_of(&fixtures::nondemolition_interference(w));
        let r = (1.0 - w).sqrt();
        close(
            t.detector_probability("d2"),
            w / 4.0 + (1.0 - r).powi(2) / 4.0,
            "dark",
        );
        close(
            t.detector_probability("d1"),
            w / 4.0 + (1.0 + r).powi(2) / 4.0,
            "bright",
        );
    }
}

#[test]
fn unambiguous_discrimination() {
    for theta in [FRAC_PI_8, 0.3, 0.6] {
        let ok = 2.0 * theta.sin().powi(2);
        let (_, t) = tree_of(&fixtures::state_discrimination(theta, true));
        close(t.detector_probability("d_plus"), ok, "plus correct");
        close(t.detector_probability("d_minus"), 0.0, "plus wrong");
        let (_, t) = tree_of(&fixtures::state_discrimination(theta, false));
        close(t.detector_probability("d_minus"), ok, "minus correct");
        close(t.detector_probability("d_plus"), 0.0, "minus wrong");
    }
}

#[test]
fn deutsch_jozsa_single_query() {
    for (f0, f1) in [(false, false), (true, true), (false, true), (true, false)] {
        let (_, t) = tree_of(&fixtures::deutsch_jozsa(f0, f1));
        let port = if f0 == f1 { "d1" } else { "d2" };
        close(t.detector_probability(port), 1.0, "oracle");
    }
}

#[test]
fn ekert_matching_settings_agree() {
    let (board, t) = named("ekert");
    let est = photonlab::io::chsh_exact(&board, &t).unwrap();
    close(est.correlators[0][0], 1.0, "E00");
    close(est.correlators[1][1], 1.0, "E11");
    close(est.correlators[0][1], 0.0, "E01");
}

#[test]
fn hong_ou_mandel_dip() {
    let (_, t) = named("hong-ou-mandel");
    close(joint(&t, &["d_right", "d_up"]), 0.0, "coincidence");
    let (_, t) = named("hong-ou-mandel-distinguishable");
    close(
        joint(&t, &["d_right", "d_up"]),
        0.5,
        "classical coincidence",
    );
}

#[test]
fn three_photon_entropies() {
    let (_, t) = named("ghz");
    let node = nodes_at_step(&t, 1)[0];
    for p in node.state.particles() {
        close(renyi2_entropy(&node.state, p).unwrap(), 1.0, "ghz");
    }
    let (_, t) = named("w-state");
    let node = nodes_at_step(&t, 1)[0];
    for p in node.state.particles() {
        close(
            renyi2_entropy(&node.state, p).unwrap(),
            -(5.0f64 / 9.0).log2(),
            "w",
        );
    }
}

#[test]
fn teleportation_default_input() {
    let input = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
    let (_, t) = named("teleportation");
    let nodes = nodes_at_step(&t, fixtures::TELEPORTATION_STEP);
    assert_eq!(nodes.len(), 4);
    for n in nodes {
        close(n.probability, 0.25, "branch");
        close(fidelity(input, polarization_of(&n.state)), 1.0, "fidelity");
    }
}
