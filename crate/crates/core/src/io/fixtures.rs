// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Ready-made experiments. Each builder returns a setup document; the named
//! library pins the parameters used by the shipped JSON files.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

use num_complex::Complex64;

use super::{IoError, SetupDocument};
use crate::elements::{BellState, ElementKind as K, ElementParams};
use crate::engine::{Element, Wire};
use crate::photon::Grid;
use crate::tensor::c64;

fn el(id: &str, kind: K, x: usize, y: usize, rotation: i32) -> Element {
    Element::new(id, kind, x, y, rotation)
}

fn params(f: impl FnOnce(&mut ElementParams)) -> ElementParams {
    let mut p = ElementParams::default();
    f(&mut p);
    p
}

fn source(id: &str, x: usize, y: usize, rotation: i32, pol: [Complex64; 2]) -> Element {
    el(id, K::SinglePhotonSource, x, y, rotation)
        .with_params(ElementParams::default().with_polarization(pol))
}

const H: [Complex64; 2] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];

fn diagonal() -> [Complex64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [c64(s, 0.0), c64(s, 0.0)]
}

/// Polarizer that lets through light polarized at `transmit` radians.
fn polarizer(id: &str, x: usize, y: usize, rotation: i32, transmit: f64) -> Element {
    let angle = (transmit + FRAC_PI_2).rem_euclid(PI);
    el(id, K::LinearPolarizer, x, y, rotation).with_params(params(|p| p.angle = Some(angle)))
}

/// Sugar rotator turning by `base`, or by `controlled` when its wire is high.
fn switched_rotator(
    id: &str,
    x: usize,
    y: usize,
    rotation: i32,
    base: f64,
    controlled: f64,
) -> Element {
    el(id, K::SugarSolution, x, y, rotation)
        .with_params(params(|p| p.angle = Some(base)))
        .with_controlled(params(|p| p.angle = Some(controlled)))
}

/// Wave plate that is idle until its wire goes high.
fn switched_plate(id: &str, x: usize, y: usize, rotation: i32, angle: f64) -> Element {
    el(id, K::WavePlate, x, y, rotation)
        .with_params(params(|p| {
            p.angle = Some(angle);
            p.retardance = Some(0.0);
        }))
        .with_controlled(params(|p| p.retardance = Some(PI)))
}

fn grid() -> Grid {
    Grid::default()
}

/// Balanced interferometer shifted down by `dy`. Detector `d1` sits at the
/// bright port, `d2` at the dark one.
fn mz_core(doc: SetupDocument, dy: usize) -> SetupDocument {
    doc.element(source("src", 1, 4 + dy, 0, H))
        .element(el("bs1", K::BeamSplitter, 3, 4 + dy, 45))
        .element(el("m1", K::Mirror, 3, 1 + dy, 45))
        .element(el("m2", K::Mirror, 8, 4 + dy, 45))
        .element(el("bs2", K::BeamSplitter, 8, 1 + dy, 45))
        .element(el("d1", K::Detector, 11, 1 + dy, 0))
        .element(el("d2", K::Detector, 8, 0, 0))
}

/// Mach-Zehnder interferometer, optionally with a glass slab of the given
/// phase in the upper arm.
pub fn mach_zehnder(glass_phase: Option<f64>) -> SetupDocument {
    let mut doc = mz_core(
        SetupDocument::new("mach-zehnder", grid())
            .describe("Balanced Mach-Zehnder interferometer. All light exits at d1."),
        0,
    );
    if let Some(phase) = glass_phase {
        doc.name = "mach-zehnder-glass".into();
        doc.description = "Mach-Zehnder with a phase slab in the upper arm.".into();
        doc = doc.element(
            el("slab", K::GlassSlab, 5, 1, 0).with_params(params(|p| p.phase = Some(phase))),
        );
    } else {
        doc = doc.goal("d1", 0.99);
    }
    doc
}

/// Interaction-free measurement: a bomb in the lower arm.
pub fn elitzur_vaidman() -> SetupDocument {
    mz_core(
        SetupDocument::new("elitzur-vaidman", grid())
            .describe("Bomb tester. A click at d2 certifies a live bomb without touching it."),
        0,
    )
    .element(el("bomb", K::Bomb, 5, 4, 0))
    .goal("d2", 0.2)
}

/// Mach-Zehnder with a non-destructive detector of efficiency `w` in the
/// lower arm.
pub fn nondemolition_interference(w: f64) -> SetupDocument {
    mz_core(
        SetupDocument::new("nondemolition-interference", grid())
            .describe("Which-way detector of tunable efficiency inside an interferometer."),
        0,
    )
    .element(
        el("probe", K::NondemolitionDetector, 5, 4, 0)
            .with_params(params(|p| p.efficiency = Some(w))),
    )
}

/// Which-path marking by a 90° rotator in one arm, with optional diagonal
/// polarizers in front of both detectors.
pub fn quantum_eraser(erase: bool) -> SetupDocument {
    let name = if erase {
        "quantum-eraser"
    } else {
        "which-path"
    };
    let mut doc = mz_core(
        SetupDocument::new(name, grid())
            .describe("Polarization marks the path; diagonal polarizers erase the mark."),
        2,
    )
    .element(
        el("marker", K::SugarSolution, 5, 3, 0).with_params(params(|p| p.angle = Some(FRAC_PI_2))),
    );
    if erase {
        doc = doc
            .element(polarizer("eraser1", 10, 3, 0, FRAC_PI_4))
            .element(polarizer("eraser2", 8, 1, 90, FRAC_PI_4));
    }
    doc
}

/// Two-arm phase oracle. Slabs add phase π·f(x) to the arm for input x.
pub fn deutsch_jozsa(f0: bool, f1: bool) -> SetupDocument {
    let name = if f0 == f1 {
        "deutsch-jozsa-constant"
    } else {
        "deutsch-jozsa"
    };
    let slab = |id: &str, x, y| {
        el(id, K::GlassSlab, x, y, 0)
            .with_params(params(|p| p.phase = Some(0.0)))
            .with_controlled(params(|p| p.phase = Some(PI)))
    };
    mz_core(
        SetupDocument::new(name, grid())
            .describe("One query decides whether f is constant (d1) or balanced (d2)."),
        0,
    )
    .element(el("f0", K::Switch, 0, 0, 0).with_params(params(|p| p.value = Some(f0))))
    .element(el("f1", K::Switch, 1, 0, 0).with_params(params(|p| p.value = Some(f1))))
    .element(slab("oracle0", 5, 4))
    .element(slab("oracle1", 5, 1))
    .wire(Wire::new("f0", "oracle0"))
    .wire(Wire::new("f1", "oracle1"))
}

pub fn sagnac() -> SetupDocument {
    SetupDocument::new("sagnac", grid())
        .describe("Counter-propagating loop. Every photon returns to the source.")
        .element(source("src", 1, 5, 0, H))
        .element(el("bs", K::BeamSplitter, 4, 5, 45))
        .element(el("m1", K::Mirror, 8, 5, 45))
        .element(el("m2", K::Mirror, 8, 2, 135))
        .element(el("m3", K::Mirror, 4, 2, 45))
        .element(el("det", K::Detector, 4, 8, 0))
}

pub fn michelson_morley() -> SetupDocument {
    SetupDocument::new("michelson-morley", grid())
        .describe("Equal-arm Michelson interferometer. Every photon reaches the detector.")
        .element(source("src", 1, 5, 0, H))
        .element(el("bs", K::BeamSplitter, 4, 5, 45))
        .element(el("m_far", K::Mirror, 9, 5, 90))
        .element(el("m_up", K::Mirror, 4, 0, 0))
        .element(el("det", K::Detector, 4, 8, 0))
        .goal("det", 0.99)
}

/// Horizontal then vertical polarizer, with an optional diagonal one
/// between them.
pub fn polarizer_chain(name: &str, source_pol: [Complex64; 2], middle: bool) -> SetupDocument {
    let mut doc = SetupDocument::new(name, grid())
        .describe("Polarizers at 0°, optionally 45°, then 90°.")
        .element(source("src", 0, 3, 0, source_pol))
        .element(polarizer("p_h", 2, 3, 0, 0.0))
        .element(polarizer("p_v", 6, 3, 0, FRAC_PI_2))
        .element(el("det", K::Detector, 8, 3, 0));
    if middle {
        doc = doc.element(polarizer("p_d", 4, 3, 0, FRAC_PI_4));
    }
    doc
}

/// `k` polarizers stepping from horizontal to vertical in equal angles.
pub fn quantum_zeno(k: usize) -> SetupDocument {
    assert!((1..=11).contains(&k), "the grid fits 1 to 11 polarizers");
    let mut doc = SetupDocument::new(format!("quantum-zeno-{k}"), grid())
        .describe("Small polarizer steps drag horizontal light to vertical.")
        .element(source("src", 0, 3, 0, H))
        .element(el("det", K::Detector, 12, 3, 0));
    for j in 1..=k {
        let theta = j as f64 * FRAC_PI_2 / k as f64;
        doc = doc.element(polarizer(&format!("p{j}"), j, 3, 0, theta));
    }
    doc
}

/// Polarizer, 45° Faraday rotator, diagonal polarizer. `reverse` sends the
/// photon through from the far side.
pub fn optical_diode(reverse: bool) -> SetupDocument {
    let (name, src, det) = if reverse {
        (
            "optical-diode-reverse",
            source("src", 6, 2, 180, H),
            el("det", K::Detector, 0, 2, 0),
        )
    } else {
        (
            "optical-diode",
            source("src", 0, 2, 0, H),
            el("det", K::Detector, 6, 2, 0),
        )
    };
    SetupDocument::new(name, grid())
        .describe("Non-reciprocal rotation passes light one way only.")
        .element(src)
        .element(polarizer("p_h", 2, 2, 0, 0.0))
        .element(
            el("faraday", K::FaradayRotator, 3, 2, 0)
                .with_params(params(|p| p.angle = Some(FRAC_PI_4))),
        )
        .element(polarizer("p_d", 4, 2, 0, FRAC_PI_4))
        .element(det)
}

/// Prepare-and-measure key distribution with random bits and bases.
pub fn bb84() -> SetupDocument {
    SetupDocument::new("bb84", grid())
        .describe("Random bit and basis on each side. Matching bases share the bit.")
        .element(el("alice_bit", K::RandomSwitch, 0, 0, 0))
        .element(el("alice_basis", K::RandomSwitch, 1, 0, 0))
        .element(el("bob_basis", K::RandomSwitch, 2, 0, 0))
        .element(el("basis_differ", K::Xor, 4, 0, 0))
        .element(el("mismatch", K::OutputVariable, 5, 0, 0))
        .element(source("src", 0, 4, 0, H))
        .element(switched_plate("encode", 2, 4, 0, FRAC_PI_4))
        .element(switched_rotator("alice_rot", 3, 4, 0, 0.0, FRAC_PI_4))
        .element(switched_rotator("bob_rot", 6, 4, 0, 0.0, -FRAC_PI_4))
        .element(el("pbs", K::PolarizingBeamSplitter, 8, 4, 45))
        .element(el("bob_0", K::Detector, 10, 4, 0))
        .element(el("bob_1", K::Detector, 8, 2, 0))
        .wire(Wire::new("alice_bit", "encode"))
        .wire(Wire::new("alice_basis", "alice_rot"))
        .wire(Wire::new("bob_basis", "bob_rot"))
        .wire(Wire::new("alice_basis", "basis_differ"))
        .wire(Wire::new("bob_basis", "basis_differ"))
        .wire(Wire::new("basis_differ", "mismatch"))
}

/// Unambiguous discrimination of `cos θ|H⟩ ± sin θ|V⟩`. The filter attenuates
/// H until both states overlap nowhere; `d_plus` and `d_minus` are then
/// error-free and the filter absorbs the inconclusive part.
pub fn state_discrimination(theta: f64, plus: bool) -> SetupDocument {
    let sign = if plus { 1.0 } else { -1.0 };
    let pol = [c64(theta.cos(), 0.0), c64(sign * theta.sin(), 0.0)];
    let a = 1.0 - theta.tan().powi(2);
    let name = if plus {
        "state-discrimination"
    } else {
        "state-discrimination-minus"
    };
    SetupDocument::new(name, grid())
        .describe("Filter plus diagonal measurement tells two non-orthogonal states apart.")
        .element(source("src", 0, 8, 0, pol))
        .element(el("pbs1", K::PolarizingBeamSplitter, 2, 8, 45))
        .element(
            el("filter", K::NeutralDensityFilter, 4, 8, 0)
                .with_params(params(|p| p.absorption = Some(a))),
        )
        .element(el("m_h", K::Mirror, 7, 8, 45))
        .element(el("m_v", K::Mirror, 2, 5, 45))
        .element(el("pbs2", K::PolarizingBeamSplitter, 7, 5, 45))
        .element(
            el("turn", K::SugarSolution, 7, 4, 90)
                .with_params(params(|p| p.angle = Some(-FRAC_PI_4))),
        )
        .element(el("pbs3", K::PolarizingBeamSplitter, 7, 2, 45))
        .element(el("d_minus", K::Detector, 7, 0, 0))
        .element(el("d_plus", K::Detector, 9, 2, 0))
}

/// Which photons feed a Bell test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChshSource {
    Bell(BellState),
    /// Two distinguishable photons with the given polarizations.
    Product([Complex64; 2], [Complex64; 2]),
}

/// Bell test with analyzer angles `[a, a', b, b']`. Each side has a random
/// setting switch, a rotator, a polarizing splitter and two detectors, all
/// wired into a correlator.
pub fn chsh(name: &str, src: ChshSource, angles: [f64; 4]) -> SetupDocument {
    let [a0, a1, b0, b1] = angles;
    let mut doc = SetupDocument::new(name, grid())
        .describe("Photon pair measured at random analyzer settings on both sides.");
    doc = match src {
        ChshSource::Bell(state) => doc.element(
            el("pair", K::BellPairSource, 6, 5, 0)
                .with_params(params(|p| p.bell_state = Some(state))),
        ),
        ChshSource::Product(pa, pb) => {
            let mut left = source("src_a", 5, 5, 180, pa);
            left.params.wavelength = Some(1.0);
            let mut right = source("src_b", 7, 5, 0, pb);
            right.params.wavelength = Some(2.0);
            doc.element(left).element(right)
        }
    };
    doc = doc
        .element(el("alice_setting", K::RandomSwitch, 0, 0, 0))
        .element(el("bob_setting", K::RandomSwitch, 12, 0, 0))
        .element(el("correlator", K::Correlator, 6, 0, 0))
        .element(switched_rotator("alice_rot", 4, 5, 0, -a0, -a1))
        .element(el("alice_pbs", K::PolarizingBeamSplitter, 2, 5, 45))
        .element(el("alice_plus", K::Detector, 0, 5, 0))
        .element(el("alice_minus", K::Detector, 2, 7, 0))
        .element(switched_rotator("bob_rot", 8, 5, 0, -b0, -b1))
        .element(el("bob_pbs", K::PolarizingBeamSplitter, 10, 5, 45))
        .element(el("bob_plus", K::Detector, 12, 5, 0))
        .element(el("bob_minus", K::Detector, 10, 3, 0))
        .wire(Wire::new("alice_setting", "alice_rot"))
        .wire(Wire::new("bob_setting", "bob_rot"));
    for port in crate::engine::CORRELATOR_PORTS {
        doc = doc.wire(Wire::port(port, "correlator", port));
    }
    doc
}

/// Angles reaching the quantum maximum for `Φ⁺`.
pub const CHSH_ANGLES: [f64; 4] = [0.0, FRAC_PI_4, FRAC_PI_8, -FRAC_PI_8];

/// Entanglement-based key distribution: matching settings give identical
/// outcomes.
pub fn ekert() -> SetupDocument {
    chsh(
        "ekert",
        ChshSource::Bell(BellState::PhiPlus),
        [0.0, FRAC_PI_4, 0.0, FRAC_PI_4],
    )
}

/// Teleport `input` from a photon entering from above onto the right-hand
/// photon of a Bell pair. Corrections fire one and two steps after the
/// Bell-basis detections; the corrected photon sits at (7, 9) after step 8.
pub fn teleportation(input: [Complex64; 2]) -> SetupDocument {
    SetupDocument::new("teleportation", grid())
        .describe("CNOT and Hadamard Bell measurement with wired X and Z corrections.")
        .element(source("input", 4, 2, 270, input))
        .element(el("pair", K::BellPairSource, 7, 5, 180))
        .element(el("cnot", K::Cnot, 4, 5, 0))
        .element(el("hadamard", K::Hadamard, 4, 6, 0))
        .element(el("pbs_c", K::PolarizingBeamSplitter, 4, 7, 45))
        .element(el("c_h", K::Detector, 4, 8, 0))
        .element(el("c_v", K::Detector, 3, 7, 0))
        .element(el("pbs_t", K::PolarizingBeamSplitter, 2, 5, 45))
        .element(el("t_h", K::Detector, 1, 5, 0))
        .element(el("t_v", K::Detector, 2, 6, 0))
        .element(el("m1", K::Mirror, 9, 5, 135))
        .element(el("m2", K::Mirror, 9, 9, 45))
        .element(switched_plate("fix_x", 8, 9, 180, FRAC_PI_4))
        .element(switched_plate("fix_z", 7, 9, 180, 0.0))
        .element(el("bob", K::Detector, 0, 9, 0))
        .wire(Wire::new("t_v", "fix_x"))
        .wire(Wire::new("c_v", "fix_z"))
}

/// Step after which the teleported photon carries the corrected state.
pub const TELEPORTATION_STEP: usize = 8;

fn three_way(name: &str, kind: K, text: &str) -> SetupDocument {
    SetupDocument::new(name, grid())
        .describe(text)
        .element(el("src", kind, 6, 5, 0))
        .element(el("d_right", K::Detector, 10, 5, 0))
        .element(el("d_up", K::Detector, 6, 1, 0))
        .element(el("d_left", K::Detector, 2, 5, 0))
}

pub fn ghz() -> SetupDocument {
    three_way("ghz", K::GhzSource, "Three photons in a GHZ state.")
}

pub fn w_state() -> SetupDocument {
    three_way("w-state", K::WSource, "Three photons in a W state.")
}

/// Two photons meeting at a beam splitter at the same step.
pub fn hong_ou_mandel(distinguishable: bool) -> SetupDocument {
    let name = if distinguishable {
        "hong-ou-mandel-distinguishable"
    } else {
        "hong-ou-mandel"
    };
    let mut a = source("src1", 2, 5, 0, H);
    let mut b = source("src2", 5, 8, 90, H);
    if distinguishable {
        a.params.wavelength = Some(1.0);
        b.params.wavelength = Some(2.0);
    }
    SetupDocument::new(name, grid())
        .describe("Identical photons bunch; coincidences vanish.")
        .element(a)
        .element(b)
        .element(el("bs", K::BeamSplitter, 5, 5, 45))
        .element(el("d_right", K::Detector, 9, 5, 0))
        .element(el("d_up", K::Detector, 5, 1, 0))
}

/// Every named fixture.
pub fn library() -> Vec<SetupDocument> {
    let h = H;
    let d = diagonal();
    vec![
        michelson_morley(),
        mach_zehnder(None),
        mach_zehnder(Some(FRAC_PI_2)),
        sagnac(),
        polarizer_chain("crossed-polarizers", h, false),
        polarizer_chain("three-polarizer", d, true),
        polarizer_chain("three-polarizer-h", h, true),
        optical_diode(false),
        optical_diode(true),
        elitzur_vaidman(),
        quantum_eraser(false),
        quantum_eraser(true),
        nondemolition_interference(0.5),
        quantum_zeno(2),
        quantum_zeno(4),
        quantum_zeno(8),
        bb84(),
        state_discrimination(FRAC_PI_8, true),
        state_discrimination(FRAC_PI_8, false),
        deutsch_jozsa(false, true),
        deutsch_jozsa(true, true),
        ekert(),
        chsh(
            "bell-chsh",
            ChshSource::Bell(BellState::PhiPlus),
            CHSH_ANGLES,
        ),
        chsh("chsh-local", ChshSource::Product(h, h), CHSH_ANGLES),
        teleportation([c64(0.6, 0.0), c64(0.0, 0.8)]),
        ghz(),
        w_state(),
        hong_ou_mandel(false),
        hong_ou_mandel(true),
    ]
}

pub fn names() -> Vec<String> {
    library().into_iter().map(|d| d.name).collect()
}

pub fn fixture(name: &str) -> Result<SetupDocument, IoError> {
    library()
        .into_iter()
        .find(|d| d.name == name)
        .ok_or_else(|| IoError::UnknownFixture(name.to_string()))
}
