// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Board elements and the local physics each one applies to a photon in its cell.
//!
//! Optical operators act on the per-cell space `dir ⊗ pol` ([`local_dims`]).
//! Angles are radians except `rotation`, which is the element's orientation
//! on the board in degrees (multiples of 45, counter-clockwise, 0 = →).
//!
//! Orientation rules:
//! * Mirrors and beam splitters are lines at angle `rotation`; a photon
//!   travelling at `δ` is reflected to `2·rotation − δ` and passes untouched
//!   when it moves parallel to the line.
//! * Plates (polarizer, waveplate, Faraday rotator, sugar solution) have an
//!   axis along `rotation` (multiple of 90). Photons moving along the axis
//!   see the element's angle, photons moving against it see the mirrored
//!   angle, and photons crossing the axis perpendicularly pass unaffected.
//! * Sources emit toward `rotation` (multi-photon sources also toward
//!   `rotation + 90` and `rotation + 180`).

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::photon::{local_dims, polarization_dim, Direction};
use crate::tensor::{c64, Complex64, Dimension, SparseOperator, SparseVector, TensorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElementError {
    #[error("{kind}: parameter `{param}` is not used by this element")]
    UnknownParam {
        kind: ElementKind,
        param: &'static str,
    },
    #[error("{kind}: parameter `{param}` = {value} is outside {range}")]
    OutOfRange {
        kind: ElementKind,
        param: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("{kind}: rotation {rotation}° must be a multiple of {step}°")]
    BadRotation {
        kind: ElementKind,
        rotation: i32,
        step: i32,
    },
    #[error("{kind}: source polarization has norm² {norm} (expected 1)")]
    UnnormalizedPolarization { kind: ElementKind, norm: f64 },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Every element that can be placed on a board.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    SinglePhotonSource,
    BellPairSource,
    GhzSource,
    WSource,
    Detector,
    Bomb,
    Rock,
    NeutralDensityFilter,
    LinearPolarizer,
    NondemolitionDetector,
    BeamSplitter,
    PolarizingBeamSplitter,
    Mirror,
    CornerCube,
    OpticalCirculator,
    WavePlate,
    FaradayRotator,
    SugarSolution,
    VacuumJar,
    GlassSlab,
    Switch,
    RandomSwitch,
    OutputVariable,
    Correlator,
    Goal,
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Sum,
    Min,
    Max,
    Identity,
    PauliX,
    PauliY,
    PauliZ,
    Hadamard,
    SqrtNot,
    Cnot,
    Cz,
    Comment,
}

/// Behavioral category of an [`ElementKind`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Source,
    Measurement,
    PassiveOptics,
    QuantumGate,
    TwoPhotonGate,
    Input,
    Logic,
    Sink,
    Annotation,
}

impl ElementKind {
    pub const ALL: [ElementKind; 42] = {
        use ElementKind::*;
        [
            SinglePhotonSource,
            BellPairSource,
            GhzSource,
            WSource,
            Detector,
            Bomb,
            Rock,
            NeutralDensityFilter,
            LinearPolarizer,
            NondemolitionDetector,
            BeamSplitter,
            PolarizingBeamSplitter,
            Mirror,
            CornerCube,
            OpticalCirculator,
            WavePlate,
            FaradayRotator,
            SugarSolution,
            VacuumJar,
            GlassSlab,
            Switch,
            RandomSwitch,
            OutputVariable,
            Correlator,
            Goal,
            And,
            Nand,
            Or,
            Nor,
            Xor,
            Sum,
            Min,
            Max,
            Identity,
            PauliX,
            PauliY,
            PauliZ,
            Hadamard,
            SqrtNot,
            Cnot,
            Cz,
            Comment,
        ]
    };

    pub fn category(self) -> Category {
        use ElementKind::*;
        match self {
            SinglePhotonSource | BellPairSource | GhzSource | WSource => Category::Source,
            Detector
            | Bomb
            | Rock
            | NeutralDensityFilter
            | LinearPolarizer
            | NondemolitionDetector => Category::Measurement,
            BeamSplitter
            | PolarizingBeamSplitter
            | Mirror
            | CornerCube
            | OpticalCirculator
            | WavePlate
            | FaradayRotator
            | SugarSolution
            | VacuumJar
            | GlassSlab => Category::PassiveOptics,
            Identity | PauliX | PauliY | PauliZ | Hadamard | SqrtNot => Category::QuantumGate,
            Cnot | Cz => Category::TwoPhotonGate,
            Switch | RandomSwitch => Category::Input,
            And | Nand | Or | Nor | Xor | Sum | Min | Max => Category::Logic,
            OutputVariable | Correlator | Goal => Category::Sink,
            Comment => Category::Annotation,
        }
    }

    /// Name used in setup files.
    pub fn name(self) -> &'static str {
        use ElementKind::*;
        match self {
            SinglePhotonSource => "single_photon_source",
            BellPairSource => "bell_pair_source",
            GhzSource => "ghz_source",
            WSource => "w_source",
            Detector => "detector",
            Bomb => "bomb",
            Rock => "rock",
            NeutralDensityFilter => "neutral_density_filter",
            LinearPolarizer => "linear_polarizer",
            NondemolitionDetector => "nondemolition_detector",
            BeamSplitter => "beam_splitter",
            PolarizingBeamSplitter => "polarizing_beam_splitter",
            Mirror => "mirror",
            CornerCube => "corner_cube",
            OpticalCirculator => "optical_circulator",
            WavePlate => "wave_plate",
            FaradayRotator => "faraday_rotator",
            SugarSolution => "sugar_solution",
            VacuumJar => "vacuum_jar",
            GlassSlab => "glass_slab",
            Switch => "switch",
            RandomSwitch => "random_switch",
            OutputVariable => "output_variable",
            Correlator => "correlator",
            Goal => "goal",
            And => "and",
            Nand => "nand",
            Or => "or",
            Nor => "nor",
            Xor => "xor",
            Sum => "sum",
            Min => "min",
            Max => "max",
            Identity => "identity",
            PauliX => "pauli_x",
            PauliY => "pauli_y",
            PauliZ => "pauli_z",
            Hadamard => "hadamard",
            SqrtNot => "sqrt_not",
            Cnot => "cnot",
            Cz => "cz",
            Comment => "comment",
        }
    }

    /// Whether a photon hitting this cell can end up absorbed.
    pub fn is_absorber(self) -> bool {
        self.category() == Category::Measurement || self.category() == Category::Source
    }

    /// Whether this element's absorption counts as a detection event that
    /// drives wires and logs.
    pub fn is_detector(self) -> bool {
        matches!(
            self,
            ElementKind::Detector | ElementKind::Bomb | ElementKind::NondemolitionDetector
        )
    }

    /// Parameters accepted by this kind.
    pub fn params(self) -> &'static [&'static str] {
        use ElementKind::*;
        match self {
            SinglePhotonSource => &["polarization", "wavelength"],
            BellPairSource => &["bell_state"],
            NeutralDensityFilter => &["absorption"],
            LinearPolarizer => &["angle"],
            NondemolitionDetector => &["efficiency"],
            BeamSplitter => &["reflectance", "phase"],
            WavePlate => &["angle", "retardance"],
            FaradayRotator | SugarSolution => &["angle"],
            VacuumJar | GlassSlab => &["phase"],
            Switch => &["value"],
            RandomSwitch => &["probability"],
            OutputVariable | Correlator | Goal | Comment => &["text"],
            _ => &[],
        }
    }

    /// Orientation granularity in degrees.
    pub fn rotation_step(self) -> i32 {
        match self.category() {
            Category::Source => 90,
            Category::PassiveOptics | Category::Measurement => match self {
                ElementKind::LinearPolarizer
                | ElementKind::WavePlate
                | ElementKind::FaradayRotator
                | ElementKind::SugarSolution => 90,
                _ => 45,
            },
            _ => 45,
        }
    }

    /// Apply a classical gate to its input values.
    pub fn evaluate_logic(self, inputs: &[i64]) -> Option<i64> {
        let bits = || inputs.iter().map(|&v| v != 0);
        Some(match self {
            ElementKind::And => bits().all(|b| b) as i64,
            ElementKind::Nand => !bits().all(|b| b) as i64,
            ElementKind::Or => bits().any(|b| b) as i64,
            ElementKind::Nor => !bits().any(|b| b) as i64,
            ElementKind::Xor => (bits().filter(|&b| b).count() % 2) as i64,
            ElementKind::Sum => inputs.iter().sum(),
            ElementKind::Min => inputs.iter().copied().min().unwrap_or(0),
            ElementKind::Max => inputs.iter().copied().max().unwrap_or(0),
            _ => return None,
        })
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ElementKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown element kind `{s}`"))
    }
}

/// The four Bell states.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellState {
    #[default]
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    /// Amplitudes on `HH, HV, VH, VV`.
    pub fn amplitudes(self) -> [Complex64; 4] {
        let s = FRAC_1_SQRT_2;
        let (z, p, m) = (c64(0.0, 0.0), c64(s, 0.0), c64(-s, 0.0));
        match self {
            BellState::PhiPlus => [p, z, z, p],
            BellState::PhiMinus => [p, z, z, m],
            BellState::PsiPlus => [z, p, p, z],
            BellState::PsiMinus => [z, p, m, z],
        }
    }
}

/// Adjustable element parameters. Unset fields take the kind's default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<i32>,
    /// Beam splitter reflectance `R ∈ [0, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflectance: Option<f64>,
    /// Beam splitter reflection phase, or glass/vacuum phase delay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    /// Neutral density absorption rate `a ∈ [0, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absorption: Option<f64>,
    /// Polarizer `α`, waveplate axis, or rotator angle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    /// Waveplate retardance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retardance: Option<f64>,
    /// Nondemolition detector efficiency `w ∈ [0, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
    /// Source polarization `[[re, im], [re, im]]` on `H, V`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarization: Option<[[f64; 2]; 2]>,
    /// Photons with different wavelengths are distinguishable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell_state: Option<BellState>,
    /// Switch output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<bool>,
    /// Probability that a random switch outputs 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

pub const DEFAULT_REFLECTANCE: f64 = 0.5;
pub const DEFAULT_ABSORPTION: f64 = 0.5;
/// Quarter wave.
pub const DEFAULT_PHASE_DELAY: f64 = FRAC_PI_2;
pub const DEFAULT_ROTATOR_ANGLE: f64 = FRAC_PI_4;
/// Half wave.
pub const DEFAULT_RETARDANCE: f64 = PI;

impl ElementParams {
    /// `self` with every field set in `over` replaced.
    pub fn overridden_by(&self, over: &ElementParams) -> ElementParams {
        macro_rules! pick {
            ($($f:ident),*) => {
                ElementParams { $($f: over.$f.clone().or_else(|| self.$f.clone())),* }
            };
        }
        pick!(
            rotation,
            reflectance,
            phase,
            absorption,
            angle,
            retardance,
            efficiency,
            polarization,
            wavelength,
            bell_state,
            value,
            probability,
            text
        )
    }

    fn set_fields(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => { $( if self.$f.is_some() { out.push(stringify!($f)); } )* };
        }
        check!(
            reflectance,
            phase,
            absorption,
            angle,
            retardance,
            efficiency,
            polarization,
            wavelength,
            bell_state,
            value,
            probability,
            text
        );
        out
    }

    /// Source polarization as complex amplitudes (default `|H⟩`).
    pub fn polarization_amplitudes(&self) -> [Complex64; 2] {
        match self.polarization {
            Some([[a, b], [c, d]]) => [c64(a, b), c64(c, d)],
            None => [c64(1.0, 0.0), c64(0.0, 0.0)],
        }
    }

    pub fn with_polarization(mut self, amps: [Complex64; 2]) -> Self {
        self.polarization = Some([[amps[0].re, amps[0].im], [amps[1].re, amps[1].im]]);
        self
    }
}

/// What a photon source emits at `t = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Emission {
    /// Direction of each emitted photon.
    pub directions: Vec<Direction>,
    /// Joint polarization state over `pol:1 … pol:k`.
    pub polarization: SparseVector,
    /// Set for single-photon sources that are distinguishable by color.
    pub wavelength: Option<f64>,
}

/// One element `wP` of a weighted-projection measurement on `dir ⊗ pol`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedProjection {
    pub weight: f64,
    pub kind: ProjectionKind,
    /// Short outcome label, e.g. `→H`.
    pub label: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProjectionKind {
    /// Absorbs the photon: Kraus operator `√w ⟨φ|`.
    Destructive(SparseVector),
    /// Keeps the photon: Kraus operator `√w P`.
    Nondemolition(SparseOperator),
}

impl WeightedProjection {
    pub fn is_destructive(&self) -> bool {
        matches!(self.kind, ProjectionKind::Destructive(_))
    }

    /// The projector `P` on `dir ⊗ pol`.
    pub fn projector(&self) -> SparseOperator {
        match &self.kind {
            ProjectionKind::Destructive(bra) => {
                SparseOperator::projector(bra).expect("bra is over local dims")
            }
            ProjectionKind::Nondemolition(p) => p.clone(),
        }
    }

    /// The POVM element `M = wP`.
    pub fn povm_element(&self) -> SparseOperator {
        self.projector().scaled(c64(self.weight, 0.0))
    }
}

/// `M⋆ = I − Σ wᵢPᵢ` on `dir ⊗ pol`.
pub fn null_povm(projections: &[WeightedProjection]) -> SparseOperator {
    let mut m = SparseOperator::identity(local_dims()).expect("local dims");
    for p in projections {
        m = m.sub(&p.povm_element()).expect("same dims");
    }
    m
}

/// `√M⋆ = I + Σ (√(1 − wᵢ) − 1) Pᵢ`, valid for mutually orthogonal `Pᵢ`.
pub fn sqrt_null_povm(projections: &[WeightedProjection]) -> SparseOperator {
    let mut m = SparseOperator::identity(local_dims()).expect("local dims");
    for p in projections {
        let f = (1.0 - p.weight).max(0.0).sqrt() - 1.0;
        m = m
            .add(&p.projector().scaled(c64(f, 0.0)))
            .expect("same dims");
    }
    m
}

/// The local behavior of an element.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalAction {
    /// Unitary on `dir ⊗ pol`.
    Unitary(SparseOperator),
    /// Mutually orthogonal weighted projections on `dir ⊗ pol`.
    Measurement(Vec<WeightedProjection>),
    /// `V₁₂` on `dir:1 ⊗ pol:1 ⊗ dir:2 ⊗ pol:2`, photon 1 acting as control.
    TwoPhotonGate(SparseOperator),
    /// Emits at `t = 0`; afterwards absorbs like a rock.
    Source {
        emission: Emission,
        absorbs: Vec<WeightedProjection>,
    },
    /// No effect on photons.
    Classical,
}

impl LocalAction {
    pub fn projections(&self) -> &[WeightedProjection] {
        match self {
            LocalAction::Measurement(p) | LocalAction::Source { absorbs: p, .. } => p,
            _ => &[],
        }
    }
}

fn zero() -> Complex64 {
    c64(0.0, 0.0)
}

type Pol2 = [[Complex64; 2]; 2];

const POL_I: Pol2 = [
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
];

fn pol_scale(m: Pol2, s: Complex64) -> Pol2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

fn pol_mul(a: Pol2, b: Pol2) -> Pol2 {
    let mut out = [[zero(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Rotation `[[cos θ, −sin θ], [sin θ, cos θ]]` on `(H, V)`.
pub fn rotation_matrix(theta: f64) -> Pol2 {
    let (s, c) = theta.sin_cos();
    [[c64(c, 0.0), c64(-s, 0.0)], [c64(s, 0.0), c64(c, 0.0)]]
}

/// Polarization operator alone, as a [`SparseOperator`] on `pol`.
pub fn pol_operator(m: Pol2) -> SparseOperator {
    SparseOperator::from_dense(
        vec![polarization_dim()],
        vec![polarization_dim()],
        &[m[0].to_vec(), m[1].to_vec()],
    )
    .expect("2x2")
}

/// Build a `dir ⊗ pol` operator from the outputs of each input direction.
fn local_operator<F>(mut outputs: F) -> SparseOperator
where
    F: FnMut(Direction) -> Vec<(Direction, Pol2)>,
{
    let mut op = SparseOperator::zeros(local_dims(), local_dims()).expect("local dims");
    for d in Direction::ALL {
        for (out, m) in outputs(d) {
            for (po, row) in m.iter().enumerate() {
                for (pi, &v) in row.iter().enumerate() {
                    op.insert(&[out.index(), po], &[d.index(), pi], v)
                        .expect("in range");
                }
            }
        }
    }
    op
}

/// The same polarization matrix for every direction.
pub fn polarization_everywhere(m: Pol2) -> SparseOperator {
    local_operator(|d| vec![(d, m)])
}

fn degrees_of(d: Direction) -> i32 {
    d.degrees()
}

fn dir_at(deg: i32) -> Direction {
    Direction::from_degrees(deg).expect("multiple of 90")
}

/// Mirror line at `rotation` degrees. Reflection flips the sign of `H`.
pub fn mirror_operator(rotation: i32) -> SparseOperator {
    let flip = [[c64(-1.0, 0.0), zero()], [zero(), c64(1.0, 0.0)]];
    local_operator(|d| {
        let delta = degrees_of(d);
        if (delta - rotation).rem_euclid(180) == 0 {
            vec![(d, POL_I)]
        } else {
            vec![(dir_at(2 * rotation - delta), flip)]
        }
    })
}

/// Whether direction `d` hits the front face of a line at `rotation`.
fn hits_front(d: Direction, rotation: i32) -> bool {
    let rel = ((degrees_of(d) - rotation - 90) as f64).to_radians();
    rel.cos() < 0.0
}

/// Non-polarizing beam splitter line at `rotation` degrees.
///
/// Transmission `√(1−R)`; reflection `i√R e^{iφ}` off the front face and
/// `i√R e^{−iφ}` off the back face. The front face is the one whose normal
/// points to `rotation + 90°`.
pub fn beam_splitter_operator(reflectance: f64, phase: f64, rotation: i32) -> SparseOperator {
    let t = c64((1.0 - reflectance).max(0.0).sqrt(), 0.0);
    let r = reflectance.max(0.0).sqrt();
    local_operator(|d| {
        let delta = degrees_of(d);
        if (delta - rotation).rem_euclid(180) == 0 {
            return vec![(d, POL_I)];
        }
        let side = if hits_front(d, rotation) {
            phase
        } else {
            -phase
        };
        let refl = c64(0.0, r) * Complex64::from_polar(1.0, side);
        vec![
            (d, pol_scale(POL_I, t)),
            (dir_at(2 * rotation - delta), pol_scale(POL_I, refl)),
        ]
    })
}

/// Polarizing beam splitter line at `rotation`: transmits `H`, reflects `V`.
pub fn polarizing_beam_splitter_operator(rotation: i32) -> SparseOperator {
    let h = [[c64(1.0, 0.0), zero()], [zero(), zero()]];
    let v = [[zero(), zero()], [zero(), c64(1.0, 0.0)]];
    local_operator(|d| {
        let delta = degrees_of(d);
        if (delta - rotation).rem_euclid(180) == 0 {
            vec![(d, POL_I)]
        } else {
            vec![(d, h), (dir_at(2 * rotation - delta), v)]
        }
    })
}

pub fn corner_cube_operator() -> SparseOperator {
    local_operator(|d| vec![(d.reversed(), POL_I)])
}

/// Cyclic `→ ↦ ↑ ↦ ← ↦ ↓ ↦ →`.
pub fn circulator_operator() -> SparseOperator {
    local_operator(|d| vec![(d.rotated_ccw(1), POL_I)])
}

/// Axis plate: `forward` for photons along `axis`, `backward` against it,
/// identity across it.
fn plate_operator(axis: Direction, forward: Pol2, backward: Pol2) -> SparseOperator {
    local_operator(|d| {
        if d == axis {
            vec![(d, forward)]
        } else if d == axis.reversed() {
            vec![(d, backward)]
        } else {
            vec![(d, POL_I)]
        }
    })
}

/// Optical activity: the same rotation `R(θ)` in each photon's own frame,
/// so a round trip undoes it.
pub fn sugar_operator(theta: f64, axis: Direction) -> SparseOperator {
    plate_operator(axis, rotation_matrix(theta), rotation_matrix(theta))
}

/// Faraday rotation: `R(θ)` along the field, `R(−θ)` against it in the
/// photon's frame, so a round trip doubles it.
pub fn faraday_operator(theta: f64, axis: Direction) -> SparseOperator {
    plate_operator(axis, rotation_matrix(theta), rotation_matrix(-theta))
}

/// Retarder `R(β) diag(1, e^{iδ}) R(−β)`.
pub fn wave_plate_matrix(beta: f64, retardance: f64) -> Pol2 {
    let d = [
        [c64(1.0, 0.0), zero()],
        [zero(), Complex64::from_polar(1.0, retardance)],
    ];
    pol_mul(pol_mul(rotation_matrix(beta), d), rotation_matrix(-beta))
}

pub fn wave_plate_operator(beta: f64, retardance: f64, axis: Direction) -> SparseOperator {
    plate_operator(
        axis,
        wave_plate_matrix(beta, retardance),
        wave_plate_matrix(-beta, retardance),
    )
}

/// Global phase `e^{iφ}` in every direction.
pub fn phase_operator(phi: f64) -> SparseOperator {
    polarization_everywhere(pol_scale(POL_I, Complex64::from_polar(1.0, phi)))
}

/// Standard single-qubit gates on polarization (`H ≡ 0`, `V ≡ 1`).
pub fn gate_matrix(kind: ElementKind) -> Option<Pol2> {
    let o = c64(1.0, 0.0);
    let z = zero();
    let s = FRAC_1_SQRT_2;
    Some(match kind {
        ElementKind::Identity => POL_I,
        ElementKind::PauliX => [[z, o], [o, z]],
        ElementKind::PauliY => [[z, c64(0.0, -1.0)], [c64(0.0, 1.0), z]],
        ElementKind::PauliZ => [[o, z], [z, -o]],
        ElementKind::Hadamard => [[c64(s, 0.0), c64(s, 0.0)], [c64(s, 0.0), c64(-s, 0.0)]],
        ElementKind::SqrtNot => [
            [c64(0.5, 0.5), c64(0.5, -0.5)],
            [c64(0.5, -0.5), c64(0.5, 0.5)],
        ],
        _ => return None,
    })
}

/// Two-photon gate `V₁₂ = P_{↕↔} ⊗ G + (I − P_{↕↔}) ⊗ I`: photon 1 moving
/// vertically controls photon 2 moving horizontally. `g` is a 4×4 matrix on
/// `pol:1 ⊗ pol:2`.
#[allow(clippy::needless_range_loop)]
pub fn two_photon_gate(g: [[Complex64; 4]; 4]) -> SparseOperator {
    let dims = two_photon_dims();
    let mut op = SparseOperator::zeros(dims.clone(), dims).expect("dims");
    for d1 in Direction::ALL {
        for d2 in Direction::ALL {
            let active = matches!(d1, Direction::Up | Direction::Down)
                && matches!(d2, Direction::Left | Direction::Right);
            for pin in 0..4 {
                for pout in 0..4 {
                    let v = if active {
                        g[pout][pin]
                    } else if pin == pout {
                        c64(1.0, 0.0)
                    } else {
                        zero()
                    };
                    op.insert(
                        &[d1.index(), pout / 2, d2.index(), pout % 2],
                        &[d1.index(), pin / 2, d2.index(), pin % 2],
                        v,
                    )
                    .expect("in range");
                }
            }
        }
    }
    op
}

/// `dir:1, pol:1, dir:2, pol:2`.
pub fn two_photon_dims() -> Vec<Dimension> {
    let l = local_dims();
    vec![
        l[0].tagged(1),
        l[1].tagged(1),
        l[0].tagged(2),
        l[1].tagged(2),
    ]
}

/// `V₂₁`: the same gate with the photon roles swapped.
pub fn swapped_roles(v12: &SparseOperator) -> SparseOperator {
    v12.renamed(&[
        ("dir:1", "dir:t"),
        ("pol:1", "pol:t"),
        ("dir:2", "dir:1"),
        ("pol:2", "pol:1"),
    ])
    .and_then(|o| o.renamed(&[("dir:t", "dir:2"), ("pol:t", "pol:2")]))
    .and_then(|o| o.aligned(&two_photon_dims(), &two_photon_dims()))
    .expect("renaming tagged dims")
}

pub fn cnot_operator() -> SparseOperator {
    let (o, z) = (c64(1.0, 0.0), zero());
    two_photon_gate([[o, z, z, z], [z, o, z, z], [z, z, z, o], [z, z, o, z]])
}

pub fn cz_operator() -> SparseOperator {
    let (o, z) = (c64(1.0, 0.0), zero());
    two_photon_gate([[o, z, z, z], [z, o, z, z], [z, z, o, z], [z, z, z, -o]])
}

fn local_bra(d: Direction, pol: [Complex64; 2]) -> SparseVector {
    // Bras are stored as kets; contraction conjugates them.
    SparseVector::from_entries(
        local_dims(),
        [(vec![d.index(), 0], pol[0]), (vec![d.index(), 1], pol[1])],
    )
    .expect("local dims")
}

/// Full absorber: `⟨d,H|` and `⟨d,V|` for every direction `d`, weight `w`.
pub fn absorber(weight: f64) -> Vec<WeightedProjection> {
    let mut out = Vec::new();
    if weight <= 0.0 {
        return out;
    }
    for d in Direction::ALL {
        for (p, name) in [(0, "H"), (1, "V")] {
            let mut amps = [zero(); 2];
            amps[p] = c64(1.0, 0.0);
            out.push(WeightedProjection {
                weight,
                kind: ProjectionKind::Destructive(local_bra(d, amps)),
                label: format!("{d}{name}"),
            });
        }
    }
    out
}

/// Polarizer with bra `cos α ⟨H| + sin α ⟨V|`: the polarization at `α` is
/// absorbed and the one at `α + π/2` passes.
pub fn polarizer_projections(alpha: f64, axis: Direction) -> Vec<WeightedProjection> {
    [(axis, alpha), (axis.reversed(), -alpha)]
        .into_iter()
        .map(|(d, a)| {
            let (s, c) = a.sin_cos();
            WeightedProjection {
                weight: 1.0,
                kind: ProjectionKind::Destructive(local_bra(d, [c64(c, 0.0), c64(s, 0.0)])),
                label: format!("{d}∠{:.4}", a),
            }
        })
        .collect()
}

/// Polarization-blind presence check with efficiency `w`.
pub fn nondemolition_projections(efficiency: f64) -> Vec<WeightedProjection> {
    if efficiency <= 0.0 {
        return Vec::new();
    }
    vec![WeightedProjection {
        weight: efficiency,
        kind: ProjectionKind::Nondemolition(
            SparseOperator::identity(local_dims()).expect("local dims"),
        ),
        label: "present".to_string(),
    }]
}

fn check_unit(kind: ElementKind, param: &'static str, v: f64) -> Result<f64, ElementError> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(ElementError::OutOfRange {
            kind,
            param,
            value: v,
            range: "[0, 1]",
        })
    }
}

fn check_finite(kind: ElementKind, param: &'static str, v: f64) -> Result<f64, ElementError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ElementError::OutOfRange {
            kind,
            param,
            value: v,
            range: "finite reals",
        })
    }
}

/// Check that `params` only sets fields used by `kind`, with legal values.
pub fn validate_params(
    kind: ElementKind,
    rotation: i32,
    params: &ElementParams,
) -> Result<(), ElementError> {
    let step = kind.rotation_step();
    if rotation.rem_euclid(step) != 0 {
        return Err(ElementError::BadRotation {
            kind,
            rotation,
            step,
        });
    }
    let allowed = kind.params();
    if let Some(p) = params
        .set_fields()
        .into_iter()
        .find(|p| !allowed.contains(p))
    {
        return Err(ElementError::UnknownParam { kind, param: p });
    }
    for (name, v) in [
        ("reflectance", params.reflectance),
        ("absorption", params.absorption),
        ("efficiency", params.efficiency),
        ("probability", params.probability),
    ] {
        if let Some(v) = v {
            check_unit(kind, name, v)?;
        }
    }
    for (name, v) in [
        ("phase", params.phase),
        ("angle", params.angle),
        ("retardance", params.retardance),
        ("wavelength", params.wavelength),
    ] {
        if let Some(v) = v {
            check_finite(kind, name, v)?;
        }
    }
    if let Some(pol) = params.polarization {
        let n: f64 = pol.iter().flatten().map(|x| x * x).sum();
        if !n.is_finite() || (n - 1.0).abs() > crate::tensor::NORMALIZATION_TOLERANCE {
            return Err(ElementError::UnnormalizedPolarization { kind, norm: n });
        }
    }
    Ok(())
}

fn multi_photon_state(amps: &[(usize, Complex64)], n: usize) -> SparseVector {
    let dims: Vec<Dimension> = (1..=n).map(|i| polarization_dim().tagged(i)).collect();
    SparseVector::from_entries(
        dims,
        amps.iter().map(|&(bits, a)| {
            let coords: Vec<usize> = (0..n).map(|i| (bits >> (n - 1 - i)) & 1).collect();
            (coords, a)
        }),
    )
    .expect("pol dims")
}

fn emission_for(kind: ElementKind, rotation: i32, params: &ElementParams) -> Emission {
    let base = Direction::from_degrees(rotation).expect("validated rotation");
    match kind {
        ElementKind::SinglePhotonSource => {
            let p = params.polarization_amplitudes();
            Emission {
                directions: vec![base],
                polarization: multi_photon_state(&[(0, p[0]), (1, p[1])], 1),
                wavelength: params.wavelength,
            }
        }
        ElementKind::BellPairSource => {
            let a = params.bell_state.unwrap_or_default().amplitudes();
            Emission {
                directions: vec![base, base.reversed()],
                polarization: multi_photon_state(&[(0, a[0]), (1, a[1]), (2, a[2]), (3, a[3])], 2),
                wavelength: None,
            }
        }
        ElementKind::GhzSource => {
            let s = c64(FRAC_1_SQRT_2, 0.0);
            Emission {
                directions: vec![base, base.rotated_ccw(1), base.reversed()],
                polarization: multi_photon_state(&[(0b000, s), (0b111, s)], 3),
                wavelength: None,
            }
        }
        ElementKind::WSource => {
            let s = c64(1.0 / 3f64.sqrt(), 0.0);
            Emission {
                directions: vec![base, base.rotated_ccw(1), base.reversed()],
                polarization: multi_photon_state(&[(0b001, s), (0b010, s), (0b100, s)], 3),
                wavelength: None,
            }
        }
        _ => unreachable!("not a source"),
    }
}

/// The local action of `kind` at `rotation` with `params`.
pub fn action_for(
    kind: ElementKind,
    rotation: i32,
    params: &ElementParams,
) -> Result<LocalAction, ElementError> {
    validate_params(kind, rotation, params)?;
    let axis = || Direction::from_degrees(rotation).expect("validated rotation");
    use ElementKind::*;
    Ok(match kind {
        SinglePhotonSource | BellPairSource | GhzSource | WSource => LocalAction::Source {
            emission: emission_for(kind, rotation, params),
            absorbs: absorber(1.0),
        },
        Detector | Bomb | Rock => LocalAction::Measurement(absorber(1.0)),
        NeutralDensityFilter => {
            LocalAction::Measurement(absorber(params.absorption.unwrap_or(DEFAULT_ABSORPTION)))
        }
        LinearPolarizer => {
            LocalAction::Measurement(polarizer_projections(params.angle.unwrap_or(0.0), axis()))
        }
        NondemolitionDetector => {
            LocalAction::Measurement(nondemolition_projections(params.efficiency.unwrap_or(1.0)))
        }
        BeamSplitter => LocalAction::Unitary(beam_splitter_operator(
            params.reflectance.unwrap_or(DEFAULT_REFLECTANCE),
            params.phase.unwrap_or(0.0),
            rotation,
        )),
        PolarizingBeamSplitter => LocalAction::Unitary(polarizing_beam_splitter_operator(rotation)),
        Mirror => LocalAction::Unitary(mirror_operator(rotation)),
        CornerCube => LocalAction::Unitary(corner_cube_operator()),
        OpticalCirculator => LocalAction::Unitary(circulator_operator()),
        WavePlate => LocalAction::Unitary(wave_plate_operator(
            params.angle.unwrap_or(0.0),
            params.retardance.unwrap_or(DEFAULT_RETARDANCE),
            axis(),
        )),
        FaradayRotator => LocalAction::Unitary(faraday_operator(
            params.angle.unwrap_or(DEFAULT_ROTATOR_ANGLE),
            axis(),
        )),
        SugarSolution => LocalAction::Unitary(sugar_operator(
            params.angle.unwrap_or(DEFAULT_ROTATOR_ANGLE),
            axis(),
        )),
        GlassSlab => {
            LocalAction::Unitary(phase_operator(params.phase.unwrap_or(DEFAULT_PHASE_DELAY)))
        }
        VacuumJar => {
            LocalAction::Unitary(phase_operator(-params.phase.unwrap_or(DEFAULT_PHASE_DELAY)))
        }
        Identity | PauliX | PauliY | PauliZ | Hadamard | SqrtNot => LocalAction::Unitary(
            polarization_everywhere(gate_matrix(kind).expect("single-qubit gate")),
        ),
        Cnot => LocalAction::TwoPhotonGate(cnot_operator()),
        Cz => LocalAction::TwoPhotonGate(cz_operator()),
        Switch | RandomSwitch | OutputVariable | Correlator | Goal | And | Nand | Or | Nor
        | Xor | Sum | Min | Max | Comment => LocalAction::Classical,
    })
}
