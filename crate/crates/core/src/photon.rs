// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Single- and multi-photon Hilbert spaces on the grid.
//!
//! A photon lives in `x ⊗ y ⊗ dir ⊗ pol`. Multi-photon states tag each
//! photon's axes with its index (`x:1`, `pol:2`, ...), so the same physical
//! axis of two photons can never be confused.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{c64, Complex64, Dimension, SparseOperator, SparseVector, TensorError};

pub const DEFAULT_WIDTH: usize = 13;
pub const DEFAULT_HEIGHT: usize = 10;
pub const MAX_PHOTONS: usize = 3;

pub const X: &str = "x";
pub const Y: &str = "y";
pub const DIR: &str = "dir";
pub const POL: &str = "pol";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhotonError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("position ({x}, {y}) is outside the {width}x{height} grid")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("polarization amplitudes are not normalized (norm² = {0})")]
    Unnormalized(f64),
    #[error("at most {MAX_PHOTONS} photons are supported, got {0}")]
    TooManyPhotons(usize),
    #[error("symmetrization produced a zero vector")]
    ZeroSymmetrization,
    #[error("state has no polarization axis")]
    NoPolarization,
}

/// Propagation direction on the grid. `y` grows downward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Right,
    Up,
    Left,
    Down,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Right,
        Direction::Up,
        Direction::Left,
        Direction::Down,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i % 4]
    }

    /// Counter-clockwise angle on screen, in degrees.
    pub fn degrees(self) -> i32 {
        90 * self as i32
    }

    /// Direction at `deg` (must be a multiple of 90).
    pub fn from_degrees(deg: i32) -> Option<Self> {
        (deg.rem_euclid(90) == 0).then(|| Self::from_index(deg.rem_euclid(360) as usize / 90))
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::Right => (1, 0),
            Direction::Up => (0, -1),
            Direction::Left => (-1, 0),
            Direction::Down => (0, 1),
        }
    }

    pub fn reversed(self) -> Self {
        Self::from_index(self.index() + 2)
    }

    pub fn rotated_ccw(self, quarter_turns: usize) -> Self {
        Self::from_index(self.index() + quarter_turns)
    }

    pub fn symbol(self) -> &'static str {
        DIRECTION_LABELS[self.index()]
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

pub const DIRECTION_LABELS: [&str; 4] = ["→", "↑", "←", "↓"];

/// Grid size of a board.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
        }
    }
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub fn contains(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn x_dim(&self) -> Dimension {
        Dimension::indexed(X, self.width).expect("grid width is positive")
    }

    pub fn y_dim(&self) -> Dimension {
        Dimension::indexed(Y, self.height).expect("grid height is positive")
    }

    /// Untagged single-photon axes `x, y, dir, pol`.
    pub fn photon_dims(&self) -> Vec<Dimension> {
        vec![
            self.x_dim(),
            self.y_dim(),
            direction_dim(),
            polarization_dim(),
        ]
    }

    /// Size of the single-photon space.
    pub fn single_photon_size(&self) -> usize {
        self.width * self.height * 4 * 2
    }
}

pub fn direction_dim() -> Dimension {
    Dimension::new(DIR, DIRECTION_LABELS).expect("static labels")
}

pub fn polarization_dim() -> Dimension {
    PolarizationBasis::HV.dimension()
}

/// The per-cell space `dir ⊗ pol` that element operators act on.
pub fn local_dims() -> Vec<Dimension> {
    vec![direction_dim(), polarization_dim()]
}

/// Tagged axis names of photon `tag`, in `x, y, dir, pol` order.
pub fn photon_axis_names(tag: usize) -> [String; 4] {
    [X, Y, DIR, POL].map(|n| format!("{n}{}{tag}", crate::tensor::PARTICLE_SEPARATOR))
}

/// A point of the single-photon basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhotonCoordinate {
    pub x: usize,
    pub y: usize,
    pub direction: Direction,
}

impl PhotonCoordinate {
    pub fn new(x: usize, y: usize, direction: Direction) -> Self {
        Self { x, y, direction }
    }
}

/// A single photon at `coord` with polarization `pol = [α_H, α_V]`.
pub fn single_photon(
    grid: Grid,
    coord: PhotonCoordinate,
    pol: [Complex64; 2],
) -> Result<SparseVector, PhotonError> {
    if coord.x >= grid.width || coord.y >= grid.height {
        return Err(PhotonError::OutOfBounds {
            x: coord.x,
            y: coord.y,
            width: grid.width,
            height: grid.height,
        });
    }
    let n = pol[0].norm_sqr() + pol[1].norm_sqr();
    if (n - 1.0).abs() > crate::tensor::NORMALIZATION_TOLERANCE {
        return Err(PhotonError::Unnormalized(n));
    }
    let d = coord.direction.index();
    Ok(SparseVector::from_entries(
        grid.photon_dims(),
        [
            (vec![coord.x, coord.y, d, 0], pol[0]),
            (vec![coord.x, coord.y, d, 1], pol[1]),
        ],
    )?)
}

/// Tag every axis of an untagged single-particle vector with `tag`.
pub fn tag_particle(v: &SparseVector, tag: usize) -> Result<SparseVector, TensorError> {
    let renames: Vec<(String, String)> = v
        .dims()
        .iter()
        .map(|d| (d.name().to_string(), d.tagged(tag).name().to_string()))
        .collect();
    let refs: Vec<(&str, &str)> = renames
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    v.renamed(&refs)
}

/// Strip particle tags (for comparing single-particle states).
pub fn untag(v: &SparseVector) -> Result<SparseVector, TensorError> {
    let renames: Vec<(String, String)> = v
        .dims()
        .iter()
        .map(|d| (d.name().to_string(), d.base_name().to_string()))
        .collect();
    let refs: Vec<(&str, &str)> = renames
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    v.renamed(&refs)
}

/// `|ψ₁⟩|ψ₂⟩…` with photon `i` tagged `i + 1`.
pub fn product_state(photons: &[SparseVector]) -> Result<SparseVector, PhotonError> {
    if photons.len() > MAX_PHOTONS {
        return Err(PhotonError::TooManyPhotons(photons.len()));
    }
    let mut out = SparseVector::scalar(c64(1.0, 0.0));
    for (i, p) in photons.iter().enumerate() {
        out = out.tensor(&tag_particle(p, i + 1)?)?;
    }
    Ok(out)
}

/// Bosonic two-photon state `∝ |ψ₁⟩|ψ₂⟩ + |ψ₂⟩|ψ₁⟩`, normalized to unit norm.
pub fn symmetrize(psi1: &SparseVector, psi2: &SparseVector) -> Result<SparseVector, PhotonError> {
    symmetrized_product(&[psi1.clone(), psi2.clone()], &[1, 2])
}

/// Normalized sum over all permutations of `⊗ᵢ |ψ_{π(i)}⟩`, photon `i`
/// receiving tag `tags[i]`.
pub fn symmetrized_product(
    states: &[SparseVector],
    tags: &[usize],
) -> Result<SparseVector, PhotonError> {
    if states.len() > MAX_PHOTONS {
        return Err(PhotonError::TooManyPhotons(states.len()));
    }
    let mut total: Option<SparseVector> = None;
    for perm in permutations(states.len()) {
        let mut term = SparseVector::scalar(c64(1.0, 0.0));
        for (slot, &src) in perm.iter().enumerate() {
            term = term.tensor(&tag_particle(&states[src], tags[slot])?)?;
        }
        total = Some(match total {
            None => term,
            Some(t) => t.add(&term)?,
        });
    }
    let total = total.unwrap_or_else(|| SparseVector::scalar(c64(1.0, 0.0)));
    if total.norm() < crate::tensor::PRUNE_EPSILON {
        return Err(PhotonError::ZeroSymmetrization);
    }
    Ok(total.normalized()?)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

/// Polarization basis used for display.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolarizationBasis {
    /// Horizontal / vertical.
    HV,
    /// Diagonal `|D⟩ = (|H⟩+|V⟩)/√2` / antidiagonal `|A⟩ = (|H⟩−|V⟩)/√2`.
    DA,
    /// Circular `|L⟩ = (|H⟩+i|V⟩)/√2`, `|R⟩ = (|H⟩−i|V⟩)/√2`.
    LR,
}

impl PolarizationBasis {
    pub const ALL: [PolarizationBasis; 3] = [Self::HV, Self::DA, Self::LR];

    pub fn labels(self) -> [&'static str; 2] {
        match self {
            Self::HV => ["H", "V"],
            Self::DA => ["D", "A"],
            Self::LR => ["L", "R"],
        }
    }

    pub fn dimension(self) -> Dimension {
        Dimension::new(POL, self.labels()).expect("static labels")
    }

    /// Basis kets expressed in H/V: `kets()[k] = [⟨H|k⟩, ⟨V|k⟩]`.
    pub fn kets(self) -> [[Complex64; 2]; 2] {
        let s = FRAC_1_SQRT_2;
        match self {
            Self::HV => [
                [c64(1.0, 0.0), c64(0.0, 0.0)],
                [c64(0.0, 0.0), c64(1.0, 0.0)],
            ],
            Self::DA => [[c64(s, 0.0), c64(s, 0.0)], [c64(s, 0.0), c64(-s, 0.0)]],
            Self::LR => [[c64(s, 0.0), c64(0.0, s)], [c64(s, 0.0), c64(0.0, -s)]],
        }
    }

    /// Change-of-basis matrix `C[k][j] = ⟨k|j_HV⟩`, mapping H/V amplitudes to
    /// amplitudes in this basis.
    pub fn from_hv(self) -> [[Complex64; 2]; 2] {
        let k = self.kets();
        [
            [k[0][0].conj(), k[0][1].conj()],
            [k[1][0].conj(), k[1][1].conj()],
        ]
    }

    pub fn from_labels(labels: &[String]) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|b| labels.iter().map(String::as_str).eq(b.labels()))
    }

    /// Operator on a `pol` axis named `axis`, from basis `from` to `self`.
    pub fn change_operator(self, from: Self, axis: &str) -> SparseOperator {
        let to = self.from_hv();
        let back = from.from_hv();
        // to · back†
        let mut m = vec![vec![c64(0.0, 0.0); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..2).map(|k| to[i][k] * back[j][k].conj()).sum();
            }
        }
        SparseOperator::from_dense(
            vec![self.dimension().renamed(axis)],
            vec![from.dimension().renamed(axis)],
            &m,
        )
        .expect("2x2 change of basis")
    }
}

impl fmt::Display for PolarizationBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.labels();
        write!(f, "{}{}", l[0], l[1])
    }
}

impl std::str::FromStr for PolarizationBasis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "HV" => Ok(Self::HV),
            "DA" => Ok(Self::DA),
            "LR" => Ok(Self::LR),
            other => Err(format!(
                "unknown polarization basis `{other}` (expected HV, DA or LR)"
            )),
        }
    }
}

/// Re-express every polarization axis of `v` in `basis`.
pub fn to_polarization_basis(
    v: &SparseVector,
    basis: PolarizationBasis,
) -> Result<SparseVector, PhotonError> {
    let axes: Vec<Dimension> = v
        .dims()
        .iter()
        .filter(|d| d.base_name() == POL)
        .cloned()
        .collect();
    if axes.is_empty() {
        return Err(PhotonError::NoPolarization);
    }
    let mut out = v.clone();
    for axis in axes {
        let from = PolarizationBasis::from_labels(axis.labels()).ok_or_else(|| {
            TensorError::DimensionMismatch(format!("`{}` is not a polarization basis", axis.name()))
        })?;
        if from != basis {
            out = out.apply_on(&basis.change_operator(from, axis.name()))?;
        }
    }
    Ok(out)
}

/// How complex amplitudes are rendered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexFormat {
    Cartesian,
    Polar,
    PolarTau,
    ColorCircle,
}

impl std::str::FromStr for ComplexFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cartesian" => Ok(Self::Cartesian),
            "polar" => Ok(Self::Polar),
            "polar-tau" => Ok(Self::PolarTau),
            "color-circle" => Ok(Self::ColorCircle),
            other => Err(format!(
                "unknown complex format `{other}` (expected cartesian, polar, polar-tau or color-circle)"
            )),
        }
    }
}

/// A complex number in one of the display formats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "kebab-case")]
pub enum FormattedComplex {
    Cartesian {
        re: f64,
        im: f64,
    },
    /// Phase in radians, `(-π, π]`.
    Polar {
        r: f64,
        phase: f64,
    },
    /// Phase in turns, `[0, 1)`.
    PolarTau {
        r: f64,
        turns: f64,
    },
    /// Hue in degrees, `[0, 360)`.
    ColorCircle {
        r: f64,
        hue: f64,
    },
}

impl FormattedComplex {
    pub fn new(z: Complex64, format: ComplexFormat) -> Self {
        let r = z.norm();
        let phase = if r == 0.0 { 0.0 } else { z.arg() };
        let turns = (phase / TAU).rem_euclid(1.0);
        let turns = if (1.0 - turns).abs() < 1e-12 {
            0.0
        } else {
            turns
        };
        match format {
            ComplexFormat::Cartesian => Self::Cartesian { re: z.re, im: z.im },
            ComplexFormat::Polar => Self::Polar { r, phase },
            ComplexFormat::PolarTau => Self::PolarTau { r, turns },
            ComplexFormat::ColorCircle => Self::ColorCircle {
                r,
                hue: turns * 360.0,
            },
        }
    }
}

impl fmt::Display for FormattedComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Cartesian { re, im } => {
                if im < 0.0 {
                    write!(f, "{re:.4} - {:.4}i", -im)
                } else {
                    write!(f, "{re:.4} + {im:.4}i")
                }
            }
            Self::Polar { r, phase } => write!(f, "{r:.4} ∠ {:.4}π", phase / PI),
            Self::PolarTau { r, turns } => write!(f, "{r:.4} ∠ {turns:.4}τ"),
            Self::ColorCircle { r, hue } => write!(f, "r={r:.4} hue={hue:.1}°"),
        }
    }
}

/// One row of a ket listing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KetComponent {
    pub basis: String,
    pub amplitude: FormattedComplex,
    pub probability: f64,
}

/// Display-ready ket components of `v`, in basis key order.
pub fn ket_components(
    v: &SparseVector,
    basis: PolarizationBasis,
    format: ComplexFormat,
) -> Result<Vec<KetComponent>, PhotonError> {
    let shown = if v.dims().iter().any(|d| d.base_name() == POL) {
        to_polarization_basis(v, basis)?
    } else {
        v.clone()
    };
    Ok(shown
        .iter()
        .map(|(coords, amp)| KetComponent {
            basis: basis_label(&shown, &coords),
            amplitude: FormattedComplex::new(amp, format),
            probability: amp.norm_sqr(),
        })
        .collect())
}

/// Human-readable label of a basis ket. Photons render as `(x,y)dir pol`;
/// axes of one particle whose labels are all single characters are
/// concatenated, so two polarization qubits read `HV`.
pub fn basis_label(v: &SparseVector, coords: &[usize]) -> String {
    let dims = v.dims();
    if dims.is_empty() {
        return "vac".to_string();
    }
    // (particle tag, [(axis, label)]) runs in axis order.
    type Group = (Option<usize>, Vec<(String, String)>);
    let mut groups: Vec<Group> = Vec::new();
    for (d, &c) in dims.iter().zip(coords) {
        let entry = (d.base_name().to_string(), d.label(c).to_string());
        match groups.last_mut() {
            Some((tag, items)) if *tag == d.particle() && d.particle().is_some() => {
                items.push(entry)
            }
            _ => groups.push((d.particle(), vec![entry])),
        }
    }
    let rendered: Vec<String> = groups
        .iter()
        .map(|(_, items)| {
            let get = |n: &str| items.iter().find(|(b, _)| b == n).map(|(_, l)| l.as_str());
            if let (Some(x), Some(y), Some(d), Some(p)) = (get(X), get(Y), get(DIR), get(POL)) {
                if items.len() == 4 {
                    return format!("({x},{y}){d}{p}");
                }
            }
            if items.iter().all(|(_, l)| l.chars().count() == 1) {
                items.iter().map(|(_, l)| l.as_str()).collect()
            } else {
                items
                    .iter()
                    .map(|(_, l)| l.as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            }
        })
        .collect();
    let joiner = if rendered.iter().all(|r| r.chars().count() == 1) {
        ""
    } else {
        " "
    };
    rendered.join(joiner)
}
