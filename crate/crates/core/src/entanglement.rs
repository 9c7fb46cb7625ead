// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Entanglement of each particle with the rest: Rényi-2 entropies, the
//! spring/blob graph layout, and coordinated single-particle samples of an
//! entangled state.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{c64, SparseVector, TensorError};

/// Attempts at drawing a non-degenerate conditioning vector.
pub const BLINK_RETRIES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntanglementError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("state has no particles")]
    NoParticles,
    #[error("particle {0} is not part of the state")]
    UnknownParticle(usize),
    #[error("conditioning stayed degenerate after {BLINK_RETRIES} attempts")]
    Degenerate,
}

/// Rényi-2 entropy `−log₂ Tr[ρ²]` of one particle against the rest, in bits.
pub fn renyi2_entropy(state: &SparseVector, particle: usize) -> Result<f64, EntanglementError> {
    if !state.particles().contains(&particle) {
        return Err(EntanglementError::UnknownParticle(particle));
    }
    let purity = state.subsystem_purity(particle)?;
    // Purity of a pure product state can land a hair above 1.
    Ok((-purity.log2()).max(0.0))
}

/// Single-particle states drawn so that their joint flicker reflects the
/// correlations of the entangled state.
#[derive(Clone, Debug, PartialEq)]
pub struct BlinkSample {
    pub particles: Vec<usize>,
    /// Normalized state of each particle, over that particle's axes.
    pub states: Vec<SparseVector>,
    /// Norm of each state before normalization.
    pub weights: Vec<f64>,
    pub seed: Option<u64>,
}

/// Uniformly random unit vector over `particle`'s axes, non-zero only where
/// the particle has support in `state`.
fn random_conditioning<R: Rng + ?Sized>(
    state: &SparseVector,
    particle: usize,
    rng: &mut R,
) -> Result<SparseVector, EntanglementError> {
    let dims = state.particle_dims(particle);
    let support = state.support_of(&dims)?;
    let entries: Vec<(Vec<usize>, _)> = support
        .into_iter()
        .map(|c| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            (c, c64(re, im))
        })
        .collect();
    let v = SparseVector::from_entries(dims, entries)?;
    Ok(v.normalized()?)
}

/// Draw one coordinated sample, particles processed in ascending tag order:
/// `|ψ₁⟩ = ⟨χ₂|…⟨χₙ|Ψ⟩`, then `|ψₖ⟩ = ⟨ψ₁|…⟨ψₖ₋₁|⟨χₖ₊₁|…⟨χₙ|Ψ⟩`.
pub fn blink_sample<R: Rng + ?Sized>(
    state: &SparseVector,
    rng: &mut R,
) -> Result<BlinkSample, EntanglementError> {
    let particles = state.particles();
    if particles.is_empty() {
        return Err(EntanglementError::NoParticles);
    }
    state.ensure_normalized()?;
    if particles.len() == 1 {
        return Ok(BlinkSample {
            particles,
            states: vec![state.clone()],
            weights: vec![1.0],
            seed: None,
        });
    }
    'attempt: for _ in 0..BLINK_RETRIES {
        let chis: Vec<SparseVector> = particles[1..]
            .iter()
            .map(|&p| random_conditioning(state, p, rng))
            .collect::<Result<_, _>>()?;
        let mut psis: Vec<SparseVector> = Vec::with_capacity(particles.len());
        let mut weights = Vec::with_capacity(particles.len());
        for k in 0..particles.len() {
            let mut v = state.clone();
            for psi in &psis {
                v = v.contract(psi)?;
            }
            for chi in &chis[k..] {
                v = v.contract(chi)?;
            }
            let w = v.norm();
            if w < 1e-12 {
                continue 'attempt;
            }
            weights.push(w);
            psis.push(v.normalized()?);
        }
        return Ok(BlinkSample {
            particles,
            states: psis,
            weights,
            seed: None,
        });
    }
    Err(EntanglementError::Degenerate)
}

/// [`blink_sample`] from a seeded ChaCha20 generator.
pub fn blink_sample_seeded(
    state: &SparseVector,
    seed: u64,
) -> Result<BlinkSample, EntanglementError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut s = blink_sample(state, &mut rng)?;
    s.seed = Some(seed);
    Ok(s)
}

/// Spring layout: particles on the unit circle pulled toward a common point
/// by springs whose constants are their entropies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphLayout {
    pub anchors: Vec<[f64; 2]>,
    pub equilibrium: [f64; 2],
    /// Connection width per particle, `kᵢ / max k` (all 0 for product states).
    pub widths: Vec<f64>,
}

pub fn entanglement_graph(entropies: &[f64]) -> GraphLayout {
    let n = entropies.len();
    let anchors: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let a = TAU * i as f64 / n as f64;
            [a.cos(), a.sin()]
        })
        .collect();
    let k: Vec<f64> = entropies.iter().map(|&h| h.max(0.0)).collect();
    let total: f64 = k.iter().sum();
    let max = k.iter().copied().fold(0.0, f64::max);
    let weights: Vec<f64> = if total > 0.0 { k.clone() } else { vec![1.0; n] };
    let wsum: f64 = weights.iter().sum();
    let mut eq = [0.0; 2];
    if wsum > 0.0 {
        for (w, a) in weights.iter().zip(&anchors) {
            eq[0] += w * a[0] / wsum;
            eq[1] += w * a[1] / wsum;
        }
    }
    GraphLayout {
        anchors,
        equilibrium: eq,
        widths: k
            .iter()
            .map(|&x| if max > 0.0 { x / max } else { 0.0 })
            .collect(),
    }
}

/// Per-particle entropies with their graph layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub particles: Vec<usize>,
    /// Bits.
    pub entropies: Vec<f64>,
    pub layout: GraphLayout,
}

pub fn entanglement_report(state: &SparseVector) -> Result<EntanglementReport, EntanglementError> {
    let particles = state.particles();
    let entropies = particles
        .iter()
        .map(|&p| renyi2_entropy(state, p))
        .collect::<Result<Vec<_>, _>>()?;
    let layout = entanglement_graph(&entropies);
    Ok(EntanglementReport {
        particles,
        entropies,
        layout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon::polarization_dim;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn pols(n: usize) -> Vec<crate::tensor::Dimension> {
        (1..=n).map(|i| polarization_dim().tagged(i)).collect()
    }

    fn singlet() -> SparseVector {
        let s = FRAC_1_SQRT_2;
        SparseVector::from_dense(
            pols(2),
            &[c64(0.0, 0.0), c64(s, 0.0), c64(-s, 0.0), c64(0.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn bell_entropy_is_one_bit() {
        let s = singlet();
        assert!((renyi2_entropy(&s, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((renyi2_entropy(&s, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            renyi2_entropy(&s, 3),
            Err(EntanglementError::UnknownParticle(3))
        ));
    }

    #[test]
    fn singlet_samples_are_orthogonal() {
        let s = singlet();
        for seed in 0..50 {
            let b = blink_sample_seeded(&s, seed).unwrap();
            let a = crate::photon::untag(&b.states[0]).unwrap();
            let c = crate::photon::untag(&b.states[1]).unwrap();
            assert!(a.inner(&c).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn single_particle_is_returned_unchanged() {
        let v = SparseVector::from_dense(pols(1), &[c64(0.6, 0.0), c64(0.0, 0.8)]).unwrap();
        let b = blink_sample_seeded(&v, 3).unwrap();
        assert_eq!(b.states[0], v);
    }

    #[test]
    fn graph_layouts() {
        let g = entanglement_graph(&[1.0, 1.0, 1.0]);
        assert!(g.equilibrium[0].abs() < 1e-12 && g.equilibrium[1].abs() < 1e-12);
        let g = entanglement_graph(&[0.0, 1.0, 1.0]);
        let mid = [
            (g.anchors[1][0] + g.anchors[2][0]) / 2.0,
            (g.anchors[1][1] + g.anchors[2][1]) / 2.0,
        ];
        assert!((g.equilibrium[0] - mid[0]).abs() < 1e-12);
        assert!((g.equilibrium[1] - mid[1]).abs() < 1e-12);
        assert_eq!(g.widths, vec![0.0, 1.0, 1.0]);
        let g = entanglement_graph(&[0.0, 0.0]);
        assert_eq!(g.widths, vec![0.0, 0.0]);
    }
}
