// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Algebraic properties of every element's local action.

use photonlab::elements::{
    action_for, cnot_operator, mirror_operator, null_povm, sqrt_null_povm, swapped_roles,
    ElementKind, ElementParams, LocalAction,
};
use photonlab::photon::{local_dims, to_polarization_basis, Direction, PolarizationBasis};
use photonlab::tensor::{SparseOperator, SparseVector};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
struct Knobs {
    unit: [f64; 3],
    real: [f64; 3],
}

fn knobs() -> impl Strategy<Value = Knobs> {
    (
        [0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0],
        [-7.0f64..7.0, -7.0f64..7.0, -7.0f64..7.0],
    )
        .prop_map(|(unit, real)| Knobs { unit, real })
}

/// Parameters with every field the kind accepts set from `k`.
fn params_for(kind: ElementKind, k: &Knobs) -> ElementParams {
    let mut p = ElementParams::default();
    for name in kind.params() {
        match *name {
            "reflectance" => p.reflectance = Some(k.unit[0]),
            "absorption" => p.absorption = Some(k.unit[1]),
            "efficiency" => p.efficiency = Some(k.unit[2]),
            "phase" => p.phase = Some(k.real[0]),
            "angle" => p.angle = Some(k.real[1]),
            "retardance" => p.retardance = Some(k.real[2]),
            _ => {}
        }
    }
    p
}

fn rotations(kind: ElementKind) -> impl Iterator<Item = i32> {
    (0..360).step_by(kind.rotation_step() as usize)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_unitary_is_unitary(k in knobs()) {
        for kind in ElementKind::ALL {
            for rot in rotations(kind) {
                let action = action_for(kind, rot, &params_for(kind, &k)).unwrap();
                if let LocalAction::Unitary(u) | LocalAction::TwoPhotonGate(u) = action {
                    prop_assert!(u.is_unitary(TOL), "{kind:?} at {rot}");
                }
            }
        }
    }

    #[test]
    fn projections_are_orthogonal_idempotents_and_complete(k in knobs()) {
        let id = SparseOperator::identity(local_dims()).unwrap();
        for kind in ElementKind::ALL {
            for rot in rotations(kind) {
                let action = action_for(kind, rot, &params_for(kind, &k)).unwrap();
                let ps = action.projections();
                if ps.is_empty() {
                    continue;
                }
                let projectors: Vec<SparseOperator> = ps.iter().map(|p| p.projector()).collect();
                for (i, a) in projectors.iter().enumerate() {
                    prop_assert!(a.compose(a).unwrap().approx_eq(a, TOL), "{kind:?} idempotent");
                    for b in &projectors[i + 1..] {
                        let ab = a.compose(b).unwrap();
                        prop_assert!(ab.iter().all(|(_, _, z)| z.norm() < TOL), "{kind:?} orthogonal");
                    }
                }
                let mut total = null_povm(ps);
                for p in ps {
                    prop_assert!((0.0..=1.0).contains(&p.weight));
                    total = total.add(&p.povm_element()).unwrap();
                }
                prop_assert!(total.approx_eq(&id, TOL));
                let root = sqrt_null_povm(ps);
                prop_assert!(root.dagger().compose(&root).unwrap().approx_eq(&null_povm(ps), TOL));
            }
        }
    }
}

#[test]
fn mirror_swaps_circular_polarizations() {
    // A horizontal mirror (rotation 0) bounces ↑ into ↓.
    let m = mirror_operator(0);
    let lr = |label: &str| {
        let v = SparseVector::basis_by_labels(
            vec![
                photonlab::photon::direction_dim(),
                PolarizationBasis::LR.dimension(),
            ],
            &[Direction::Up.symbol(), label],
        )
        .unwrap();
        to_polarization_basis(&v, PolarizationBasis::HV).unwrap()
    };
    for (from, to) in [("L", "R"), ("R", "L")] {
        let out = m.apply(&lr(from)).unwrap();
        let out = to_polarization_basis(&out, PolarizationBasis::LR).unwrap();
        let t = PolarizationBasis::LR.dimension().index_of(to).unwrap();
        let amp = out.get(&[Direction::Down.index(), t]);
        assert!((amp.norm() - 1.0).abs() < TOL, "{from} -> {to}");
        assert_eq!(out.len(), 1);
    }
}

#[test]
fn cnot_role_swaps_commute() {
    let v12 = cnot_operator();
    let v21 = swapped_roles(&v12);
    let a = v12.compose(&v21).unwrap();
    let b = v21.compose(&v12).unwrap();
    assert!(a.approx_eq(&b, 0.0));
}

#[test]
fn transparent_filter_leaves_photons_alone() {
    let p = ElementParams {
        absorption: Some(0.0),
        ..Default::default()
    };
    let action = action_for(ElementKind::NeutralDensityFilter, 0, &p).unwrap();
    let root = sqrt_null_povm(action.projections());
    let id = SparseOperator::identity(local_dims()).unwrap();
    assert!(root.approx_eq(&id, TOL));
}
