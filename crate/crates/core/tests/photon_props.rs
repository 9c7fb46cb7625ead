// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;
use photonlab::photon::{
    product_state, symmetrize, tag_particle, to_polarization_basis, Grid, PolarizationBasis,
};
use photonlab::tensor::SparseVector;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn grid() -> Grid {
    Grid::new(5, 4)
}

/// A normalized single photon spread over a few random modes.
fn photon() -> impl Strategy<Value = SparseVector> {
    prop::collection::vec(
        (
            (0usize..5, 0usize..4, 0usize..4, 0usize..2),
            (-1.0f64..1.0, -1.0f64..1.0),
        ),
        1..6,
    )
    .prop_filter_map("non-zero", |entries| {
        let v = SparseVector::from_entries(
            grid().photon_dims(),
            entries
                .into_iter()
                .map(|((x, y, d, p), (re, im))| (vec![x, y, d, p], Complex64::new(re, im))),
        )
        .ok()?;
        (v.norm() > 1e-3).then(|| v.normalized().unwrap())
    })
}

fn basis() -> impl Strategy<Value = PolarizationBasis> {
    prop::sample::select(PolarizationBasis::ALL.to_vec())
}

proptest! {
    #[test]
    fn basis_change_is_invertible_and_norm_preserving(
        a in photon(),
        b in photon(),
        to in basis(),
    ) {
        let pair = product_state(&[a, b]).unwrap();
        let there = to_polarization_basis(&pair, to).unwrap();
        prop_assert!((there.norm() - 1.0).abs() < TOL);
        let back = to_polarization_basis(&there, PolarizationBasis::HV).unwrap();
        prop_assert!(back.approx_eq(&pair, TOL));
    }

    #[test]
    fn symmetrization_ignores_order(a in photon(), b in photon()) {
        let ab = symmetrize(&a, &b).unwrap();
        let ba = symmetrize(&b, &a).unwrap();
        prop_assert!(ab.approx_eq(&ba, TOL));
        prop_assert!((ab.norm() - 1.0).abs() < TOL);
        // Exchanging the particle tags leaves the state unchanged.
        let swapped = ab
            .renamed(&[
                ("x:1", "x:3"), ("y:1", "y:3"), ("dir:1", "dir:3"), ("pol:1", "pol:3"),
            ])
            .and_then(|v| v.renamed(&[
                ("x:2", "x:1"), ("y:2", "y:1"), ("dir:2", "dir:1"), ("pol:2", "pol:1"),
            ]))
            .and_then(|v| v.renamed(&[
                ("x:3", "x:2"), ("y:3", "y:2"), ("dir:3", "dir:2"), ("pol:3", "pol:2"),
            ]))
            .unwrap();
        prop_assert!(swapped.approx_eq(&ab, TOL));
    }

    #[test]
    fn product_then_partial_inner_recovers_factor(a in photon(), b in photon()) {
        let pair = product_state(&[a.clone(), b.clone()]).unwrap();
        let bra = tag_particle(&b, 2).unwrap();
        let left = pair.contract(&bra).unwrap();
        prop_assert!(left.approx_eq(&tag_particle(&a, 1).unwrap(), TOL));
        let bra = tag_particle(&a, 1).unwrap();
        let right = pair.contract(&bra).unwrap();
        prop_assert!(right.approx_eq(&tag_particle(&b, 2).unwrap(), TOL));
    }
}

#[test]
fn identical_photons_symmetrize_to_their_product() {
    let h = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let a = photonlab::photon::single_photon(
        grid(),
        photonlab::photon::PhotonCoordinate::new(1, 1, photonlab::photon::Direction::Right),
        h,
    )
    .unwrap();
    let s = symmetrize(&a, &a).unwrap();
    assert!(s.approx_eq(&product_state(&[a.clone(), a]).unwrap(), TOL));
}
