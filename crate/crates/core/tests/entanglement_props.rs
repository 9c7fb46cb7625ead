// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;
use photonlab::entanglement::{blink_sample_seeded, entanglement_graph, renyi2_entropy};
use photonlab::photon::{polarization_dim, untag};
use photonlab::tensor::{SparseOperator, SparseVector};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn pol_dims(n: usize) -> Vec<photonlab::tensor::Dimension> {
    (1..=n).map(|i| polarization_dim().tagged(i)).collect()
}

/// `−log₂ Tr ρ_k²` from the dense reduced density matrix of qubit `k`.
fn dense_renyi2(amps: &[Complex64], n: usize, k: usize) -> f64 {
    let shift = n - 1 - k;
    let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, a) in amps.iter().enumerate() {
        for (j, b) in amps.iter().enumerate() {
            // Same state of every other qubit.
            if (i ^ j) & !(1 << shift) == 0 {
                rho[(i >> shift) & 1][(j >> shift) & 1] += a * b.conj();
            }
        }
    }
    let purity: f64 = rho.iter().flatten().map(|z| z.norm_sqr()).sum();
    -purity.log2()
}

fn state(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map("non-zero", |v| {
        let amps: Vec<Complex64> = v
            .into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (norm > 1e-3).then(|| amps.into_iter().map(|z| z / norm).collect())
    })
}

fn unitary2() -> impl Strategy<Value = [[Complex64; 2]; 2]> {
    (0.0f64..6.3, 0.0f64..6.3, 0.0f64..6.3, 0.0f64..1.6).prop_map(|(a, b, c, t)| {
        let e = |x: f64| Complex64::from_polar(1.0, x);
        [
            [e(a) * t.cos(), -e(b) * t.sin()],
            [e(c) * t.sin(), e(b + c - a) * t.cos()],
        ]
    })
}

proptest! {
    #[test]
    fn entropy_matches_dense_partial_trace(
        (n, amps) in (2usize..=3).prop_flat_map(|n| (Just(n), state(n))),
    ) {
        let v = SparseVector::from_dense(pol_dims(n), &amps).unwrap();
        for k in 0..n {
            let want = dense_renyi2(&amps, n, k);
            let got = renyi2_entropy(&v, k + 1).unwrap();
            prop_assert!((got - want.max(0.0)).abs() < TOL, "qubit {k}: {got} vs {want}");
        }
    }

    #[test]
    fn local_unitaries_keep_entropies(amps in state(3), u in unitary2(), target in 1usize..=3) {
        let v = SparseVector::from_dense(pol_dims(3), &amps).unwrap();
        let d = polarization_dim().tagged(target);
        let rows: Vec<Vec<Complex64>> = u.iter().map(|r| r.to_vec()).collect();
        let op = SparseOperator::from_dense(vec![d.clone()], vec![d], &rows).unwrap();
        let w = v.apply_on(&op).unwrap();
        for p in 1..=3 {
            let a = renyi2_entropy(&v, p).unwrap();
            let b = renyi2_entropy(&w, p).unwrap();
            prop_assert!((a - b).abs() < TOL);
        }
    }

    #[test]
    fn layout_sits_at_spring_equilibrium(h in prop::collection::vec(0.0f64..3.0, 1..6)) {
        let g = entanglement_graph(&h);
        let total: f64 = h.iter().sum();
        prop_assume!(total > 1e-6);
        // ∇ Σ kᵢ |p − aᵢ|² vanishes at the equilibrium.
        let mut grad = [0.0; 2];
        for (k, a) in h.iter().zip(&g.anchors) {
            grad[0] += 2.0 * k * (g.equilibrium[0] - a[0]);
            grad[1] += 2.0 * k * (g.equilibrium[1] - a[1]);
        }
        prop_assert!(grad[0].abs() < 1e-9 && grad[1].abs() < 1e-9);
        for (w, k) in g.widths.iter().zip(&h) {
            prop_assert!((0.0..=1.0).contains(w));
            prop_assert!((w * h.iter().cloned().fold(0.0, f64::max) - k).abs() < 1e-9);
        }
    }
}

#[test]
fn blinking_singlet_half_looks_unpolarized() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    let singlet = SparseVector::from_dense(
        pol_dims(2),
        &[z, Complex64::new(s, 0.0), Complex64::new(-s, 0.0), z],
    )
    .unwrap();
    let n = 4000;
    let mut rho = [[z; 2]; 2];
    for seed in 0..n {
        let b = blink_sample_seeded(&singlet, seed).unwrap();
        let psi = untag(&b.states[0]).unwrap();
        let a = [psi.get(&[0]), psi.get(&[1])];
        for i in 0..2 {
            for j in 0..2 {
                rho[i][j] += a[i] * a[j].conj() / n as f64;
            }
        }
    }
    // Haar-random conditioning leaves each half maximally mixed.
    assert!((rho[0][0].re - 0.5).abs() < 0.03, "{rho:?}");
    assert!((rho[1][1].re - 0.5).abs() < 0.03, "{rho:?}");
    assert!(rho[0][1].norm() < 0.03, "{rho:?}");
}
