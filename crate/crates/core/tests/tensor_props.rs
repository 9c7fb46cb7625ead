// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Sparse tensor algebra against a dense row-major oracle.

use num_complex::Complex64;
use photonlab::tensor::{Dimension, SparseOperator, SparseVector, PRUNE_EPSILON};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn dims_of(sizes: &[usize]) -> Vec<Dimension> {
    sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| Dimension::indexed(format!("a{i}"), s).unwrap())
        .collect()
}

/// Row-major strides, last axis fastest.
fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![1; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        out[i] = out[i + 1] * sizes[i + 1];
    }
    out
}

fn decode(mut k: usize, sizes: &[usize]) -> Vec<usize> {
    let mut c = vec![0; sizes.len()];
    for i in (0..sizes.len()).rev() {
        c[i] = k % sizes[i];
        k /= sizes[i];
    }
    c
}

fn encode(c: &[usize], sizes: &[usize]) -> usize {
    c.iter().zip(strides(sizes)).map(|(a, s)| a * s).sum()
}

fn dense(v: &SparseVector) -> Vec<Complex64> {
    let sizes: Vec<usize> = v.dims().iter().map(Dimension::size).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); sizes.iter().product()];
    for (c, a) in v.iter() {
        out[encode(&c, &sizes)] = a;
    }
    out
}

/// `(I ⊗ op ⊗ I) v` with `op` acting on `axes` (in operator order), by
/// explicit index bookkeeping.
fn dense_apply(
    v: &[Complex64],
    sizes: &[usize],
    axes: &[usize],
    op: &[Vec<Complex64>],
) -> Vec<Complex64> {
    let sub: Vec<usize> = axes.iter().map(|&a| sizes[a]).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (k, slot) in out.iter_mut().enumerate() {
        let c = decode(k, sizes);
        let row: Vec<usize> = axes.iter().map(|&a| c[a]).collect();
        let i = encode(&row, &sub);
        for (j, &m) in op[i].iter().enumerate() {
            let col = decode(j, &sub);
            let mut src = c.clone();
            for (n, &a) in axes.iter().enumerate() {
                src[a] = col[n];
            }
            *slot += m * v[encode(&src, sizes)];
        }
    }
    out
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn complex() -> impl Strategy<Value = Complex64> {
    prop_oneof![
        1 => Just(Complex64::new(0.0, 0.0)),
        4 => (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im)),
    ]
}

/// Axis sizes with at most 256 entries in total.
fn shape() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..=4, 1..=4).prop_filter("at most 2^8 entries", |s| {
        s.iter().product::<usize>() <= 256
    })
}

/// A shape, a dense vector on it, and an ordered subset of axes.
fn vector_and_axes() -> impl Strategy<Value = (Vec<usize>, Vec<Complex64>, Vec<usize>)> {
    shape().prop_flat_map(|sizes| {
        let n: usize = sizes.iter().product();
        let rank = sizes.len();
        (
            Just(sizes),
            prop::collection::vec(complex(), n),
            Just((0..rank).collect::<Vec<_>>()).prop_shuffle(),
            1..=rank,
        )
            .prop_map(|(s, v, perm, m)| (s, v, perm[..m].to_vec()))
    })
}

/// Gram-Schmidt on the columns of a random matrix.
fn unitary_from(raw: &[Complex64], n: usize) -> Vec<Vec<Complex64>> {
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    for j in 0..n {
        let mut c: Vec<Complex64> = (0..n).map(|i| raw[i * n + j]).collect();
        // Keep the matrix well conditioned.
        c[j] += Complex64::new(2.0, 0.0);
        for q in &cols {
            let d: Complex64 = q.iter().zip(&c).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in c.iter_mut().zip(q) {
                *x -= d * y;
            }
        }
        let l = norm(&c);
        cols.push(c.into_iter().map(|x| x / l).collect());
    }
    (0..n)
        .map(|i| (0..n).map(|j| cols[j][i]).collect())
        .collect()
}

fn operator_on(sizes: &[usize], axes: &[usize], rows: &[Vec<Complex64>]) -> SparseOperator {
    let dims = dims_of(sizes);
    let sub: Vec<Dimension> = axes.iter().map(|&a| dims[a].clone()).collect();
    SparseOperator::from_dense(sub.clone(), sub, rows).unwrap()
}

proptest! {
    #[test]
    fn apply_on_matches_kronecker_oracle(
        (sizes, values, axes) in vector_and_axes(),
        raw in prop::collection::vec(complex(), 256),
    ) {
        let m: usize = axes.iter().map(|&a| sizes[a]).product();
        let rows: Vec<Vec<Complex64>> =
            (0..m).map(|i| (0..m).map(|j| raw[(i * m + j) % raw.len()]).collect()).collect();
        let v = SparseVector::from_dense(dims_of(&sizes), &values).unwrap();
        let got = dense(&v.apply_on(&operator_on(&sizes, &axes, &rows)).unwrap());
        let want = dense_apply(&values, &sizes, &axes, &rows);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).norm() < TOL, "{g} vs {w}");
        }
    }

    #[test]
    fn unitaries_preserve_norm(
        (sizes, values, axes) in vector_and_axes(),
        raw in prop::collection::vec(complex(), 256),
    ) {
        let m: usize = axes.iter().map(|&a| sizes[a]).product();
        prop_assume!(m * m <= raw.len());
        let u = unitary_from(&raw, m);
        let op = operator_on(&sizes, &axes, &u);
        prop_assert!(op.is_unitary(TOL));
        let v = SparseVector::from_dense(dims_of(&sizes), &values).unwrap();
        let out = v.apply_on(&op).unwrap();
        prop_assert!((out.norm() - v.norm()).abs() < TOL);
    }

    #[test]
    fn tensor_norm_is_multiplicative(
        a in prop::collection::vec(complex(), 6),
        b in prop::collection::vec(complex(), 4),
    ) {
        let va = SparseVector::from_dense(vec![Dimension::indexed("p", 6).unwrap()], &a).unwrap();
        let vb = SparseVector::from_dense(vec![Dimension::indexed("q", 4).unwrap()], &b).unwrap();
        let ab = va.tensor(&vb).unwrap();
        prop_assert!((ab.norm() - va.norm() * vb.norm()).abs() < TOL);
        let d = dense(&ab);
        for i in 0..6 {
            for j in 0..4 {
                prop_assert!((d[i * 4 + j] - a[i] * b[j]).norm() < TOL);
            }
        }
    }

    #[test]
    fn tiny_amplitudes_are_pruned(
        values in prop::collection::vec(complex(), 16),
        mask in prop::collection::vec(any::<bool>(), 16),
    ) {
        let scaled: Vec<Complex64> = values
            .iter()
            .zip(&mask)
            .map(|(&z, &tiny)| if tiny { z * 1e-13 } else { z })
            .collect();
        let v = SparseVector::from_dense(dims_of(&[4, 4]), &scaled).unwrap();
        let expected = scaled.iter().filter(|z| z.norm() >= PRUNE_EPSILON).count();
        prop_assert_eq!(v.len(), expected);
        prop_assert!(v.iter().all(|(_, a)| a.norm() >= PRUNE_EPSILON));
    }

    #[test]
    fn permutation_round_trips(
        (sizes, values, _) in vector_and_axes(),
        order in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let v = SparseVector::from_dense(dims_of(&sizes), &values).unwrap();
        let names: Vec<String> = order
            .iter()
            .filter(|&&i| i < sizes.len())
            .map(|i| format!("a{i}"))
            .collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let p = v.permuted(&refs).unwrap();
        prop_assert!(p.approx_eq(&v, 0.0));
        let original: Vec<String> = (0..sizes.len()).map(|i| format!("a{i}")).collect();
        let back: Vec<&str> = original.iter().map(String::as_str).collect();
        let q = p.permuted(&back).unwrap();
        prop_assert_eq!(dense(&q), dense(&v));
    }

    #[test]
    fn contraction_matches_partial_inner_product(
        a in prop::collection::vec(complex(), 12),
        bra in prop::collection::vec(complex(), 3),
    ) {
        let dims = dims_of(&[4, 3]);
        let v = SparseVector::from_dense(dims.clone(), &a).unwrap();
        let b = SparseVector::from_dense(vec![dims[1].clone()], &bra).unwrap();
        let got = dense(&v.contract(&b).unwrap());
        for (i, g) in got.iter().enumerate() {
            let want: Complex64 = (0..3).map(|j| bra[j].conj() * a[i * 3 + j]).sum();
            prop_assert!((g - want).norm() < TOL);
        }
    }
}
