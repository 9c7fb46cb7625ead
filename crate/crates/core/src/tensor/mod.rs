// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Sparse complex vectors and operators over named tensor dimensions.
//!
//! Every axis is a [`Dimension`] with a name and an ordered list of labels.
//! Multi-indices are packed row-major into a `u64` key, so a three-photon
//! space of ~10⁹ nominal dimensions costs only as much memory as the number
//! of non-zero amplitudes. Operators can be applied to a subset of axes
//! ([`SparseVector::apply_on`]) or as a block-diagonal family indexed by
//! other axes ([`SparseVector::apply_blockwise`]) without materializing the
//! identity on the untouched part.

mod dimension;
mod layout;
mod operator;
mod vector;

use thiserror::Error;

pub use dimension::{Dimension, PARTICLE_SEPARATOR};
pub use num_complex::Complex64;
pub use operator::SparseOperator;
pub use vector::{Block, SparseVector};

/// Amplitudes with magnitude below this are dropped after every operation.
pub const PRUNE_EPSILON: f64 = 1e-12;

/// Allowed deviation of `‖v‖²` from 1 for inputs that must be normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("dimension `{name}` {reason}")]
    InvalidDimension { name: String, reason: String },
    #[error("dimension name `{0}` used twice")]
    NameCollision(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dimension `{0}` not found")]
    MissingDimension(String),
    #[error("index space too large for 64-bit keys")]
    KeyOverflow,
    #[error("coordinate {coord} out of range for `{dim}` (size {size})")]
    OutOfBounds {
        dim: String,
        coord: usize,
        size: usize,
    },
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("vector is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("vector has zero norm")]
    ZeroNorm,
}

/// Shorthand for a complex number.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pol() -> Dimension {
        Dimension::new("pol", ["H", "V"]).unwrap()
    }

    fn dir() -> Dimension {
        Dimension::new("dir", ["→", "↑", "←", "↓"]).unwrap()
    }

    #[test]
    fn basis_tensor_product() {
        let h = SparseVector::basis_by_labels(vec![pol().tagged(1)], &["H"]).unwrap();
        let v = SparseVector::basis_by_labels(vec![pol().tagged(2)], &["V"]).unwrap();
        let hv = h.tensor(&v).unwrap();
        assert_eq!(hv.len(), 1);
        assert_eq!(hv.get(&[0, 1]), c64(1.0, 0.0));
    }

    #[test]
    fn tensor_rejects_name_collision() {
        let h = SparseVector::basis(vec![pol()], &[0]).unwrap();
        assert!(matches!(h.tensor(&h), Err(TensorError::NameCollision(_))));
    }

    #[test]
    fn superposition_distributes() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus =
            SparseVector::from_dense(vec![pol().tagged(1)], &[c64(s, 0.0), c64(s, 0.0)]).unwrap();
        let h = SparseVector::basis(vec![pol().tagged(2)], &[0]).unwrap();
        let out = plus.tensor(&h).unwrap();
        assert!((out.get(&[0, 0]) - c64(s, 0.0)).norm() < 1e-15);
        assert!((out.get(&[1, 0]) - c64(s, 0.0)).norm() < 1e-15);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn bit_flip_on_polarization_subset() {
        let v = SparseVector::basis_by_labels(vec![dir(), pol()], &["→", "H"]).unwrap();
        let x = SparseOperator::from_dense(
            vec![pol()],
            vec![pol()],
            &[
                vec![c64(0.0, 0.0), c64(1.0, 0.0)],
                vec![c64(1.0, 0.0), c64(0.0, 0.0)],
            ],
        )
        .unwrap();
        let out = v.apply_on(&x).unwrap();
        assert_eq!(out.get(&[0, 1]), c64(1.0, 0.0));
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn apply_rejects_relabelled_axis() {
        let v = SparseVector::basis(vec![pol()], &[0]).unwrap();
        let other = Dimension::new("pol", ["V", "H"]).unwrap();
        let id = SparseOperator::identity(vec![other]).unwrap();
        assert!(matches!(
            v.apply_on(&id),
            Err(TensorError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn contraction_of_product_recovers_factor() {
        let h = SparseVector::basis_by_labels(vec![pol().tagged(1)], &["H"]).unwrap();
        let v = SparseVector::basis_by_labels(vec![pol().tagged(2)], &["V"]).unwrap();
        let rest = h.tensor(&v).unwrap().contract(&h).unwrap();
        assert!(rest.approx_eq(&v, 1e-15));
        assert!((rest.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn contraction_missing_dims_is_an_error() {
        let h = SparseVector::basis(vec![pol().tagged(1)], &[0]).unwrap();
        let d = SparseVector::basis(vec![dir()], &[0]).unwrap();
        assert!(h.contract(&d).is_err());
    }

    #[test]
    fn purity_rejects_unnormalized() {
        let v = SparseVector::from_dense(
            vec![pol().tagged(1), pol().tagged(2)],
            &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(
            v.subsystem_purity(1),
            Err(TensorError::NotNormalized(_))
        ));
    }

    #[test]
    fn prunes_cancelled_amplitudes() {
        let mut v = SparseVector::zeros(vec![pol()]).unwrap();
        v.insert(&[0], c64(0.5, 0.0)).unwrap();
        v.insert(&[0], c64(-0.5, 1e-14)).unwrap();
        assert!(v.is_empty());
        assert!(v.insert(&[0], c64(f64::NAN, 0.0)).is_err());
    }
}
