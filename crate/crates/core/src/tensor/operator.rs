// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;

use super::layout::Layout;
use super::{Dimension, SparseVector, TensorError, PRUNE_EPSILON};

/// Operator entries grouped by input key: `in -> [(out, value)]`.
pub(crate) type Columns = HashMap<u64, Vec<(u64, Complex64)>>;

/// A sparse complex matrix from `in_dims` to `out_dims`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    out: Layout,
    inp: Layout,
    entries: BTreeMap<(u64, u64), Complex64>,
}

impl SparseOperator {
    pub fn zeros(out_dims: Vec<Dimension>, in_dims: Vec<Dimension>) -> Result<Self, TensorError> {
        Ok(Self {
            out: Layout::new(out_dims)?,
            inp: Layout::new(in_dims)?,
            entries: BTreeMap::new(),
        })
    }

    pub fn identity(dims: Vec<Dimension>) -> Result<Self, TensorError> {
        let layout = Layout::new(dims)?;
        let entries = (0..layout.total())
            .map(|k| ((k, k), Complex64::new(1.0, 0.0)))
            .collect();
        Ok(Self {
            out: layout.clone(),
            inp: layout,
            entries,
        })
    }

    /// Dense construction; `rows[i][j]` is `⟨out i|op|in j⟩` in row-major key order.
    pub fn from_dense(
        out_dims: Vec<Dimension>,
        in_dims: Vec<Dimension>,
        rows: &[Vec<Complex64>],
    ) -> Result<Self, TensorError> {
        let mut op = Self::zeros(out_dims, in_dims)?;
        if rows.len() as u64 != op.out.total()
            || rows.iter().any(|r| r.len() as u64 != op.inp.total())
        {
            return Err(TensorError::DimensionMismatch(format!(
                "expected a {}x{} matrix",
                op.out.total(),
                op.inp.total()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v.norm() >= PRUNE_EPSILON {
                    op.entries.insert((i as u64, j as u64), v);
                }
            }
        }
        Ok(op)
    }

    /// `|ket⟩⟨bra|`.
    pub fn outer(ket: &SparseVector, bra: &SparseVector) -> Result<Self, TensorError> {
        let mut op = Self::zeros(ket.dims().to_vec(), bra.dims().to_vec())?;
        for (&i, &a) in ket.raw_entries() {
            for (&j, &b) in bra.raw_entries() {
                let v = a * b.conj();
                if v.norm() >= PRUNE_EPSILON {
                    op.entries.insert((i, j), v);
                }
            }
        }
        Ok(op)
    }

    /// Projector `|v⟩⟨v|`.
    pub fn projector(v: &SparseVector) -> Result<Self, TensorError> {
        Self::outer(v, v)
    }

    pub fn out_dims(&self) -> &[Dimension] {
        self.out.dims()
    }

    pub fn in_dims(&self) -> &[Dimension] {
        self.inp.dims()
    }

    pub(crate) fn out_layout(&self) -> &Layout {
        &self.out
    }

    pub(crate) fn in_layout(&self) -> &Layout {
        &self.inp
    }

    pub fn is_square(&self) -> bool {
        self.out.dims() == self.inp.dims()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds `value` at `(out, in)`.
    pub fn insert(
        &mut self,
        out_coords: &[usize],
        in_coords: &[usize],
        value: Complex64,
    ) -> Result<(), TensorError> {
        self.out.check_coords(out_coords)?;
        self.inp.check_coords(in_coords)?;
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(TensorError::NonFinite);
        }
        let key = (self.out.encode(out_coords), self.inp.encode(in_coords));
        let slot = self.entries.entry(key).or_default();
        *slot += value;
        if slot.norm() < PRUNE_EPSILON {
            self.entries.remove(&key);
        }
        Ok(())
    }

    pub fn get(&self, out_coords: &[usize], in_coords: &[usize]) -> Complex64 {
        if self.out.check_coords(out_coords).is_err() || self.inp.check_coords(in_coords).is_err() {
            return Complex64::new(0.0, 0.0);
        }
        self.entries
            .get(&(self.out.encode(out_coords), self.inp.encode(in_coords)))
            .copied()
            .unwrap_or_default()
    }

    /// Stored entries as `(out coords, in coords, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, Vec<usize>, Complex64)> + '_ {
        self.entries
            .iter()
            .map(|(&(o, i), &v)| (self.out.decode(o), self.inp.decode(i), v))
    }

    /// Dense row-major matrix; only sensible for small operators.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut m = vec![
            vec![Complex64::new(0.0, 0.0); self.inp.total() as usize];
            self.out.total() as usize
        ];
        for (&(o, i), &v) in &self.entries {
            m[o as usize][i as usize] = v;
        }
        m
    }

    pub(crate) fn columns(&self) -> Columns {
        let mut cols: Columns = HashMap::new();
        for (&(o, i), &v) in &self.entries {
            cols.entry(i).or_default().push((o, v));
        }
        cols
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self, TensorError> {
        let other = other.aligned_out(self.in_dims())?;
        let mut rows_of_self: HashMap<u64, Vec<(u64, Complex64)>> = HashMap::new();
        for (&(o, i), &v) in &self.entries {
            rows_of_self.entry(i).or_default().push((o, v));
        }
        let mut acc: BTreeMap<(u64, u64), Complex64> = BTreeMap::new();
        for (&(mid, j), &b) in &other.entries {
            if let Some(row) = rows_of_self.get(&mid) {
                for &(o, a) in row {
                    *acc.entry((o, j)).or_default() += a * b;
                }
            }
        }
        acc.retain(|_, v| v.norm() >= PRUNE_EPSILON);
        Ok(Self {
            out: self.out.clone(),
            inp: other.inp.clone(),
            entries: acc,
        })
    }

    pub fn dagger(&self) -> Self {
        Self {
            out: self.inp.clone(),
            inp: self.out.clone(),
            entries: self
                .entries
                .iter()
                .map(|(&(o, i), &v)| ((i, o), v.conj()))
                .collect(),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut entries: BTreeMap<_, _> = self
            .entries
            .iter()
            .map(|(&k, &v)| (k, v * factor))
            .collect();
        entries.retain(|_, v| v.norm() >= PRUNE_EPSILON);
        Self {
            out: self.out.clone(),
            inp: self.inp.clone(),
            entries,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, TensorError> {
        let other = other.aligned(self.out_dims(), self.in_dims())?;
        let mut entries = self.entries.clone();
        for (&k, &v) in &other.entries {
            *entries.entry(k).or_default() += v;
        }
        entries.retain(|_, v| v.norm() >= PRUNE_EPSILON);
        Ok(Self {
            out: self.out.clone(),
            inp: self.inp.clone(),
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TensorError> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Result<Self, TensorError> {
        let mut out_dims = self.out_dims().to_vec();
        out_dims.extend_from_slice(other.out_dims());
        let mut in_dims = self.in_dims().to_vec();
        in_dims.extend_from_slice(other.in_dims());
        let out = Layout::new(out_dims)?;
        let inp = Layout::new(in_dims)?;
        let (so, si) = (other.out.total(), other.inp.total());
        let mut entries = BTreeMap::new();
        for (&(oa, ia), &a) in &self.entries {
            for (&(ob, ib), &b) in &other.entries {
                entries.insert((oa * so + ob, ia * si + ib), a * b);
            }
        }
        Ok(Self { out, inp, entries })
    }

    /// Apply to a vector over exactly the input dimensions (in any order).
    pub fn apply(&self, v: &SparseVector) -> Result<SparseVector, TensorError> {
        let v = v.aligned_to(self.in_dims())?;
        let mut acc: HashMap<u64, Complex64> = HashMap::new();
        let cols = self.columns();
        for (&k, &a) in v.raw_entries() {
            if let Some(col) = cols.get(&k) {
                for &(o, c) in col {
                    *acc.entry(o).or_default() += c * a;
                }
            }
        }
        Ok(SparseVector::from_accumulator(self.out.clone(), acc))
    }

    /// Rename dimensions on both sides; `renames` maps old to new names.
    pub fn renamed(&self, renames: &[(&str, &str)]) -> Result<Self, TensorError> {
        let rename = |dims: &[Dimension]| -> Vec<Dimension> {
            dims.iter()
                .map(|d| {
                    renames
                        .iter()
                        .find(|(from, _)| *from == d.name())
                        .map_or_else(|| d.clone(), |(_, to)| d.renamed(*to))
                })
                .collect()
        };
        Ok(Self {
            out: Layout::new(rename(self.out_dims()))?,
            inp: Layout::new(rename(self.in_dims()))?,
            entries: self.entries.clone(),
        })
    }

    /// The same operator with its axes (both sides) reordered by name.
    pub fn permuted(&self, order: &[&str]) -> Result<Self, TensorError> {
        let oa = self.out.positions_by_name(order)?;
        let ia = self.inp.positions_by_name(order)?;
        let out_dims: Vec<Dimension> = oa.iter().map(|&a| self.out_dims()[a].clone()).collect();
        let in_dims: Vec<Dimension> = ia.iter().map(|&a| self.in_dims()[a].clone()).collect();
        self.aligned(&out_dims, &in_dims)
    }

    /// Reorder both sides to the given axis orders (same axis sets).
    pub fn aligned(
        &self,
        out_dims: &[Dimension],
        in_dims: &[Dimension],
    ) -> Result<Self, TensorError> {
        if self.out_dims() == out_dims && self.in_dims() == in_dims {
            return Ok(self.clone());
        }
        if out_dims.len() != self.out.rank() || in_dims.len() != self.inp.rank() {
            return Err(TensorError::DimensionMismatch(
                "operator rank differs".into(),
            ));
        }
        let oa = self.out.positions_of(out_dims)?;
        let ia = self.inp.positions_of(in_dims)?;
        let out = Layout::new(out_dims.to_vec())?;
        let inp = Layout::new(in_dims.to_vec())?;
        let entries = self
            .entries
            .iter()
            .map(|(&(o, i), &v)| {
                (
                    (
                        self.out.sub_key(o, &oa, &out),
                        self.inp.sub_key(i, &ia, &inp),
                    ),
                    v,
                )
            })
            .collect();
        Ok(Self { out, inp, entries })
    }

    fn aligned_out(&self, out_dims: &[Dimension]) -> Result<Self, TensorError> {
        let in_dims = self.in_dims().to_vec();
        self.aligned(out_dims, &in_dims)
    }

    /// Largest entrywise deviation from `other`, or `None` if axes differ.
    pub fn max_deviation(&self, other: &Self) -> Option<f64> {
        let other = other.aligned(self.out_dims(), self.in_dims()).ok()?;
        let keys: BTreeSet<(u64, u64)> = self
            .entries
            .keys()
            .chain(other.entries.keys())
            .copied()
            .collect();
        Some(keys.into_iter().fold(0.0, |m, k| {
            let a = self.entries.get(&k).copied().unwrap_or_default();
            let b = other.entries.get(&k).copied().unwrap_or_default();
            m.max((a - b).norm())
        }))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_deviation(other).is_some_and(|d| d <= tol)
    }

    /// `U†U = I` to within `tol` (entrywise).
    pub fn is_unitary(&self, tol: f64) -> bool {
        if self.out.total() != self.inp.total() {
            return false;
        }
        let Ok(prod) = self.dagger().compose(self) else {
            return false;
        };
        let Ok(id) = SparseOperator::identity(self.in_dims().to_vec()) else {
            return false;
        };
        prod.approx_eq(&id, tol)
    }

    /// `P² = P` and `P† = P` to within `tol`.
    pub fn is_projection(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let idempotent = self
            .compose(self)
            .map(|p2| p2.approx_eq(self, tol))
            .unwrap_or(false);
        idempotent && self.dagger().approx_eq(self, tol)
    }
}
