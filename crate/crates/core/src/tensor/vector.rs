// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;

use super::layout::Layout;
use super::operator::{Columns, SparseOperator};
use super::{Dimension, TensorError, NORMALIZATION_TOLERANCE, PRUNE_EPSILON};

/// How one block of a block-diagonal operator acts, as chosen by
/// [`SparseVector::apply_blockwise`].
#[derive(Clone, Copy, Debug)]
pub enum Block<'a> {
    Identity,
    Zero,
    Apply(&'a SparseOperator),
}

/// A complex vector over a product of named dimensions, storing only the
/// non-negligible amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    layout: Layout,
    entries: BTreeMap<u64, Complex64>,
}

impl SparseVector {
    /// The zero vector over `dims`.
    pub fn zeros(dims: Vec<Dimension>) -> Result<Self, TensorError> {
        Ok(Self {
            layout: Layout::new(dims)?,
            entries: BTreeMap::new(),
        })
    }

    /// A vector with no dimensions holding a single amplitude.
    pub fn scalar(value: Complex64) -> Self {
        let mut v = Self::zeros(Vec::new()).expect("empty layout");
        v.entries.insert(0, value);
        v.prune();
        v
    }

    pub fn basis(dims: Vec<Dimension>, coords: &[usize]) -> Result<Self, TensorError> {
        let mut v = Self::zeros(dims)?;
        v.insert(coords, Complex64::new(1.0, 0.0))?;
        Ok(v)
    }

    /// Basis vector addressed by coordinate labels, e.g. `["H", "V"]`.
    pub fn basis_by_labels(dims: Vec<Dimension>, labels: &[&str]) -> Result<Self, TensorError> {
        let coords = dims
            .iter()
            .zip(labels)
            .map(|(d, l)| {
                d.index_of(l).ok_or_else(|| {
                    TensorError::DimensionMismatch(format!("`{}` has no label `{l}`", d.name()))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::basis(dims, &coords)
    }

    pub fn from_entries<I>(dims: Vec<Dimension>, entries: I) -> Result<Self, TensorError>
    where
        I: IntoIterator<Item = (Vec<usize>, Complex64)>,
    {
        let mut v = Self::zeros(dims)?;
        for (coords, amp) in entries {
            v.insert(&coords, amp)?;
        }
        Ok(v)
    }

    /// Dense construction for small vectors; `values` is in row-major order.
    pub fn from_dense(dims: Vec<Dimension>, values: &[Complex64]) -> Result<Self, TensorError> {
        let layout = Layout::new(dims)?;
        if values.len() as u64 != layout.total() {
            return Err(TensorError::DimensionMismatch(format!(
                "expected {} dense values, got {}",
                layout.total(),
                values.len()
            )));
        }
        let mut entries = BTreeMap::new();
        for (k, &amp) in values.iter().enumerate() {
            check_finite(amp)?;
            entries.insert(k as u64, amp);
        }
        let mut v = Self { layout, entries };
        v.prune();
        Ok(v)
    }

    pub(crate) fn from_raw(layout: Layout, entries: BTreeMap<u64, Complex64>) -> Self {
        let mut v = Self { layout, entries };
        v.prune();
        v
    }

    pub(crate) fn from_accumulator(layout: Layout, acc: HashMap<u64, Complex64>) -> Self {
        Self::from_raw(layout, acc.into_iter().collect())
    }

    /// Adds `amp` to the amplitude at `coords`.
    pub fn insert(&mut self, coords: &[usize], amp: Complex64) -> Result<(), TensorError> {
        self.layout.check_coords(coords)?;
        check_finite(amp)?;
        let key = self.layout.encode(coords);
        let slot = self.entries.entry(key).or_default();
        *slot += amp;
        if slot.norm() < PRUNE_EPSILON {
            self.entries.remove(&key);
        }
        Ok(())
    }

    pub fn dims(&self) -> &[Dimension] {
        self.layout.dims()
    }

    pub fn dim(&self, name: &str) -> Option<&Dimension> {
        self.layout.position(name).map(|p| &self.layout.dims()[p])
    }

    /// Number of stored (non-zero) amplitudes.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Nominal dimension of the full space.
    pub fn nominal_size(&self) -> u64 {
        self.layout.total()
    }

    pub fn get(&self, coords: &[usize]) -> Complex64 {
        if self.layout.check_coords(coords).is_err() {
            return Complex64::new(0.0, 0.0);
        }
        self.entries
            .get(&self.layout.encode(coords))
            .copied()
            .unwrap_or_default()
    }

    /// Stored entries as `(coordinates, amplitude)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, Complex64)> + '_ {
        self.entries
            .iter()
            .map(|(&k, &a)| (self.layout.decode(k), a))
    }

    pub(crate) fn raw_entries(&self) -> &BTreeMap<u64, Complex64> {
        &self.entries
    }

    /// Coordinate labels of a stored key.
    pub fn labels_of(&self, coords: &[usize]) -> Vec<&str> {
        self.dims()
            .iter()
            .zip(coords)
            .map(|(d, &c)| d.label(c))
            .collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    pub fn ensure_normalized(&self) -> Result<(), TensorError> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(TensorError::NotNormalized(self.norm_sqr()))
        }
    }

    pub fn normalized(&self) -> Result<Self, TensorError> {
        let n = self.norm();
        if n < PRUNE_EPSILON {
            return Err(TensorError::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(&k, &a)| (k, a * factor))
            .collect();
        Self::from_raw(self.layout.clone(), entries)
    }

    pub fn add(&self, other: &Self) -> Result<Self, TensorError> {
        let other = other.aligned_to(self.dims())?;
        let mut entries = self.entries.clone();
        for (&k, &a) in &other.entries {
            *entries.entry(k).or_default() += a;
        }
        Ok(Self::from_raw(self.layout.clone(), entries))
    }

    /// `|self⟩ ⊗ |other⟩`; dimension names must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self, TensorError> {
        let mut dims = self.dims().to_vec();
        dims.extend_from_slice(other.dims());
        let layout = Layout::new(dims)?;
        let stride = other.layout.total();
        let mut entries = BTreeMap::new();
        for (&ka, &a) in &self.entries {
            for (&kb, &b) in &other.entries {
                entries.insert(ka * stride + kb, a * b);
            }
        }
        Ok(Self::from_raw(layout, entries))
    }

    /// `⟨self|other⟩`, conjugating `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64, TensorError> {
        let other = other.aligned_to(self.dims())?;
        let (small, large, conj_small) = if self.len() <= other.len() {
            (&self.entries, &other.entries, true)
        } else {
            (&other.entries, &self.entries, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &a) in small {
            if let Some(&b) = large.get(k) {
                acc += if conj_small {
                    a.conj() * b
                } else {
                    b.conj() * a
                };
            }
        }
        Ok(acc)
    }

    /// The same vector with dimensions reordered to match `dims`
    /// (which must be the same set of axes).
    pub fn aligned_to(&self, dims: &[Dimension]) -> Result<Self, TensorError> {
        if self.dims() == dims {
            return Ok(self.clone());
        }
        if dims.len() != self.dims().len() {
            return Err(TensorError::DimensionMismatch(format!(
                "rank {} vs rank {}",
                self.dims().len(),
                dims.len()
            )));
        }
        let axes = self.layout.positions_of(dims)?;
        let layout = Layout::new(dims.to_vec())?;
        let entries = self
            .entries
            .iter()
            .map(|(&k, &a)| (self.layout.sub_key(k, &axes, &layout), a))
            .collect();
        Ok(Self::from_raw(layout, entries))
    }

    /// Reorder dimensions by name.
    pub fn permuted(&self, order: &[&str]) -> Result<Self, TensorError> {
        let axes = self.layout.positions_by_name(order)?;
        let dims: Vec<Dimension> = axes.iter().map(|&a| self.dims()[a].clone()).collect();
        self.aligned_to(&dims)
    }

    /// Rename dimensions; `renames` maps old names to new names.
    pub fn renamed(&self, renames: &[(&str, &str)]) -> Result<Self, TensorError> {
        let mut dims = self.dims().to_vec();
        for (from, to) in renames {
            let pos = self
                .layout
                .position(from)
                .ok_or_else(|| TensorError::MissingDimension(from.to_string()))?;
            dims[pos] = dims[pos].renamed(*to);
        }
        Ok(Self {
            layout: Layout::new(dims)?,
            entries: self.entries.clone(),
        })
    }

    /// `(I ⊗ … ⊗ op ⊗ … ⊗ I)|self⟩` where `op`'s input dimensions name a
    /// subset of this vector's dimensions. The output dimensions of `op`
    /// replace its inputs in place, so basis changes relabel axes.
    pub fn apply_on(&self, op: &SparseOperator) -> Result<Self, TensorError> {
        let axes = self.layout.positions_of(op.in_dims())?;
        if op.out_dims().len() != op.in_dims().len() {
            return Err(TensorError::DimensionMismatch(
                "operator must map each input axis to one output axis".into(),
            ));
        }
        let mut dims = self.dims().to_vec();
        for (&a, d) in axes.iter().zip(op.out_dims()) {
            dims[a] = d.clone();
        }
        let out_layout = Layout::new(dims)?;
        let columns = op.columns();
        let same_shape = op
            .in_dims()
            .iter()
            .zip(op.out_dims())
            .all(|(i, o)| i.size() == o.size());
        let mut acc: HashMap<u64, Complex64> = HashMap::with_capacity(self.entries.len());
        let mut coords = vec![0usize; self.layout.rank()];
        for (&key, &amp) in &self.entries {
            let sub = self.layout.sub_key(key, &axes, op.in_layout());
            let Some(col) = columns.get(&sub) else {
                continue;
            };
            for &(out_sub, c) in col {
                let new_key = if same_shape {
                    self.layout
                        .with_sub_key(key, &axes, op.out_layout(), out_sub)
                } else {
                    self.layout.decode_into(key, &mut coords);
                    for (i, &a) in axes.iter().enumerate() {
                        coords[a] = op.out_layout().coord(out_sub, i);
                    }
                    out_layout.encode(&coords)
                };
                *acc.entry(new_key).or_default() += c * amp;
            }
        }
        Ok(Self::from_accumulator(out_layout, acc))
    }

    /// Applies a block-diagonal operator `Σ_c |c⟩⟨c| ⊗ B_c`, where `c` runs
    /// over the coordinates of `control` and each block `B_c`, chosen by
    /// `select`, acts on `targets`. Blocks must keep the target dimensions.
    pub fn apply_blockwise<'a, F>(
        &self,
        control: &[&str],
        targets: &[Dimension],
        mut select: F,
    ) -> Result<Self, TensorError>
    where
        F: FnMut(&[usize]) -> Block<'a>,
    {
        let control_axes = self.layout.positions_by_name(control)?;
        let target_axes = self.layout.positions_of(targets)?;
        let target_layout = Layout::new(targets.to_vec())?;
        let mut cache: Vec<(*const SparseOperator, Columns)> = Vec::new();
        let mut acc: HashMap<u64, Complex64> = HashMap::with_capacity(self.entries.len());
        let mut ctrl = vec![0usize; control_axes.len()];
        for (&key, &amp) in &self.entries {
            for (slot, &a) in ctrl.iter_mut().zip(&control_axes) {
                *slot = self.layout.coord(key, a);
            }
            match select(&ctrl) {
                Block::Identity => *acc.entry(key).or_default() += amp,
                Block::Zero => {}
                Block::Apply(op) => {
                    let ptr = op as *const SparseOperator;
                    let idx = match cache.iter().position(|(p, _)| *p == ptr) {
                        Some(i) => i,
                        None => {
                            if op.in_dims() != targets || op.out_dims() != targets {
                                return Err(TensorError::DimensionMismatch(
                                    "block operator must act on the target dimensions".into(),
                                ));
                            }
                            cache.push((ptr, op.columns()));
                            cache.len() - 1
                        }
                    };
                    let sub = self.layout.sub_key(key, &target_axes, &target_layout);
                    if let Some(col) = cache[idx].1.get(&sub) {
                        for &(out_sub, c) in col {
                            let k = self.layout.with_sub_key(
                                key,
                                &target_axes,
                                &target_layout,
                                out_sub,
                            );
                            *acc.entry(k).or_default() += c * amp;
                        }
                    }
                }
            }
        }
        Ok(Self::from_accumulator(self.layout.clone(), acc))
    }

    /// Contract `bra` (whose dimensions are a subset of ours) against this
    /// vector: `⟨bra|_S |self⟩`. The contracted dimensions are removed.
    pub fn contract(&self, bra: &Self) -> Result<Self, TensorError> {
        let bra_axes = self.layout.positions_of(bra.dims())?;
        let rest_axes: Vec<usize> = (0..self.layout.rank())
            .filter(|a| !bra_axes.contains(a))
            .collect();
        let rest_dims = rest_axes.iter().map(|&a| self.dims()[a].clone()).collect();
        let rest_layout = Layout::new(rest_dims)?;
        let mut acc: HashMap<u64, Complex64> = HashMap::new();
        for (&key, &amp) in &self.entries {
            let b = self.layout.sub_key(key, &bra_axes, &bra.layout);
            if let Some(&coef) = bra.entries.get(&b) {
                let r = self.layout.sub_key(key, &rest_axes, &rest_layout);
                *acc.entry(r).or_default() += coef.conj() * amp;
            }
        }
        Ok(Self::from_accumulator(rest_layout, acc))
    }

    /// Keys (over `dims`, packed in that order) carrying non-zero marginal weight.
    pub fn support_of(&self, dims: &[Dimension]) -> Result<Vec<Vec<usize>>, TensorError> {
        let axes = self.layout.positions_of(dims)?;
        let sub = Layout::new(dims.to_vec())?;
        let mut keys: Vec<u64> = self
            .entries
            .keys()
            .map(|&k| self.layout.sub_key(k, &axes, &sub))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        Ok(keys.into_iter().map(|k| sub.decode(k)).collect())
    }

    /// `Tr[ρ_K²]` for the reduced state on the dimensions `kept`.
    pub fn reduced_purity(&self, kept: &[Dimension]) -> Result<f64, TensorError> {
        self.ensure_normalized()?;
        let kept_axes = self.layout.positions_of(kept)?;
        let rest_axes: Vec<usize> = (0..self.layout.rank())
            .filter(|a| !kept_axes.contains(a))
            .collect();
        let kept_layout = Layout::new(kept.to_vec())?;
        let rest_layout = Layout::new(rest_axes.iter().map(|&a| self.dims()[a].clone()).collect())?;
        let mut groups: BTreeMap<u64, Vec<(u64, Complex64)>> = BTreeMap::new();
        for (&key, &amp) in &self.entries {
            let r = self.layout.sub_key(key, &rest_axes, &rest_layout);
            let k = self.layout.sub_key(key, &kept_axes, &kept_layout);
            groups.entry(r).or_default().push((k, amp));
        }
        let mut rho: HashMap<(u64, u64), Complex64> = HashMap::new();
        for group in groups.values() {
            for &(i, a) in group {
                for &(j, b) in group {
                    *rho.entry((i, j)).or_default() += a * b.conj();
                }
            }
        }
        Ok(rho.values().map(|z| z.norm_sqr()).sum())
    }

    /// Dimensions tagged with `particle`, in layout order.
    pub fn particle_dims(&self, particle: usize) -> Vec<Dimension> {
        self.dims()
            .iter()
            .filter(|d| d.particle() == Some(particle))
            .cloned()
            .collect()
    }

    /// Distinct particle tags present, ascending.
    pub fn particles(&self) -> Vec<usize> {
        let mut tags: Vec<usize> = self.dims().iter().filter_map(Dimension::particle).collect();
        tags.sort_unstable();
        tags.dedup();
        tags
    }

    /// Purity of the reduced state of one tagged particle.
    pub fn subsystem_purity(&self, particle: usize) -> Result<f64, TensorError> {
        let dims = self.particle_dims(particle);
        if dims.is_empty() {
            return Err(TensorError::MissingDimension(format!(
                "particle {particle}"
            )));
        }
        self.reduced_purity(&dims)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let Ok(other) = other.aligned_to(self.dims()) else {
            return false;
        };
        let keys: std::collections::BTreeSet<u64> = self
            .entries
            .keys()
            .chain(other.entries.keys())
            .copied()
            .collect();
        keys.into_iter().all(|k| {
            let a = self.entries.get(&k).copied().unwrap_or_default();
            let b = other.entries.get(&k).copied().unwrap_or_default();
            (a - b).norm() <= tol
        })
    }

    fn prune(&mut self) {
        self.entries.retain(|_, a| a.norm() >= PRUNE_EPSILON);
    }
}

fn check_finite(amp: Complex64) -> Result<(), TensorError> {
    if amp.re.is_finite() && amp.im.is_finite() {
        Ok(())
    } else {
        Err(TensorError::NonFinite)
    }
}
