// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use super::{Dimension, TensorError};

/// Row-major packing of a multi-index into a single `u64` key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    dims: Vec<Dimension>,
    strides: Vec<u64>,
    total: u64,
}

impl Layout {
    pub fn new(dims: Vec<Dimension>) -> Result<Self, TensorError> {
        for (i, d) in dims.iter().enumerate() {
            if dims[..i].iter().any(|o| o.name() == d.name()) {
                return Err(TensorError::NameCollision(d.name().to_string()));
            }
        }
        let mut strides = vec![0u64; dims.len()];
        let mut total: u64 = 1;
        for (i, d) in dims.iter().enumerate().rev() {
            strides[i] = total;
            total = total
                .checked_mul(d.size() as u64)
                .ok_or(TensorError::KeyOverflow)?;
        }
        Ok(Self {
            dims,
            strides,
            total,
        })
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name() == name)
    }

    pub fn coord(&self, key: u64, axis: usize) -> usize {
        ((key / self.strides[axis]) % self.dims[axis].size() as u64) as usize
    }

    pub fn decode_into(&self, key: u64, out: &mut [usize]) {
        for (axis, slot) in out.iter_mut().enumerate().take(self.dims.len()) {
            *slot = self.coord(key, axis);
        }
    }

    pub fn decode(&self, key: u64) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        self.decode_into(key, &mut out);
        out
    }

    pub fn encode(&self, coords: &[usize]) -> u64 {
        coords
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| c as u64 * s)
            .sum()
    }

    pub fn check_coords(&self, coords: &[usize]) -> Result<(), TensorError> {
        if coords.len() != self.dims.len() {
            return Err(TensorError::DimensionMismatch(format!(
                "expected {} coordinates, got {}",
                self.dims.len(),
                coords.len()
            )));
        }
        for (d, &c) in self.dims.iter().zip(coords) {
            if c >= d.size() {
                return Err(TensorError::OutOfBounds {
                    dim: d.name().to_string(),
                    coord: c,
                    size: d.size(),
                });
            }
        }
        Ok(())
    }

    /// Positions of `names` in this layout, each matched on the full dimension.
    pub fn positions_of(&self, dims: &[Dimension]) -> Result<Vec<usize>, TensorError> {
        dims.iter()
            .map(|d| {
                let pos = self
                    .position(d.name())
                    .ok_or_else(|| TensorError::MissingDimension(d.name().to_string()))?;
                if &self.dims[pos] != d {
                    return Err(TensorError::DimensionMismatch(format!(
                        "`{}` differs in size or label order",
                        d.name()
                    )));
                }
                Ok(pos)
            })
            .collect()
    }

    pub fn positions_by_name(&self, names: &[&str]) -> Result<Vec<usize>, TensorError> {
        names
            .iter()
            .map(|n| {
                self.position(n)
                    .ok_or_else(|| TensorError::MissingDimension(n.to_string()))
            })
            .collect()
    }

    /// Key of the sub-multi-index at `axes`, packed in the order given.
    pub fn sub_key(&self, key: u64, axes: &[usize], sub: &Layout) -> u64 {
        axes.iter()
            .zip(&sub.strides)
            .map(|(&a, &s)| self.coord(key, a) as u64 * s)
            .sum()
    }

    /// Replace the coordinates at `axes` with those packed in `sub_key`.
    pub fn with_sub_key(&self, key: u64, axes: &[usize], sub: &Layout, sub_key: u64) -> u64 {
        let mut k = key;
        for (i, &a) in axes.iter().enumerate() {
            let old = self.coord(key, a) as u64;
            let new = sub.coord(sub_key, i) as u64;
            k = k - old * self.strides[a] + new * self.strides[a];
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_round_trip() {
        let l = Layout::new(vec![
            Dimension::indexed("x", 13).unwrap(),
            Dimension::indexed("y", 10).unwrap(),
            Dimension::indexed("d", 4).unwrap(),
        ])
        .unwrap();
        assert_eq!(l.total(), 520);
        let key = l.encode(&[12, 3, 2]);
        assert_eq!(l.decode(key), vec![12, 3, 2]);
        let sub = Layout::new(vec![Dimension::indexed("d", 4).unwrap()]).unwrap();
        assert_eq!(l.sub_key(key, &[2], &sub), 2);
        assert_eq!(l.decode(l.with_sub_key(key, &[2], &sub, 0)), vec![12, 3, 0]);
    }

    #[test]
    fn rejects_duplicate_names() {
        let x = Dimension::indexed("x", 2).unwrap();
        assert!(matches!(
            Layout::new(vec![x.clone(), x]),
            Err(TensorError::NameCollision(_))
        ));
    }
}
