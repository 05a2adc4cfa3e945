// SPDX-License-Identifier: MIT OR Apache-2.0

//! Half-vectorization of symmetric matrices.
//!
//! Pairs `(i, j)` with `i < j` (0-based) are laid out column-major over the
//! strictly lower triangle: `(1,0), (2,0), .., (p-1,0), (2,1), ..` in
//! `(row, col)` terms, i.e. ordered by the smaller index first. Every module
//! shares this one bijection.

use serde::{Deserialize, Serialize};

use crate::error::{CorrError, Result};

/// Number of strictly lower-triangular entries of a `p x p` matrix.
pub const fn pair_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// Offset of pair `(i, j)`, `i < j < p`, in the canonical layout.
#[inline]
pub fn pair_to_offset(p: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < p);
    i * (2 * p - i - 1) / 2 + (j - i - 1)
}

/// Inverse of [`pair_to_offset`].
pub fn offset_to_pair(p: usize, offset: usize) -> (usize, usize) {
    debug_assert!(offset < pair_count(p));
    let mut i = 0;
    let mut start = 0;
    loop {
        let run = p - i - 1;
        if offset < start + run {
            return (i, i + 1 + (offset - start));
        }
        start += run;
        i += 1;
    }
}

/// Iterates all pairs in canonical order.
pub fn pairs(p: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..p).flat_map(move |i| (i + 1..p).map(move |j| (i, j)))
}

/// A vector indexed by the pairs of `p` variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfVector {
    p: usize,
    entries: Vec<f64>,
}

impl HalfVector {
    pub fn new(p: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != pair_count(p) {
            return Err(CorrError::InvalidShape(format!(
                "half vector for p={p} needs {} entries, got {}",
                pair_count(p),
                entries.len()
            )));
        }
        Ok(Self { p, entries })
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            p,
            entries: vec![0.0; pair_count(p)],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.entries[pair_to_offset(self.p, a, b)]
    }

    pub fn max(&self) -> Option<f64> {
        self.entries.iter().copied().reduce(f64::max)
    }

    /// Pairs whose entry is strictly above `threshold`.
    pub fn exceedances(&self, threshold: f64) -> SupportIndexSet {
        let offsets = self
            .entries
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > threshold)
            .map(|(k, _)| k)
            .collect();
        SupportIndexSet {
            p: self.p,
            offsets,
        }
    }

    /// Scatters the entries back into a symmetric `p x p` row-major matrix
    /// with `diagonal` on the diagonal.
    pub fn to_symmetric(&self, diagonal: f64) -> Vec<f64> {
        let p = self.p;
        let mut m = vec![0.0; p * p];
        for k in 0..p {
            m[k * p + k] = diagonal;
        }
        for (off, (i, j)) in pairs(p).enumerate() {
            m[i * p + j] = self.entries[off];
            m[j * p + i] = self.entries[off];
        }
        m
    }
}

/// Strictly lower-triangular entries of a square row-major matrix, in
/// canonical order.
pub fn vecho(matrix: &[f64], p: usize) -> Result<HalfVector> {
    if p < 2 {
        return Err(CorrError::DimensionTooSmall(p));
    }
    if matrix.len() != p * p {
        return Err(CorrError::InvalidShape(format!(
            "expected a {p}x{p} matrix, got {} entries",
            matrix.len()
        )));
    }
    let entries = pairs(p).map(|(i, j)| matrix[j * p + i]).collect();
    Ok(HalfVector { p, entries })
}

/// Ordered set of pairs, stored as canonical offsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportIndexSet {
    p: usize,
    offsets: Vec<usize>,
}

impl SupportIndexSet {
    pub fn empty(p: usize) -> Self {
        Self {
            p,
            offsets: Vec::new(),
        }
    }

    /// Builds a set from 0-based pairs; order and duplicates are normalized.
    pub fn from_pairs(p: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if a == b || b >= p {
                return Err(CorrError::InvalidShape(format!(
                    "pair ({i}, {j}) is not a valid off-diagonal pair for p={p}"
                )));
            }
            offsets.push(pair_to_offset(p, a, b));
        }
        offsets.sort_unstable();
        offsets.dedup();
        Ok(Self { p, offsets })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// 0-based pairs in canonical order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.offsets
            .iter()
            .map(|&k| offset_to_pair(self.p, k))
            .collect()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a != b && b < self.p && self.offsets.binary_search(&pair_to_offset(self.p, a, b)).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_off_diagonal() {
        let v = vecho(&[1.0, 0.3, 0.3, 1.0], 2).unwrap();
        assert_eq!(v.entries(), &[0.3]);
    }

    #[test]
    fn three_by_three_order() {
        let (a, b, c) = (0.1, 0.2, 0.3);
        let m = [1.0, a, b, a, 1.0, c, b, c, 1.0];
        assert_eq!(vecho(&m, 3).unwrap().entries(), &[a, b, c]);
    }

    #[test]
    fn too_small() {
        assert_eq!(vecho(&[1.0], 1), Err(CorrError::DimensionTooSmall(1)));
    }

    #[test]
    fn scatter_gather_roundtrip_p6() {
        let p = 6;
        let mut m = vec![0.0; p * p];
        for r in 0..p {
            for c in 0..=r {
                let v = ((r * 7 + c * 3) as f64).sin();
                m[r * p + c] = v;
                m[c * p + r] = v;
            }
        }
        let h = vecho(&m, p).unwrap();
        let back = h.to_symmetric(0.0);
        for r in 0..p {
            for c in 0..p {
                if r != c {
                    assert_eq!(back[r * p + c], m[r * p + c]);
                }
            }
        }
    }

    #[test]
    fn support_from_pairs_normalizes() {
        let s = SupportIndexSet::from_pairs(4, &[(3, 1), (0, 1), (1, 3)]).unwrap();
        assert_eq!(s.pairs(), vec![(0, 1), (1, 3)]);
        assert!(s.contains(3, 1));
        assert!(!s.contains(0, 2));
        assert!(SupportIndexSet::from_pairs(4, &[(2, 2)]).is_err());
    }

    proptest! {
        #[test]
        fn offset_is_a_bijection(p in 2usize..40) {
            let n = pair_count(p);
            for (k, (i, j)) in pairs(p).enumerate() {
                prop_assert_eq!(pair_to_offset(p, i, j), k);
                prop_assert_eq!(offset_to_pair(p, k), (i, j));
            }
            prop_assert_eq!(pairs(p).count(), n);
        }
    }
}
