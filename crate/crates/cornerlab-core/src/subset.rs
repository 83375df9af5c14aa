//! Subsets of `G^k` (exact bitset indicators) and bounded real functions on
//! `G^k` (dense `f64` arrays).  Points are indexed row-major with coordinate
//! 1 most significant and coordinate k fastest; see [`crate::grid`].

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::grid::{grid_size, kahan_sum};
use crate::group::Group;
use crate::rng::rng_from_seed;
use rand::Rng as _;

/// A subset of `G^k`, stored as a bitset over the `n^k` flat indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetK {
    k: usize,
    n: usize,
    bits: BitSet,
}

impl SubsetK {
    pub fn empty(n: usize, k: usize) -> Result<SubsetK> {
        let size = grid_size(n, k)?;
        Ok(SubsetK {
            k,
            n,
            bits: BitSet::new(size),
        })
    }

    pub fn full(n: usize, k: usize) -> Result<SubsetK> {
        let mut s = SubsetK::empty(n, k)?;
        for i in 0..s.bits.len() {
            s.bits.set(i, true);
        }
        Ok(s)
    }

    pub fn from_indices(n: usize, k: usize, indices: impl IntoIterator<Item = usize>) -> Result<SubsetK> {
        let mut s = SubsetK::empty(n, k)?;
        for i in indices {
            if i >= s.bits.len() {
                return Err(Error::invalid(format!("index {i} out of range for {n}^{k} grid")));
            }
            s.bits.set(i, true);
        }
        Ok(s)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of points in the ambient grid `G^k`.
    pub fn ambient_size(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &BitSet {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut BitSet {
        &mut self.bits
    }

    #[inline]
    pub fn contains_index(&self, idx: usize) -> bool {
        self.bits.get(idx)
    }

    pub fn count(&self) -> u64 {
        self.bits.count_ones()
    }

    /// Exact density as a ratio of integers.
    pub fn density_exact(&self) -> (u64, u64) {
        (self.count(), self.ambient_size() as u64)
    }

    pub fn density(&self) -> f64 {
        let (num, den) = self.density_exact();
        num as f64 / den as f64
    }

    /// Validate that this subset lives over `G^k` for the given group.
    pub fn check_group(&self, g: &Group) -> Result<()> {
        if self.n != g.order() {
            return Err(Error::DimensionMismatch(format!(
                "subset over [{}]^{} does not match group {} of order {}",
                self.n,
                self.k,
                g.label(),
                g.order()
            )));
        }
        Ok(())
    }
}

/// A bounded real function on `G^k`, stored densely.  `bound` is a declared
/// sup-norm bound, validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionGk {
    k: usize,
    n: usize,
    values: Vec<f64>,
    bound: f64,
}

impl FunctionGk {
    pub fn from_values(n: usize, k: usize, values: Vec<f64>, bound: f64) -> Result<FunctionGk> {
        let size = grid_size(n, k)?;
        if values.len() != size {
            return Err(Error::DimensionMismatch(format!(
                "expected {size} values for [{n}]^{k}, got {}",
                values.len()
            )));
        }
        if !(bound >= 0.0) {
            return Err(Error::invalid("bound must be a nonnegative number"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || v.abs() > bound) {
            return Err(Error::invalid(format!("value {bad} violates declared bound {bound}")));
        }
        Ok(FunctionGk { k, n, values, bound })
    }

    pub fn constant(n: usize, k: usize, c: f64) -> Result<FunctionGk> {
        let size = grid_size(n, k)?;
        FunctionGk::from_values(n, k, vec![c; size], c.abs().max(1.0))
    }

    /// 0/1 indicator of a subset.
    pub fn indicator(a: &SubsetK) -> FunctionGk {
        let values = (0..a.ambient_size())
            .map(|i| if a.contains_index(i) { 1.0 } else { 0.0 })
            .collect();
        FunctionGk {
            k: a.k(),
            n: a.n(),
            values,
            bound: 1.0,
        }
    }

    /// Independent uniform ±1 signs at every point.
    pub fn random_signs(n: usize, k: usize, seed: u64) -> Result<FunctionGk> {
        let size = grid_size(n, k)?;
        let mut rng = rng_from_seed(seed);
        let values = (0..size)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        Ok(FunctionGk { k, n, values, bound: 1.0 })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn mean(&self) -> f64 {
        kahan_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    /// `self - mean(self)`, with the bound widened accordingly.
    pub fn recentered(&self) -> FunctionGk {
        let m = self.mean();
        let values: Vec<f64> = self.values.iter().map(|v| v - m).collect();
        let bound = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        FunctionGk {
            k: self.k,
            n: self.n,
            values,
            bound,
        }
    }

    /// Pointwise product; bounds multiply.
    pub fn pointwise_mul(&self, other: &FunctionGk) -> Result<FunctionGk> {
        if self.k != other.k || self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "pointwise product of [{}]^{} with [{}]^{}",
                self.n, self.k, other.n, other.k
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(FunctionGk {
            k: self.k,
            n: self.n,
            values,
            bound: self.bound * other.bound,
        })
    }

    /// If every value is exactly 0.0 or 1.0, return the corresponding subset.
    pub fn as_subset(&self) -> Option<SubsetK> {
        if !self.values.iter().all(|&v| v == 0.0 || v == 1.0) {
            return None;
        }
        let mut s = SubsetK::empty(self.n, self.k).ok()?;
        for (i, &v) in self.values.iter().enumerate() {
            if v == 1.0 {
                s.bits.set(i, true);
            }
        }
        Some(s)
    }

    pub fn check_group(&self, g: &Group) -> Result<()> {
        if self.n != g.order() {
            return Err(Error::DimensionMismatch(format!(
                "function over [{}]^{} does not match group {} of order {}",
                self.n,
                self.k,
                g.label(),
                g.order()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_is_exact() {
        let s = SubsetK::from_indices(4, 2, [0, 3, 7]).unwrap();
        assert_eq!(s.density_exact(), (3, 16));
        assert_eq!(s.count(), 3);
        assert!(s.contains_index(7) && !s.contains_index(8));
    }

    #[test]
    fn bound_is_validated() {
        assert!(FunctionGk::from_values(2, 1, vec![0.5, -1.2], 1.0).is_err());
        assert!(FunctionGk::from_values(2, 1, vec![0.5, f64::NAN], 1.0).is_err());
        assert!(FunctionGk::from_values(2, 1, vec![0.5, -1.2], 1.2).is_ok());
        assert!(FunctionGk::from_values(2, 1, vec![0.5], 1.0).is_err());
    }

    #[test]
    fn indicator_roundtrips_through_as_subset() {
        let s = SubsetK::from_indices(3, 2, [1, 4, 8]).unwrap();
        let f = FunctionGk::indicator(&s);
        assert_eq!(f.as_subset().unwrap(), s);
        assert!((f.mean() - 3.0 / 9.0).abs() < 1e-15);
        assert!(f.recentered().as_subset().is_none());
    }

    #[test]
    fn random_signs_are_deterministic_and_pm1() {
        let a = FunctionGk::random_signs(5, 2, 42).unwrap();
        let b = FunctionGk::random_signs(5, 2, 42).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.values().iter().all(|&v| v == 1.0 || v == -1.0));
        let c = FunctionGk::random_signs(5, 2, 43).unwrap();
        assert_ne!(a.values(), c.values());
    }
}
