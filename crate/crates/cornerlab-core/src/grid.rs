//! Index arithmetic for points of `[n]^k` stored row-major (last coordinate
//! fastest), plus compensated float summation used by every accumulation that
//! must be independent of thread count.

use crate::error::{Error, Result};

/// `n^k` with an overflow check, refusing anything that cannot be enumerated.
pub fn grid_size(n: usize, k: usize) -> Result<usize> {
    let mut size = 1usize;
    for _ in 0..k {
        size = size
            .checked_mul(n)
            .ok_or_else(|| Error::cap(format!("grid {n}^{k} overflows usize")))?;
    }
    Ok(size)
}

/// Flat index of a `k`-tuple, row-major with the last coordinate fastest.
#[inline]
pub fn encode(coords: &[usize], n: usize) -> usize {
    let mut idx = 0;
    for &c in coords {
        debug_assert!(c < n);
        idx = idx * n + c;
    }
    idx
}

/// Inverse of [`encode`].
#[inline]
pub fn decode(mut idx: usize, n: usize, k: usize) -> Vec<usize> {
    let mut coords = vec![0; k];
    for c in coords.iter_mut().rev() {
        *c = idx % n;
        idx /= n;
    }
    coords
}

/// Kahan–Babuška compensated accumulator.  Summation order is fixed by the
/// caller; the compensation keeps results reproducible to ~1e-15 relative
/// error even for `1e10`-term sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Kahan::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Sum an iterator with compensation, in iteration order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Kahan::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}
