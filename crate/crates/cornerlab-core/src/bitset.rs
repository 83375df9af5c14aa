//! Fixed-length bitset used for exact subset/corner counting.

/// A fixed-length bitset backed by `u64` words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let (w, b) = (i / 64, i % 64);
        if value {
            self.words[w] |= 1 << b;
        } else {
            self.words[w] &= !(1 << b);
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// `self &= other`; both sets must have the same length.
    pub fn intersect_with(&mut self, other: &BitSet) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Iterate indices of set bits in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            std::iter::successors((w != 0).then_some(w), |&w| {
                let rest = w & (w - 1);
                (rest != 0).then_some(rest)
            })
            .map(move |w| wi * 64 + w.trailing_zeros() as usize)
        })
    }

    /// Number of indices set in `self & other` restricted to `[start, start+n)`,
    /// where the range is word-aligned by the caller's layout choice.  Used for
    /// row-window popcounts; falls back to bit stepping at the edges.
    pub fn count_and_in_range(&self, other: &BitSet, start: usize, n: usize) -> u64 {
        debug_assert_eq!(self.len, other.len);
        let mut count = 0u64;
        let end = start + n;
        let mut i = start;
        // leading unaligned bits
        while i < end && i % 64 != 0 {
            if self.get(i) && other.get(i) {
                count += 1;
            }
            i += 1;
        }
        // whole words
        while i + 64 <= end {
            let w = self.words[i / 64] & other.words[i / 64];
            count += w.count_ones() as u64;
            i += 64;
        }
        // trailing bits
        while i < end {
            if self.get(i) && other.get(i) {
                count += 1;
            }
            i += 1;
        }
        count
    }
}
