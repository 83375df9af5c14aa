//! Corner configurations and their statistics.
//!
//! For a group `G` acting on `G^k` by the commuting coordinate actions
//! `T_i^g(a_1..a_k) = (a_1, .., g a_i, .., a_k)`, a corner with data `(g, a)`
//! is the `k+1`-point pattern whose `i`-th point is `T_{[1,i]}^g a`, i.e.
//! `(g a_1, .., g a_i, a_{i+1}, .., a_k)`.  This module evaluates the
//! per-shift correlation sequence
//! `c_g = avg_a f_0(a) f_1(T_{[1,1]}^g a) ... f_k(T_{[1,k]}^g a)`
//! exactly (bitsets) for indicators and in compensated floating point for
//! general bounded functions, together with the equivalent hypergraph view
//! obtained from the change of variables
//! `x_0 = g a_1, x_j = a_j^{-1} a_{j+1}, x_k = a_k^{-1}`.

use crate::error::{Error, Result};
use crate::grid::{grid_size, Kahan};
use crate::group::{ElementId, Group};
use crate::subset::{FunctionGk, SubsetK};
use rayon::prelude::*;
use serde::Serialize;

/// A point of `G^k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointK(pub Vec<ElementId>);

impl PointK {
    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[ElementId] {
        &self.0
    }

    /// Row-major flat index (coordinate 1 most significant).
    pub fn flat_index(&self, n: usize) -> usize {
        self.0.iter().fold(0, |acc, c| acc * n + c.index())
    }

    pub fn from_flat(idx: usize, n: usize, k: usize) -> PointK {
        let coords = crate::grid::decode(idx, n, k)
            .into_iter()
            .map(|c| ElementId(c as u16))
            .collect();
        PointK(coords)
    }
}

/// Enumeration cap on the group order for corner statistics at dimension `k`.
/// Corner counting costs `O(|G|^(k+1))`, so the caps keep runs at desk scale
/// while still admitting `sl2:13` (order 2184) at `k = 2`.
pub fn enumeration_cap(k: usize) -> Result<usize> {
    match k {
        0 => Err(Error::invalid("dimension k must be at least 1")),
        1 => Ok(5040),
        2 => Ok(2400),
        3 => Ok(60),
        _ => Err(Error::cap(format!("dimension k = {k} beyond supported k <= 3"))),
    }
}

fn check_enumeration(n: usize, k: usize) -> Result<()> {
    let cap = enumeration_cap(k)?;
    if n > cap {
        return Err(Error::cap(format!(
            "order {n} exceeds the k = {k} enumeration cap {cap}"
        )));
    }
    Ok(())
}

/// `T_i^s`: multiply coordinate `i` (1-based) by `s` on the left.
pub fn apply_t(g: &Group, i: usize, s: ElementId, a: &PointK) -> Result<PointK> {
    let k = a.k();
    if i == 0 || i > k {
        return Err(Error::invalid(format!("coordinate {i} out of range 1..={k}")));
    }
    let mut coords = a.0.clone();
    coords[i - 1] = g.mul(s, coords[i - 1]);
    Ok(PointK(coords))
}

/// `T_{[j,i]}^s = T_j^s ... T_i^s`; the empty range (`j > i`) is the identity.
pub fn apply_t_range(g: &Group, j: usize, i: usize, s: ElementId, a: &PointK) -> Result<PointK> {
    let k = a.k();
    if j == 0 || i > k {
        return Err(Error::invalid(format!(
            "range [{j},{i}] out of bounds for k = {k}"
        )));
    }
    let mut coords = a.0.clone();
    for c in j..=i.min(k) {
        coords[c - 1] = g.mul(s, coords[c - 1]);
    }
    Ok(PointK(coords))
}

/// The corner with data `(s, a)`: points `T_{[1,i]}^s a` for `i = 0..=k`.
/// Points are returned in order; degenerate repetitions (e.g. at `s = e`)
/// are retained.
pub fn corner_config(g: &Group, s: ElementId, a: &PointK) -> Result<Vec<PointK>> {
    (0..=a.k()).map(|i| apply_t_range(g, 1, i, s, a)).collect()
}

/// Forward change of variables: `(s, a) -> x` with `x_0 = s a_1`,
/// `x_j = a_j^{-1} a_{j+1}` for `0 < j < k`, `x_k = a_k^{-1}`.
pub fn cov_forward(g: &Group, s: ElementId, a: &PointK) -> Vec<ElementId> {
    let k = a.k();
    let mut x = Vec::with_capacity(k + 1);
    x.push(g.mul(s, a.0[0]));
    for j in 1..k {
        x.push(g.mul(g.inv(a.0[j - 1]), a.0[j]));
    }
    x.push(g.inv(a.0[k - 1]));
    x
}

/// Inverse change of variables: recover `(s, a)` from `x` via the suffix
/// products `a_j = (x_j x_{j+1} ... x_k)^{-1}` and `s = x_0 x_1 ... x_k`.
pub fn cov_inverse(g: &Group, x: &[ElementId]) -> Result<(ElementId, PointK)> {
    if x.len() < 2 {
        return Err(Error::invalid("change of variables needs k + 1 >= 2 coordinates"));
    }
    let k = x.len() - 1;
    let mut coords = vec![g.identity(); k];
    let mut suffix = g.identity();
    for j in (1..=k).rev() {
        suffix = g.mul(x[j], suffix);
        coords[j - 1] = g.inv(suffix);
    }
    Ok((g.mul(x[0], suffix), PointK(coords)))
}

/// Corner point `i` expressed in the `x` coordinates: the first `i`
/// components are the prefix products `x_0, x_0 x_1, ..., x_0 .. x_{i-1}`
/// and the remaining components are `(x_c .. x_k)^{-1}` for `c = i+1 ..= k`.
/// `coords` lists `x_j` for `j != i` in increasing `j`; the result does not
/// depend on the omitted `x_i`.
pub(crate) fn corner_point_without(g: &Group, coords: &[ElementId], i: usize, k: usize) -> PointK {
    debug_assert_eq!(coords.len(), k);
    let mut y = vec![g.identity(); k];
    let mut prefix = g.identity();
    for c in 0..i {
        prefix = g.mul(prefix, coords[c]); // coords[c] = x_c for c < i
        y[c] = prefix;
    }
    let mut suffix = g.identity();
    for c in (i + 1..=k).rev() {
        suffix = g.mul(coords[c - 1], suffix); // coords[c-1] = x_c for c > i
        y[c - 1] = g.inv(suffix);
    }
    PointK(y)
}

/// The correlation sequence `g -> c_g` with its summary statistics.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationSeries {
    pub group: String,
    pub k: usize,
    /// `values[g]` is `c_g`, indexed by element id.
    pub values: Vec<f64>,
    pub mean: f64,
    /// Average absolute deviation from the mean, `avg_g |c_g - mean|`.
    pub tv: f64,
}

impl CorrelationSeries {
    fn new(group: &Group, k: usize, values: Vec<f64>, exact_mean: Option<f64>) -> CorrelationSeries {
        let n = values.len() as f64;
        let mean = exact_mean.unwrap_or_else(|| {
            let mut acc = Kahan::new();
            for &v in &values {
                acc.add(v);
            }
            acc.value() / n
        });
        let mut dev = Kahan::new();
        for &v in &values {
            dev.add((v - mean).abs());
        }
        CorrelationSeries {
            group: group.label().to_string(),
            k,
            values,
            mean,
            tv: dev.value() / n,
        }
    }
}

/// Fraction of shifts with `c_g` strictly above `theta`.
pub fn good_fraction(series: &CorrelationSeries, theta: f64) -> f64 {
    let hits = series.values.iter().filter(|&&v| v > theta).count();
    hits as f64 / series.values.len() as f64
}

/// Exact corner statistics of a subset.
#[derive(Debug, Clone)]
pub struct CornerStats {
    pub series: CorrelationSeries,
    /// Exact number of corners with shift `g`, indexed by element id.
    pub counts: Vec<u64>,
    /// Total number of corners over all shifts (degenerate ones included).
    pub total: u64,
}

/// Word-aligned row view of a subset of `G^k`: row `r` (a `(k-1)`-prefix)
/// holds the membership bits over the last coordinate.
struct RowTable {
    words_per_row: usize,
    words: Vec<u64>,
}

impl RowTable {
    fn build(a: &SubsetK) -> RowTable {
        let n = a.n();
        let rows = a.ambient_size() / n.max(1);
        let words_per_row = n.div_ceil(64);
        let mut words = vec![0u64; rows * words_per_row];
        for idx in a.bits().iter_ones() {
            let (r, c) = (idx / n, idx % n);
            words[r * words_per_row + c / 64] |= 1 << (c % 64);
        }
        RowTable { words_per_row, words }
    }

    #[inline]
    fn row(&self, r: usize) -> &[u64] {
        &self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    #[inline]
    fn probe(&self, r: usize, bit: usize) -> bool {
        (self.words[r * self.words_per_row + bit / 64] >> (bit % 64)) & 1 == 1
    }
}

/// Exact number of shifted corner patterns at shift `g`, for one prefix row
/// layout: AND the rows for conditions `0..k`, then probe condition `k` for
/// each surviving last coordinate.
fn count_for_shift(
    tables: &[&RowTable],
    n: usize,
    k: usize,
    row_g: &[u16],
    buf: &mut [u64],
) -> u64 {
    let mut count = 0u64;
    let prefixes = tables[0].words.len() / tables[0].words_per_row;
    let mut prefix = vec![0usize; k.saturating_sub(1)];
    for _ in 0..prefixes {
        // Condition i constrains the last coordinate through the row whose
        // prefix has its first i coordinates multiplied by g.
        buf.copy_from_slice(tables[0].row(row_index(&prefix, 0, n, row_g)));
        for i in 1..k {
            let r = row_index(&prefix, i, n, row_g);
            for (b, w) in buf.iter_mut().zip(tables[i].row(r)) {
                *b &= *w;
            }
        }
        let probe_row = row_index(&prefix, k - 1, n, row_g);
        let last = tables[k];
        for (wi, &w) in buf.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let a_k = wi * 64 + w.trailing_zeros() as usize;
                if last.probe(probe_row, row_g[a_k] as usize) {
                    count += 1;
                }
                w &= w - 1;
            }
        }
        // next prefix (odometer, last prefix coordinate fastest)
        for d in (0..prefix.len()).rev() {
            prefix[d] += 1;
            if prefix[d] < n {
                break;
            }
            prefix[d] = 0;
        }
    }
    count
}

/// Flat row index of a prefix with its first `i` coordinates shifted.
#[inline]
fn row_index(prefix: &[usize], i: usize, n: usize, row_g: &[u16]) -> usize {
    let mut idx = 0usize;
    for (d, &c) in prefix.iter().enumerate() {
        idx = idx * n + if d < i { row_g[c] as usize } else { c };
    }
    idx
}

/// Exact per-shift counts of tuples satisfying `T_{[1,i]}^g a` in `sets[i]`
/// for every `i = 0..=k`.  All sets must share the same `n` and `k`.
fn indicator_counts(g: &Group, sets: &[&SubsetK]) -> Result<Vec<u64>> {
    let k = sets.len() - 1;
    let n = g.order();
    for s in sets {
        s.check_group(g)?;
        if s.k() != k {
            return Err(Error::DimensionMismatch(format!(
                "indicator over [{}]^{} in a k = {k} correlation",
                s.n(),
                s.k()
            )));
        }
    }
    check_enumeration(n, k)?;
    let tables: Vec<RowTable> = sets.iter().map(|s| RowTable::build(s)).collect();
    let refs: Vec<&RowTable> = tables.iter().collect();
    let words_per_row = tables[0].words_per_row;
    let counts: Vec<u64> = (0..n)
        .into_par_iter()
        .map(|gi| {
            let mut buf = vec![0u64; words_per_row];
            let row_g = g.row(ElementId(gi as u16));
            count_for_shift(&refs, n, k, row_g, &mut buf)
        })
        .collect();
    Ok(counts)
}

/// Exact corner statistics: `counts[g]` is the number of `a` with the whole
/// corner `(g, a)` inside `A`, and `series` holds `c_g = counts[g] / n^k`.
pub fn corner_stats(g: &Group, a: &SubsetK) -> Result<CornerStats> {
    let k = a.k();
    let sets: Vec<&SubsetK> = std::iter::repeat(a).take(k + 1).collect();
    let counts = indicator_counts(g, &sets)?;
    let ambient = a.ambient_size() as f64;
    let values: Vec<f64> = counts.iter().map(|&c| c as f64 / ambient).collect();
    let total: u64 = counts.iter().sum();
    // Exact mean: total / n^(k+1) with both sides exactly representable.
    let mean = total as f64 / (ambient * g.order() as f64);
    let series = CorrelationSeries::new(g, k, values, Some(mean));
    Ok(CornerStats { series, counts, total })
}

/// The correlation sequence `c_g = avg_a prod_i f_i(T_{[1,i]}^g a)`.
///
/// If every `f_i` is exactly a 0/1 indicator the sequence is computed in
/// integer arithmetic; otherwise each `c_g` is accumulated in row-major order
/// with compensated summation, so results do not depend on thread count.
pub fn multicorrelation(g: &Group, fs: &[FunctionGk]) -> Result<CorrelationSeries> {
    if fs.len() < 2 {
        return Err(Error::invalid("multicorrelation needs k + 1 >= 2 functions"));
    }
    let k = fs.len() - 1;
    let n = g.order();
    for f in fs {
        f.check_group(g)?;
        if f.k() != k {
            return Err(Error::DimensionMismatch(format!(
                "function over [{}]^{} in a k = {k} correlation",
                f.n(),
                f.k()
            )));
        }
    }
    check_enumeration(n, k)?;

    let subsets: Vec<Option<SubsetK>> = fs.iter().map(|f| f.as_subset()).collect();
    if subsets.iter().all(|s| s.is_some()) {
        let refs: Vec<&SubsetK> = subsets.iter().map(|s| s.as_ref().unwrap()).collect();
        let counts = indicator_counts(g, &refs)?;
        let ambient = grid_size(n, k)? as f64;
        let total: u64 = counts.iter().sum();
        let values = counts.iter().map(|&c| c as f64 / ambient).collect();
        let mean = total as f64 / (ambient * n as f64);
        return Ok(CorrelationSeries::new(g, k, values, Some(mean)));
    }

    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|gi| {
            let row_g = g.row(ElementId(gi as u16));
            let mut acc = Kahan::new();
            let mut offsets = [0usize; 4];
            correlate_rec(fs, row_g, n, k, 1, &mut offsets, &mut acc);
            acc.value() / grid_size(n, k).expect("checked") as f64
        })
        .collect();
    Ok(CorrelationSeries::new(g, k, values, None))
}

/// Accumulate `sum_a prod_i f_i(T_{[1,i]}^g a)` over coordinates `depth..=k`.
/// `offsets[i]` is the partial flat index of the transformed point seen by
/// `f_i` (its first `i` coordinates are multiplied by `g`).
fn correlate_rec(
    fs: &[FunctionGk],
    row_g: &[u16],
    n: usize,
    k: usize,
    depth: usize,
    offsets: &mut [usize; 4],
    acc: &mut Kahan,
) {
    if depth == k {
        // Innermost coordinate: only f_k sees it shifted.
        let bases: Vec<&[f64]> = fs
            .iter()
            .enumerate()
            .map(|(i, f)| &f.values()[offsets[i] * n..offsets[i] * n + n])
            .collect();
        let last = bases[k];
        for a in 0..n {
            let mut prod = last[row_g[a] as usize];
            for base in &bases[..k] {
                prod *= base[a];
            }
            acc.add(prod);
        }
        return;
    }
    let saved = *offsets;
    for a in 0..n {
        for i in 0..=k {
            // coordinate `depth` is shifted in conditions i >= depth
            let digit = if i >= depth { row_g[a] as usize } else { a };
            offsets[i] = saved[i] * n + digit;
        }
        correlate_rec(fs, row_g, n, k, depth + 1, offsets, acc);
    }
    *offsets = saved;
}

/// The `k+1` coordinate-omitting edge sets of the corner hypergraph: edge set
/// `i` lives on tuples `(x_j)_{j != i}` and contains a tuple exactly when
/// corner point `i` (which does not depend on `x_i`) lies in `A`.
pub fn hypergraph_edges(g: &Group, a: &SubsetK) -> Result<Vec<SubsetK>> {
    a.check_group(g)?;
    let k = a.k();
    let n = g.order();
    check_enumeration(n, k)?;
    let size = grid_size(n, k)?;
    let mut edges = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let mut edge = SubsetK::empty(n, k)?;
        let mut coords = vec![g.identity(); k];
        for idx in 0..size {
            let digits = crate::grid::decode(idx, n, k);
            for (c, d) in coords.iter_mut().zip(&digits) {
                *c = ElementId(*d as u16);
            }
            let point = corner_point_without(g, &coords, i, k);
            if a.contains_index(point.flat_index(n)) {
                edge.bits_mut().set(idx, true);
            }
        }
        edges.push(edge);
    }
    Ok(edges)
}

/// Count simplices of the hypergraph: tuples `x` in `G^(k+1)` all of whose
/// `k+1` coordinate-deleted subtuples are edges.  Simplices correspond
/// bijectively to corners (including degenerate ones), so this must equal
/// [`corner_stats`]'s total exactly.
pub fn count_simplices(g: &Group, edges: &[SubsetK]) -> Result<u64> {
    if edges.len() < 2 {
        return Err(Error::invalid("need k + 1 >= 2 edge sets"));
    }
    let k = edges.len() - 1;
    let n = g.order();
    for e in edges {
        e.check_group(g)?;
        if e.k() != k {
            return Err(Error::DimensionMismatch("edge set dimension".to_string()));
        }
    }
    let full = grid_size(n, k + 1)?;
    if full > 100_000_000 {
        return Err(Error::cap(format!(
            "simplex enumeration over {n}^{} exceeds the oracle-scale cap",
            k + 1
        )));
    }
    let mut count = 0u64;
    let mut sub = vec![0usize; k];
    for idx in 0..full {
        let digits = crate::grid::decode(idx, n, k + 1);
        let mut all = true;
        for i in 0..=k {
            let mut w = 0;
            for (j, &d) in digits.iter().enumerate() {
                if j != i {
                    sub[w] = d;
                    w += 1;
                }
            }
            if !edges[i].contains_index(crate::grid::encode(&sub, n)) {
                all = false;
                break;
            }
        }
        if all {
            count += 1;
        }
    }
    Ok(count)
}
