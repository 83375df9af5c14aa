//! Weak regularity on the grid `[n]^k` and the corner reduction it powers.
//!
//! [`weak_regularity`] splits a bounded `F : [n]^k -> R` into a structured
//! part `F_s` (a conditional expectation over a join of `k` partitions, each
//! blind to one coordinate) and a remainder `F_u = F - F_s` whose box norm is
//! at most `eps`.  Refinement is by energy increment: while the box norm is
//! large, random coordinate fixings produce product witnesses correlating
//! with `F_u`; quantizing the witnesses refines the partitions and strictly
//! increases the energy `E[F_s^2]`, which is bounded, so the loop terminates
//! inside an explicit budget.
//!
//! The structured part expands into a short sum of products of one-blind-
//! coordinate indicators ([`rank_expansion`]).  Pulling those factors back to
//! `G^k` with [`inverse_lift_k`] yields functions invariant under the tail
//! actions `T_{[j+1,k]}` ([`check_t_range_invariance`]), which lets
//! [`structured_reduction`] rewrite a `k`-dimensional correlation as slice
//! averages of `(k-1)`-dimensional ones plus a box-norm-small remainder.

use crate::boxnorm::box_norm;
use crate::corner::{apply_t_range, multicorrelation, PointK};
use crate::error::{Error, Result};
use crate::grid::{decode, grid_size, Kahan};
use crate::group::{ElementId, Group};
use crate::rng::rng_from_seed;
use crate::subset::{FunctionGk, SubsetK};
use rand::Rng as _;
use serde::Serialize;
use std::collections::HashMap;

/// Random coordinate fixings tried per refinement round.
const FIXINGS_PER_ROUND: usize = 32;
/// Cap on the number of terms a rank expansion may produce.
const RANK_CAP: usize = 4096;
/// Cap on the grid size `n^k` handled by the regularity machinery.
const GRID_CAP: usize = 65_536;

/// A partition of `[n]^k` whose atoms do not depend on coordinate `omitted`
/// (0-based): atoms are labeled on the projected grid `[n]^(k-1)`.
#[derive(Debug, Clone, Serialize)]
pub struct CoordinatePartition {
    pub omitted: usize,
    /// Atom label of each projected tuple, row-major over `[n]^(k-1)`.
    pub labels: Vec<u32>,
    pub atom_count: usize,
}

/// Result of a weak regularity run: `f = f_s + f_u` exactly, `f_s` is the
/// conditional expectation of `f` over the join of `partitions`, and
/// `achieved_eps` is the box norm of `f_u`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub f_s: FunctionGk,
    pub f_u: FunctionGk,
    pub partitions: Vec<CoordinatePartition>,
    /// Refinement rounds attempted, committed or not.
    pub iterations: usize,
    pub achieved_eps: f64,
    /// Energy increase of each committed round, in order.
    pub energy_gains: Vec<f64>,
}

/// Failure modes of the regularity loop.
#[derive(Debug, thiserror::Error)]
pub enum RegularityError {
    /// The round budget ran out before the box norm dropped below `eps`.
    /// Carries the best decomposition seen so a caller can still inspect it.
    #[error("refinement budget exhausted after {iterations} rounds; best box norm {achieved:.6}")]
    Budget {
        iterations: usize,
        achieved: f64,
        best: Box<Decomposition>,
    },
    #[error(transparent)]
    Core(#[from] Error),
}

/// `proj[j][idx]` = row-major index of the tuple `idx` with coordinate `j`
/// removed.
fn build_projections(n: usize, k: usize) -> Result<Vec<Vec<u32>>> {
    let size = grid_size(n, k)?;
    let mut tables = Vec::with_capacity(k);
    for j in 0..k {
        let mut t = vec![0u32; size];
        for (idx, slot) in t.iter_mut().enumerate() {
            let digits = decode(idx, n, k);
            let mut p = 0usize;
            for (m, &d) in digits.iter().enumerate() {
                if m != j {
                    p = p * n + d;
                }
            }
            *slot = p as u32;
        }
        tables.push(t);
    }
    Ok(tables)
}

/// Join-atom key of a grid point under the current partitions.
#[inline]
fn join_key(parts: &[CoordinatePartition], proj: &[Vec<u32>], idx: usize) -> u64 {
    parts.iter().enumerate().fold(0u64, |acc, (j, p)| {
        acc * p.atom_count as u64 + p.labels[proj[j][idx] as usize] as u64
    })
}

/// Conditional expectation of `f` over the join of the partitions.  Atom
/// means are clamped to the declared bound to absorb last-ulp overshoot.
fn conditional_mean(f: &FunctionGk, parts: &[CoordinatePartition], proj: &[Vec<u32>]) -> FunctionGk {
    let size = f.values().len();
    let mut sums: HashMap<u64, (f64, u32)> = HashMap::new();
    let keys: Vec<u64> = (0..size).map(|idx| join_key(parts, proj, idx)).collect();
    for (idx, &key) in keys.iter().enumerate() {
        let e = sums.entry(key).or_insert((0.0, 0));
        e.0 += f.value(idx);
        e.1 += 1;
    }
    let b = f.bound();
    let values: Vec<f64> = keys
        .iter()
        .map(|key| {
            let (s, c) = sums[key];
            (s / c as f64).clamp(-b, b)
        })
        .collect();
    FunctionGk::from_values(f.n(), f.k(), values, b).expect("atom means stay within the bound")
}

fn energy_of(f: &FunctionGk) -> f64 {
    let mut acc = Kahan::new();
    for &v in f.values() {
        acc.add(v * v);
    }
    acc.value() / f.values().len() as f64
}

fn residual(f: &FunctionGk, f_s: &FunctionGk) -> FunctionGk {
    let values: Vec<f64> = f
        .values()
        .iter()
        .zip(f_s.values())
        .map(|(a, b)| a - b)
        .collect();
    FunctionGk::from_values(f.n(), f.k(), values, 2.0 * f.bound())
        .expect("difference of bounded functions")
}

/// Witness for coordinate `j` under the fixing `y`: the product over all
/// sign patterns that replace coordinate `j` (and none of the earlier ones)
/// of `f_u` evaluated at the mixed point.  Constant in coordinate `j`, hence
/// stored on the projected grid.
fn witness(f_u: &[f64], n: usize, k: usize, j: usize, y: &[usize]) -> Vec<f64> {
    let psize = f_u.len() / n;
    let free = k - 1 - j;
    let mut w = vec![1.0; psize];
    for (p, slot) in w.iter_mut().enumerate() {
        let pdig = decode(p, n, k - 1);
        for pat in 0..(1usize << free) {
            let mut z = 0usize;
            for m in 0..k {
                let d = if m == j {
                    y[j]
                } else if m < j {
                    pdig[m]
                } else {
                    // coordinate m > j: replaced by y[m] when its pattern bit is set
                    if (pat >> (m - j - 1)) & 1 == 1 {
                        y[m]
                    } else {
                        pdig[m - 1]
                    }
                };
                z = z * n + d;
            }
            *slot *= f_u[z];
        }
    }
    w
}

/// `E_x f_u(x) * prod_j w_j(x_(j))`.
fn witness_correlation(f_u: &[f64], ws: &[Vec<f64>], proj: &[Vec<u32>]) -> f64 {
    let mut acc = Kahan::new();
    for (idx, &v) in f_u.iter().enumerate() {
        let mut prod = v;
        for (j, w) in ws.iter().enumerate() {
            prod *= w[proj[j][idx] as usize];
        }
        acc.add(prod);
    }
    acc.value() / f_u.len() as f64
}

/// Refine a partition by the 4-level quantization of a witness.  The witness
/// is first scaled into `[-1, 1]` by `max(1, sup |w|)`; labels are compacted
/// in first-occurrence order, so the result is deterministic.
fn refine(part: &mut CoordinatePartition, w: &[f64]) {
    let sup = w.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let scale = sup.max(1.0);
    let mut map: HashMap<u64, u32> = HashMap::new();
    let mut next = 0u32;
    for (p, label) in part.labels.iter_mut().enumerate() {
        let v = w[p] / scale;
        let level = (((v + 1.0) * 2.0).floor() as i64).clamp(0, 3) as u64;
        let key = (*label as u64) * 4 + level;
        let new = *map.entry(key).or_insert_with(|| {
            let t = next;
            next += 1;
            t
        });
        *label = new;
    }
    part.atom_count = next as usize;
}

fn check_regularity_dims(n: usize, k: usize) -> Result<usize> {
    if k == 0 || k > 3 {
        return Err(Error::invalid(format!("regularity supports 1 <= k <= 3, got {k}")));
    }
    let size = grid_size(n, k)?;
    if size > GRID_CAP {
        return Err(Error::cap(format!(
            "grid {n}^{k} = {size} exceeds the regularity cap {GRID_CAP}"
        )));
    }
    Ok(size)
}

/// Decompose `f` into structured plus box-norm-small parts.
///
/// Rounds proceed until the box norm of the remainder is at most `eps` or the
/// budget (`max_iter`, default `ceil(16 / eps^2)`) runs out.  Each round
/// draws [`FIXINGS_PER_ROUND`] coordinate fixings from a ChaCha stream seeded
/// with `seed`, keeps the best witness correlation, and refines only when it
/// clears `eps^(2^k) / 2`; a refinement is committed only when the energy of
/// the structured part actually increases.  Failed rounds still spend budget.
pub fn weak_regularity(
    f: &FunctionGk,
    eps: f64,
    max_iter: Option<usize>,
    seed: u64,
) -> std::result::Result<Decomposition, RegularityError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(RegularityError::Core(Error::invalid("eps must be a positive number")));
    }
    let (n, k) = (f.n(), f.k());
    let size = check_regularity_dims(n, k)?;
    let psize = size / n;
    let budget = max_iter
        .unwrap_or_else(|| (16.0 / (eps * eps)).ceil() as usize)
        .max(1);
    let threshold = eps.powi(1 << k) / 2.0;
    let proj = build_projections(n, k)?;
    let mut parts: Vec<CoordinatePartition> = (0..k)
        .map(|j| CoordinatePartition { omitted: j, labels: vec![0; psize], atom_count: 1 })
        .collect();
    let mut rng = rng_from_seed(seed);
    let mut f_s = conditional_mean(f, &parts, &proj);
    let mut energy = energy_of(&f_s);
    let mut gains: Vec<f64> = Vec::new();
    let mut best: Option<(f64, FunctionGk, Vec<CoordinatePartition>, Vec<f64>)> = None;

    for round in 0..=budget {
        let f_u = residual(f, &f_s);
        let norm = box_norm(&f_u)?.norm;
        if norm <= eps {
            return Ok(Decomposition {
                f_s,
                f_u,
                partitions: parts,
                iterations: round,
                achieved_eps: norm,
                energy_gains: gains,
            });
        }
        if best.as_ref().map_or(true, |(b, ..)| norm < *b) {
            best = Some((norm, f_s.clone(), parts.clone(), gains.clone()));
        }
        if round == budget {
            break;
        }

        let mut best_fix: Option<(f64, Vec<Vec<f64>>)> = None;
        for _ in 0..FIXINGS_PER_ROUND {
            let y: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
            let ws: Vec<Vec<f64>> = (0..k).map(|j| witness(f_u.values(), n, k, j, &y)).collect();
            let corr = witness_correlation(f_u.values(), &ws, &proj).abs();
            if best_fix.as_ref().map_or(true, |(c, _)| corr > *c) {
                best_fix = Some((corr, ws));
            }
        }
        let (best_corr, ws) = best_fix.expect("at least one fixing");
        if best_corr >= threshold {
            let saved = parts.clone();
            for (part, w) in parts.iter_mut().zip(&ws) {
                refine(part, w);
            }
            let cand = conditional_mean(f, &parts, &proj);
            let cand_energy = energy_of(&cand);
            if cand_energy > energy {
                gains.push(cand_energy - energy);
                energy = cand_energy;
                f_s = cand;
            } else {
                parts = saved;
            }
        }
    }

    let (achieved, f_s, parts, gains) = best.expect("norm exceeded eps in every round");
    let f_u = residual(f, &f_s);
    Err(RegularityError::Budget {
        iterations: budget,
        achieved,
        best: Box::new(Decomposition {
            f_s,
            f_u,
            partitions: parts,
            iterations: budget,
            achieved_eps: achieved,
            energy_gains: gains,
        }),
    })
}

/// One factor of a rank-expansion term: an atom indicator on the projected
/// grid, blind to coordinate `omitted` of the full grid.
#[derive(Debug, Clone)]
pub struct Factor {
    pub omitted: usize,
    /// Indicator over `[n]^(k-1)`, indexed like the projection tables.
    pub indicator: SubsetK,
}

impl Factor {
    /// Pull the factor back to the full grid `[n]^k` as a 0/1 function that
    /// ignores coordinate `omitted`.
    pub fn cylinder(&self) -> Result<FunctionGk> {
        let n = self.indicator.n();
        let k = self.indicator.k() + 1;
        let size = grid_size(n, k)?;
        let mut values = vec![0.0; size];
        for (idx, slot) in values.iter_mut().enumerate() {
            let digits = decode(idx, n, k);
            let mut p = 0usize;
            for (m, &d) in digits.iter().enumerate() {
                if m != self.omitted {
                    p = p * n + d;
                }
            }
            if self.indicator.contains_index(p) {
                *slot = 1.0;
            }
        }
        FunctionGk::from_values(n, k, values, 1.0)
    }
}

/// One term of the expansion: `coeff * prod_j cylinder(factors[j])`.
#[derive(Debug, Clone)]
pub struct RankTerm {
    pub coeff: f64,
    pub factors: Vec<Factor>,
}

/// The structured part written as a short sum of products of one-blind-
/// coordinate indicators, one factor per coordinate.
#[derive(Debug, Clone)]
pub struct RankExpansion {
    pub n: usize,
    pub k: usize,
    pub terms: Vec<RankTerm>,
}

impl RankExpansion {
    /// Re-assemble the represented function (used to validate exactness).
    pub fn evaluate(&self) -> Result<FunctionGk> {
        let size = grid_size(self.n, self.k)?;
        let mut values = vec![0.0; size];
        for term in &self.terms {
            let cylinders: Vec<FunctionGk> =
                term.factors.iter().map(|f| f.cylinder()).collect::<Result<_>>()?;
            for (idx, slot) in values.iter_mut().enumerate() {
                if cylinders.iter().all(|c| c.value(idx) == 1.0) {
                    *slot += term.coeff;
                }
            }
        }
        let bound = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        FunctionGk::from_values(self.n, self.k, values, bound)
    }
}

/// Expand the structured part of a decomposition into rank-one-style terms:
/// one term per occupied join atom with nonzero mean, each the product of the
/// defining atoms of the `k` partitions.  Terms appear in first-occurrence
/// (row-major grid) order.
pub fn rank_expansion(decomp: &Decomposition) -> Result<RankExpansion> {
    let f_s = &decomp.f_s;
    let (n, k) = (f_s.n(), f_s.k());
    if k < 2 {
        return Err(Error::invalid("rank expansion needs k >= 2 (factors live on [n]^(k-1))"));
    }
    let size = grid_size(n, k)?;
    let proj = build_projections(n, k)?;
    let parts = &decomp.partitions;
    if parts.len() != k {
        return Err(Error::invalid("decomposition must carry one partition per coordinate"));
    }
    let mut seen: HashMap<u64, ()> = HashMap::new();
    let mut atoms: Vec<(Vec<u32>, f64)> = Vec::new();
    for idx in 0..size {
        let key = join_key(parts, &proj, idx);
        if seen.insert(key, ()).is_none() {
            let labels: Vec<u32> = (0..k).map(|j| parts[j].labels[proj[j][idx] as usize]).collect();
            atoms.push((labels, f_s.value(idx)));
        }
    }
    if atoms.len() > RANK_CAP {
        return Err(Error::cap(format!(
            "rank expansion has {} terms, beyond the cap {RANK_CAP}",
            atoms.len()
        )));
    }
    let mut terms = Vec::new();
    for (labels, value) in atoms {
        if value == 0.0 {
            continue;
        }
        let mut factors = Vec::with_capacity(k);
        for (j, part) in parts.iter().enumerate() {
            let mut ind = SubsetK::empty(n, k - 1)?;
            for (p, &l) in part.labels.iter().enumerate() {
                if l == labels[j] {
                    ind.bits_mut().set(p, true);
                }
            }
            factors.push(Factor { omitted: j, indicator: ind });
        }
        terms.push(RankTerm { coeff: value, factors });
    }
    Ok(RankExpansion { n, k, terms })
}

/// Pull a function of the corner coordinates `(x_0 .. x_{k-1})` back to
/// `G^k`: the result at `(y_1..y_k)` reads the input at
/// `(y_1, y_1^{-1} y_2, .., y_{k-1}^{-1} y_k)`.  Exact inverse of lifting
/// with the last corner coordinate omitted (values are copied, not computed).
pub fn inverse_lift_k(g: &Group, f: &FunctionGk) -> Result<FunctionGk> {
    f.check_group(g)?;
    let (n, k) = (f.n(), f.k());
    let size = grid_size(n, k)?;
    let mut values = vec![0.0; size];
    for (idx, slot) in values.iter_mut().enumerate() {
        let y = decode(idx, n, k);
        let mut z = 0usize;
        let mut prev: Option<ElementId> = None;
        for &yc in &y {
            let e = ElementId(yc as u16);
            let zc = match prev {
                None => e,
                Some(p) => g.mul(g.inv(p), e),
            };
            z = z * n + zc.index();
            prev = Some(e);
        }
        *slot = f.value(z);
    }
    FunctionGk::from_values(n, k, values, f.bound())
}

/// Outcome of an exhaustive invariance check under the tail action
/// `T_{[range_start, k]}^s` for every shift `s` and grid point.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub range_start: usize,
    pub k: usize,
    pub invariant: bool,
    pub max_deviation: f64,
    /// `(shift id, flat point index)` attaining the maximal deviation, when
    /// the check fails.
    pub witness: Option<(u16, usize)>,
}

/// Exhaustively test `f(T_{[range_start,k]}^s y) = f(y)` over all `s` and `y`.
pub fn check_t_range_invariance(
    g: &Group,
    f: &FunctionGk,
    range_start: usize,
    tol: f64,
) -> Result<InvarianceReport> {
    f.check_group(g)?;
    let (n, k) = (f.n(), f.k());
    if range_start == 0 || range_start > k + 1 {
        return Err(Error::invalid(format!(
            "range start {range_start} out of bounds 1..={}",
            k + 1
        )));
    }
    let cap = crate::corner::enumeration_cap(k)?;
    if n > cap {
        return Err(Error::cap(format!(
            "invariance check over {n}^{} exceeds the k = {k} cap {cap}",
            k + 1
        )));
    }
    let size = grid_size(n, k)?;
    let mut max_dev = 0.0f64;
    let mut arg = (0u16, 0usize);
    for s in g.elements() {
        for idx in 0..size {
            let p = PointK::from_flat(idx, n, k);
            let q = apply_t_range(g, range_start, k, s, &p)?;
            let dev = (f.value(idx) - f.value(q.flat_index(n))).abs();
            if dev > max_dev {
                max_dev = dev;
                arg = (s.0, idx);
            }
        }
    }
    let invariant = max_dev <= tol;
    Ok(InvarianceReport {
        range_start,
        k,
        invariant,
        max_deviation: max_dev,
        witness: if invariant { None } else { Some(arg) },
    })
}

/// A `k`-dimensional correlation rewritten through a decomposition of the
/// last slot: per rank term, the slice-averaged `(k-1)`-dimensional series of
/// the factor-absorbed functions; plus the remainder series with the
/// inverse-lifted small part in the last slot.
#[derive(Debug, Clone, Serialize)]
pub struct StructuredReduction {
    pub group: String,
    pub k: usize,
    /// `(coefficient, reduced series over shifts)` per rank term.
    pub term_series: Vec<(f64, Vec<f64>)>,
    pub remainder: Vec<f64>,
}

impl StructuredReduction {
    /// `sum_l coeff_l * series_l + remainder`, per shift.  Must reproduce the
    /// original `k`-dimensional correlation series.
    pub fn reconstruction(&self) -> Vec<f64> {
        let count = self.remainder.len();
        (0..count)
            .map(|gi| {
                let mut acc = Kahan::new();
                for (c, s) in &self.term_series {
                    acc.add(c * s[gi]);
                }
                acc.add(self.remainder[gi]);
                acc.value()
            })
            .collect()
    }
}

fn slice_last(f: &FunctionGk, a: usize) -> Result<FunctionGk> {
    let n = f.n();
    let rows = f.values().len() / n;
    let values: Vec<f64> = (0..rows).map(|p| f.value(p * n + a)).collect();
    FunctionGk::from_values(n, f.k() - 1, values, f.bound())
}

/// Rewrite `c_g(f_0, .., f_{k-1}, inverse_lift(f_s + f_u))` as reduced
/// `(k-1)`-dimensional correlations plus a remainder.
///
/// Each rank term contributes `coeff * avg_{a_k} c_g^{(k-1)}` of the
/// last-coordinate slices of `m_j = f_j * inverse_lift(cylinder(factor_j))`;
/// the factor absorbed into slot `j` ignores corner coordinate `j`, which is
/// exactly what lets it migrate from the last slot to slot `j`.
pub fn structured_reduction(
    g: &Group,
    fs: &[FunctionGk],
    decomp: &Decomposition,
) -> Result<StructuredReduction> {
    let k = decomp.f_s.k();
    if k < 2 {
        return Err(Error::invalid("structured reduction needs k >= 2"));
    }
    if fs.len() != k {
        return Err(Error::invalid(format!(
            "expected the {k} functions f_0..f_{}, got {}",
            k - 1,
            fs.len()
        )));
    }
    let n = g.order();
    if decomp.f_s.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "decomposition over [{}]^{k} does not match group of order {n}",
            decomp.f_s.n()
        )));
    }
    for f in fs {
        f.check_group(g)?;
        if f.k() != k {
            return Err(Error::DimensionMismatch(format!(
                "correlation slot function has k = {}, expected {k}",
                f.k()
            )));
        }
    }

    let expansion = rank_expansion(decomp)?;
    let mut term_series = Vec::with_capacity(expansion.terms.len());
    for term in &expansion.terms {
        let ms: Vec<FunctionGk> = term
            .factors
            .iter()
            .zip(fs)
            .map(|(fac, f)| {
                let lifted = inverse_lift_k(g, &fac.cylinder()?)?;
                f.pointwise_mul(&lifted)
            })
            .collect::<Result<_>>()?;
        let mut acc: Vec<Kahan> = (0..n).map(|_| Kahan::new()).collect();
        for a in 0..n {
            let slices: Vec<FunctionGk> = ms.iter().map(|m| slice_last(m, a)).collect::<Result<_>>()?;
            let series = multicorrelation(g, &slices)?;
            for (s, v) in acc.iter_mut().zip(&series.values) {
                s.add(*v);
            }
        }
        let series: Vec<f64> = acc.into_iter().map(|s| s.value() / n as f64).collect();
        term_series.push((term.coeff, series));
    }

    let tail = inverse_lift_k(g, &decomp.f_u)?;
    let mut slots = fs.to_vec();
    slots.push(tail);
    let remainder = multicorrelation(g, &slots)?.values;

    Ok(StructuredReduction {
        group: g.label().to_string(),
        k,
        term_series,
        remainder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxnorm::{box_norm_naive, lift};
    use crate::group::parse_descriptor;

    fn random_function(n: usize, k: usize, seed: u64) -> FunctionGk {
        let size = grid_size(n, k).unwrap();
        let mut rng = rng_from_seed(seed);
        let values = (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FunctionGk::from_values(n, k, values, 1.0).unwrap()
    }

    #[test]
    fn inverse_lift_roundtrips_with_last_coordinate_lift() {
        for desc in ["cyclic:5", "sym:3"] {
            let g = parse_descriptor(desc).unwrap();
            let n = g.order();
            for k in [1, 2, 3] {
                let f = random_function(n, k, 7 + k as u64);
                let lifted = lift(&g, &f, k).unwrap();
                let back = inverse_lift_k(&g, lifted.inner()).unwrap();
                assert_eq!(f.values(), back.values(), "{desc} k={k}");
                // and the other direction
                let relifted = lift(&g, &back, k).unwrap();
                assert_eq!(lifted.inner().values(), relifted.inner().values());
            }
        }
    }

    #[test]
    fn witness_average_over_all_fixings_is_the_box_power() {
        for (n, k) in [(4, 2), (3, 3)] {
            let f = random_function(n, k, 21);
            let proj = build_projections(n, k).unwrap();
            let size = grid_size(n, k).unwrap();
            let mut acc = Kahan::new();
            for yflat in 0..size {
                let y = decode(yflat, n, k);
                let ws: Vec<Vec<f64>> = (0..k).map(|j| witness(f.values(), n, k, j, &y)).collect();
                acc.add(witness_correlation(f.values(), &ws, &proj));
            }
            let avg = acc.value() / size as f64;
            let power = box_norm(&f).unwrap().raw_power;
            assert!((avg - power).abs() < 1e-12, "n={n} k={k}: {avg} vs {power}");
        }
    }

    #[test]
    fn regularity_converges_on_random_signs_and_keeps_invariants() {
        let f = FunctionGk::random_signs(8, 2, 31).unwrap();
        let d = weak_regularity(&f, 0.3, None, 1001).unwrap();
        assert!(d.achieved_eps <= 0.3);
        // exact additive split
        for (idx, &v) in f.values().iter().enumerate() {
            assert_eq!(v, d.f_s.value(idx) + d.f_u.value(idx));
        }
        // sup bounds
        assert!(d.f_s.values().iter().all(|v| v.abs() <= 1.0));
        assert!(d.f_u.values().iter().all(|v| v.abs() <= 2.0));
        // mean preservation
        assert!((d.f_s.mean() - f.mean()).abs() < 1e-12);
        // f_s constant on join atoms
        let proj = build_projections(8, 2).unwrap();
        let mut by_key: HashMap<u64, f64> = HashMap::new();
        for idx in 0..64 {
            let key = join_key(&d.partitions, &proj, idx);
            let v = by_key.entry(key).or_insert(d.f_s.value(idx));
            assert_eq!(*v, d.f_s.value(idx));
        }
        // committed gains are strictly positive
        assert!(d.energy_gains.iter().all(|&g| g > 0.0));
        // independent verification of the final norm
        let naive = box_norm_naive(&d.f_u).unwrap().norm;
        assert!((naive - d.achieved_eps).abs() < 1e-9);
    }

    #[test]
    fn structured_function_converges_in_zero_rounds() {
        // A function that is already a conditional expectation of the trivial
        // join (a constant) has zero remainder immediately.  A dyadic constant
        // keeps every average exact, so the remainder is exactly zero.
        let f = FunctionGk::constant(6, 2, 0.5).unwrap();
        let d = weak_regularity(&f, 0.1, None, 5).unwrap();
        assert_eq!(d.iterations, 0);
        assert_eq!(d.achieved_eps, 0.0);
        assert!(d.energy_gains.is_empty());
        assert!(d.partitions.iter().all(|p| p.atom_count == 1));
    }

    #[test]
    fn exhausted_budget_reports_best_decomposition() {
        let f = FunctionGk::random_signs(8, 2, 77).unwrap();
        match weak_regularity(&f, 0.01, Some(1), 3) {
            Err(RegularityError::Budget { iterations, achieved, best }) => {
                assert_eq!(iterations, 1);
                assert!(achieved > 0.01);
                assert_eq!(best.achieved_eps, achieved);
                for (idx, &v) in f.values().iter().enumerate() {
                    assert_eq!(v, best.f_s.value(idx) + best.f_u.value(idx));
                }
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_across_calls() {
        let f = FunctionGk::random_signs(8, 2, 5).unwrap();
        let a = weak_regularity(&f, 0.3, None, 99).unwrap();
        let b = weak_regularity(&f, 0.3, None, 99).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.f_s.values(), b.f_s.values());
        assert_eq!(a.energy_gains, b.energy_gains);
    }

    #[test]
    fn rank_expansion_reassembles_the_structured_part() {
        let f = FunctionGk::random_signs(6, 2, 13).unwrap();
        let d = weak_regularity(&f, 0.4, None, 55).unwrap();
        let expansion = rank_expansion(&d).unwrap();
        let rebuilt = expansion.evaluate().unwrap();
        for (a, b) in d.f_s.values().iter().zip(rebuilt.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        // factors are genuinely blind to their coordinate and the pullbacks
        // are invariant under the corresponding tail action
        let g = parse_descriptor("cyclic:6").unwrap();
        for term in &expansion.terms {
            for fac in &term.factors {
                let lifted = inverse_lift_k(&g, &fac.cylinder().unwrap()).unwrap();
                let report = check_t_range_invariance(&g, &lifted, fac.omitted + 1, 0.0).unwrap();
                assert!(report.invariant, "factor omitting {} must be tail-invariant", fac.omitted);
            }
        }
    }

    #[test]
    fn inverse_lifted_cylinders_are_tail_invariant_on_nonabelian_groups() {
        let g = parse_descriptor("sym:3").unwrap();
        let n = g.order();
        for j in 0..2usize {
            // arbitrary indicator on the projected grid [6]^1
            let ind = SubsetK::from_indices(n, 1, [0usize, 2, 3]).unwrap();
            let fac = Factor { omitted: j, indicator: ind };
            let lifted = inverse_lift_k(&g, &fac.cylinder().unwrap()).unwrap();
            let report = check_t_range_invariance(&g, &lifted, j + 1, 0.0).unwrap();
            assert!(report.invariant, "omitted {j}");
            // and the check does detect non-invariance
            if j == 0 {
                let noisy = random_function(n, 2, 3);
                let bad = check_t_range_invariance(&g, &noisy, 1, 1e-6).unwrap();
                assert!(!bad.invariant);
                assert!(bad.witness.is_some());
            }
        }
    }

    #[test]
    fn reduction_reconstructs_the_full_correlation() {
        let g = parse_descriptor("cyclic:6").unwrap();
        let f0 = random_function(6, 2, 41);
        let f1 = random_function(6, 2, 42);
        let f2 = random_function(6, 2, 43);
        let lifted = lift(&g, &f2, 2).unwrap();
        let decomp = match weak_regularity(lifted.inner(), 0.2, None, 7) {
            Ok(d) => d,
            Err(RegularityError::Budget { best, .. }) => *best,
            Err(e) => panic!("{e}"),
        };
        let reduction = structured_reduction(&g, &[f0.clone(), f1.clone()], &decomp).unwrap();
        let direct = multicorrelation(&g, &[f0, f1, f2]).unwrap();
        let recon = reduction.reconstruction();
        for (gi, (r, d)) in recon.iter().zip(&direct.values).enumerate() {
            assert!((r - d).abs() < 1e-9, "shift {gi}: {r} vs {d}");
        }
        // reduced series really are (k-1)-dimensional objects: one value per
        // shift, one term per occupied nonzero atom
        for (_, series) in &reduction.term_series {
            assert_eq!(series.len(), 6);
        }
    }

    #[test]
    fn reduction_rejects_wrong_arity() {
        let g = parse_descriptor("cyclic:6").unwrap();
        let f = random_function(6, 2, 1);
        let lifted = lift(&g, &f, 2).unwrap();
        let d = match weak_regularity(lifted.inner(), 0.5, None, 2) {
            Ok(d) => d,
            Err(RegularityError::Budget { best, .. }) => *best,
            Err(e) => panic!("{e}"),
        };
        assert!(structured_reduction(&g, &[f.clone()], &d).is_err());
    }
}
