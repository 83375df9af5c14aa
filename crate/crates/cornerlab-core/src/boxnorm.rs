//! Gowers box norms and the box-norm control of corner counts.
//!
//! For `F : [n]^k -> R` the box norm is defined through its `2^k`-th power
//! `||F||^{2^k} = E prod_{eps in {0,1}^k} F(z_eps)` where each coordinate of
//! `z_eps` independently picks one of two samples.  [`box_norm`] evaluates it
//! by the recursion that squares the last coordinate first, costing
//! `O(n^{2k-1})` instead of the naive `O(n^{2k})`; [`box_norm_naive`] is the
//! direct-definition oracle.
//!
//! [`lift`] rewrites a function on `G^k` in corner coordinates
//! `x = (x_0..x_k)`: corner point `i` does not depend on `x_i`, so
//! `f(point_i)` is a function of the remaining `k` coordinates.  Since the
//! point map is a bijection of `[n]^k`, lifted indicators keep their density.
//! [`verify_box_control`] compares the averaged absolute correlation of a
//! `k+1`-tuple of functions against the smallest box norm among their lifts.

use crate::corner::{corner_point_without, multicorrelation};
use crate::error::{Error, Result};
use crate::grid::{grid_size, Kahan};
use crate::group::{ElementId, Group};
use crate::subset::FunctionGk;
use rayon::prelude::*;
use serde::Serialize;

/// Anything that looks like a bounded function on the grid `[n]^k`.
pub trait CoordFunction {
    fn n(&self) -> usize;
    fn k(&self) -> usize;
    fn values(&self) -> &[f64];
    fn bound(&self) -> f64;
}

impl CoordFunction for FunctionGk {
    fn n(&self) -> usize {
        FunctionGk::n(self)
    }
    fn k(&self) -> usize {
        FunctionGk::k(self)
    }
    fn values(&self) -> &[f64] {
        FunctionGk::values(self)
    }
    fn bound(&self) -> f64 {
        FunctionGk::bound(self)
    }
}

/// A function of the corner coordinates `(x_j)_{j != omitted}`, stored over
/// the same grid `[n]^k` with the remaining coordinates in increasing order.
#[derive(Debug, Clone)]
pub struct LiftedFunction {
    omitted: usize,
    inner: FunctionGk,
}

impl LiftedFunction {
    /// Index of the corner coordinate this function does not depend on.
    pub fn omitted(&self) -> usize {
        self.omitted
    }

    pub fn inner(&self) -> &FunctionGk {
        &self.inner
    }
}

impl CoordFunction for LiftedFunction {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn k(&self) -> usize {
        self.inner.k()
    }
    fn values(&self) -> &[f64] {
        self.inner.values()
    }
    fn bound(&self) -> f64 {
        self.inner.bound()
    }
}

/// Lift `f : G^k -> R` to corner coordinates, omitting `x_i`: the result at
/// `(x_j)_{j != i}` is `f` evaluated at corner point `i`, whose first `i`
/// entries are the prefix products `x_0 .. x_{c-1}` and whose remaining
/// entries are the inverted suffix products `(x_c .. x_k)^{-1}`.
pub fn lift(g: &Group, f: &FunctionGk, i: usize) -> Result<LiftedFunction> {
    f.check_group(g)?;
    let k = f.k();
    if i > k {
        return Err(Error::invalid(format!("omitted coordinate {i} out of range 0..={k}")));
    }
    let n = g.order();
    let size = grid_size(n, k)?;
    let mut values = vec![0.0; size];
    let mut coords = vec![g.identity(); k];
    for (idx, slot) in values.iter_mut().enumerate() {
        let digits = crate::grid::decode(idx, n, k);
        for (c, d) in coords.iter_mut().zip(&digits) {
            *c = ElementId(*d as u16);
        }
        let point = corner_point_without(g, &coords, i, k);
        *slot = f.value(point.flat_index(n));
    }
    let inner = FunctionGk::from_values(n, k, values, f.bound())?;
    Ok(LiftedFunction { omitted: i, inner })
}

/// A box norm evaluation: the `2^k`-th power as accumulated, and the norm.
#[derive(Debug, Clone, Serialize)]
pub struct BoxNormReport {
    pub k: usize,
    pub raw_power: f64,
    pub norm: f64,
}

fn check_box_dims(n: usize, k: usize) -> Result<()> {
    let cap = crate::corner::enumeration_cap(k)?;
    if n > cap {
        return Err(Error::cap(format!("order {n} exceeds the k = {k} cap {cap}")));
    }
    Ok(())
}

/// Box norm via the last-coordinate-first recursion.  `k = 1` reduces to
/// `|mean|` and is returned exactly in that form (no square/square-root trip).
pub fn box_norm<F: CoordFunction + ?Sized>(f: &F) -> Result<BoxNormReport> {
    let (n, k) = (f.n(), f.k());
    check_box_dims(n, k)?;
    if k == 1 {
        let mut acc = Kahan::new();
        for &v in f.values() {
            acc.add(v);
        }
        let mean = acc.value() / n as f64;
        return Ok(BoxNormReport { k, raw_power: mean * mean, norm: mean.abs() });
    }
    let power = box_power(f.values(), n, k);
    let norm = power_to_norm(power, k)?;
    Ok(BoxNormReport { k, raw_power: power, norm })
}

fn power_to_norm(power: f64, k: usize) -> Result<f64> {
    if power < -1e-9 {
        return Err(Error::Numerical(format!(
            "box power {power:.3e} is negative beyond roundoff"
        )));
    }
    let clipped = if power < 0.0 {
        log::warn!("clipping slightly negative box power {power:.3e} to zero");
        0.0
    } else {
        power
    };
    Ok(clipped.powf(1.0 / (1u64 << k) as f64))
}

/// `E prod F(z_eps)` for the last `k` alive coordinates of a length-`n^k`
/// value table.  Structurally a mean of squares, hence nonnegative.
fn box_power(values: &[f64], n: usize, k: usize) -> f64 {
    match k {
        1 => {
            let mut acc = Kahan::new();
            for &v in values {
                acc.add(v);
            }
            let m = acc.value() / n as f64;
            m * m
        }
        2 => gram_power(values, n),
        _ => {
            let rows = values.len() / n;
            let contributions: Vec<f64> = (0..n * n)
                .into_par_iter()
                .map(|uv| {
                    let (u, v) = (uv / n, uv % n);
                    let mut prod = vec![0.0; rows];
                    for (p, slot) in prod.iter_mut().enumerate() {
                        *slot = values[p * n + u] * values[p * n + v];
                    }
                    box_power(&prod, n, k - 1)
                })
                .collect();
            let mut acc = Kahan::new();
            for c in contributions {
                acc.add(c);
            }
            acc.value() / (n * n) as f64
        }
    }
}

/// `k = 2` power without materialising pair products:
/// `(1/n^2) sum_{u,v} (E_x F[x,u] F[x,v])^2`, evaluated as contiguous dot
/// products of the transposed value table.
fn gram_power(values: &[f64], n: usize) -> f64 {
    let mut t = vec![0.0; n * n];
    for x in 0..n {
        for u in 0..n {
            t[u * n + x] = values[x * n + u];
        }
    }
    let per_u: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|u| {
            let row_u = &t[u * n..(u + 1) * n];
            let mut s = Kahan::new();
            for v in 0..n {
                let row_v = &t[v * n..(v + 1) * n];
                let mut dot = 0.0;
                for (a, b) in row_u.iter().zip(row_v) {
                    dot += a * b;
                }
                let scaled = dot / n as f64;
                s.add(scaled * scaled);
            }
            s.value()
        })
        .collect();
    let mut acc = Kahan::new();
    for s in per_u {
        acc.add(s);
    }
    acc.value() / (n * n) as f64
}

/// Direct-definition box norm: enumerate all `n^{2k}` coordinate pairs.
/// Oracle-scale only (`n^{2k} <= 1e8`).
pub fn box_norm_naive<F: CoordFunction + ?Sized>(f: &F) -> Result<BoxNormReport> {
    let (n, k) = (f.n(), f.k());
    if k == 0 {
        return Err(Error::invalid("box norm needs k >= 1"));
    }
    let pairs = grid_size(n.checked_mul(n).ok_or_else(|| Error::cap("n^2 overflow"))?, k)?;
    if pairs > 100_000_000 {
        return Err(Error::cap(format!(
            "naive box norm over {n}^{} exceeds the oracle-scale cap",
            2 * k
        )));
    }
    let values = f.values();
    let mut acc = Kahan::new();
    // Coordinate j of the pair grid encodes (x_j, y_j) as x_j * n + y_j.
    for flat in 0..pairs {
        let digits = crate::grid::decode(flat, n * n, k);
        let mut prod = 1.0;
        for eps in 0..(1u32 << k) {
            let mut idx = 0usize;
            for (j, d) in digits.iter().enumerate() {
                let pick = if (eps >> (k - 1 - j)) & 1 == 0 { d / n } else { d % n };
                idx = idx * n + pick;
            }
            prod *= values[idx];
        }
        acc.add(prod);
    }
    let power = acc.value() / pairs as f64;
    if k == 1 {
        // Match the exact-|mean| convention of the fast path.
        let mut m = Kahan::new();
        for &v in values {
            m.add(v);
        }
        let mean = m.value() / n as f64;
        return Ok(BoxNormReport { k, raw_power: power, norm: mean.abs() });
    }
    let norm = power_to_norm(power, k)?;
    Ok(BoxNormReport { k, raw_power: power, norm })
}

/// Box-norm control data for a tuple of `k+1` bounded functions: the averaged
/// absolute correlation against the smallest box norm among the lifts.
#[derive(Debug, Clone, Serialize)]
pub struct BoxControlReport {
    pub group: String,
    pub k: usize,
    /// Average over shifts of `|c_g|`.
    pub lhs: f64,
    /// Box norm of the lift of function `i`, omitting corner coordinate `i`.
    pub box_norms: Vec<f64>,
    pub min_box_norm: f64,
    /// `max(0, lhs - min_box_norm)`: how far the control inequality is from
    /// holding with no additive slack at this finite size.
    pub residual: f64,
}

/// Evaluate the control data for `k+1` functions with sup norm at most 1.
/// Function `i` enters the correlation at corner point `i` and is lifted so
/// that its lift does not depend on corner coordinate `i`.
pub fn verify_box_control(g: &Group, fns: &[FunctionGk]) -> Result<BoxControlReport> {
    if fns.len() < 2 {
        return Err(Error::invalid("box control needs k+1 >= 2 functions"));
    }
    let k = fns.len() - 1;
    for (i, f) in fns.iter().enumerate() {
        f.check_group(g)?;
        if f.k() != k {
            return Err(Error::DimensionMismatch(format!(
                "function {i} lives on [{}]^{} but {} functions imply k = {k}",
                f.n(),
                f.k(),
                fns.len()
            )));
        }
        if let Some(bad) = f.values().iter().find(|v| v.abs() > 1.0) {
            return Err(Error::invalid(format!(
                "function {i} value {bad} outside [-1, 1]"
            )));
        }
    }
    let series = multicorrelation(g, fns)?;
    let mut acc = Kahan::new();
    for &c in &series.values {
        acc.add(c.abs());
    }
    let lhs = acc.value() / series.values.len() as f64;
    let mut box_norms = Vec::with_capacity(k + 1);
    for (i, f) in fns.iter().enumerate() {
        box_norms.push(box_norm(&lift(g, f, i)?)?.norm);
    }
    let min_box_norm = box_norms.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(BoxControlReport {
        group: g.label().to_string(),
        k,
        lhs,
        box_norms,
        min_box_norm,
        residual: (lhs - min_box_norm).max(0.0),
    })
}
