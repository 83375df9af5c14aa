//! Reproducible corner experiments over families of groups.
//!
//! A [`SubsetSpec`] describes how to carve a subset out of `G^k` (exact-count
//! random, a product of coordinate intervals, or a union of randomly planted
//! corner configurations).  [`tv_scan`] runs the same spec across a list of
//! group descriptors with per-row seeds derived from one master seed, so a
//! scan is reproducible row by row regardless of execution order.

use crate::corner::{corner_config, corner_stats, good_fraction, PointK};
use crate::error::{Error, Result};
use crate::grid::grid_size;
use crate::group::{parse_descriptor, ElementId, Group};
use crate::rng::{derive_seed, rng_from_seed};
use crate::subset::SubsetK;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

/// How to build the subset of `G^k` an experiment runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum SubsetSpec {
    /// Uniform random subset with exactly `round(delta * n^k)` elements.
    Random { delta: f64 },
    /// Product of per-coordinate element-id intervals `[lo, hi)`.
    Intervals { ranges: Vec<(usize, usize)> },
    /// Union of `m` randomly chosen corner configurations, starting empty.
    Planted { m: usize },
}

impl fmt::Display for SubsetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubsetSpec::Random { delta } => write!(f, "random:{delta}"),
            SubsetSpec::Intervals { ranges } => {
                write!(f, "interval:")?;
                for (i, (lo, hi)) in ranges.iter().enumerate() {
                    if i > 0 {
                        write!(f, "x")?;
                    }
                    write!(f, "{lo}-{hi}")?;
                }
                Ok(())
            }
            SubsetSpec::Planted { m } => write!(f, "planted:{m}"),
        }
    }
}

impl FromStr for SubsetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<SubsetSpec> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("subset spec '{s}' has no ':'")))?;
        match kind {
            "random" => {
                let delta: f64 = rest
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad density '{rest}'")))?;
                if !(0.0..=1.0).contains(&delta) {
                    return Err(Error::Parse(format!("density {delta} outside [0, 1]")));
                }
                Ok(SubsetSpec::Random { delta })
            }
            "interval" => {
                let mut ranges = Vec::new();
                for part in rest.split('x') {
                    let (lo, hi) = part
                        .split_once('-')
                        .ok_or_else(|| Error::Parse(format!("bad interval '{part}'")))?;
                    let lo: usize =
                        lo.parse().map_err(|_| Error::Parse(format!("bad bound '{lo}'")))?;
                    let hi: usize =
                        hi.parse().map_err(|_| Error::Parse(format!("bad bound '{hi}'")))?;
                    if lo > hi {
                        return Err(Error::Parse(format!("empty-by-order interval {lo}-{hi}")));
                    }
                    ranges.push((lo, hi));
                }
                if ranges.is_empty() {
                    return Err(Error::Parse("interval spec needs at least one range".into()));
                }
                Ok(SubsetSpec::Intervals { ranges })
            }
            "planted" => {
                let m: usize = rest
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad plant count '{rest}'")))?;
                Ok(SubsetSpec::Planted { m })
            }
            other => Err(Error::Parse(format!("unknown subset kind '{other}'"))),
        }
    }
}

/// Materialise a spec over `G^k`.  Same `(group, k, spec, seed)` always
/// yields the same subset.
pub fn generate_subset(g: &Group, k: usize, spec: &SubsetSpec, seed: u64) -> Result<SubsetK> {
    let n = g.order();
    let size = grid_size(n, k)?;
    match spec {
        SubsetSpec::Random { delta } => {
            let m = ((delta * size as f64).round() as usize).min(size);
            let mut idx: Vec<usize> = (0..size).collect();
            let mut rng = rng_from_seed(seed);
            // partial Fisher-Yates: only the first m slots are needed
            for i in 0..m {
                let j = rng.gen_range(i..size);
                idx.swap(i, j);
            }
            SubsetK::from_indices(n, k, idx.into_iter().take(m))
        }
        SubsetSpec::Intervals { ranges } => {
            if ranges.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "{} interval(s) for k = {k}",
                    ranges.len()
                )));
            }
            for &(lo, hi) in ranges {
                if hi > n {
                    return Err(Error::invalid(format!(
                        "interval {lo}-{hi} exceeds group order {n}"
                    )));
                }
            }
            let mut a = SubsetK::empty(n, k)?;
            let mut coords: Vec<usize> = ranges.iter().map(|&(lo, _)| lo).collect();
            if ranges.iter().any(|&(lo, hi)| lo == hi) {
                return Ok(a); // some factor is empty
            }
            loop {
                a.bits_mut().set(crate::grid::encode(&coords, n), true);
                let mut d = k;
                loop {
                    if d == 0 {
                        return Ok(a);
                    }
                    d -= 1;
                    coords[d] += 1;
                    if coords[d] < ranges[d].1 {
                        break;
                    }
                    coords[d] = ranges[d].0;
                }
            }
        }
        SubsetSpec::Planted { m } => {
            let mut a = SubsetK::empty(n, k)?;
            let mut rng = rng_from_seed(seed);
            for _ in 0..*m {
                let s = ElementId(rng.gen_range(0..n) as u16);
                let coords: Vec<ElementId> =
                    (0..k).map(|_| ElementId(rng.gen_range(0..n) as u16)).collect();
                for p in corner_config(g, s, &PointK(coords))? {
                    a.bits_mut().set(p.flat_index(n), true);
                }
            }
            Ok(a)
        }
    }
}

/// Threshold rule for counting "good" shifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ThetaRule {
    Fixed(f64),
    /// Half the observed mean correlation.
    HalfMean,
}

impl ThetaRule {
    pub fn theta(&self, mean: f64) -> f64 {
        match self {
            ThetaRule::Fixed(t) => *t,
            ThetaRule::HalfMean => mean / 2.0,
        }
    }
}

impl fmt::Display for ThetaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaRule::Fixed(t) => write!(f, "{t}"),
            ThetaRule::HalfMean => write!(f, "half-mean"),
        }
    }
}

impl FromStr for ThetaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<ThetaRule> {
        if s == "half-mean" {
            return Ok(ThetaRule::HalfMean);
        }
        s.parse::<f64>()
            .map(ThetaRule::Fixed)
            .map_err(|_| Error::Parse(format!("theta must be a number or 'half-mean', got '{s}'")))
    }
}

/// Summary of one corner experiment row.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub group: String,
    pub order: usize,
    /// Quasirandomness degree of the group.
    pub d: u32,
    pub k: usize,
    pub spec: String,
    pub seed: u64,
    pub count: u64,
    pub density: f64,
    /// Total corner configurations found in the subset.
    pub corners: u64,
    pub mean: f64,
    pub tv: f64,
    pub theta: f64,
    pub good_fraction: f64,
    pub min_c: f64,
    pub max_c: f64,
    /// Wall time; excluded from serialization so reports are byte-stable.
    #[serde(skip)]
    pub wall_ms: u128,
}

/// Run one experiment row.
pub fn run_experiment(
    g: &Group,
    k: usize,
    spec: &SubsetSpec,
    theta: ThetaRule,
    seed: u64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let d = crate::spectral::quasirandomness_degree(g)?.d;
    let a = generate_subset(g, k, spec, seed)?;
    let stats = corner_stats(g, &a)?;
    let series = &stats.series;
    let t = theta.theta(series.mean);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &series.values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(ExperimentReport {
        group: g.label().to_string(),
        order: g.order(),
        d,
        k,
        spec: spec.to_string(),
        seed,
        count: a.count(),
        density: a.density(),
        corners: stats.total,
        mean: series.mean,
        tv: series.tv,
        theta: t,
        good_fraction: good_fraction(series, t),
        min_c: lo,
        max_c: hi,
        wall_ms: start.elapsed().as_millis(),
    })
}

/// Run the same spec across several group descriptors.  Row `i` uses the
/// seed `derive_seed(master_seed, "tv|<descriptor>|k=<k>|<spec>")`, so the
/// result of a row depends only on its own descriptor, not on its position
/// or on other rows.  Rows run in parallel; failures stay per-row.
pub fn tv_scan(
    descriptors: &[String],
    k: usize,
    spec: &SubsetSpec,
    theta: ThetaRule,
    master_seed: u64,
) -> Vec<Result<ExperimentReport>> {
    descriptors
        .par_iter()
        .map(|desc| {
            let g = parse_descriptor(desc)?;
            let seed = derive_seed(master_seed, &format!("tv|{desc}|k={k}|{spec}"));
            run_experiment(&g, k, spec, theta, seed)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_grammar_roundtrips() {
        for s in ["random:0.25", "random:0.125", "interval:0-3", "interval:0-84x252-336", "planted:12"] {
            let spec: SubsetSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }

    #[test]
    fn spec_grammar_rejects_malformed_input() {
        for s in ["random", "random:1.5", "random:x", "interval:5-2", "interval:a-b", "planted:-3", "blob:3"] {
            assert!(s.parse::<SubsetSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn random_spec_has_exact_count_and_is_seed_deterministic() {
        let g = Group::cyclic(10).unwrap();
        let spec = SubsetSpec::Random { delta: 0.3 };
        let a = generate_subset(&g, 2, &spec, 42).unwrap();
        assert_eq!(a.count(), 30);
        let b = generate_subset(&g, 2, &spec, 42).unwrap();
        assert_eq!(a.bits().words(), b.bits().words());
        let c = generate_subset(&g, 2, &spec, 43).unwrap();
        assert_ne!(a.bits().words(), c.bits().words());
    }

    #[test]
    fn interval_spec_matches_the_product_predicate() {
        let g = Group::cyclic(7).unwrap();
        let spec: SubsetSpec = "interval:1-4x0-2".parse().unwrap();
        let a = generate_subset(&g, 2, &spec, 0).unwrap();
        for x in 0..7 {
            for y in 0..7 {
                let inside = (1..4).contains(&x) && (0..2).contains(&y);
                assert_eq!(a.contains_index(x * 7 + y), inside, "({x},{y})");
            }
        }
        // arity mismatch
        assert!(generate_subset(&g, 3, &spec, 0).is_err());
        // out of range
        let far: SubsetSpec = "interval:0-9x0-2".parse().unwrap();
        assert!(generate_subset(&g, 2, &far, 0).is_err());
    }

    #[test]
    fn planted_spec_actually_plants_corners() {
        let g = Group::cyclic(7).unwrap();
        let spec = SubsetSpec::Planted { m: 4 };
        let a = generate_subset(&g, 2, &spec, 9).unwrap();
        let stats = crate::corner::corner_stats(&g, &a).unwrap();
        // each plant leaves a full corner behind, so at least m survive
        assert!(stats.total >= 4, "total {}", stats.total);
        assert!(a.count() > 0);
    }

    #[test]
    fn theta_rules_parse_and_apply() {
        assert_eq!("half-mean".parse::<ThetaRule>().unwrap(), ThetaRule::HalfMean);
        assert_eq!("0.125".parse::<ThetaRule>().unwrap(), ThetaRule::Fixed(0.125));
        assert!("mean".parse::<ThetaRule>().is_err());
        assert_eq!(ThetaRule::HalfMean.theta(0.5), 0.25);
        assert_eq!(ThetaRule::Fixed(0.1).theta(0.5), 0.1);
    }

    #[test]
    fn scan_rows_are_independent_and_errors_stay_local() {
        let descs: Vec<String> =
            ["cyclic:6", "nope:1", "sym:3"].iter().map(|s| s.to_string()).collect();
        let spec = SubsetSpec::Random { delta: 0.4 };
        let rows = tv_scan(&descs, 2, &spec, ThetaRule::HalfMean, 7);
        assert_eq!(rows.len(), 3);
        assert!(rows[0].is_ok());
        assert!(rows[1].is_err());
        assert!(rows[2].is_ok());
        // the same descriptor alone reproduces its row exactly
        let solo = tv_scan(&descs[..1], 2, &spec, ThetaRule::HalfMean, 7);
        let (a, b) = (rows[0].as_ref().unwrap(), solo[0].as_ref().unwrap());
        assert_eq!(a.count, b.count);
        assert_eq!(a.tv.to_bits(), b.tv.to_bits());
        assert_eq!(a.good_fraction, b.good_fraction);
    }
}
