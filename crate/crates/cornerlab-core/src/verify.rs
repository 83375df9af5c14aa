//! Cross-module consistency suite.
//!
//! Runs the independent implementations of each quantity against each other
//! (bitset corner counts vs hypergraph simplices, recursive vs naive box
//! norms, computed vs cataloged quasirandomness degrees, ...) and returns one
//! named pass/fail record per check.  `Fast` covers every module at toy
//! sizes; `Full` repeats the same checks on the larger standard groups.

use crate::boxnorm::{box_norm, box_norm_naive, verify_box_control};
use crate::corner::{corner_stats, count_simplices, hypergraph_edges, multicorrelation};
use crate::error::Result;
use crate::experiment::{generate_subset, SubsetSpec};
use crate::group::parse_descriptor;
use crate::regularity::{structured_reduction, weak_regularity, RegularityError};
use crate::spectral::{quasirandomness_degree, verify_mean_ergodic};
use crate::subset::FunctionGk;
use serde::Serialize;
use std::time::Instant;

/// How much work the suite is allowed to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyLevel {
    Fast,
    Full,
}

/// One check of the suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub wall_ms: u128,
}

fn run_check(name: &str, check: impl FnOnce() -> Result<String>) -> SuiteResult {
    let start = Instant::now();
    let (passed, detail) = match check() {
        Ok(detail) => (true, detail),
        Err(e) => (false, e.to_string()),
    };
    SuiteResult {
        name: name.to_string(),
        passed,
        detail,
        wall_ms: start.elapsed().as_millis(),
    }
}

fn fail(msg: String) -> crate::error::Error {
    crate::error::Error::Verification(msg)
}

/// Run the consistency suite.  Every returned record is independent; a
/// failure in one check does not stop the others.
pub fn verify_suite(level: VerifyLevel) -> Vec<SuiteResult> {
    let mut results = Vec::new();

    let axiom_groups: &[&str] = match level {
        VerifyLevel::Fast => &["cyclic:12", "sym:3", "sl2:3", "prod:(cyclic:2,cyclic:5)"],
        VerifyLevel::Full => &["cyclic:12", "sym:4", "alt:5", "sl2:5", "sl2:7", "prod:(alt:4,cyclic:3)"],
    };
    results.push(run_check("group-axioms", || {
        for desc in axiom_groups {
            let g = parse_descriptor(desc)?;
            g.check_axioms(256, 10_000, 11)?;
        }
        Ok(format!("{} groups", axiom_groups.len()))
    }));

    let degree_groups: &[&str] = match level {
        VerifyLevel::Fast => &["cyclic:10", "sym:3", "sl2:3"],
        VerifyLevel::Full => &["cyclic:10", "sym:4", "alt:5", "sl2:5", "sl2:7"],
    };
    results.push(run_check("quasirandomness-degrees", || {
        let mut summary = Vec::new();
        for desc in degree_groups {
            let g = parse_descriptor(desc)?;
            let report = quasirandomness_degree(&g)?;
            let sum: u64 = report.degrees.iter().map(|&d| d as u64 * d as u64).sum();
            if sum != g.order() as u64 {
                return Err(fail(format!("{desc}: degree squares sum {sum} != {}", g.order())));
            }
            summary.push(format!("{desc}:D={}", report.d));
        }
        Ok(summary.join(" "))
    }));

    results.push(run_check("mean-ergodic-averages", || {
        let (desc, trials) = match level {
            VerifyLevel::Fast => ("sl2:3", 10),
            VerifyLevel::Full => ("sl2:5", 50),
        };
        let g = parse_descriptor(desc)?;
        let report = verify_mean_ergodic(&g, trials, 23)?;
        if report.max_ratio > 1.0 + 1e-9 {
            return Err(fail(format!("{desc}: ratio {} above 1", report.max_ratio)));
        }
        Ok(format!("{desc}: max ratio {:.3e}", report.max_ratio))
    }));

    let corner_cases: &[(&str, usize)] = match level {
        VerifyLevel::Fast => &[("cyclic:6", 2), ("sym:3", 2)],
        VerifyLevel::Full => &[("cyclic:8", 2), ("sym:3", 2), ("cyclic:5", 3)],
    };
    results.push(run_check("corners-vs-simplices", || {
        for &(desc, k) in corner_cases {
            let g = parse_descriptor(desc)?;
            let a = generate_subset(&g, k, &SubsetSpec::Random { delta: 0.4 }, 5)?;
            let stats = corner_stats(&g, &a)?;
            let simplices = count_simplices(&g, &hypergraph_edges(&g, &a)?)?;
            if stats.total != simplices {
                return Err(fail(format!(
                    "{desc} k={k}: {} corners vs {} simplices",
                    stats.total, simplices
                )));
            }
        }
        Ok(format!("{} cases", corner_cases.len()))
    }));

    let box_cases: &[(usize, usize)] = match level {
        VerifyLevel::Fast => &[(5, 2)],
        VerifyLevel::Full => &[(5, 2), (6, 2), (4, 3)],
    };
    results.push(run_check("box-norm-recursion-vs-naive", || {
        for &(n, k) in box_cases {
            let f = FunctionGk::random_signs(n, k, 3)?;
            let fast = box_norm(&f)?;
            let naive = box_norm_naive(&f)?;
            if (fast.raw_power - naive.raw_power).abs() > 1e-12 {
                return Err(fail(format!(
                    "n={n} k={k}: powers {} vs {}",
                    fast.raw_power, naive.raw_power
                )));
            }
        }
        Ok(format!("{} cases", box_cases.len()))
    }));

    results.push(run_check("box-control-residual", || {
        let desc = match level {
            VerifyLevel::Fast => "cyclic:8",
            VerifyLevel::Full => "sl2:3",
        };
        let g = parse_descriptor(desc)?;
        let a = generate_subset(&g, 2, &SubsetSpec::Random { delta: 0.25 }, 1)?;
        let f = FunctionGk::indicator(&a);
        let report = verify_box_control(&g, &[f.clone(), f.clone(), f])?;
        if !(report.lhs.is_finite() && report.min_box_norm.is_finite()) {
            return Err(fail("non-finite control report".to_string()));
        }
        Ok(format!(
            "{desc}: lhs {:.4e}, min box norm {:.4}, residual {:.3e}",
            report.lhs, report.min_box_norm, report.residual
        ))
    }));

    results.push(run_check("regularity-and-reduction", || {
        let seeds: &[u64] = match level {
            VerifyLevel::Fast => &[1],
            VerifyLevel::Full => &[1, 2, 3],
        };
        for &seed in seeds {
            let f = FunctionGk::random_signs(8, 2, seed)?;
            let d = weak_regularity(&f, 0.3, None, seed).map_err(|e| match e {
                RegularityError::Core(c) => c,
                RegularityError::Budget { achieved, .. } => {
                    fail(format!("seed {seed}: stuck at box norm {achieved:.4}"))
                }
            })?;
            if d.achieved_eps > 0.3 {
                return Err(fail(format!("seed {seed}: norm {}", d.achieved_eps)));
            }
        }
        // reduction identity on a small cyclic group
        let g = parse_descriptor("cyclic:6")?;
        let f0 = FunctionGk::random_signs(6, 2, 10)?;
        let f1 = FunctionGk::random_signs(6, 2, 11)?;
        let f2 = FunctionGk::random_signs(6, 2, 12)?;
        let lifted = crate::boxnorm::lift(&g, &f2, 2)?;
        let decomp = match weak_regularity(lifted.inner(), 0.25, None, 4) {
            Ok(d) => d,
            Err(RegularityError::Budget { best, .. }) => *best,
            Err(RegularityError::Core(c)) => return Err(c),
        };
        let reduction = structured_reduction(&g, &[f0.clone(), f1.clone()], &decomp)?;
        let direct = multicorrelation(&g, &[f0, f1, f2])?;
        for (r, d) in reduction.reconstruction().iter().zip(&direct.values) {
            if (r - d).abs() > 1e-9 {
                return Err(fail(format!("reduction mismatch: {r} vs {d}")));
            }
        }
        Ok(format!("{} regularity seeds + reduction identity", seeds.len()))
    }));

    results
}
