//! Desk-scale laboratory for corner configurations over finite groups.
//!
//! The crate builds small finite groups as dense multiplication tables,
//! computes their irreducible character degrees and quasirandomness degree,
//! counts corner configurations `{(a1..ak), (g a1, a2..ak), ..., (g a1..g ak)}`
//! inside subsets of `G^k`, evaluates Gowers box norms of lifted functions,
//! and decomposes bounded functions into a structured part plus a part with
//! small box norm (weak regularity).  Everything is exhaustive/deterministic:
//! exact integer counting where possible, seeded RNG everywhere else.

pub mod bitset;
pub mod boxnorm;
pub mod corner;
mod error;
pub mod experiment;
pub mod grid;
pub mod group;
pub mod regularity;
pub mod rng;
pub mod spectral;
pub mod subset;
pub mod verify;

pub use bitset::BitSet;
pub use boxnorm::{box_norm, box_norm_naive, lift, verify_box_control, BoxControlReport, BoxNormReport, CoordFunction, LiftedFunction};
pub use corner::{apply_t, apply_t_range, corner_config, corner_stats, cov_forward, cov_inverse, count_simplices, good_fraction, hypergraph_edges, multicorrelation, CornerStats, CorrelationSeries, PointK};
pub use error::{Error, Result};
pub use experiment::{generate_subset, run_experiment, tv_scan, ExperimentReport, SubsetSpec, ThetaRule};
pub use group::{parse_descriptor, ElementId, Family, Group};
pub use regularity::{check_t_range_invariance, inverse_lift_k, rank_expansion, structured_reduction, weak_regularity, CoordinatePartition, Decomposition, Factor, InvarianceReport, RankExpansion, RankTerm, RegularityError, StructuredReduction};
pub use spectral::{character_degrees, conjugacy_classes, quasirandomness_degree, verify_mean_ergodic, ConjugacyClasses, MeanErgodicReport, QuasirandomnessReport};
pub use subset::{FunctionGk, SubsetK};
pub use verify::{verify_suite, SuiteResult, VerifyLevel};
