//! Intrinsic-dimension estimation from power-weighted shortest traversal
//! paths.
//!
//! The statistic at the center of this crate is the minimal d-power length of
//! an open path through a point cloud: `min over orderings of
//! sum ||x_{i+1} - x_i||^d`. On a d-dimensional support that quantity stays
//! bounded as the sample grows, while on higher-dimensional supports it
//! diverges, which turns a threshold test on the statistic into a dimension
//! estimator that never overestimates.
//!
//! The crate bundles:
//!
//! * exact and heuristic path solvers ([`pathlen`]),
//! * a Hilbert-style space-filling curve with the Holder constant the
//!   estimator's analysis relies on ([`spacefill`]),
//! * reach-controlled synthetic samplers, including a zigzag curve family
//!   whose tubes make dimension 1 indistinguishable from dimension d2 at
//!   small sample sizes ([`manifolds`]),
//! * the binary and general threshold estimators ([`estimator`]),
//! * closed-form risk bound evaluators in log space ([`bounds`]),
//! * a brute-force testing-affinity check for the two-point lower bound
//!   ([`lecam`]),
//! * a seeded Monte-Carlo experiment harness with CSV reports ([`harness`]).

pub mod bounds;
pub mod core_types;
pub mod estimator;
pub mod harness;
pub mod lecam;
pub mod manifolds;
pub mod pathlen;
pub mod spacefill;
