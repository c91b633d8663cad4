//! Shared domain vocabulary: point clouds, regularity parameters, estimator
//! configuration, and deterministic randomness.
//!
//! Everything here is immutable after construction and safe to share across
//! threads. Kept small and explicit; the numerics live elsewhere.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

// ── deterministic randomness ────────────────────────────────────────────────

/// A 64-bit seed. Identical seeds reproduce identical sample streams
/// bit-for-bit on every platform (ChaCha8 underneath).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    /// Root generator for this seed.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Generator for one member of a family of independent streams
    /// (trial fan-out). Streams with different indices never overlap.
    pub fn stream(self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }

    /// Derive a child seed. splitmix64 finalizer; good enough to decorrelate
    /// salted reuse of one master seed.
    pub fn derive(self, salt: u64) -> Seed {
        let mut z = self.0 ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }
}

// ── point clouds ────────────────────────────────────────────────────────────

/// Provenance attached to a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudMeta {
    /// Human-readable sampler identifier.
    pub sampler: String,
    /// Seed the cloud was drawn with, when known.
    pub seed: Option<u64>,
    /// True intrinsic dimension, when known. The risk harness requires it,
    /// the estimator does not.
    pub d_true: Option<usize>,
}

impl CloudMeta {
    pub fn unknown() -> Self {
        CloudMeta { sampler: String::from("unknown"), seed: None, d_true: None }
    }
}

/// n points in the cube `[-half_width, half_width]^m`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    n: usize,
    m: usize,
    half_width: f64,
    coords: Vec<f64>,
    pub meta: CloudMeta,
}

#[derive(Debug, Error, PartialEq)]
pub enum CloudError {
    #[error("point cloud must contain at least one point")]
    Empty,
    #[error("point {index} has length {got}, expected {expected}")]
    RaggedPoint { index: usize, got: usize, expected: usize },
    #[error("coordinate {value} of point {index} falls outside [-{half_width}, {half_width}]")]
    OutOfCube { index: usize, value: f64, half_width: f64 },
    #[error("half width must be positive and finite, got {0}")]
    BadHalfWidth(f64),
}

impl PointCloud {
    /// Build a cloud, checking the cube invariant against `half_width`.
    pub fn new(points: Vec<Vec<f64>>, half_width: f64, meta: CloudMeta) -> Result<Self, CloudError> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(CloudError::BadHalfWidth(half_width));
        }
        if points.is_empty() {
            return Err(CloudError::Empty);
        }
        let m = points[0].len();
        if m == 0 {
            return Err(CloudError::RaggedPoint { index: 0, got: 0, expected: 1 });
        }
        let mut coords = Vec::with_capacity(points.len() * m);
        for (i, p) in points.iter().enumerate() {
            if p.len() != m {
                return Err(CloudError::RaggedPoint { index: i, got: p.len(), expected: m });
            }
            for &x in p {
                if !(x.abs() <= half_width) {
                    return Err(CloudError::OutOfCube { index: i, value: x, half_width });
                }
            }
            coords.extend_from_slice(p);
        }
        Ok(PointCloud { n: points.len(), m, half_width, coords, meta })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    /// Ambient dimension m.
    pub fn dim(&self) -> usize {
        self.m
    }

    /// Cube half width the coordinates were validated against.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.m..(i + 1) * self.m]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.m)
    }

    /// Euclidean distance between points i and j.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.point(i), self.point(j));
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

// ── regularity parameters ───────────────────────────────────────────────────

/// Parameters of the regularity class the estimator's guarantees quantify
/// over: global/local reach floors, cube half width, a volume floor constant,
/// a density cap, and the ambient dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityParams {
    /// Global reach lower bound, in (0, +inf].
    pub tau_g: f64,
    /// Local (patchwise) reach lower bound, in (0, +inf]; tau_g <= tau_l.
    pub tau_l: f64,
    /// Cube half width K_I >= 1.
    pub k_i: f64,
    /// Volume floor constant K_v in (0, 2^-m].
    pub k_v: f64,
    /// Density cap K_p >= (2 K_I)^m.
    pub k_p: f64,
    /// Ambient dimension m >= 1.
    pub m: usize,
}

/// A violated range constraint. Violations are data, not failures.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamViolation {
    TauGRange(f64),
    TauLRange(f64),
    TauOrder { tau_g: f64, tau_l: f64 },
    KiRange(f64),
    KvRange { k_v: f64, cap: f64 },
    KpRange { k_p: f64, floor: f64 },
    MRange(usize),
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamViolation::TauGRange(v) => write!(f, "tau_g must lie in (0, inf], got {v}"),
            ParamViolation::TauLRange(v) => write!(f, "tau_l must lie in (0, inf], got {v}"),
            ParamViolation::TauOrder { tau_g, tau_l } => {
                write!(f, "tau_g <= tau_l required, got tau_g={tau_g}, tau_l={tau_l}")
            }
            ParamViolation::KiRange(v) => write!(f, "K_I >= 1 required, got {v}"),
            ParamViolation::KvRange { k_v, cap } => {
                write!(f, "K_v must lie in (0, {cap}], got {k_v}")
            }
            ParamViolation::KpRange { k_p, floor } => {
                write!(f, "K_p >= {floor} required, got {k_p}")
            }
            ParamViolation::MRange(v) => write!(f, "m >= 1 required, got {v}"),
        }
    }
}

/// Check every range constraint of the regularity class. Pure: same input,
/// same output. Empty list iff all ranges hold.
pub fn validate_params(p: &RegularityParams) -> Vec<ParamViolation> {
    let mut out = Vec::new();
    if p.m < 1 {
        out.push(ParamViolation::MRange(p.m));
        return out; // the remaining checks need a sane m
    }
    if !(p.tau_g > 0.0) || p.tau_g.is_nan() {
        out.push(ParamViolation::TauGRange(p.tau_g));
    }
    if !(p.tau_l > 0.0) || p.tau_l.is_nan() {
        out.push(ParamViolation::TauLRange(p.tau_l));
    }
    if p.tau_g > p.tau_l {
        out.push(ParamViolation::TauOrder { tau_g: p.tau_g, tau_l: p.tau_l });
    }
    if !(p.k_i >= 1.0) {
        out.push(ParamViolation::KiRange(p.k_i));
    }
    let cap = 2f64.powi(-(p.m as i32));
    if !(p.k_v > 0.0 && p.k_v <= cap) {
        out.push(ParamViolation::KvRange { k_v: p.k_v, cap });
    }
    let floor = (2.0 * p.k_i).powi(p.m as i32);
    if !(p.k_p >= floor) {
        out.push(ParamViolation::KpRange { k_p: p.k_p, floor });
    }
    out
}

impl RegularityParams {
    /// Convenience: a valid parameter set with the loosest density cap and
    /// volume floor for the given reach floors and cube.
    pub fn with_defaults(tau_g: f64, tau_l: f64, k_i: f64, m: usize) -> Self {
        RegularityParams {
            tau_g,
            tau_l,
            k_i,
            k_v: 2f64.powi(-(m as i32)),
            k_p: (2.0 * k_i).powi(m as i32),
            m,
        }
    }

    pub fn is_valid(&self) -> bool {
        validate_params(self).is_empty()
    }
}

// ── estimator configuration ─────────────────────────────────────────────────

/// How a set of thresholds was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Calibration {
    UserSupplied,
    Calibrated { seed: u64, trials: usize, safety: f64, n: usize },
}

/// Per-dimension decision thresholds L_d for the path statistic, keyed by
/// candidate dimension d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub thresholds: BTreeMap<usize, f64>,
    pub calibration: Calibration,
}

impl EstimatorConfig {
    pub fn user_supplied(thresholds: BTreeMap<usize, f64>) -> Self {
        EstimatorConfig { thresholds, calibration: Calibration::UserSupplied }
    }

    pub fn threshold(&self, d: usize) -> Option<f64> {
        self.thresholds.get(&d).copied()
    }

    /// True when a positive threshold exists for every candidate 1..=m.
    pub fn covers(&self, m: usize) -> bool {
        (1..=m).all(|d| matches!(self.threshold(d), Some(l) if l > 0.0))
    }
}

// ── geometry constants ──────────────────────────────────────────────────────

/// Volume of the unit ball in R^d: pi^(d/2) / Gamma(d/2 + 1).
pub fn unit_ball_volume(d: usize) -> f64 {
    use statrs::function::gamma::gamma;
    std::f64::consts::PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::RngCore;

    #[test]
    fn unit_ball_volume_small_dims() {
        assert_relative_eq!(unit_ball_volume(0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(2), std::f64::consts::PI, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * std::f64::consts::PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn validate_accepts_reference_params() {
        let p = RegularityParams {
            tau_g: 0.1,
            tau_l: 0.2,
            k_i: 1.0,
            k_v: 0.25,
            k_p: 4.0,
            m: 2,
        };
        assert!(validate_params(&p).is_empty());
        assert!(p.is_valid());
    }

    #[test]
    fn validate_flags_tau_order() {
        let p = RegularityParams { tau_g: 0.3, tau_l: 0.2, ..RegularityParams::with_defaults(0.3, 0.2, 1.0, 2) };
        let v = validate_params(&p);
        assert!(v.iter().any(|x| matches!(x, ParamViolation::TauOrder { .. })));
    }

    #[test]
    fn validate_flags_kv_cap() {
        let mut p = RegularityParams::with_defaults(0.1, 0.2, 1.0, 2);
        p.k_v = 1.0; // cap is 0.25 at m=2
        let v = validate_params(&p);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], ParamViolation::KvRange { .. }));
    }

    #[test]
    fn infinite_reach_is_valid() {
        let p = RegularityParams::with_defaults(f64::INFINITY, f64::INFINITY, 1.0, 3);
        assert!(p.is_valid());
    }

    #[test]
    fn cloud_rejects_out_of_cube() {
        let err = PointCloud::new(vec![vec![0.0, 1.5]], 1.0, CloudMeta::unknown()).unwrap_err();
        assert!(matches!(err, CloudError::OutOfCube { .. }));
    }

    #[test]
    fn cloud_rejects_ragged_rows() {
        let err =
            PointCloud::new(vec![vec![0.0, 0.0], vec![0.0]], 1.0, CloudMeta::unknown()).unwrap_err();
        assert!(matches!(err, CloudError::RaggedPoint { index: 1, .. }));
    }

    #[test]
    fn cloud_accessors() {
        let c = PointCloud::new(vec![vec![0.0, 0.5], vec![-1.0, 0.25]], 1.0, CloudMeta::unknown())
            .unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.dim(), 2);
        assert_eq!(c.point(1), &[-1.0, 0.25]);
        assert_relative_eq!(c.dist(0, 1), (1.0f64 + 0.0625).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn seed_streams_are_reproducible_and_distinct() {
        let mut a = Seed(7).stream(3);
        let mut b = Seed(7).stream(3);
        let mut c = Seed(7).stream(4);
        let (xa, xb, xc) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn derived_seeds_differ_per_salt() {
        assert_ne!(Seed(1).derive(0), Seed(1).derive(1));
        assert_eq!(Seed(1).derive(9), Seed(1).derive(9));
    }

    #[test]
    fn estimator_config_coverage() {
        let mut t = BTreeMap::new();
        t.insert(1, 3.0);
        let cfg = EstimatorConfig::user_supplied(t);
        assert!(cfg.covers(1));
        assert!(!cfg.covers(2));
        assert_eq!(cfg.threshold(1), Some(3.0));
    }
}
