//! Synthetic manifolds and the samplers that draw point clouds from them.
//!
//! Every sampler is described by a serializable [`SamplerSpec`] so that
//! experiment configs can name their data sources; drawing is deterministic
//! in the seed.

pub mod curve;
pub mod zigzag;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_types::{CloudError, CloudMeta, PointCloud, RegularityParams, Seed};
pub use curve::{
    circumradius, cumulative_lengths, curve_distance, discretize, min_osculating_radius,
    point_at_arclength, Piece,
};
pub use zigzag::{
    connector_t0, curve_min_reach, random_offsets, zigzag_build, zigzag_layout, BlockPlacement,
    ConnectorPlacement, Isometry, ZigzagError, ZigzagLayout, ZigzagManifold, ZigzagParams,
};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("sampler spec invalid: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Zigzag(#[from] ZigzagError),
    #[error(transparent)]
    Cloud(#[from] CloudError),
}

/// How block offsets of a zigzag are chosen per draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OffsetMode {
    /// Fresh uniform draws from the offset ball on every sample call.
    Random,
    /// A fixed offset assignment shared by every draw.
    Fixed(Vec<Vec<f64>>),
}

/// The supported point-cloud sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKind {
    /// Uniform on a d-dimensional axis cube spanning the full half-width,
    /// embedded in the first d coordinates.
    UniformCube { d: usize },
    /// Uniform on a d-sphere of the given radius, embedded in the first
    /// d + 1 coordinates.
    UniformSphere { d: usize, radius: f64 },
    /// Product of a base sampler with `extra` independent full-width cube
    /// coordinates appended; lifts intrinsic dimension by `extra`.
    CurveTimesCube { base: Box<SamplerSpec>, extra: usize },
    /// Arclength-uniform draws from a zigzag curve.
    Zigzag { params: ZigzagParams, offsets: OffsetMode },
}

/// A sampler plus the regularity class it claims to live in; the ambient
/// dimension is `params.m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub params: RegularityParams,
}

impl SamplerSpec {
    pub fn ambient_dim(&self) -> usize {
        self.params.m
    }

    pub fn intrinsic_dim(&self) -> usize {
        match &self.kind {
            SamplerKind::UniformCube { d } => *d,
            SamplerKind::UniformSphere { d, .. } => *d,
            SamplerKind::CurveTimesCube { base, extra } => base.intrinsic_dim() + extra,
            SamplerKind::Zigzag { params, .. } => params.d1,
        }
    }

    /// Compact human-readable identifier for reports.
    pub fn describe(&self) -> String {
        match &self.kind {
            SamplerKind::UniformCube { d } => format!("cube{{d={},m={}}}", d, self.params.m),
            SamplerKind::UniformSphere { d, radius } => {
                format!("sphere{{d={d},r={radius}}}")
            }
            SamplerKind::CurveTimesCube { base, extra } => {
                format!("({})xcube{{+{extra}}}", base.describe())
            }
            SamplerKind::Zigzag { params, offsets } => format!(
                "zigzag{{d2={},n={},tau={},{}}}",
                params.d2,
                params.n_blocks,
                params.tau_l,
                match offsets {
                    OffsetMode::Random => "random",
                    OffsetMode::Fixed(_) => "fixed",
                }
            ),
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |msg: String| Err(SamplerError::BadSpec(msg));
        let violations = crate::core_types::validate_params(&self.params);
        if !violations.is_empty() {
            let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return bad(msgs.join("; "));
        }
        let m = self.params.m;
        match &self.kind {
            SamplerKind::UniformCube { d } => {
                if *d < 1 || *d > m {
                    return bad(format!("cube dimension {d} outside 1..={m}"));
                }
            }
            SamplerKind::UniformSphere { d, radius } => {
                if *d < 1 || d + 1 > m {
                    return bad(format!("sphere dimension {d} needs ambient {}", d + 1));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad(format!("sphere radius {radius} must be positive"));
                }
                if *radius > self.params.k_i {
                    return bad(format!("sphere radius {radius} escapes the cube"));
                }
                if *radius < self.params.tau_g {
                    return bad(format!(
                        "sphere radius {radius} has reach below the declared {}",
                        self.params.tau_g
                    ));
                }
            }
            SamplerKind::CurveTimesCube { base, extra } => {
                base.validate()?;
                if base.params.m + extra != m {
                    return bad(format!(
                        "product ambient mismatch: base {} + extra {extra} != {m}",
                        base.params.m
                    ));
                }
            }
            SamplerKind::Zigzag { params, offsets } => {
                params.validate()?;
                if params.d2 > m {
                    return bad(format!("zigzag ambient {} exceeds m = {m}", params.d2));
                }
                if params.k_i != self.params.k_i || params.tau_l != self.params.tau_l {
                    return bad("zigzag params disagree with the regularity class".into());
                }
                if let OffsetMode::Fixed(offs) = offsets {
                    // Full validation happens in the build; catch counts early.
                    if offs.len() != params.n_blocks {
                        return bad(format!(
                            "fixed offsets: {} vectors for {} blocks",
                            offs.len(),
                            params.n_blocks
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Lift a sampler by `extra` independent cube coordinates. The reach
/// parameters carry over; the volume and packing slack are re-widened to
/// stay admissible at the larger ambient dimension.
pub fn product_with_cube(spec: SamplerSpec, extra: usize) -> SamplerSpec {
    let mut params = spec.params;
    params.m += extra;
    params.k_v = params.k_v.min(0.5f64.powi(params.m as i32));
    params.k_p = params.k_p.max((2.0 * params.k_i).powi(params.m as i32));
    SamplerSpec { kind: SamplerKind::CurveTimesCube { base: Box::new(spec), extra }, params }
}

fn sample_with_rng<R: Rng>(
    spec: &SamplerSpec,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>, SamplerError> {
    let m = spec.params.m;
    let k = spec.params.k_i;
    match &spec.kind {
        SamplerKind::UniformCube { d } => Ok((0..count)
            .map(|_| {
                let mut p = vec![0.0; m];
                for c in p.iter_mut().take(*d) {
                    *c = rng.gen_range(-k..k);
                }
                p
            })
            .collect()),
        SamplerKind::UniformSphere { d, radius } => Ok((0..count)
            .map(|_| {
                let mut p = vec![0.0; m];
                loop {
                    let g: Vec<f64> =
                        (0..d + 1).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
                    let norm = curve::vnorm(&g);
                    if norm > 1e-12 {
                        for (c, gi) in p.iter_mut().zip(&g) {
                            *c = gi / norm * radius;
                        }
                        break;
                    }
                }
                p
            })
            .collect()),
        SamplerKind::CurveTimesCube { base, extra } => {
            let base_pts = sample_with_rng(base, count, rng)?;
            Ok(base_pts
                .into_iter()
                .map(|bp| {
                    let mut p = bp;
                    p.extend((0..*extra).map(|_| rng.gen_range(-k..k)));
                    p
                })
                .collect())
        }
        SamplerKind::Zigzag { params, offsets } => {
            let offs = match offsets {
                OffsetMode::Fixed(v) => v.clone(),
                OffsetMode::Random => random_offsets(params, rng),
            };
            let mfd = zigzag_build(params, &offs)?;
            Ok(mfd
                .sample_uniform(rng, count)
                .into_iter()
                .map(|p| {
                    let mut q = p;
                    q.resize(m, 0.0);
                    q
                })
                .collect())
        }
    }
}

/// Draw a point cloud. Deterministic in (spec, count, seed).
pub fn sample(spec: &SamplerSpec, count: usize, seed: Seed) -> Result<PointCloud, SamplerError> {
    spec.validate()?;
    let mut rng = seed.rng();
    let pts = sample_with_rng(spec, count, &mut rng)?;
    let meta = CloudMeta {
        sampler: spec.describe(),
        seed: Some(seed.0),
        d_true: Some(spec.intrinsic_dim()),
    };
    Ok(PointCloud::new(pts, spec.params.k_i, meta)?)
}
