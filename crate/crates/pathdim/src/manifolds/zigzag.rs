//! Reach-constrained zigzag curves.
//!
//! The construction folds a unit-speed curve into the cube `[-K, K]^{d2}` so
//! that its tubular neighborhoods of radius `w` around `n_blocks` straight
//! "block" segments are pairwise disjoint, every bend is a circular arc of
//! radius exactly `tau_l`, and the whole trace is C1. Blocks sit on a grid of
//! parallel strokes (boustrophedon order over a base-`c` reflected grid in
//! the transverse coordinates); inside one stroke the blocks alternate with
//! gap connectors that shift the transverse offset by an arc-segment-arc
//! S-jog. Strokes are joined by semicircular U-turns at transverse pitch
//! `2*tau_l`, and the two free ends carry quarter-circle caps so that no
//! endpoint stops with leftover curvature budget; the caps bulge exactly to
//! the cube faces.
//!
//! The curve through block `i` runs at a chosen transverse offset `Y_i` with
//! `|Y_i| < w`, which is what the lower-bound experiments randomize.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use thiserror::Error;

use super::curve::{
    axis, cumulative_lengths, curve_distance_window, point_at_arclength, tangent_at_arclength,
    vaxpy, vdot, vnorm, vscale, vsub, Piece,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZigzagError {
    #[error("zigzag params invalid: {0}")]
    BadParams(String),
    #[error("construction needs 2*tau_l <= k_i (folding room), got tau_l = {tau_l}, k_i = {k_i}")]
    NoFoldingRoom { tau_l: f64, k_i: f64 },
    #[error("native construction covers d1 = 1 only (got d1 = {0}); lift with a cube product")]
    NotNative(usize),
    #[error(
        "connector cannot bridge offset gap {gap} within width {width} at turn radius {radius}"
    )]
    InfeasibleConnector { gap: f64, width: f64, radius: f64 },
    #[error("offsets: need {expected} vectors of dim {dim} with norm < {radius}, got {got}")]
    BadOffsets { expected: usize, dim: usize, radius: f64, got: String },
}

// ── parameters ──────────────────────────────────────────────────────────────

/// Construction parameters for a zigzag curve of intrinsic dimension `d1`
/// masquerading as dimension `d2` at coarse scales, inside `[-k_i, k_i]^{d2}`
/// with local turn radius `tau_l`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ZigzagParams {
    pub d1: usize,
    pub d2: usize,
    pub n_blocks: usize,
    pub k_i: f64,
    pub tau_l: f64,
}

impl ZigzagParams {
    pub fn new(d1: usize, d2: usize, n_blocks: usize, k_i: f64, tau_l: f64) -> Self {
        ZigzagParams { d1, d2, n_blocks, k_i, tau_l }
    }

    /// Number of transverse offset coordinates.
    pub fn transverse_dims(&self) -> usize {
        self.d2 - self.d1
    }

    /// Strokes per transverse axis; chosen so the stroke grid at pitch
    /// `2*tau_l` spans the cube with margin for the tubes.
    pub fn strokes_per_axis(&self) -> usize {
        ((self.k_i + self.tau_l) / (2.0 * self.tau_l)).ceil() as usize
    }

    /// Total parallel strokes: per-axis count to the transverse power.
    pub fn strokes(&self) -> usize {
        self.strokes_per_axis().pow(self.transverse_dims() as u32)
    }

    /// Block slots on every stroke (the block count rounded up to fill the
    /// stroke grid evenly; surplus slots carry straight filler connectors).
    pub fn blocks_per_stroke(&self) -> usize {
        let s = self.strokes();
        (self.n_blocks + s - 1) / s
    }

    /// Length of one block segment.
    pub fn block_len(&self) -> f64 {
        let dd = self.transverse_dims() as f64;
        let nn = self.blocks_per_stroke() as f64;
        (self.k_i - self.tau_l) / ((dd + 0.5) * nn)
    }

    /// Length (along the stroke) of one connector gap.
    pub fn gap_len(&self) -> f64 {
        let dd = self.transverse_dims() as f64;
        let nn = self.blocks_per_stroke() as f64;
        2.0 * dd * (self.k_i - self.tau_l) / ((dd + 0.5) * (nn + 1.0))
    }

    /// Tube radius around each block: capped by the turn radius and by what
    /// an S-jog of radius `tau_l` can traverse inside one gap.
    pub fn tube_radius(&self) -> f64 {
        let b = self.gap_len();
        self.tau_l.min(b * b / (8.0 * self.tau_l))
    }

    /// Residual of the along-stroke budget: margins plus blocks plus gaps
    /// must tile the full cube width exactly.
    pub fn axis_identity_residual(&self) -> f64 {
        let nn = self.blocks_per_stroke() as f64;
        let sum = 2.0 * self.tau_l + nn * self.block_len() + (nn + 1.0) * self.gap_len();
        (sum - 2.0 * self.k_i).abs()
    }

    pub fn validate(&self) -> Result<(), ZigzagError> {
        let bad = |msg: String| Err(ZigzagError::BadParams(msg));
        if self.d1 < 1 || self.d2 <= self.d1 {
            return bad(format!("need 1 <= d1 < d2, got d1 = {}, d2 = {}", self.d1, self.d2));
        }
        if self.n_blocks == 0 {
            return bad("need at least one block".into());
        }
        if !(self.tau_l.is_finite() && self.tau_l > 0.0) {
            return bad(format!("turn radius must be positive and finite, got {}", self.tau_l));
        }
        if !(self.k_i.is_finite() && self.k_i > 0.0) {
            return bad(format!("cube half-width must be positive and finite, got {}", self.k_i));
        }
        if 2.0 * self.tau_l > self.k_i {
            return Err(ZigzagError::NoFoldingRoom { tau_l: self.tau_l, k_i: self.k_i });
        }
        let per_axis = self.strokes_per_axis();
        if per_axis.checked_pow(self.transverse_dims() as u32).is_none()
            || self.strokes() > 10_000_000
        {
            return bad(format!(
                "stroke grid too large: {}^{}",
                per_axis,
                self.transverse_dims()
            ));
        }
        // The jog feasibility margin is algebraic; guard against misuse of
        // hand-edited derived values all the same.
        let (b, w) = (self.gap_len(), self.tube_radius());
        if b * b < 8.0 * w * self.tau_l * (1.0 - 1e-12) {
            return bad(format!("gap {b} too narrow for tube radius {w}"));
        }
        Ok(())
    }
}

// ── rigid frames and tube placements ────────────────────────────────────────

/// Rigid motion `x = Q y + shift` with `Q` orthogonal (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    pub dim: usize,
    pub linear: Vec<f64>,
    pub shift: Vec<f64>,
}

impl Isometry {
    pub fn apply(&self, local: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| {
                self.shift[i] + (0..d).map(|j| self.linear[i * d + j] * local[j]).sum::<f64>()
            })
            .collect()
    }

    /// Inverse image of an ambient point (uses Q^T = Q^{-1}).
    pub fn pull_back(&self, ambient: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let rel: Vec<f64> = (0..d).map(|i| ambient[i] - self.shift[i]).collect();
        (0..d).map(|j| (0..d).map(|i| self.linear[i * d + j] * rel[i]).sum()).collect()
    }

    /// Largest entry of |Q^T Q - I|.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let dot: f64 =
                    (0..d).map(|i| self.linear[i * d + a] * self.linear[i * d + b]).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Tube around one block: the image of `[0, block_len] x B(0, tube_radius)`
/// under `frame` (local coordinate 0 runs along the stroke).
#[derive(Debug, Clone)]
pub struct BlockPlacement {
    pub index: usize,
    pub stroke: usize,
    pub slot: usize,
    pub frame: Isometry,
    pub block_len: f64,
    pub tube_radius: f64,
}

impl BlockPlacement {
    pub fn local(&self, x: &[f64]) -> Vec<f64> {
        self.frame.pull_back(x)
    }

    /// Open-tube membership (open in the transverse ball, closed along the
    /// stroke): tubes of neighboring strokes may touch but not overlap.
    pub fn contains(&self, x: &[f64]) -> bool {
        let l = self.local(x);
        l[0] >= 0.0 && l[0] <= self.block_len && vnorm(&l[1..]) < self.tube_radius
    }

    /// Ambient point of the block curve at along-coordinate `xi` and
    /// transverse offset `y`.
    pub fn curve_point(&self, xi: f64, y: &[f64]) -> Vec<f64> {
        let mut local = vec![xi];
        local.extend_from_slice(y);
        self.frame.apply(&local)
    }
}

/// Tube around one connector gap, same frame conventions as blocks.
#[derive(Debug, Clone)]
pub struct ConnectorPlacement {
    pub index: usize,
    pub stroke: usize,
    pub gap: usize,
    pub frame: Isometry,
    pub gap_len: f64,
    pub tube_radius: f64,
}

impl ConnectorPlacement {
    pub fn contains(&self, x: &[f64]) -> bool {
        let l = self.frame.pull_back(x);
        l[0] >= 0.0 && l[0] <= self.gap_len && vnorm(&l[1..]) < self.tube_radius
    }
}

/// Where every block and connector tube sits, before any offsets are chosen.
#[derive(Debug, Clone)]
pub struct ZigzagLayout {
    pub params: ZigzagParams,
    pub blocks: Vec<BlockPlacement>,
    pub connectors: Vec<ConnectorPlacement>,
    /// U-turns between strokes plus the two end caps.
    pub n_turnarounds: usize,
}

// ── geometry helpers ────────────────────────────────────────────────────────

struct Geom {
    d2: usize,
    delta: usize,
    n: usize,
    k: f64,
    tau: f64,
    c: usize,
    strokes: usize,
    slots: usize,
    a: f64,
    b: f64,
    w: f64,
}

impl Geom {
    fn new(p: &ZigzagParams) -> Geom {
        Geom {
            d2: p.d2,
            delta: p.transverse_dims(),
            n: p.n_blocks,
            k: p.k_i,
            tau: p.tau_l,
            c: p.strokes_per_axis(),
            strokes: p.strokes(),
            slots: p.blocks_per_stroke(),
            a: p.block_len(),
            b: p.gap_len(),
            w: p.tube_radius(),
        }
    }

    fn stroke_dir(&self, s: usize) -> f64 {
        if s % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Transverse grid center of stroke `s`, as a full ambient vector with
    /// coordinate 0 left at zero. Strokes enumerate a reflected (snake)
    /// base-`c` counter so consecutive strokes differ along exactly one
    /// transverse axis by one pitch step of `2*tau`.
    fn stroke_center(&self, s: usize) -> Vec<f64> {
        let mut digits = vec![0usize; self.delta];
        let mut rem = s;
        for d in digits.iter_mut() {
            *d = rem % self.c;
            rem /= self.c;
        }
        let mut center = vec![0.0; self.d2];
        let mut hi_sum = 0usize;
        for j in (0..self.delta).rev() {
            let pos = if hi_sum % 2 == 0 { digits[j] } else { self.c - 1 - digits[j] };
            center[1 + j] = (2.0 * pos as f64 - (self.c - 1) as f64) * self.tau;
            hi_sum += digits[j];
        }
        center
    }

    fn entry_x(&self, dir: f64) -> f64 {
        -dir * (self.k - self.tau)
    }

    /// Ambient point at along-stroke progress `xi` from the stroke entry,
    /// sitting on the stroke center line.
    fn at(&self, s: usize, xi: f64) -> Vec<f64> {
        let dir = self.stroke_dir(s);
        let mut p = self.stroke_center(s);
        p[0] = self.entry_x(dir) + dir * xi;
        p
    }

    /// Embed a transverse offset vector into ambient coordinates.
    fn embed(&self, off: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.d2];
        v[1..1 + self.delta].copy_from_slice(off);
        v
    }

    fn frame(&self, s: usize) -> Isometry {
        let d = self.d2;
        let mut linear = vec![0.0; d * d];
        linear[0] = self.stroke_dir(s);
        for j in 1..d {
            linear[j * d + j] = 1.0;
        }
        Isometry { dim: d, linear, shift: vec![0.0; d] }
    }
}

// ── layout ──────────────────────────────────────────────────────────────────

/// Compute every tube placement for the parameters without building pieces.
pub fn zigzag_layout(params: &ZigzagParams) -> Result<ZigzagLayout, ZigzagError> {
    params.validate()?;
    if params.d1 != 1 {
        return Err(ZigzagError::NotNative(params.d1));
    }
    let g = Geom::new(params);
    let mut blocks = Vec::with_capacity(g.n);
    for index in 0..g.n {
        let stroke = index / g.slots;
        let slot = index % g.slots;
        let mut frame = g.frame(stroke);
        frame.shift = g.at(stroke, g.b + slot as f64 * (g.a + g.b));
        blocks.push(BlockPlacement {
            index,
            stroke,
            slot,
            frame,
            block_len: g.a,
            tube_radius: g.w,
        });
    }
    let mut connectors = Vec::new();
    for stroke in 0..g.strokes {
        for gap in 0..=g.slots {
            let mut frame = g.frame(stroke);
            frame.shift = g.at(stroke, gap as f64 * (g.a + g.b));
            connectors.push(ConnectorPlacement {
                index: connectors.len(),
                stroke,
                gap,
                frame,
                gap_len: g.b,
                tube_radius: g.w,
            });
        }
    }
    Ok(ZigzagLayout { params: *params, blocks, connectors, n_turnarounds: g.strokes + 1 })
}

// ── connectors ──────────────────────────────────────────────────────────────

/// Opening angle of the two arcs in an arc-segment-arc S-jog that moves the
/// transverse offset from `p_off` to `q_off` across a gap of width `b` while
/// turning with radius `tau` and staying C1.
///
/// Zero when the offsets agree (the jog degenerates to a straight filler);
/// an error when the offset change cannot fit in the gap.
pub fn connector_t0(p_off: f64, q_off: f64, b: f64, tau: f64) -> Result<f64, ZigzagError> {
    if !(b.is_finite() && b > 0.0 && tau.is_finite() && tau > 0.0) {
        return Err(ZigzagError::BadParams(format!(
            "connector needs positive finite width and radius, got b = {b}, tau = {tau}"
        )));
    }
    if !(p_off.is_finite() && q_off.is_finite()) {
        return Err(ZigzagError::BadParams("connector offsets must be finite".into()));
    }
    // Symmetric in the two offsets: orient so the jog descends.
    let g = (p_off - q_off).abs();
    if g == 0.0 {
        return Ok(0.0);
    }
    let radicand = b * b - g * (4.0 * tau - g);
    if radicand < 0.0 {
        return Err(ZigzagError::InfeasibleConnector { gap: g, width: b, radius: tau });
    }
    let num = 2.0 * tau * (2.0 * tau - g) + b * radicand.sqrt();
    let den = b * b + (2.0 * tau - g) * (2.0 * tau - g);
    Ok((num / den).clamp(-1.0, 1.0).acos())
}

/// Emit the pieces of one gap traversal from `anchor` (the gap entry, already
/// at offset `from`) to the gap exit at offset `to`; returns the jog angle.
fn emit_jog(
    pieces: &mut Vec<Piece>,
    g: &Geom,
    anchor: &[f64],
    dir: f64,
    from: &[f64],
    to: &[f64],
) -> Result<f64, ZigzagError> {
    let e_xi = vscale(&axis(g.d2, 0), dir);
    let dvec = g.embed(&vsub(to, from));
    let h = vnorm(&dvec);
    if h == 0.0 {
        pieces.push(Piece::Seg { start: anchor.to_vec(), dir: e_xi, len: g.b });
        return Ok(0.0);
    }
    // Local frame: travel along e_xi, offsets measured along e_eta so the
    // jog runs from scalar 0 down to -h.
    let e_eta = vscale(&dvec, -1.0 / h);
    let t0 = connector_t0(0.0, -h, g.b, g.tau)?;
    let (sin0, cos0) = t0.sin_cos();

    let c1_center = vaxpy(anchor, -g.tau, &e_eta);
    let c1 = Piece::Arc {
        center: c1_center,
        u: e_eta.clone(),
        v: e_xi.clone(),
        radius: g.tau,
        angle: t0,
    };
    let c1_end = c1.end();
    pieces.push(c1);

    // Straight middle: length from the residual displacement, direction from
    // the shared tangent at angle t0.
    let dxi = g.b - 2.0 * g.tau * sin0;
    let deta = -h + 2.0 * g.tau * (1.0 - cos0);
    let mid_len = dxi.hypot(deta);
    let mid_dir = vaxpy(&vscale(&e_xi, cos0), -sin0, &e_eta);
    if mid_len > 1e-14 * g.tau.max(g.b) {
        pieces.push(Piece::Seg { start: c1_end, dir: mid_dir.clone(), len: mid_len });
    }

    let mut c2_center = vaxpy(anchor, g.b, &e_xi);
    c2_center = vaxpy(&c2_center, g.tau - h, &e_eta);
    let c2_u = vaxpy(&vscale(&e_xi, -sin0), -cos0, &e_eta);
    pieces.push(Piece::Arc { center: c2_center, u: c2_u, v: mid_dir, radius: g.tau, angle: t0 });
    Ok(t0)
}

// ── the manifold ────────────────────────────────────────────────────────────

/// A built zigzag curve: pieces in traversal order plus the tube layout and
/// the chosen block offsets.
#[derive(Debug, Clone)]
pub struct ZigzagManifold {
    pub params: ZigzagParams,
    pub offsets: Vec<Vec<f64>>,
    pub pieces: Vec<Piece>,
    /// Jog angle of every connector in traversal order (0 for fillers).
    pub connector_angles: Vec<f64>,
    pub layout: ZigzagLayout,
    cum: Vec<f64>,
}

impl ZigzagManifold {
    pub fn ambient_dim(&self) -> usize {
        self.params.d2
    }

    pub fn total_length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn point_at(&self, s: f64) -> Vec<f64> {
        point_at_arclength(&self.pieces, &self.cum, s)
    }

    pub fn tangent_at(&self, s: f64) -> Vec<f64> {
        tangent_at_arclength(&self.pieces, &self.cum, s)
    }

    pub fn distance_to(&self, x: &[f64]) -> f64 {
        super::curve::curve_distance(&self.pieces, x)
    }

    /// Arclength-uniform draws from the curve, clamped to the cube (the
    /// clamp only ever moves float dust from exact face contact).
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R, count: usize) -> Vec<Vec<f64>> {
        let total = self.total_length();
        let k = self.params.k_i;
        (0..count)
            .map(|_| {
                let mut p = self.point_at(rng.gen::<f64>() * total);
                for c in p.iter_mut() {
                    *c = c.clamp(-k, k);
                }
                p
            })
            .collect()
    }

    pub fn min_reach(&self) -> f64 {
        curve_min_reach(&self.pieces)
    }
}

/// Draw one transverse offset vector per block, uniform on the open ball of
/// the tube radius (rejection from the cube).
pub fn random_offsets<R: Rng>(params: &ZigzagParams, rng: &mut R) -> Vec<Vec<f64>> {
    let delta = params.transverse_dims();
    let w = params.tube_radius();
    (0..params.n_blocks)
        .map(|_| loop {
            let v: Vec<f64> = (0..delta).map(|_| rng.gen_range(-w..w)).collect();
            if vnorm(&v) < w {
                return v;
            }
        })
        .collect()
}

/// Build the full curve for the given block offsets.
pub fn zigzag_build(
    params: &ZigzagParams,
    offsets: &[Vec<f64>],
) -> Result<ZigzagManifold, ZigzagError> {
    let layout = zigzag_layout(params)?;
    let g = Geom::new(params);
    let bad_off = |got: String| ZigzagError::BadOffsets {
        expected: g.n,
        dim: g.delta,
        radius: g.w,
        got,
    };
    if offsets.len() != g.n {
        return Err(bad_off(format!("{} vectors", offsets.len())));
    }
    for (i, y) in offsets.iter().enumerate() {
        if y.len() != g.delta {
            return Err(bad_off(format!("vector {} of dim {}", i, y.len())));
        }
        let r = vnorm(y);
        if !(r.is_finite() && r < g.w) {
            return Err(bad_off(format!("vector {i} of norm {r}")));
        }
    }

    let zero = vec![0.0; g.delta];
    let slot_off = |global: usize| -> &[f64] {
        if global < g.n {
            &offsets[global]
        } else {
            &zero
        }
    };
    let e0 = axis(g.d2, 0);
    let e_last = axis(g.d2, g.d2 - 1);

    let mut pieces: Vec<Piece> = Vec::new();
    let mut angles: Vec<f64> = Vec::new();

    // Start cap: quarter circle rising onto the first stroke entry, bulging
    // to the -K face along the last transverse axis.
    let entry0 = g.at(0, 0.0);
    pieces.push(Piece::Arc {
        center: vaxpy(&entry0, -g.tau, &e_last),
        u: vscale(&e0, -1.0),
        v: e_last.clone(),
        radius: g.tau,
        angle: FRAC_PI_2,
    });

    for stroke in 0..g.strokes {
        let dir = g.stroke_dir(stroke);
        for gap in 0..=g.slots {
            let global = stroke * g.slots + gap;
            let from = if gap == 0 { &zero[..] } else { slot_off(global - 1) };
            let to = if gap == g.slots { &zero[..] } else { slot_off(global) };
            let mut anchor = g.at(stroke, gap as f64 * (g.a + g.b));
            let emb = g.embed(from);
            for (c, e) in anchor.iter_mut().zip(&emb) {
                *c += e;
            }
            angles.push(emit_jog(&mut pieces, &g, &anchor, dir, from, to)?);
            if gap < g.slots {
                let mut bstart = g.at(stroke, g.b + gap as f64 * (g.a + g.b));
                let emb = g.embed(to);
                for (c, e) in bstart.iter_mut().zip(&emb) {
                    *c += e;
                }
                pieces.push(Piece::Seg { start: bstart, dir: vscale(&e0, dir), len: g.a });
            }
        }
        if stroke + 1 < g.strokes {
            // U-turn: one semicircle joining the stroke exits at offset 0.
            let exit = g.at(stroke, 2.0 * (g.k - g.tau));
            let next = g.stroke_center(stroke + 1);
            let cur = g.stroke_center(stroke);
            let mut step_axis = 0;
            let mut step = 0.0;
            for j in 1..g.d2 {
                let d = next[j] - cur[j];
                if d.abs() > g.tau {
                    step_axis = j;
                    step = d;
                }
            }
            debug_assert!(step.abs() > 0.0, "consecutive strokes must differ");
            pieces.push(Piece::Arc {
                center: vaxpy(&exit, 0.5 * step, &axis(g.d2, step_axis)),
                u: vscale(&axis(g.d2, step_axis), -step.signum()),
                v: vscale(&e0, dir),
                radius: g.tau,
                angle: PI,
            });
        }
    }

    // End cap: quarter circle off the last stroke exit, bulging outward
    // along the last transverse axis.
    let last = g.strokes - 1;
    let exit = g.at(last, 2.0 * (g.k - g.tau));
    pieces.push(Piece::Arc {
        center: vaxpy(&exit, g.tau, &e_last),
        u: vscale(&e_last, -1.0),
        v: vscale(&e0, g.stroke_dir(last)),
        radius: g.tau,
        angle: FRAC_PI_2,
    });

    let cum = cumulative_lengths(&pieces);
    Ok(ZigzagManifold {
        params: *params,
        offsets: offsets.to_vec(),
        pieces,
        connector_angles: angles,
        layout,
        cum,
    })
}

// ── reach estimation ────────────────────────────────────────────────────────

/// Lower estimate of the local reach of a piecewise curve.
///
/// Combines the exact minimum over arc radii (segments contribute nothing)
/// with a probe of double-projection consistency: points pushed a distance
/// `rho` along normals at many footpoints must stay at least `rho` from the
/// nearby stretch of curve (an arclength window of `pi * rho`, the scale on
/// which an osculating violation must show up). If the leading candidate
/// level passes, it is returned as certified; otherwise a bisection finds the
/// largest passing level. An all-segment curve that passes the probe has
/// unconstrained local reach and reports infinity.
pub fn curve_min_reach(pieces: &[Piece]) -> f64 {
    assert!(!pieces.is_empty(), "empty curve");
    let cum = cumulative_lengths(pieces);
    let total = *cum.last().unwrap();
    assert!(total > 0.0, "zero-length curve");
    let dim = pieces[0].dim();

    let min_arc = pieces
        .iter()
        .filter_map(|p| match p {
            Piece::Arc { radius, .. } => Some(*radius),
            Piece::Seg { .. } => None,
        })
        .fold(f64::INFINITY, f64::min);
    let all_straight = min_arc.is_infinite();
    let cand = if all_straight { total } else { min_arc };

    let probe_level = |rho: f64| -> bool {
        let feet = 160;
        for i in 0..feet {
            let s = total * (i as f64 + 0.5) / feet as f64;
            let x = point_at_arclength(pieces, &cum, s);
            let t = tangent_at_arclength(pieces, &cum, s);
            // Orthonormal completion of the tangent.
            let mut basis = vec![t];
            for ax in 0..dim {
                if basis.len() == dim {
                    break;
                }
                let mut v = axis(dim, ax);
                for b in &basis {
                    v = vaxpy(&v, -vdot(&v, b), b);
                }
                let nv = vnorm(&v);
                if nv > 1e-6 {
                    basis.push(vscale(&v, 1.0 / nv));
                }
            }
            for normal in basis.iter().skip(1) {
                for sgn in [1.0, -1.0] {
                    let y = vaxpy(&x, sgn * rho, normal);
                    let d =
                        curve_distance_window(pieces, &cum, &y, s - PI * rho, s + PI * rho);
                    if d < rho * (1.0 - 1e-9) {
                        return false;
                    }
                }
            }
        }
        true
    };

    let lead = cand * (1.0 - 1e-6);
    if probe_level(lead) {
        return if all_straight { f64::INFINITY } else { lead };
    }
    let (mut lo, mut hi) = (0.0, lead);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if probe_level(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
