//! Piecewise curves made of straight segments and circular arcs.
//!
//! Every geometric query here is closed form: point-to-piece distance,
//! tangents at the ends, evaluation by arclength. The zigzag construction
//! and its validity tests both build on these primitives, so nothing in the
//! sampler or the tube indicators depends on a discretization.

// ── small vector helpers ────────────────────────────────────────────────────

pub(crate) fn vsub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn vscale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub(crate) fn vdot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn vnorm(a: &[f64]) -> f64 {
    vdot(a, a).sqrt()
}

/// a + s*b
pub(crate) fn vaxpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// Unit vector along coordinate axis k in dimension dim.
pub(crate) fn axis(dim: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[k] = 1.0;
    e
}

// ── pieces ──────────────────────────────────────────────────────────────────

/// One C2 piece of a curve, traversed at unit speed.
///
/// An `Arc` is `center + radius*(cos(t)*u + sin(t)*v)` for `t` in
/// `[0, angle]`, with `u`, `v` an orthonormal pair; its tangent at `t` is
/// `-sin(t)*u + cos(t)*v`, so `v` is the travel direction at the start and
/// the curvature vector points from the start toward the center.
#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    Seg { start: Vec<f64>, dir: Vec<f64>, len: f64 },
    Arc { center: Vec<f64>, u: Vec<f64>, v: Vec<f64>, radius: f64, angle: f64 },
}

impl Piece {
    pub fn dim(&self) -> usize {
        match self {
            Piece::Seg { start, .. } => start.len(),
            Piece::Arc { center, .. } => center.len(),
        }
    }

    pub fn len(&self) -> f64 {
        match self {
            Piece::Seg { len, .. } => *len,
            Piece::Arc { radius, angle, .. } => radius * angle,
        }
    }

    /// Point at arclength s from the start of this piece.
    pub fn point_at(&self, s: f64) -> Vec<f64> {
        match self {
            Piece::Seg { start, dir, .. } => vaxpy(start, s, dir),
            Piece::Arc { center, u, v, radius, .. } => {
                let t = s / radius;
                let mut p = vaxpy(center, radius * t.cos(), u);
                p = vaxpy(&p, radius * t.sin(), v);
                p
            }
        }
    }

    /// Unit tangent at arclength s.
    pub fn tangent_at(&self, s: f64) -> Vec<f64> {
        match self {
            Piece::Seg { dir, .. } => dir.clone(),
            Piece::Arc { u, v, radius, .. } => {
                let t = s / radius;
                let mut g = vscale(u, -t.sin());
                g = vaxpy(&g, t.cos(), v);
                g
            }
        }
    }

    pub fn start(&self) -> Vec<f64> {
        self.point_at(0.0)
    }

    pub fn end(&self) -> Vec<f64> {
        self.point_at(self.len())
    }

    pub fn start_tangent(&self) -> Vec<f64> {
        self.tangent_at(0.0)
    }

    pub fn end_tangent(&self) -> Vec<f64> {
        self.tangent_at(self.len())
    }

    /// Exact distance from x to this piece.
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.distance_sub(x, 0.0, self.len())
    }

    /// Exact distance from x to the sub-piece with arclength in
    /// `[s_lo, s_hi]` (clamped to the piece).
    pub fn distance_sub(&self, x: &[f64], s_lo: f64, s_hi: f64) -> f64 {
        let s_lo = s_lo.max(0.0);
        let s_hi = s_hi.min(self.len());
        match self {
            Piece::Seg { start, dir, .. } => {
                let t = vdot(&vsub(x, start), dir).clamp(s_lo, s_hi);
                vnorm(&vsub(x, &vaxpy(start, t, dir)))
            }
            Piece::Arc { center, u, v, radius, .. } => {
                let q = vsub(x, center);
                let alpha = vdot(&q, u);
                let beta = vdot(&q, v);
                let theta = beta.atan2(alpha).rem_euclid(2.0 * std::f64::consts::PI);
                let (t_lo, t_hi) = (s_lo / radius, s_hi / radius);
                if (t_lo..=t_hi).contains(&theta) {
                    // Nearest point of the full circle lies on the sub-arc.
                    // The out-of-plane part is assembled componentwise: the
                    // difference-of-squares form leaves cancellation dust
                    // that the square root would blow up to ~1e-9.
                    let rho = alpha.hypot(beta);
                    let mut z = vaxpy(&q, -alpha, u);
                    z = vaxpy(&z, -beta, v);
                    ((rho - radius).powi(2) + vdot(&z, &z)).sqrt()
                } else {
                    // Otherwise one of the sub-arc endpoints is nearest.
                    let d_lo = vnorm(&vsub(x, &self.point_at(s_lo)));
                    let d_hi = vnorm(&vsub(x, &self.point_at(s_hi)));
                    d_lo.min(d_hi)
                }
            }
        }
    }
}

// ── whole-curve queries ─────────────────────────────────────────────────────

/// Cumulative arclength table: entry i is the length before piece i, with a
/// final entry holding the total.
pub fn cumulative_lengths(pieces: &[Piece]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(pieces.len() + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for p in pieces {
        acc += p.len();
        cum.push(acc);
    }
    cum
}

/// Point at global arclength s (clamped to the curve).
pub fn point_at_arclength(pieces: &[Piece], cum: &[f64], s: f64) -> Vec<f64> {
    let total = *cum.last().unwrap();
    let s = s.clamp(0.0, total);
    // partition_point returns the first piece whose start exceeds s.
    let i = cum.partition_point(|&c| c <= s).saturating_sub(1).min(pieces.len() - 1);
    pieces[i].point_at(s - cum[i])
}

/// Unit tangent at global arclength s.
pub fn tangent_at_arclength(pieces: &[Piece], cum: &[f64], s: f64) -> Vec<f64> {
    let total = *cum.last().unwrap();
    let s = s.clamp(0.0, total);
    let i = cum.partition_point(|&c| c <= s).saturating_sub(1).min(pieces.len() - 1);
    pieces[i].tangent_at(s - cum[i])
}

/// Exact distance from x to the whole curve.
pub fn curve_distance(pieces: &[Piece], x: &[f64]) -> f64 {
    pieces.iter().map(|p| p.distance(x)).fold(f64::INFINITY, f64::min)
}

/// Exact distance from x to the part of the curve with global arclength in
/// `[lo, hi]`.
pub fn curve_distance_window(pieces: &[Piece], cum: &[f64], x: &[f64], lo: f64, hi: f64) -> f64 {
    let mut best = f64::INFINITY;
    for (i, p) in pieces.iter().enumerate() {
        let (p_lo, p_hi) = (cum[i], cum[i + 1]);
        if p_hi < lo || p_lo > hi {
            continue;
        }
        best = best.min(p.distance_sub(x, lo - p_lo, hi - p_lo));
    }
    best
}

/// Polyline through the curve at arclength step at most `step` per piece,
/// keeping every junction as a sample (triples in the curvature scan then
/// never straddle two junctions).
pub fn discretize(pieces: &[Piece], step: f64) -> Vec<Vec<f64>> {
    assert!(step > 0.0);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in pieces {
        let len = p.len();
        if len == 0.0 {
            continue;
        }
        let k = (len / step).ceil().max(1.0) as usize;
        let from = if out.is_empty() { 0 } else { 1 }; // junction already emitted
        for j in from..=k {
            out.push(p.point_at(len * j as f64 / k as f64));
        }
    }
    out
}

/// Circumradius of three points in any dimension; infinite when collinear.
pub fn circumradius(p1: &[f64], p2: &[f64], p3: &[f64]) -> f64 {
    let a = vsub(p2, p1);
    let b = vsub(p3, p2);
    let c = vsub(p3, p1);
    let (la, lb, lc) = (vnorm(&a), vnorm(&b), vnorm(&c));
    // Gram identity: 4*area^2 = |a|^2 |b|^2 - (a.b)^2.
    let cross_sq = (vdot(&a, &a) * vdot(&b, &b) - vdot(&a, &b).powi(2)).max(0.0);
    let area2 = cross_sq.sqrt(); // twice the area
    if area2 == 0.0 {
        return f64::INFINITY;
    }
    la * lb * lc / (2.0 * area2)
}

/// Minimum circumradius over consecutive sample triples of a polyline.
pub fn min_osculating_radius(samples: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for t in samples.windows(3) {
        best = best.min(circumradius(&t[0], &t[1], &t[2]));
    }
    best
}
