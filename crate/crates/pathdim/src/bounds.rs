//! Closed-form risk bound evaluators plus the small geometric lemmas they
//! lean on (volume, covering numbers, exponential-map stretch, and a scalar
//! cosh inequality).
//!
//! Every bound is evaluated in log space first so that desk-scale sweeps can
//! report finite columns at sample sizes where the linear value underflows;
//! the linear wrappers simply exponentiate. Multiplicative constants are
//! user-supplied through [`BoundConstants`] (the theory fixes only their
//! existence, not their value).

use thiserror::Error;

use crate::core_types::{unit_ball_volume, RegularityParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("bound not applicable: {0}")]
    NotApplicable(String),
    #[error("bad input: {0}")]
    BadInput(String),
}

/// Multiplicative constants in front of each bound family; all positive,
/// default 1 so that shape comparisons work out of the box.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundConstants {
    pub c_lower: f64,
    pub c_upper: f64,
    pub c_binary_upper: f64,
    pub c_binary_lower: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants { c_lower: 1.0, c_upper: 1.0, c_binary_upper: 1.0, c_binary_lower: 1.0 }
    }
}

impl BoundConstants {
    pub fn validate(&self) -> Result<(), BoundError> {
        for (name, v) in [
            ("c_lower", self.c_lower),
            ("c_upper", self.c_upper),
            ("c_binary_upper", self.c_binary_upper),
            ("c_binary_lower", self.c_binary_lower),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(BoundError::BadInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// ln(1 + e^x) without overflow for large x.
fn ln1pexp(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

// ── minimax risk bounds ─────────────────────────────────────────────────────

/// Log of the all-dimensions lower bound
/// `C^n tau_l^n min(tau_l^-3 n^-2, 1)^n`.
///
/// The per-sample factor `tau * min(tau^-3 n^-2, 1)` is combined before
/// taking logs so an infinite `tau_l` cleanly drives the bound to zero.
pub fn bound_lower_general_log(
    n: u64,
    params: &RegularityParams,
    c: &BoundConstants,
) -> Result<f64, BoundError> {
    c.validate()?;
    if n < 1 {
        return Err(BoundError::BadInput("need n >= 1".into()));
    }
    let tau = params.tau_l;
    let ln_n = (n as f64).ln();
    let per_sample = (-2.0 * tau.ln() - 2.0 * ln_n).min(tau.ln());
    Ok(n as f64 * (c.c_lower.ln() + per_sample))
}

pub fn bound_lower_general(
    n: u64,
    params: &RegularityParams,
    c: &BoundConstants,
) -> Result<f64, BoundError> {
    bound_lower_general_log(n, params, c).map(f64::exp)
}

/// Log of the all-dimensions upper bound
/// `C^n (1 + tau_g^-((m^2-m) n)) n^(-n/(m-1))`.
pub fn bound_upper_general_log(
    n: u64,
    params: &RegularityParams,
    c: &BoundConstants,
) -> Result<f64, BoundError> {
    c.validate()?;
    if n < 1 {
        return Err(BoundError::BadInput("need n >= 1".into()));
    }
    let m = params.m;
    if m < 2 {
        return Err(BoundError::NotApplicable(
            "ambient dimension 1 leaves no rate exponent".into(),
        ));
    }
    let nf = n as f64;
    let mf = m as f64;
    let spike = ln1pexp(-(mf * mf - mf) * nf * params.tau_g.ln());
    Ok(nf * c.c_upper.ln() + spike - nf / (mf - 1.0) * nf.ln())
}

pub fn bound_upper_general(
    n: u64,
    params: &RegularityParams,
    c: &BoundConstants,
) -> Result<f64, BoundError> {
    bound_upper_general_log(n, params, c).map(f64::exp)
}

/// Log of the two-dimension upper bound
/// `C^n (1 + tau_g^-(E n)) n^(-(d2/d1 - 1) n)` with
/// `E = d2 m / d1 + m - 2 d2`.
pub fn bound_binary_upper_log(
    n: u64,
    d1: usize,
    d2: usize,
    params: &RegularityParams,
    c: &BoundConstants,
) -> Result<f64, BoundError> {
    c.validate()?;
    if n < 1 {
        return Err(BoundError::BadInput("need n >= 1".into()));
    }
    if d1 >= d2 {
        return Err(BoundError::BadInput(format!("need d1 < d2, got {d1} >= {d2}")));
    }
    let nf = n as f64;
    let (f1, f2, mf) = (d1 as f64, d2 as f64, params.m as f64);
    let spike_exp = f2 * mf / f1 + mf - 2.0 * f2;
    let spike = ln1pexp(-spike_exp * nf * params.tau_g.ln());
    Ok(nf * c.c_binary_upper.ln() + spike - (f2 / f1 - 1.0) * nf * nf.ln())
}

pub fn bound_binary_upper(
    n: u64,
    d1: usize,
    d2: usize,
    params: &RegularityParams,
    c: &BoundConstants,
) -> Result<f64, BoundError> {
    bound_binary_upper_log(n, d1, d2, params, c).map(f64::exp)
}

/// Log of the two-dimension lower bound
/// `C^n tau_l^((d2-d1) n) min(tau_l^(-2(d2-d1)-1) n^-2, 1)^((d2-d1) n)`.
pub fn bound_binary_lower_log(
    n: u64,
    d1: usize,
    d2: usize,
    params: &RegularityParams,
    c: &BoundConstants,
) -> Result<f64, BoundError> {
    c.validate()?;
    if n < 1 {
        return Err(BoundError::BadInput("need n >= 1".into()));
    }
    if d1 >= d2 {
        return Err(BoundError::BadInput(format!("need d1 < d2, got {d1} >= {d2}")));
    }
    let nf = n as f64;
    let gap = (d2 - d1) as f64;
    let tau = params.tau_l;
    let ln_n = nf.ln();
    // tau * min(tau^(-2 gap - 1) n^-2, 1) per gap-weighted sample, combined
    // before the log as in the general lower bound.
    let per_factor = (-2.0 * gap * tau.ln() - 2.0 * ln_n).min(tau.ln());
    Ok(nf * c.c_binary_lower.ln() + gap * nf * per_factor)
}

pub fn bound_binary_lower(
    n: u64,
    d1: usize,
    d2: usize,
    params: &RegularityParams,
    c: &BoundConstants,
) -> Result<f64, BoundError> {
    bound_binary_lower_log(n, d1, d2, params, c).map(f64::exp)
}

// ── geometric lemmas ────────────────────────────────────────────────────────

/// Upper bound on the d-dimensional volume of a manifold in the class.
///
/// With an explicit constant the bound is `c (1 + tau_g^(d - m))`. Without
/// one, the looser explicit chain is used: a tube of radius
/// `r = min(tau_g, k_i)` around the manifold fits in the fattened cube, so
/// `vol_d <= (m!/d!) r^(d-m) 2^m (k_i + r)^m` (the factorial ratio comes from
/// integrating the tube's normal ball sections). Capping `r` at the cube
/// half-width keeps the value finite when the global reach is infinite.
pub fn volume_upper_bound(
    params: &RegularityParams,
    d: usize,
    c: Option<f64>,
) -> Result<f64, BoundError> {
    let m = params.m;
    if d < 1 || d > m {
        return Err(BoundError::BadInput(format!("need 1 <= d <= m, got d = {d}, m = {m}")));
    }
    if let Some(c) = c {
        if !(c.is_finite() && c > 0.0) {
            return Err(BoundError::BadInput(format!("constant must be positive, got {c}")));
        }
        let ratio = if d == m { 1.0 } else { params.tau_g.powi(d as i32 - m as i32) };
        return Ok(c * (1.0 + ratio));
    }
    let r = params.tau_g.min(params.k_i);
    let mut fact_ratio = 1.0;
    for k in (d + 1)..=m {
        fact_ratio *= k as f64;
    }
    Ok(fact_ratio * r.powi(d as i32 - m as i32) * 2f64.powi(m as i32) * (params.k_i + r).powi(m as i32))
}

/// Covering number bound `floor(2^d vol / (k_v r^d omega_d))` for radius-r
/// balls; callers are responsible for keeping r within the regime where the
/// volume argument is valid (r at most a few global reaches).
pub fn covering_number_bound(vol: f64, d: usize, k_v: f64, r: f64) -> Result<u64, BoundError> {
    if !(vol.is_finite() && vol > 0.0) {
        return Err(BoundError::BadInput(format!("volume must be positive, got {vol}")));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(BoundError::BadInput(format!("radius must be positive, got {r}")));
    }
    if !(k_v.is_finite() && k_v > 0.0) {
        return Err(BoundError::BadInput(format!("volume slack must be positive, got {k_v}")));
    }
    if d < 1 {
        return Err(BoundError::BadInput("need d >= 1".into()));
    }
    let value = 2f64.powi(d as i32) * vol / (k_v * r.powi(d as i32) * unit_ball_volume(d));
    if value >= u64::MAX as f64 {
        return Ok(u64::MAX);
    }
    Ok(value.floor() as u64)
}

/// Lipschitz stretch `sinh(kappa R)/(kappa R)` of the exponential map over a
/// geodesic ball of radius R at curvature scale kappa; 1 in the flat limit.
pub fn expmap_lipschitz_factor(kappa_l: f64, radius: f64) -> Result<f64, BoundError> {
    if !(kappa_l >= 0.0) || !(radius > 0.0) {
        return Err(BoundError::BadInput(format!(
            "need kappa >= 0 and R > 0, got kappa = {kappa_l}, R = {radius}"
        )));
    }
    let x = kappa_l * radius;
    if x < 1e-8 {
        // sinh(x)/x = 1 + x^2/6 + O(x^4)
        return Ok(1.0 + x * x / 6.0);
    }
    Ok(x.sinh() / x)
}

/// Both sides of the scalar inequality
/// `acosh((1-l) cosh a + l cosh b) / sqrt((1-l) a^2 + l b^2)
///     <= sinh(b/2) / (b/2)`,
/// returned as (holds, slack = rhs - lhs). The vanishing-denominator corner
/// (l = 0, a = 0) takes its limit value 1 on the left.
pub fn check_cosh_inequality(a: f64, b: f64, lambda: f64) -> Result<(bool, f64), BoundError> {
    if !(0.0 <= a && a < b && b.is_finite()) {
        return Err(BoundError::BadInput(format!("need 0 <= a < b finite, got a = {a}, b = {b}")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(BoundError::BadInput(format!("need lambda in [0, 1], got {lambda}")));
    }
    let den = ((1.0 - lambda) * a * a + lambda * b * b).sqrt();
    let lhs = if den == 0.0 {
        1.0
    } else {
        let mix = (1.0 - lambda) * a.cosh() + lambda * b.cosh();
        mix.acosh() / den
    };
    let half = b / 2.0;
    let rhs = half.sinh() / half;
    let slack = rhs - lhs;
    Ok((slack >= 0.0, slack))
}
