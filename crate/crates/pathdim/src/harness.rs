//! Experiment runner: calibrated risk sweeps over a sampler panel, cdf
//! exponent checks, two-sample diagnostics, and CSV/JSON persistence.
//!
//! The true risk is a supremum over a distribution class; a finite panel can
//! only under-approximate it, so every report labels the aggregated quantity
//! "panel risk": the worst per-sampler error rate among the configured
//! samplers at each n.
//!
//! Everything is driven by one master seed through per-trial derived
//! streams, so a sweep is reproducible bit for bit from its config snapshot
//! regardless of worker scheduling.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::{fs, io};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{
    bound_binary_lower_log, bound_binary_upper_log, bound_lower_general_log,
    bound_upper_general_log, BoundConstants,
};
use crate::core_types::{CloudError, CloudMeta, EstimatorConfig, PointCloud, Seed};
use crate::estimator::{calibrate_thresholds, estimate_binary, estimate_general, EstimatorError};
use crate::manifolds::{sample, SamplerError, SamplerSpec};

const Z95: f64 = 1.959963984540054;
const BOOTSTRAP_ROUNDS: usize = 100;
const CDF_FIT_POINTS: usize = 20;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Cloud(#[from] CloudError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

// ── experiment configuration ────────────────────────────────────────────

/// One panel member: a sampler and the dimension the estimator is graded
/// against. The label must match the sampler's own intrinsic dimension;
/// keeping it explicit makes config files self-documenting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelEntry {
    pub d_true: usize,
    pub spec: SamplerSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorMode {
    Binary { d1: usize, d2: usize },
    General,
}

/// Where the decision thresholds come from: given directly, or calibrated
/// on reference samplers at the largest n of the sweep. Externally tagged
/// so the integer-keyed threshold map survives JSON round trips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Fixed { thresholds: BTreeMap<usize, f64> },
    Calibrate { references: Vec<PanelEntry>, trials: usize, safety: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub panel: Vec<PanelEntry>,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub mode: EstimatorMode,
    pub thresholds: ThresholdSource,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::BadConfig(msg));
        if self.panel.is_empty() {
            return bad("empty sampler panel".into());
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n grid must be strictly increasing, got {:?}", self.n_grid));
        }
        if self.trials == 0 {
            return bad("need at least one trial per n".into());
        }
        for (i, entry) in self.panel.iter().enumerate() {
            if let Err(e) = entry.spec.validate() {
                return bad(format!("panel entry {i}: {e}"));
            }
            if entry.d_true != entry.spec.intrinsic_dim() {
                return bad(format!(
                    "panel entry {i} labeled d_true = {} but samples dimension {}",
                    entry.d_true,
                    entry.spec.intrinsic_dim()
                ));
            }
            if let EstimatorMode::Binary { d1, d2 } = self.mode {
                if !(1 <= d1 && d1 < d2) {
                    return bad(format!("bad binary pair ({d1}, {d2})"));
                }
                if entry.d_true != d1 && entry.d_true != d2 {
                    return bad(format!(
                        "panel entry {i} has d_true = {} outside the binary pair ({d1}, {d2})",
                        entry.d_true
                    ));
                }
            }
        }
        Ok(())
    }
}

// ── risk sweep ──────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub n: usize,
    pub trials: usize,
    pub errors: usize,
    pub risk: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub log_bound_lower: f64,
    pub log_bound_upper: f64,
}

/// Panel risk per n with the analytic bound overlay, plus everything needed
/// to reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskCurve {
    pub experiment: String,
    pub master_seed: u64,
    /// Human-readable panel description; the risk column is a max over
    /// exactly these samplers, not a class supremum.
    pub panel: Vec<String>,
    pub rows: Vec<RiskRow>,
    pub config: ExperimentConfig,
}

fn resolve_thresholds(
    cfg: &ExperimentConfig,
    master: Seed,
) -> Result<EstimatorConfig, HarnessError> {
    match &cfg.thresholds {
        ThresholdSource::Fixed { thresholds } => {
            Ok(EstimatorConfig::user_supplied(thresholds.clone()))
        }
        ThresholdSource::Calibrate { references, trials, safety } => {
            if references.is_empty() {
                return Err(EstimatorError::Calibration("no reference samplers".into()).into());
            }
            let refs: Vec<(usize, SamplerSpec)> =
                references.iter().map(|e| (e.d_true, e.spec.clone())).collect();
            let n_cal = *cfg.n_grid.last().expect("validated nonempty");
            let params = refs[0].1.params;
            Ok(calibrate_thresholds(&params, &refs, n_cal, *trials, *safety, master.derive(u64::MAX))?)
        }
    }
}

/// Analytic log-bound columns for one row; inapplicable bounds become NaN
/// rather than aborting the sweep.
fn bound_columns(mode: EstimatorMode, spec: &SamplerSpec, n: u64) -> (f64, f64) {
    let c = BoundConstants::default();
    let p = &spec.params;
    match mode {
        EstimatorMode::Binary { d1, d2 } => (
            bound_binary_lower_log(n, d1, d2, p, &c).unwrap_or(f64::NAN),
            bound_binary_upper_log(n, d1, d2, p, &c).unwrap_or(f64::NAN),
        ),
        EstimatorMode::General => (
            bound_lower_general_log(n, p, &c).unwrap_or(f64::NAN),
            bound_upper_general_log(n, p, &c).unwrap_or(f64::NAN),
        ),
    }
}

/// Sample, estimate, and grade every (n, sampler, trial) cell; report the
/// worst sampler per n. Trials run in parallel on derived seed streams
/// indexed by (n, sampler, trial), so scheduling cannot change the result.
pub fn run_risk_sweep(cfg: &ExperimentConfig) -> Result<RiskCurve, HarnessError> {
    cfg.validate()?;
    let master = Seed(cfg.master_seed);
    let est_cfg = resolve_thresholds(cfg, master)?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for (n_idx, &n) in cfg.n_grid.iter().enumerate() {
        let mut worst_errors = 0usize;
        for (s_idx, entry) in cfg.panel.iter().enumerate() {
            let base = ((n_idx * cfg.panel.len() + s_idx) * cfg.trials) as u64;
            let errors = (0..cfg.trials)
                .into_par_iter()
                .map(|t| -> Result<usize, HarnessError> {
                    let trial_seed = master.derive(base + t as u64);
                    let cloud = sample(&entry.spec, n, trial_seed.derive(0))?;
                    let d_hat = match cfg.mode {
                        EstimatorMode::Binary { d1, d2 } => {
                            estimate_binary(&cloud, d1, d2, &est_cfg, trial_seed.derive(1))?.d_hat
                        }
                        EstimatorMode::General => {
                            estimate_general(&cloud, &est_cfg, trial_seed.derive(1))?.d_hat
                        }
                    };
                    Ok(usize::from(d_hat != entry.d_true))
                })
                .sum::<Result<usize, HarnessError>>()?;
            worst_errors = worst_errors.max(errors);
        }
        let (ci_lo, ci_hi) = wilson_interval(worst_errors, cfg.trials);
        let (log_bound_lower, log_bound_upper) =
            bound_columns(cfg.mode, &cfg.panel[0].spec, n as u64);
        rows.push(RiskRow {
            n,
            trials: cfg.trials,
            errors: worst_errors,
            risk: worst_errors as f64 / cfg.trials as f64,
            ci_lo,
            ci_hi,
            log_bound_lower,
            log_bound_upper,
        });
    }
    Ok(RiskCurve {
        experiment: cfg.experiment.clone(),
        master_seed: cfg.master_seed,
        panel: cfg.panel.iter().map(|e| e.spec.describe()).collect(),
        rows,
        config: cfg.clone(),
    })
}

/// 95% Wilson score interval for `errors` successes in `trials`.
pub fn wilson_interval(errors: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // At the extremes center and half agree analytically; subtraction dust
    // would otherwise leave a phantom sliver.
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

// ── conditional-cdf exponent ────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfExponent {
    pub slope: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_pairs: usize,
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    sxy / sxx
}

/// Log-log slope of cdf counts on a fixed log-spaced grid of thresholds.
fn grid_slope(sorted: &[f64], ys: &[f64]) -> Option<f64> {
    let n = sorted.len() as f64;
    let mut lx = Vec::with_capacity(ys.len());
    let mut lf = Vec::with_capacity(ys.len());
    for &y in ys {
        let count = sorted.partition_point(|&d| d <= y);
        if count > 0 {
            lx.push(y.ln());
            lf.push((count as f64 / n).ln());
        }
    }
    (lx.len() >= 2).then(|| ols_slope(&lx, &lf))
}

/// Estimate the small-y growth exponent of P(‖X−X′‖^{d1} ≤ y) for i.i.d.
/// pairs: an OLS fit of log cdf against log y over the decade below the 10%
/// quantile, with a percentile-bootstrap confidence interval.
pub fn check_cdf_exponent(
    spec: &SamplerSpec,
    d1: usize,
    n_pairs: usize,
    seed: Seed,
) -> Result<CdfExponent, HarnessError> {
    if d1 == 0 || d1 > spec.intrinsic_dim() {
        return Err(HarnessError::BadInput(format!(
            "power {d1} incompatible with sampler dimension {}",
            spec.intrinsic_dim()
        )));
    }
    if n_pairs < 1000 {
        return Err(HarnessError::BadInput(format!("need at least 1000 pairs, got {n_pairs}")));
    }
    let cloud = sample(spec, 2 * n_pairs, seed.derive(0))?;
    let mut dists: Vec<f64> =
        (0..n_pairs).map(|i| cloud.dist(2 * i, 2 * i + 1).powi(d1 as i32)).collect();
    dists.sort_by(f64::total_cmp);
    let y_hi = dists[n_pairs / 10];
    if !(y_hi > 0.0) {
        return Err(HarnessError::BadInput("degenerate pair distances".into()));
    }
    let ys: Vec<f64> = (0..CDF_FIT_POINTS)
        .map(|j| y_hi * 10f64.powf(j as f64 / (CDF_FIT_POINTS - 1) as f64 - 1.0))
        .collect();
    let slope = grid_slope(&dists, &ys)
        .ok_or_else(|| HarnessError::BadInput("too few populated cdf points to fit".into()))?;

    let mut boots: Vec<f64> = (0..BOOTSTRAP_ROUNDS)
        .into_par_iter()
        .filter_map(|b| {
            use rand::Rng;
            let mut rng = seed.derive(1 + b as u64).rng();
            // Histogram the resample against the fixed grid, then prefix-sum
            // into cdf counts.
            let mut hist = vec![0usize; CDF_FIT_POINTS + 1];
            for _ in 0..n_pairs {
                let v = dists[rng.gen_range(0..n_pairs)];
                hist[ys.partition_point(|&y| y < v)] += 1;
            }
            let mut lx = Vec::new();
            let mut lf = Vec::new();
            let mut cum = 0usize;
            for (j, &y) in ys.iter().enumerate() {
                cum += hist[j];
                if cum > 0 {
                    lx.push(y.ln());
                    lf.push((cum as f64 / n_pairs as f64).ln());
                }
            }
            (lx.len() >= 2).then(|| ols_slope(&lx, &lf))
        })
        .collect();
    boots.sort_by(f64::total_cmp);
    if boots.len() < BOOTSTRAP_ROUNDS / 2 {
        return Err(HarnessError::BadInput("bootstrap fits collapsed".into()));
    }
    let pick = |q: f64| boots[((boots.len() as f64 * q) as usize).min(boots.len() - 1)];
    Ok(CdfExponent { slope, ci_lo: pick(0.025), ci_hi: pick(0.975), n_pairs })
}

// ── two-sample Kolmogorov–Smirnov ───────────────────────────────────────

/// KS statistic and asymptotic p-value for two unsorted samples.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<(f64, f64), HarnessError> {
    if a.is_empty() || b.is_empty() {
        return Err(HarnessError::BadInput("KS needs two nonempty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < na && j < nb {
        let v = a[i].min(b[j]);
        while i < na && a[i] <= v {
            i += 1;
        }
        while j < nb && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na as f64 * nb as f64) / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok((d, ks_survival(lambda)))
}

/// Kolmogorov survival function Q(λ) = 2 Σ (−1)^{k−1} exp(−2 k² λ²).
fn ks_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += sign * term;
        if term < 1e-14 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

// ── persistence ─────────────────────────────────────────────────────────

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write risk_curve.csv and config.json under `dir`; returns both paths.
pub fn emit_report(curve: &RiskCurve, dir: &Path) -> Result<(PathBuf, PathBuf), HarnessError> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("risk_curve.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(&csv_path)?;
    w.write_record([
        "n",
        "trials",
        "errors",
        "risk",
        "ci_lo",
        "ci_hi",
        "log_bound_lower",
        "log_bound_upper",
    ])?;
    for r in &curve.rows {
        w.write_record([
            r.n.to_string(),
            r.trials.to_string(),
            r.errors.to_string(),
            fmt17(r.risk),
            fmt17(r.ci_lo),
            fmt17(r.ci_hi),
            fmt17(r.log_bound_lower),
            fmt17(r.log_bound_upper),
        ])?;
    }
    w.flush()?;
    let json_path = dir.join("config.json");
    fs::write(&json_path, serde_json::to_string_pretty(&curve.config)?)?;
    Ok((csv_path, json_path))
}

/// Re-read rows written by emit_report.
pub fn read_risk_rows(path: &Path) -> Result<Vec<RiskRow>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str, HarnessError> {
            rec.get(i).ok_or_else(|| HarnessError::BadInput(format!("short row: {rec:?}")))
        };
        let fp = |i: usize| -> Result<f64, HarnessError> {
            field(i)?.parse().map_err(|e| HarnessError::BadInput(format!("{e}")))
        };
        let ip = |i: usize| -> Result<usize, HarnessError> {
            field(i)?.parse().map_err(|e| HarnessError::BadInput(format!("{e}")))
        };
        rows.push(RiskRow {
            n: ip(0)?,
            trials: ip(1)?,
            errors: ip(2)?,
            risk: fp(3)?,
            ci_lo: fp(4)?,
            ci_hi: fp(5)?,
            log_bound_lower: fp(6)?,
            log_bound_upper: fp(7)?,
        });
    }
    Ok(rows)
}

/// Point cloud file: `m=<int>,n=<int>,d_true=<int|?>` then one point per
/// row, RFC-4180 with CRLF and 17 significant digits.
pub fn write_cloud_csv(cloud: &PointCloud, path: &Path) -> Result<(), HarnessError> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    let d = cloud.meta.d_true.map_or_else(|| "?".to_string(), |d| d.to_string());
    write!(f, "m={},n={},d_true={d}\r\n", cloud.dim(), cloud.len())?;
    for i in 0..cloud.len() {
        let row: Vec<String> = cloud.point(i).iter().copied().map(fmt17).collect();
        write!(f, "{}\r\n", row.join(","))?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_cloud_csv(path: &Path) -> Result<PointCloud, HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| HarnessError::BadInput("empty cloud file".into()))?;
    let mut m = None;
    let mut n = None;
    let mut d_true = None;
    for part in header.split(',') {
        match part.split_once('=') {
            Some(("m", v)) => m = v.parse::<usize>().ok(),
            Some(("n", v)) => n = v.parse::<usize>().ok(),
            Some(("d_true", "?")) => {}
            Some(("d_true", v)) => d_true = v.parse::<usize>().ok(),
            _ => return Err(HarnessError::BadInput(format!("bad cloud header field {part:?}"))),
        }
    }
    let (m, n) = match (m, n) {
        (Some(m), Some(n)) => (m, n),
        _ => return Err(HarnessError::BadInput(format!("bad cloud header {header:?}"))),
    };
    let mut points = Vec::with_capacity(n);
    for line in lines {
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| HarnessError::BadInput(format!("bad coordinate: {e}")))?;
        if row.len() != m {
            return Err(HarnessError::BadInput(format!(
                "point {} has {} coordinates, header says {m}",
                points.len(),
                row.len()
            )));
        }
        points.push(row);
    }
    if points.len() != n {
        return Err(HarnessError::BadInput(format!(
            "header claims {n} points, file has {}",
            points.len()
        )));
    }
    // The file format carries no window size; infer the tightest cube.
    let half_width = points
        .iter()
        .flatten()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let meta = CloudMeta { sampler: String::from("file"), seed: None, d_true };
    Ok(PointCloud::new(points, half_width, meta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_types::RegularityParams;
    use crate::manifolds::SamplerKind;
    use approx::assert_relative_eq;

    fn cube_entry(d: usize, m: usize) -> PanelEntry {
        PanelEntry {
            d_true: d,
            spec: SamplerSpec {
                kind: SamplerKind::UniformCube { d },
                params: RegularityParams::with_defaults(0.25, 0.25, 1.0, m),
            },
        }
    }

    fn quick_config(panel: Vec<PanelEntry>, thresholds: ThresholdSource) -> ExperimentConfig {
        ExperimentConfig {
            experiment: "unit".into(),
            panel,
            n_grid: vec![8, 16],
            trials: 12,
            mode: EstimatorMode::Binary { d1: 1, d2: 2 },
            thresholds,
            master_seed: 99,
        }
    }

    #[test]
    fn wilson_matches_reference_values() {
        let (lo, hi) = wilson_interval(5, 10);
        assert_relative_eq!(lo, 0.2366, max_relative = 1e-3);
        assert_relative_eq!(hi, 0.7634, max_relative = 1e-3);
        let (lo, hi) = wilson_interval(0, 50);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
        // Contains the point estimate, and tightens with more trials.
        for (k, n) in [(1usize, 7usize), (3, 9), (20, 40)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi);
        }
        let wide = wilson_interval(5, 10);
        let tight = wilson_interval(50, 100);
        assert!(tight.1 - tight.0 < wide.1 - wide.0);
    }

    #[test]
    fn ks_statistic_hand_checked() {
        let (d, _) = two_sample_ks(&[1.0, 2.0, 3.0], &[1.5, 2.5]).unwrap();
        assert_relative_eq!(d, 1.0 / 3.0, max_relative = 1e-12);
        assert!(two_sample_ks(&[], &[1.0]).is_err());
    }

    #[test]
    fn ks_separates_shifted_samples_only() {
        use rand::Rng;
        let mut rng = Seed(31).rng();
        let a: Vec<f64> = (0..2000).map(|_| rng.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.gen_range(0.0..1.0)).collect();
        let c: Vec<f64> = (0..2000).map(|_| rng.gen_range(0.3..1.3)).collect();
        let (_, p_same) = two_sample_ks(&a, &b).unwrap();
        let (_, p_diff) = two_sample_ks(&a, &c).unwrap();
        assert!(p_same > 0.01, "false alarm: p = {p_same}");
        assert!(p_diff < 1e-6, "missed shift: p = {p_diff}");
    }

    #[test]
    fn segment_cdf_exponent_is_one() {
        let spec = cube_entry(1, 2).spec;
        let est = check_cdf_exponent(&spec, 1, 100_000, Seed(7)).unwrap();
        assert!((est.slope - 1.0).abs() <= 0.2, "slope {}", est.slope);
        assert!(est.ci_lo <= est.slope && est.slope <= est.ci_hi);
        assert!(est.ci_hi - est.ci_lo < 0.5);
        assert!(check_cdf_exponent(&spec, 1, 10, Seed(7)).is_err());
        assert!(check_cdf_exponent(&spec, 3, 2000, Seed(7)).is_err());
    }

    #[test]
    fn d1_only_panel_has_zero_risk() {
        let refs = vec![cube_entry(1, 2)];
        let cfg = quick_config(
            vec![cube_entry(1, 2)],
            ThresholdSource::Calibrate { references: refs, trials: 20, safety: 1.5 },
        );
        let curve = run_risk_sweep(&cfg).unwrap();
        assert_eq!(curve.rows.len(), 2);
        for row in &curve.rows {
            assert_eq!(row.errors, 0);
            assert_eq!(row.risk, 0.0);
            assert_eq!(row.ci_lo, 0.0);
        }
    }

    #[test]
    fn single_trial_risk_is_zero_or_one() {
        // A threshold no statistic can beat forces d2 on 1-d data.
        let mut cfg = quick_config(
            vec![cube_entry(1, 2)],
            ThresholdSource::Fixed { thresholds: BTreeMap::from([(1, 1e-12)]) },
        );
        cfg.trials = 1;
        let curve = run_risk_sweep(&cfg).unwrap();
        for row in &curve.rows {
            assert_eq!(row.risk, 1.0);
        }
    }

    #[test]
    fn panel_risk_is_worst_sampler() {
        // Segment panel member always errs (impossible threshold), square
        // member never does; the row must report the segment's risk.
        let cfg = quick_config(
            vec![cube_entry(1, 2), cube_entry(2, 2)],
            ThresholdSource::Fixed { thresholds: BTreeMap::from([(1, 1e-12)]) },
        );
        let curve = run_risk_sweep(&cfg).unwrap();
        for row in &curve.rows {
            assert_eq!(row.errors, row.trials);
        }
    }

    #[test]
    fn sweep_is_reproducible_from_config_snapshot() {
        let refs = vec![cube_entry(1, 2), cube_entry(2, 2)];
        let cfg = quick_config(
            refs.clone(),
            ThresholdSource::Calibrate { references: vec![cube_entry(1, 2)], trials: 10, safety: 1.5 },
        );
        let a = run_risk_sweep(&cfg).unwrap();
        let json = serde_json::to_string(&a.config).unwrap();
        let replay: ExperimentConfig = serde_json::from_str(&json).unwrap();
        let b = run_risk_sweep(&replay).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn risk_csv_round_trips_bit_exact() {
        let cfg = quick_config(
            vec![cube_entry(1, 2)],
            ThresholdSource::Fixed { thresholds: BTreeMap::from([(1, 3.0)]) },
        );
        let curve = run_risk_sweep(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (csv_path, json_path) = emit_report(&curve, dir.path()).unwrap();
        let rows = read_risk_rows(&csv_path).unwrap();
        assert_eq!(rows, curve.rows);
        let cfg2: ExperimentConfig =
            serde_json::from_str(&fs::read_to_string(json_path).unwrap()).unwrap();
        assert_eq!(cfg2, cfg);
        // Log-bound columns stay finite deep into the n grid.
        let (bl, bu) = bound_columns(cfg.mode, &cfg.panel[0].spec, 10_000);
        assert!(bl.is_finite() && bu.is_finite(), "({bl}, {bu})");
    }

    #[test]
    fn empty_curve_writes_header_only() {
        let cfg = quick_config(
            vec![cube_entry(1, 2)],
            ThresholdSource::Fixed { thresholds: BTreeMap::from([(1, 3.0)]) },
        );
        let curve = RiskCurve {
            experiment: cfg.experiment.clone(),
            master_seed: cfg.master_seed,
            panel: vec![],
            rows: vec![],
            config: cfg,
        };
        let dir = tempfile::tempdir().unwrap();
        let (csv_path, _) = emit_report(&curve, dir.path()).unwrap();
        let text = fs::read_to_string(csv_path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("n,trials,errors"));
    }

    #[test]
    fn cloud_csv_round_trips() {
        let spec = cube_entry(2, 3).spec;
        let cloud = sample(&spec, 17, Seed(5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.csv");
        write_cloud_csv(&cloud, &path).unwrap();
        let back = read_cloud_csv(&path).unwrap();
        assert_eq!(back.len(), cloud.len());
        assert_eq!(back.dim(), cloud.dim());
        assert_eq!(back.meta.d_true, cloud.meta.d_true);
        for i in 0..cloud.len() {
            assert_eq!(back.point(i), cloud.point(i), "point {i} drifted");
        }
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("m=3,n=17,d_true=2\r\n"));
    }

    #[test]
    fn unknown_dimension_serializes_as_question_mark() {
        let cloud = PointCloud::new(vec![vec![0.5, -0.5]], 1.0, CloudMeta::unknown()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.csv");
        write_cloud_csv(&cloud, &path).unwrap();
        assert!(fs::read_to_string(&path).unwrap().starts_with("m=2,n=1,d_true=?"));
        assert_eq!(read_cloud_csv(&path).unwrap().meta.d_true, None);
    }

    #[test]
    fn config_validation_catches_mislabeled_panels() {
        let good = quick_config(
            vec![cube_entry(1, 2)],
            ThresholdSource::Fixed { thresholds: BTreeMap::from([(1, 3.0)]) },
        );
        assert!(good.validate().is_ok());

        let mut bad = good.clone();
        bad.n_grid = vec![10, 10];
        assert!(matches!(bad.validate(), Err(HarnessError::BadConfig(_))));

        let mut bad = good.clone();
        bad.trials = 0;
        assert!(bad.validate().is_err());

        let mut bad = good.clone();
        bad.panel[0].d_true = 2;
        assert!(bad.validate().is_err());

        let mut bad = good.clone();
        bad.panel.push(cube_entry(3, 3));
        assert!(bad.validate().is_err(), "d_true outside the binary pair");

        let mut bad = good;
        bad.panel.clear();
        assert!(bad.validate().is_err());
    }
}
