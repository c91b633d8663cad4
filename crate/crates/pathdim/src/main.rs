//! Command-line front end: every subcommand reads one JSON config file,
//! works deterministically from `--seed`, and drops its outputs under
//! `--out`.
//!
//! Exit codes: 0 success, 2 invalid config, 3 calibration failure,
//! 4 infeasible curve construction, 1 anything else.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::{Deserialize, Serialize};

use pathdim::bounds::{
    bound_binary_lower_log, bound_binary_upper_log, bound_lower_general_log,
    bound_upper_general_log, BoundConstants, BoundError,
};
use pathdim::core_types::{CloudError, EstimatorConfig, RegularityParams, Seed};
use pathdim::estimator::{
    calibrate_thresholds, estimate_binary, estimate_general, EstimatorError,
};
use pathdim::harness::{
    check_cdf_exponent, emit_report, read_cloud_csv, run_risk_sweep, write_cloud_csv,
    EstimatorMode, ExperimentConfig, HarnessError, PanelEntry,
};
use pathdim::lecam::{affinity_bruteforce, LeCamError, LeCamInstance};
use pathdim::manifolds::{sample, SamplerError, SamplerSpec, ZigzagError};
use pathdim::spacefill::{CurveError, SpaceFillingCurve};

#[derive(Parser)]
#[command(name = "pathdim", version, about = "Intrinsic-dimension estimation experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Seed for everything random in this run (default 0; risk-sweep uses
    /// it to override the config's master seed).
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file; the expected fields depend on the subcommand.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn seed(&self) -> Seed {
        Seed(self.seed.unwrap_or(0))
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw a point cloud from a sampler spec and write it as CSV.
    Sample(Common),
    /// Estimate the dimension of a point cloud file.
    Estimate(Common),
    /// Calibrate per-dimension thresholds from reference samplers.
    Calibrate(Common),
    /// Run a panel risk sweep and write risk_curve.csv plus a config snapshot.
    RiskSweep(Common),
    /// Fit the small-distance cdf exponent of a sampler.
    CdfExponent(Common),
    /// Brute-force the testing affinity of the zigzag mixtures.
    LecamAffinity(Common),
    /// Probe the space-filling curve's Holder ratio on random pairs.
    HilbertCheck(Common),
    /// Tabulate the analytic risk bounds in log space over an n grid.
    BoundsTable(Common),
}

// ── config plumbing ─────────────────────────────────────────────────────

#[derive(Debug, thiserror::Error)]
#[error("config {path}: {msg}")]
struct ConfigError {
    path: String,
    msg: String,
}

fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let fail = |msg: String| ConfigError { path: path.display().to_string(), msg };
    let text = fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    Ok(serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value)?)?;
    Ok(path)
}

// ── subcommand configs ──────────────────────────────────────────────────

#[derive(Deserialize)]
struct SampleConfig {
    spec: SamplerSpec,
    count: usize,
}

#[derive(Deserialize)]
struct EstimateConfig {
    /// Path to a point cloud CSV (as written by `sample`).
    cloud: PathBuf,
    mode: EstimatorMode,
    estimator: EstimatorConfig,
}

#[derive(Deserialize)]
struct CalibrateConfig {
    params: RegularityParams,
    references: Vec<PanelEntry>,
    n: usize,
    trials: usize,
    safety: f64,
}

#[derive(Deserialize)]
struct CdfConfig {
    spec: SamplerSpec,
    d1: usize,
    n_pairs: usize,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct HilbertConfig {
    dim: usize,
    depth: u32,
    #[serde(default = "default_scale")]
    scale: f64,
    pairs: usize,
}

#[derive(Deserialize)]
struct BoundsTableConfig {
    params: RegularityParams,
    mode: EstimatorMode,
    n_grid: Vec<usize>,
    #[serde(default)]
    constants: BoundConstants,
}

// ── subcommands ─────────────────────────────────────────────────────────

fn cmd_sample(c: &Common) -> Result<()> {
    let cfg: SampleConfig = load_config(&c.config)?;
    let cloud = sample(&cfg.spec, cfg.count, c.seed())?;
    fs::create_dir_all(&c.out)?;
    let path = c.out.join("cloud.csv");
    write_cloud_csv(&cloud, &path)?;
    println!(
        "sampled {} points in R^{} from {} -> {}",
        cloud.len(),
        cloud.dim(),
        cloud.meta.sampler,
        path.display()
    );
    Ok(())
}

fn cmd_estimate(c: &Common) -> Result<()> {
    let cfg: EstimateConfig = load_config(&c.config)?;
    let cloud = read_cloud_csv(&cfg.cloud)?;
    let est = match cfg.mode {
        EstimatorMode::Binary { d1, d2 } => {
            estimate_binary(&cloud, d1, d2, &cfg.estimator, c.seed())?
        }
        EstimatorMode::General => estimate_general(&cloud, &cfg.estimator, c.seed())?,
    };
    let path = write_json(&c.out, "estimate.json", &est)?;
    println!(
        "d_hat = {} (certified: {}, exhausted: {}) -> {}",
        est.d_hat,
        est.certified,
        est.exhausted,
        path.display()
    );
    Ok(())
}

fn cmd_calibrate(c: &Common) -> Result<()> {
    let cfg: CalibrateConfig = load_config(&c.config)?;
    let refs: Vec<(usize, SamplerSpec)> =
        cfg.references.iter().map(|e| (e.d_true, e.spec.clone())).collect();
    let est_cfg =
        calibrate_thresholds(&cfg.params, &refs, cfg.n, cfg.trials, cfg.safety, c.seed())?;
    let path = write_json(&c.out, "thresholds.json", &est_cfg)?;
    for (d, l) in &est_cfg.thresholds {
        println!("L_{d} = {l:.6e}");
    }
    println!("calibrated at n = {}, {} trials -> {}", cfg.n, cfg.trials, path.display());
    Ok(())
}

fn cmd_risk_sweep(c: &Common) -> Result<()> {
    let mut cfg: ExperimentConfig = load_config(&c.config)?;
    if let Some(s) = c.seed {
        cfg.master_seed = s;
    }
    let curve = run_risk_sweep(&cfg)?;
    let (csv_path, json_path) = emit_report(&curve, &c.out)?;
    println!("panel risk (worst of: {})", curve.panel.join(", "));
    for r in &curve.rows {
        println!(
            "  n = {:>6}  risk = {:.4}  wilson95 = [{:.4}, {:.4}]  errors = {}/{}",
            r.n, r.risk, r.ci_lo, r.ci_hi, r.errors, r.trials
        );
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn cmd_cdf_exponent(c: &Common) -> Result<()> {
    let cfg: CdfConfig = load_config(&c.config)?;
    let est = check_cdf_exponent(&cfg.spec, cfg.d1, cfg.n_pairs, c.seed())?;
    let path = write_json(&c.out, "cdf_exponent.json", &est)?;
    println!(
        "slope = {:.4}, bootstrap 95% CI = [{:.4}, {:.4}] over {} pairs -> {}",
        est.slope,
        est.ci_lo,
        est.ci_hi,
        est.n_pairs,
        path.display()
    );
    Ok(())
}

fn cmd_lecam_affinity(c: &Common) -> Result<()> {
    let inst: LeCamInstance = load_config(&c.config)?;
    let est = affinity_bruteforce(&inst, c.seed())?;
    let path = write_json(&c.out, "affinity.json", &est)?;
    println!(
        "affinity = {:.6} +- {:.6} (n = {}, {} cells, {} draws, tube {:.3e})",
        est.affinity, est.std_err, est.n, est.cells, est.draws, est.thickening
    );
    println!(
        "claimed floor = {:.6e}; one-sided check (estimate is biased up by \
         thickening and cell averaging): {}",
        est.bound,
        if est.passes { "pass" } else { "FAIL" }
    );
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct HilbertReport {
    dim: usize,
    depth: u32,
    scale: f64,
    pairs: usize,
    max_ratio: f64,
    bound: f64,
    passes: bool,
    worst_pair: (f64, f64),
}

fn cmd_hilbert_check(c: &Common) -> Result<()> {
    let cfg: HilbertConfig = load_config(&c.config)?;
    let curve = SpaceFillingCurve::new(cfg.dim, cfg.depth, cfg.scale)?;
    let mut rng = c.seed().rng();
    let mut max_ratio = 0.0f64;
    let mut worst_pair = (0.0, 0.0);
    let root = 1.0 / cfg.dim as f64;
    for _ in 0..cfg.pairs {
        let s: f64 = rng.gen();
        let t: f64 = rng.gen();
        if s == t {
            continue;
        }
        let a = curve.eval(s)?;
        let b = curve.eval(t)?;
        let dist = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let ratio = dist / (s - t).abs().powf(root);
        if ratio > max_ratio {
            max_ratio = ratio;
            worst_pair = (s, t);
        }
    }
    let report = HilbertReport {
        dim: cfg.dim,
        depth: cfg.depth,
        scale: cfg.scale,
        pairs: cfg.pairs,
        max_ratio,
        bound: 4.0 * cfg.scale * ((cfg.dim + 3) as f64).sqrt(),
        passes: max_ratio <= 4.0 * cfg.scale * ((cfg.dim + 3) as f64).sqrt(),
        worst_pair,
    };
    let path = write_json(&c.out, "hilbert_check.json", &report)?;
    println!(
        "max Holder-(1/{}) ratio over {} pairs: {:.4} (bound {:.4}) -> {}: {}",
        cfg.dim,
        cfg.pairs,
        report.max_ratio,
        report.bound,
        if report.passes { "pass" } else { "FAIL" },
        path.display()
    );
    Ok(())
}

fn cmd_bounds_table(c: &Common) -> Result<()> {
    let cfg: BoundsTableConfig = load_config(&c.config)?;
    if cfg.n_grid.is_empty() {
        return Err(HarnessError::BadConfig("empty n grid".into()).into());
    }
    fs::create_dir_all(&c.out)?;
    let path = c.out.join("bounds_table.csv");
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(&path)?;
    w.write_record(["n", "log_bound_lower", "log_bound_upper"])?;
    for &n in &cfg.n_grid {
        let n64 = n as u64;
        let (lo, hi) = match cfg.mode {
            EstimatorMode::Binary { d1, d2 } => (
                bound_binary_lower_log(n64, d1, d2, &cfg.params, &cfg.constants)?,
                bound_binary_upper_log(n64, d1, d2, &cfg.params, &cfg.constants)?,
            ),
            EstimatorMode::General => (
                bound_lower_general_log(n64, &cfg.params, &cfg.constants)?,
                bound_upper_general_log(n64, &cfg.params, &cfg.constants)?,
            ),
        };
        println!("n = {n:>6}  log lower = {lo:.6}  log upper = {hi:.6}");
        w.write_record([n.to_string(), format!("{lo:.16e}"), format!("{hi:.16e}")])?;
    }
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

// ── exit-code mapping ───────────────────────────────────────────────────

fn classify_sampler(e: &SamplerError) -> u8 {
    match e {
        SamplerError::Zigzag(_) => 4,
        _ => 2,
    }
}

fn classify_estimator(e: &EstimatorError) -> u8 {
    match e {
        EstimatorError::Calibration(_) => 3,
        EstimatorError::InvalidPair { .. } | EstimatorError::MissingThreshold(_) => 2,
        EstimatorError::Sampler(s) => classify_sampler(s),
        EstimatorError::Path(_) => 1,
    }
}

fn classify(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    if let Some(h) = e.downcast_ref::<HarnessError>() {
        return match h {
            HarnessError::BadConfig(_)
            | HarnessError::BadInput(_)
            | HarnessError::Csv(_)
            | HarnessError::Json(_)
            | HarnessError::Cloud(_) => 2,
            HarnessError::Estimator(inner) => classify_estimator(inner),
            HarnessError::Sampler(inner) => classify_sampler(inner),
            HarnessError::Io(_) => 1,
        };
    }
    if let Some(est) = e.downcast_ref::<EstimatorError>() {
        return classify_estimator(est);
    }
    if let Some(s) = e.downcast_ref::<SamplerError>() {
        return classify_sampler(s);
    }
    if let Some(l) = e.downcast_ref::<LeCamError>() {
        return match l {
            LeCamError::BadInstance(_) => 2,
            LeCamError::Zigzag(_) => 4,
        };
    }
    if e.downcast_ref::<ZigzagError>().is_some() {
        return 4;
    }
    if e.downcast_ref::<CurveError>().is_some()
        || e.downcast_ref::<CloudError>().is_some()
        || e.downcast_ref::<BoundError>().is_some()
    {
        return 2;
    }
    1
}

fn run() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Sample(c) => cmd_sample(&c),
        Cmd::Estimate(c) => cmd_estimate(&c),
        Cmd::Calibrate(c) => cmd_calibrate(&c),
        Cmd::RiskSweep(c) => cmd_risk_sweep(&c),
        Cmd::CdfExponent(c) => cmd_cdf_exponent(&c),
        Cmd::LecamAffinity(c) => cmd_lecam_affinity(&c),
        Cmd::HilbertCheck(c) => cmd_hilbert_check(&c),
        Cmd::BoundsTable(c) => cmd_bounds_table(&c),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}
