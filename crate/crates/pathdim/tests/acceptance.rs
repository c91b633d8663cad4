//! End-to-end checks of the estimator, the synthetic constructions, and the
//! analytic bounds at desk scale. Each test prints exactly one verdict line
//! (run with `--nocapture` to see the passing ones) and pins its tolerance
//! next to the assertion it guards.

use pathdim::bounds::{
    bound_binary_lower, bound_binary_lower_log, bound_binary_upper, bound_binary_upper_log,
    check_cosh_inequality, BoundConstants,
};
use pathdim::core_types::{PointCloud, RegularityParams, Seed};
use pathdim::estimator::{calibrate_thresholds, estimate_binary};
use pathdim::harness::{
    check_cdf_exponent, run_risk_sweep, EstimatorMode, ExperimentConfig, PanelEntry,
    ThresholdSource,
};
use pathdim::lecam::{affinity_bruteforce, affinity_identical, LeCamInstance};
use pathdim::manifolds::{
    discretize, min_osculating_radius, random_offsets, sample, zigzag_build, SamplerKind,
    SamplerSpec, ZigzagParams,
};
use pathdim::pathlen::{min_power_path_exact, path_power_length};
use pathdim::spacefill::SpaceFillingCurve;
use rand::Rng;
use rayon::prelude::*;

fn report(id: usize, label: &str, pass: bool, detail: &str) {
    let verdict = if pass { "pass" } else { "FAIL" };
    println!("acceptance {id} [{verdict}] {label}: {detail}");
    assert!(pass, "acceptance {id} {label}: {detail}");
}

fn cube_spec(d: usize, m: usize) -> SamplerSpec {
    SamplerSpec {
        kind: SamplerKind::UniformCube { d },
        params: RegularityParams::with_defaults(0.25, 0.25, 1.0, m),
    }
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn binary_estimator_zero_errors_after_calibration() {
    let segment = cube_spec(1, 2);
    let cfg = calibrate_thresholds(
        &segment.params,
        &[(1, segment.clone())],
        100, // the largest n exercised below
        40,
        1.5,
        Seed(1001),
    )
    .unwrap();
    assert!(cfg.threshold(1).is_some());

    let master = Seed(2001);
    let per_n = 500usize;
    let mut total_errors = 0usize;
    for (n_idx, &n) in [10usize, 30, 100].iter().enumerate() {
        let errors: usize = (0..per_n)
            .into_par_iter()
            .map(|t| {
                let ts = master.derive((n_idx * per_n + t) as u64);
                let cloud = sample(&segment, n, ts.derive(0)).unwrap();
                let est = estimate_binary(&cloud, 1, 2, &cfg, ts.derive(1)).unwrap();
                usize::from(est.d_hat != 1)
            })
            .sum();
        total_errors += errors;
    }
    report(
        1,
        "calibrated binary estimator on in-class data",
        total_errors == 0,
        &format!("{total_errors} errors in {} runs (n in {{10, 30, 100}})", 3 * per_n),
    );
}

#[test]
fn panel_risk_decays_with_sample_size() {
    let entry = |d: usize| PanelEntry { d_true: d, spec: cube_spec(d, 2) };
    let cfg = ExperimentConfig {
        experiment: "risk-decay".into(),
        panel: vec![entry(1), entry(2)],
        n_grid: vec![5, 10, 20, 40],
        trials: 500,
        mode: EstimatorMode::Binary { d1: 1, d2: 2 },
        thresholds: ThresholdSource::Calibrate { references: vec![entry(1)], trials: 40, safety: 1.5 },
        master_seed: 424242,
    };
    let curve = run_risk_sweep(&cfg).unwrap();
    let risks: Vec<f64> = curve.rows.iter().map(|r| r.risk).collect();

    let monotone = risks.windows(2).all(|w| w[1] <= w[0]);
    let tail_ok = *risks.last().unwrap() <= 0.01;

    // Log-risk against n log n over the rows where the log exists.
    let pts: Vec<(f64, f64)> = curve
        .rows
        .iter()
        .filter(|r| r.risk > 0.0)
        .map(|r| {
            let n = r.n as f64;
            (n * n.ln(), r.risk.ln())
        })
        .collect();
    let slope_ok = if pts.len() < 2 {
        true
    } else {
        let k = pts.len() as f64;
        let xm = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let ym = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
        sxy / sxx < 0.0
    };

    report(
        2,
        "panel risk over n",
        monotone && tail_ok && slope_ok,
        &format!(
            "risks {risks:?} (nonincreasing {monotone}, final <= 0.01 {tail_ok}, log-slope negative {slope_ok})"
        ),
    );
}

#[test]
fn exact_path_matches_brute_force_enumeration() {
    // Plain depth-first enumeration of every open path, no pruning, with its
    // own distance computation.
    fn oracle(cloud: &PointCloud, d: u32) -> f64 {
        let n = cloud.len();
        let mut w = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..n {
                w[i][j] = l2(cloud.point(i), cloud.point(j)).powi(d as i32);
            }
        }
        fn go(w: &[Vec<f64>], used: &mut [bool], last: usize, left: usize, acc: f64, best: &mut f64) {
            if left == 0 {
                if acc < *best {
                    *best = acc;
                }
                return;
            }
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    go(w, used, j, left - 1, acc + w[last][j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        let mut used = vec![false; n];
        for s in 0..n {
            used[s] = true;
            go(&w, &mut used, s, n - 1, 0.0, &mut best);
            used[s] = false;
        }
        best
    }

    let spec = cube_spec(3, 3);
    let cases: Vec<(usize, u32, usize)> = (5..=9usize)
        .flat_map(|n| [1u32, 2, 3].into_iter().flat_map(move |d| (0..50).map(move |i| (n, d, i))))
        .collect();
    let worst = cases
        .par_iter()
        .map(|&(n, d, i)| {
            let seed = Seed(3001).derive(((n * 4 + d as usize) * 64 + i) as u64);
            let cloud = sample(&spec, n, seed).unwrap();
            let got = min_power_path_exact(&cloud, d).unwrap();
            assert!(got.exact);
            let replay = path_power_length(&cloud, &got.order, d).unwrap();
            let want = oracle(&cloud, d);
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
            rel(got.length, want).max(rel(replay, want))
        })
        .reduce(|| 0.0, f64::max);
    report(
        3,
        "exact solver vs full enumeration",
        worst <= 1e-12,
        &format!("worst relative gap {worst:.3e} over {} instances", cases.len()),
    );
}

#[test]
fn spacefill_holder_bound_holds_on_random_pairs() {
    let curve = SpaceFillingCurve::new(2, 8, 1.0).unwrap();
    let bound = 4.0 * 5f64.sqrt();
    let mut rng = Seed(4001).rng();
    let mut max_ratio = 0.0f64;
    let mut violations = 0usize;
    let mut pairs = 0usize;
    while pairs < 100_000 {
        let s: f64 = rng.gen_range(0.0..1.0);
        let t: f64 = rng.gen_range(0.0..1.0);
        if (s - t).abs() < 1e-12 {
            continue;
        }
        pairs += 1;
        let ratio = l2(&curve.eval(s).unwrap(), &curve.eval(t).unwrap()) / (s - t).abs().sqrt();
        max_ratio = max_ratio.max(ratio);
        violations += usize::from(ratio > bound);
    }
    report(
        4,
        "planar curve Hölder-1/2 constant",
        violations == 0,
        &format!("max ratio {max_ratio:.4} vs bound {bound:.4} on {pairs} pairs"),
    );
}

#[test]
fn zigzag_meets_declared_regularity() {
    let mut rng = Seed(5001).rng();
    let mut worst_junction = 0.0f64;
    let mut worst_radius_margin = f64::INFINITY;
    let mut worst_membership = 0.0f64;
    let mut worst_axis = 0.0f64;
    for case in 0..100 {
        let tau = if case % 2 == 0 { 0.25 } else { 0.1 };
        let d2 = if case % 3 == 0 { 3 } else { 2 };
        let n_blocks = rng.gen_range(1..=6);
        let params = ZigzagParams::new(1, d2, n_blocks, 1.0, tau);
        params.validate().unwrap();
        let offsets = random_offsets(&params, &mut rng);
        let m = zigzag_build(&params, &offsets).unwrap();

        for w in m.pieces.windows(2) {
            worst_junction = worst_junction
                .max(l2(&w[0].end(), &w[1].start()))
                .max(l2(&w[0].end_tangent(), &w[1].start_tangent()));
        }

        let pts = discretize(&m.pieces, tau / 200.0);
        worst_radius_margin = worst_radius_margin.min(min_osculating_radius(&pts) / tau);

        for (i, b) in m.layout.blocks.iter().enumerate() {
            let p = b.curve_point(b.block_len / 2.0, &m.offsets[i]);
            worst_membership = worst_membership.max(m.distance_to(&p));
        }
        worst_axis = worst_axis.max(params.axis_identity_residual());
    }
    let pass = worst_junction <= 1e-9
        && worst_radius_margin >= 1.0 - 1e-6
        && worst_membership <= 1e-9
        && worst_axis <= 1e-12;
    report(
        5,
        "zigzag regularity over 100 random cases",
        pass,
        &format!(
            "junction residual {worst_junction:.2e}, radius/turn-radius {worst_radius_margin:.9}, \
             block midpoint distance {worst_membership:.2e}, axis residual {worst_axis:.2e}"
        ),
    );
}

#[test]
fn cdf_exponent_recovers_analytic_slopes() {
    let cases = [
        (cube_spec(2, 2), 1usize, 2.0f64), // square, plain distances
        (cube_spec(1, 2), 1, 1.0),         // segment, plain distances
        (cube_spec(2, 2), 2, 1.0),         // square, squared distances
    ];
    let mut detail = String::new();
    let mut pass = true;
    for (i, (spec, d1, want)) in cases.iter().enumerate() {
        let est = check_cdf_exponent(spec, *d1, 100_000, Seed(6001).derive(i as u64)).unwrap();
        let ok = (est.slope - want).abs() <= 0.2;
        pass &= ok;
        detail.push_str(&format!("d={} power {} slope {:.3} (want {want}); ", spec.intrinsic_dim(), d1, est.slope));
    }
    report(6, "pair-distance cdf exponents", pass, detail.trim_end_matches("; "));
}

#[test]
fn mixture_affinity_floor_and_self_consistency() {
    let inst = LeCamInstance::new(ZigzagParams::new(1, 2, 1, 1.0, 0.25), 1).unwrap();
    let est = affinity_bruteforce(&inst, Seed(7001)).unwrap();
    let (self_aff, self_se) = affinity_identical(&inst, Seed(7002)).unwrap();
    let self_ok = (self_aff - 1.0).abs() <= (2.0 * self_se).max(1e-12);
    report(
        7,
        "thickened mixture vs uniform affinity",
        est.passes && est.affinity <= 1.0 && self_ok,
        &format!(
            "affinity {:.4e} >= floor {:.4e} - 3·{:.1e}; self affinity {self_aff:.12}",
            est.affinity, est.bound, est.std_err
        ),
    );
}

#[test]
fn cosh_interpolation_inequality_exhaustive_scan() {
    let mut rng = Seed(8001).rng();
    let mut violations = 0usize;
    let mut min_slack = f64::INFINITY;
    let mut done = 0usize;
    while done < 1_000_000 {
        let u: f64 = rng.gen_range(0.0..20.0);
        let v: f64 = rng.gen_range(0.0..20.0);
        if u == v {
            continue;
        }
        let (a, b) = (u.min(v), u.max(v));
        let lambda: f64 = rng.gen_range(0.0..=1.0);
        let (ok, slack) = check_cosh_inequality(a, b, lambda).unwrap();
        violations += usize::from(!ok);
        min_slack = min_slack.min(slack);
        done += 1;
    }
    report(
        8,
        "interpolated cosh inequality",
        violations == 0,
        &format!("{violations} violations in {done} triples, min slack {min_slack:.3e}"),
    );
}

#[test]
fn binary_bounds_ordered_and_finite() {
    let params = RegularityParams::with_defaults(1.0, 1.0, 1.0, 2);
    let c = BoundConstants::default();
    let mut ordered = true;
    for n in 2u64..50 {
        let lo = bound_binary_lower(n, 1, 2, &params, &c).unwrap();
        let up = bound_binary_upper(n, 1, 2, &params, &c).unwrap();
        ordered &= lo <= up && lo >= 0.0 && up.is_finite();
    }
    let lo_log = bound_binary_lower_log(10_000, 1, 2, &params, &c).unwrap();
    let up_log = bound_binary_upper_log(10_000, 1, 2, &params, &c).unwrap();
    let logs_finite = lo_log.is_finite() && up_log.is_finite();
    report(
        9,
        "binary risk bounds",
        ordered && logs_finite,
        &format!("lower <= upper on n in 2..50; log bounds at n = 10^4: {lo_log:.2} / {up_log:.2}"),
    );
}
