//! Minimal d-power length of an open path visiting every point once.
//!
//! The objective is `sum_{i=1}^{n-1} ||x_{sigma(i+1)} - x_{sigma(i)}||^d`
//! over permutations sigma, with no closing edge. Exact solution by dynamic
//! programming over subsets up to [`EXACT_CUTOFF`] points, nearest-neighbour
//! plus 2-opt above that. The heuristic only ever overestimates the minimum,
//! which is the safe direction for the downstream threshold test.

use crate::core_types::{PointCloud, Seed};
use rand::Rng;
use thiserror::Error;

/// Largest n the subset DP accepts (memory: (1 << n) * n floats).
pub const EXACT_CUTOFF: usize = 13;

/// An open path and its d-power length.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPath {
    /// Visiting order as indices into the cloud; a bijection on 0..n.
    pub order: Vec<usize>,
    /// The power d applied to every edge length.
    pub power: u32,
    /// Sum of d-powered edge lengths along `order`.
    pub length: f64,
    /// True when no permutation attains a strictly smaller length.
    pub exact: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("order has length {got}, cloud has {expected} points")]
    LengthMismatch { got: usize, expected: usize },
    #[error("order is not a permutation (index {0} repeated or out of range)")]
    NotAPermutation(usize),
    #[error("exact solver limited to n <= {cutoff}, got n = {n}; use the heuristic")]
    TooLarge { n: usize, cutoff: usize },
}

fn edge_power(cloud: &PointCloud, i: usize, j: usize, d: u32) -> f64 {
    cloud.dist(i, j).powi(d as i32)
}

/// d-power length of the path visiting the cloud in `order`.
/// Returns 0 for a single point.
pub fn path_power_length(cloud: &PointCloud, order: &[usize], d: u32) -> Result<f64, PathError> {
    assert!(d >= 1, "power d must be >= 1");
    let n = cloud.len();
    if order.len() != n {
        return Err(PathError::LengthMismatch { got: order.len(), expected: n });
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return Err(PathError::NotAPermutation(i));
        }
        seen[i] = true;
    }
    let mut total = 0.0;
    for win in order.windows(2) {
        total += edge_power(cloud, win[0], win[1], d);
    }
    Ok(total)
}

/// Exact minimum by dynamic programming over subsets with an endpoint state.
///
/// `cost[S][j]` is the cheapest d-power length of a path that visits exactly
/// the set S starting at j. Ties in the final answer are broken toward the
/// lexicographically smallest order; the reconstruction relies on the DP
/// minimum being attained bit-exactly by one of its own transition
/// expressions, so equality tests below are intentional.
pub fn min_power_path_exact(cloud: &PointCloud, d: u32) -> Result<PowerPath, PathError> {
    assert!(d >= 1, "power d must be >= 1");
    let n = cloud.len();
    if n > EXACT_CUTOFF {
        return Err(PathError::TooLarge { n, cutoff: EXACT_CUTOFF });
    }
    if n == 1 {
        return Ok(PowerPath { order: vec![0], power: d, length: 0.0, exact: true });
    }

    let w: Vec<f64> = {
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let e = edge_power(cloud, i, j, d);
                w[i * n + j] = e;
                w[j * n + i] = e;
            }
        }
        w
    };

    let full: usize = (1 << n) - 1;
    let mut cost = vec![f64::INFINITY; (full + 1) * n];
    for j in 0..n {
        cost[(1 << j) * n + j] = 0.0;
    }
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        for j in 0..n {
            if mask & (1 << j) == 0 {
                continue;
            }
            let rest = mask ^ (1 << j);
            let mut best = f64::INFINITY;
            for k in 0..n {
                if rest & (1 << k) == 0 {
                    continue;
                }
                let c = w[j * n + k] + cost[rest * n + k];
                if c < best {
                    best = c;
                }
            }
            cost[mask * n + j] = best;
        }
    }

    // Smallest start index attaining the optimum, then greedily extend with
    // the smallest next index whose stored suffix cost matches.
    let mut best = f64::INFINITY;
    let mut first = 0;
    for j in 0..n {
        if cost[full * n + j] < best {
            best = cost[full * n + j];
            first = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    order.push(first);
    let mut mask = full ^ (1 << first);
    let mut cur = first;
    let mut target = best;
    while mask != 0 {
        let mut next = usize::MAX;
        for k in 0..n {
            if mask & (1 << k) == 0 {
                continue;
            }
            if w[cur * n + k] + cost[mask * n + k] == target {
                next = k;
                break;
            }
        }
        debug_assert!(next != usize::MAX, "DP reconstruction lost its target");
        target = cost[mask * n + next]; // exact stored suffix target, not a subtraction
        order.push(next);
        mask ^= 1 << next;
        cur = next;
    }

    let length = path_power_length(cloud, &order, d)?;
    Ok(PowerPath { order, power: d, length, exact: true })
}

/// Nearest-neighbour construction from `start`, ties toward smaller index.
fn nearest_neighbour_order(cloud: &PointCloud, d: u32, start: usize) -> Vec<usize> {
    let n = cloud.len();
    let mut order = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let mut cur = start;
    used[cur] = true;
    order.push(cur);
    for _ in 1..n {
        let mut best = f64::INFINITY;
        let mut pick = usize::MAX;
        for k in 0..n {
            if used[k] {
                continue;
            }
            let e = edge_power(cloud, cur, k, d);
            if e < best {
                best = e;
                pick = k;
            }
        }
        used[pick] = true;
        order.push(pick);
        cur = pick;
    }
    order
}

/// First-improvement 2-opt for the open path: reversing `order[i..=j]` only
/// touches the boundary edges (i-1, i) and (j, j+1). The improvement
/// threshold is relative so float noise cannot cycle.
fn two_opt(cloud: &PointCloud, d: u32, order: &mut [usize], length: &mut f64) {
    let n = order.len();
    'scan: loop {
        let eps = 1e-12 * length.max(1e-300);
        for i in 0..n - 1 {
            for j in (i + 1)..n {
                if i == 0 && j == n - 1 {
                    continue; // full reversal, no edge changes
                }
                let mut delta = 0.0;
                if i > 0 {
                    delta += edge_power(cloud, order[i - 1], order[j], d)
                        - edge_power(cloud, order[i - 1], order[i], d);
                }
                if j < n - 1 {
                    delta += edge_power(cloud, order[i], order[j + 1], d)
                        - edge_power(cloud, order[j], order[j + 1], d);
                }
                if delta < -eps {
                    order[i..=j].reverse();
                    *length += delta;
                    continue 'scan;
                }
            }
        }
        break;
    }
}

/// Heuristic upper bound on the minimum: best of `restarts` distinct
/// nearest-neighbour starts, each polished by 2-opt. Deterministic given the
/// seed. The result is always the length of an actual path, hence an upper
/// bound on the exact optimum.
pub fn min_power_path_with_restarts(
    cloud: &PointCloud,
    d: u32,
    seed: Seed,
    restarts: usize,
) -> PowerPath {
    assert!(d >= 1, "power d must be >= 1");
    let n = cloud.len();
    assert!(n >= 2, "heuristic needs at least two points");
    let restarts = restarts.max(1);

    // Distinct start vertices: all of them when few, otherwise a seeded
    // partial Fisher-Yates draw without replacement.
    let starts: Vec<usize> = if restarts >= n {
        (0..n).collect()
    } else {
        let mut rng = seed.rng();
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..restarts {
            let j = i + rng.gen_range(0..(n - i));
            idx.swap(i, j);
        }
        idx.truncate(restarts);
        idx
    };

    let mut best_order: Vec<usize> = Vec::new();
    let mut best_len = f64::INFINITY;
    for start in starts {
        let mut order = nearest_neighbour_order(cloud, d, start);
        let mut len = path_power_length(cloud, &order, d).expect("own order is a permutation");
        two_opt(cloud, d, &mut order, &mut len);
        // 2-opt tracks the length incrementally; recompute once for the record.
        let len = path_power_length(cloud, &order, d).expect("own order is a permutation");
        if len < best_len {
            best_len = len;
            best_order = order;
        }
    }
    PowerPath { order: best_order, power: d, length: best_len, exact: false }
}

/// Default restart count for the heuristic.
pub fn default_restarts(n: usize) -> usize {
    (n / 10).max(8)
}

/// Heuristic minimal path with the default restart schedule.
pub fn min_power_path_heuristic(cloud: &PointCloud, d: u32, seed: Seed) -> PowerPath {
    min_power_path_with_restarts(cloud, d, seed, default_restarts(cloud.len()))
}

/// Dispatcher: exact solver up to [`EXACT_CUTOFF`], heuristic above.
pub fn min_power_path(cloud: &PointCloud, d: u32, seed: Seed) -> PowerPath {
    if cloud.len() <= EXACT_CUTOFF {
        min_power_path_exact(cloud, d).expect("dispatch guarantees n <= cutoff")
    } else {
        min_power_path_heuristic(cloud, d, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_types::CloudMeta;
    use approx::assert_relative_eq;

    fn cloud(points: Vec<Vec<f64>>) -> PointCloud {
        let hw = points
            .iter()
            .flat_map(|p| p.iter())
            .fold(1.0f64, |acc, &x| acc.max(x.abs()));
        PointCloud::new(points, hw, CloudMeta::unknown()).unwrap()
    }

    #[test]
    fn single_point_is_zero() {
        let c = cloud(vec![vec![0.3, 0.4]]);
        assert_eq!(path_power_length(&c, &[0], 2).unwrap(), 0.0);
        let p = min_power_path(&c, 3, Seed(0));
        assert_eq!(p.length, 0.0);
        assert!(p.exact);
    }

    #[test]
    fn two_points_squared_distance() {
        let c = cloud(vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert_relative_eq!(path_power_length(&c, &[0, 1], 2).unwrap(), 1.0);
        let h = min_power_path_heuristic(&c, 2, Seed(0));
        assert_relative_eq!(h.length, 1.0);
    }

    #[test]
    fn collinear_identity_order() {
        let c = cloud(vec![vec![0.0], vec![1.0], vec![3.0]]);
        assert_relative_eq!(path_power_length(&c, &[0, 1, 2], 1).unwrap(), 3.0);
    }

    #[test]
    fn order_validation() {
        let c = cloud(vec![vec![0.0], vec![1.0]]);
        assert_eq!(
            path_power_length(&c, &[0], 1).unwrap_err(),
            PathError::LengthMismatch { got: 1, expected: 2 }
        );
        assert_eq!(
            path_power_length(&c, &[0, 0], 1).unwrap_err(),
            PathError::NotAPermutation(0)
        );
    }

    #[test]
    fn square_corners_three_sides() {
        let c = cloud(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ]);
        let p = min_power_path_exact(&c, 1).unwrap();
        assert_relative_eq!(p.length, 3.0, max_relative = 1e-15);
        // Lexicographically smallest among the optimal orders.
        assert_eq!(p.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn sorted_line_is_optimal() {
        let c = cloud(vec![vec![-1.0], vec![-0.25], vec![0.1], vec![0.9]]);
        let p = min_power_path_exact(&c, 1).unwrap();
        assert_relative_eq!(p.length, 1.9, max_relative = 1e-12);
        assert_eq!(p.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn appending_far_collinear_point_grows_min_by_gap() {
        let base = cloud(vec![vec![0.0], vec![0.4], vec![1.0]]);
        let grown = cloud(vec![vec![0.0], vec![0.4], vec![1.0], vec![2.5]]);
        let a = min_power_path_exact(&base, 1).unwrap().length;
        let b = min_power_path_exact(&grown, 1).unwrap().length;
        assert_relative_eq!(b - a, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn exact_refuses_large_n() {
        let pts: Vec<Vec<f64>> = (0..14).map(|i| vec![i as f64]).collect();
        let c = cloud(pts);
        assert!(matches!(
            min_power_path_exact(&c, 1),
            Err(PathError::TooLarge { n: 14, cutoff: EXACT_CUTOFF })
        ));
    }

    #[test]
    fn dispatcher_picks_solver_by_size() {
        let mut pts: Vec<Vec<f64>> = (0..13).map(|i| vec![(i as f64) * 0.1]).collect();
        let c13 = cloud(pts.clone());
        assert!(min_power_path(&c13, 1, Seed(1)).exact);
        pts.push(vec![1.4]);
        let c14 = cloud(pts);
        assert!(!min_power_path(&c14, 1, Seed(1)).exact);
    }

    #[test]
    fn heuristic_always_at_least_exact() {
        let mut rng = Seed(99).rng();
        for trial in 0..30 {
            let pts: Vec<Vec<f64>> =
                (0..10).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let c = cloud(pts);
            for d in 1..=3 {
                let ex = min_power_path_exact(&c, d).unwrap();
                let h = min_power_path_heuristic(&c, d, Seed(trial));
                assert!(h.length >= ex.length - 1e-12 * ex.length.abs());
                assert!(h.length <= 2.0 * ex.length + 1e-12, "heuristic too loose");
            }
        }
    }

    #[test]
    fn heuristic_deterministic_given_seed() {
        let mut rng = Seed(5).rng();
        let pts: Vec<Vec<f64>> =
            (0..40).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let c = cloud(pts);
        let a = min_power_path_heuristic(&c, 2, Seed(11));
        let b = min_power_path_heuristic(&c, 2, Seed(11));
        assert_eq!(a, b);
    }

    #[test]
    fn power_scaling_preserves_argmin() {
        let mut rng = Seed(17).rng();
        let pts: Vec<Vec<f64>> =
            (0..8).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let scaled: Vec<Vec<f64>> =
            pts.iter().map(|p| p.iter().map(|x| 3.0 * x).collect()).collect();
        for d in 1..=3u32 {
            let base = cloud(pts.clone());
            let a = min_power_path_exact(&base, d).unwrap();
            let b = min_power_path_exact(&cloud(scaled.clone()), d).unwrap();
            // The argmin set is scale invariant; rounding may pick a
            // different member (e.g. the reversed path), so assert
            // membership by cross-evaluation instead of order equality.
            let b_on_base = path_power_length(&base, &b.order, d).unwrap();
            assert_relative_eq!(b_on_base, a.length, max_relative = 1e-12);
            assert_relative_eq!(b.length, a.length * 3f64.powi(d as i32), max_relative = 1e-12);
        }
    }
}
