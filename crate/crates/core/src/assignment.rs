//! Exact square assignment via shortest augmenting paths with potentials
//! (the Jonker-Volgenant refinement of the Hungarian method), O(n^3).

use crate::matrix::Mat;

/// Minimum-cost perfect assignment on a square cost matrix.
///
/// Returns `assign` with `assign[row] = column`.
pub fn min_cost_assignment(cost: &Mat) -> Vec<usize> {
    let n = cost.rows();
    assert_eq!(n, cost.cols(), "assignment requires a square matrix");
    if n == 0 {
        return Vec::new();
    }

    const NONE: usize = usize::MAX;
    // 1-based helpers: row 0 / column 0 are sentinels.
    let mut u = vec![0.0f64; n + 1]; // row potentials
    let mut v = vec![0.0f64; n + 1]; // column potentials
    let mut matched_row = vec![0usize; n + 1]; // column -> row (0 = free)
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = NONE;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Unwind the augmenting path.
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }

    let mut assign = vec![NONE; n];
    for j in 1..=n {
        if matched_row[j] != 0 {
            assign[matched_row[j] - 1] = j - 1;
        }
    }
    debug_assert!(assign.iter().all(|&j| j != NONE));
    assign
}

/// Maximum-total-value assignment; `value[row][col]` is the payoff of
/// pairing them.
pub fn max_value_assignment(value: &Mat) -> Vec<usize> {
    let neg = Mat::from_fn(value.rows(), value.cols(), |i, j| -value[(i, j)]);
    min_cost_assignment(&neg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_min(cost: &Mat) -> f64 {
        fn rec(cost: &Mat, row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
            if row == cost.rows() {
                if acc < *best {
                    *best = acc;
                }
                return;
            }
            for j in 0..cost.cols() {
                if !used[j] {
                    used[j] = true;
                    rec(cost, row + 1, used, acc + cost[(row, j)], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, 0, &mut vec![false; cost.cols()], 0.0, &mut best);
        best
    }

    #[test]
    fn known_three_by_three() {
        let cost = Mat::from_rows(&[
            vec![250.0, 400.0, 350.0],
            vec![400.0, 600.0, 350.0],
            vec![200.0, 400.0, 250.0],
        ])
        .unwrap();
        let a = min_cost_assignment(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
        assert_eq!(total, 950.0);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in 2..=6 {
            for _ in 0..30 {
                let cost = Mat::from_fn(n, n, |_, _| rng.random_range(-10.0..10.0));
                let a = min_cost_assignment(&cost);
                let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
                let best = brute_force_min(&cost);
                assert!((total - best).abs() < 1e-9, "n={n} total={total} best={best}");
                // must be a permutation
                let mut seen = vec![false; n];
                for &j in &a {
                    assert!(!seen[j]);
                    seen[j] = true;
                }
            }
        }
    }
}
