//! Evaluation metrics: Nash social welfare (strict and clipped),
//! individual-rationality accounting, Kolmogorov-Smirnov distance with its
//! concentration bound, Kendall rank correlation, and the noisy-report
//! trial used by the truthfulness experiments.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{disagreement_points, realized_utilities, Allocation, UtilityMatrix};

/// Default floor applied to gains in the clipped welfare metric.
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Welfare evaluation of one allocation against one utility matrix.
///
/// `log_nsw_strict` is the sum of log gains over the disagreement point,
/// or negative infinity as soon as any gain is non-positive. The clipped
/// variant floors each gain at `epsilon` and is always finite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WelfareReport {
    pub gains: Vec<f64>,
    pub log_nsw_strict: f64,
    pub log_nsw_clipped: f64,
    pub ir_violation_count: usize,
    pub ir_violation_rate: f64,
    pub mean_utility: f64,
    pub median_utility: f64,
    pub min_utility: f64,
    pub max_utility: f64,
    pub std_dev: f64,
}

/// Evaluates `allocation` under `utilities` with clipping floor `epsilon`.
pub fn welfare_report(
    allocation: &Allocation,
    utilities: &UtilityMatrix,
    epsilon: f64,
) -> Result<WelfareReport> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if allocation.agents() != utilities.agents() || allocation.objects() != utilities.objects() {
        return Err(Error::DimensionMismatch {
            expected: utilities.agents(),
            got: allocation.agents(),
        });
    }
    let realized = realized_utilities(allocation, utilities);
    let o = disagreement_points(utilities);
    let gains: Vec<f64> = realized.iter().zip(&o).map(|(r, d)| r - d).collect();

    let log_nsw_strict = if gains.iter().all(|g| *g > 0.0) {
        gains.iter().map(|g| g.ln()).sum()
    } else {
        f64::NEG_INFINITY
    };
    let log_nsw_clipped = gains.iter().map(|g| g.max(epsilon).ln()).sum();

    // IR violation is *strict*: a gain of exactly zero is not a violation.
    let ir_violation_count = gains.iter().filter(|g| **g < 0.0).count();
    let n = realized.len();

    let mut sorted = realized.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let mean = realized.iter().sum::<f64>() / n as f64;
    let var = realized.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / n as f64;

    Ok(WelfareReport {
        gains,
        log_nsw_strict,
        log_nsw_clipped,
        ir_violation_count,
        ir_violation_rate: ir_violation_count as f64 / n as f64,
        mean_utility: mean,
        median_utility: median,
        min_utility: sorted[0],
        max_utility: sorted[n - 1],
        std_dev: var.sqrt(),
    })
}

/// Exact two-sample Kolmogorov-Smirnov distance: the supremum of the
/// difference of the two empirical step CDFs, evaluated over the pooled
/// sample points.
pub fn ks_distance(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let mut pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    pooled.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let count_le = |s: &[f64], t: f64| s.partition_point(|x| *x <= t) as f64;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut sup: f64 = 0.0;
    for &t in &pooled {
        let d = (count_le(&a, t) / na - count_le(&b, t) / nb).abs();
        sup = sup.max(d);
    }
    Ok(sup)
}

/// Closed-form concentration radius `sqrt(log(2/delta) / (2 X))`; the
/// empirical CDF of `X` i.i.d. draws deviates from the true CDF by more
/// than this with probability at most `delta`.
pub fn dkwm_lambda(x: usize, delta: f64) -> Result<f64> {
    if x == 0 {
        return Err(Error::InvalidParameter("X must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&delta) || delta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delta must be in (0, 1), got {delta}"
        )));
    }
    Ok(((2.0 / delta).ln() / (2.0 * x as f64)).sqrt())
}

/// Tie-adjusted Kendall rank correlation (the tau-b variant).
///
/// Errors with [`Error::DegenerateAllTies`] when either vector is
/// constant, where the coefficient is undefined.
pub fn kendall_tau(scores_a: &[f64], scores_b: &[f64]) -> Result<f64> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::DimensionMismatch {
            expected: scores_a.len(),
            got: scores_b.len(),
        });
    }
    let n = scores_a.len();
    if n < 2 {
        return Err(Error::EmptySample);
    }
    let mut concordant = 0u64;
    let mut discordant = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            let da = scores_a[i] - scores_a[j];
            let db = scores_b[i] - scores_b[j];
            if da == 0.0 || db == 0.0 {
                continue;
            } else if (da > 0.0) == (db > 0.0) {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    let den_a = n0 - count_tied_pairs(scores_a);
    let den_b = n0 - count_tied_pairs(scores_b);
    if den_a <= 0.0 || den_b <= 0.0 {
        return Err(Error::DegenerateAllTies);
    }
    let tau = (concordant as f64 - discordant as f64) / (den_a * den_b).sqrt();
    Ok(tau.clamp(-1.0, 1.0))
}

fn count_tied_pairs(scores: &[f64]) -> f64 {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tied = 0.0;
    let mut run = 1.0;
    for k in 1..sorted.len() {
        if sorted[k] == sorted[k - 1] {
            run += 1.0;
        } else {
            tied += run * (run - 1.0) / 2.0;
            run = 1.0;
        }
    }
    tied + run * (run - 1.0) / 2.0
}

/// One noisy-reporting trial: perturbs the true weight vector with
/// zero-mean gaussian noise and measures the KS distance between the
/// reported and true empirical weight distributions.
pub fn truthfulness_trial<R: Rng + ?Sized>(
    u: &[f64],
    noise_sigma: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    if u.is_empty() {
        return Err(Error::EmptySample);
    }
    if noise_sigma < 0.0 || !noise_sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be finite and >= 0, got {noise_sigma}"
        )));
    }
    let reported: Vec<f64> = if noise_sigma == 0.0 {
        u.to_vec()
    } else {
        let noise = Normal::new(0.0, noise_sigma).expect("sigma checked above");
        u.iter().map(|x| x + noise.sample(rng)).collect()
    };
    let ks = ks_distance(&reported, u)?;
    Ok((reported, ks))
}
