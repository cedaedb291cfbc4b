//! Synthetic market generation: feature and preference samplers, the ten
//! ground-truth utility models used by the robustness studies, and the
//! end-to-end non-linear trial.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp, LogNormal, Normal, Pareto};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{
    realized_utilities, utility_matrix, Allocation, Market, UtilityMatrix,
};
use crate::matrix::{dot, Mat};
use crate::mechanism::{random_priority, svd_match};
use crate::welfare::{kendall_tau, welfare_report, WelfareReport, DEFAULT_EPSILON};

/// Preference entries are clamped into this range after sampling.
pub const PREF_RANGE: (f64, f64) = (0.0, 10.0);
/// Pareto tail: shape 2, scale 1, shifted to start at zero, doubled.
pub const PARETO_SHAPE: f64 = 2.0;
pub const PARETO_SCALE_FACTOR: f64 = 2.0;
/// Log-normal underlying parameters.
pub const LOGNORMAL_MU: f64 = 1.3;
pub const LOGNORMAL_SIGMA: f64 = 0.5;
/// Bimodal mixture: equal-weight normals at these modes, unit spread.
pub const BIMODAL_MODES: (f64, f64) = (3.0, 7.0);
pub const BIMODAL_SIGMA: f64 = 1.0;
/// Exponential rate giving mean 5 before clamping.
pub const EXPONENTIAL_RATE: f64 = 0.2;

/// Per-feature gaussian feature generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureGenSpec {
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
}

impl FeatureGenSpec {
    pub fn new(means: Vec<f64>, std_devs: Vec<f64>) -> Result<Self> {
        if means.is_empty() || means.len() != std_devs.len() {
            return Err(Error::DimensionMismatch {
                expected: means.len(),
                got: std_devs.len(),
            });
        }
        if std_devs.iter().any(|s| !(*s > 0.0) || !s.is_finite())
            || means.iter().any(|m| !m.is_finite())
        {
            return Err(Error::InvalidParameter(
                "feature std devs must be positive and finite".into(),
            ));
        }
        Ok(FeatureGenSpec { means, std_devs })
    }

    pub fn features_per_object(&self) -> usize {
        self.means.len()
    }
}

impl Default for FeatureGenSpec {
    /// The five-feature profile used by the 100-agent synthetic market.
    fn default() -> Self {
        FeatureGenSpec {
            means: vec![7.0, 5.5, 6.0, 4.5, 5.0],
            std_devs: vec![2.0, 1.5, 1.0, 0.8, 0.5],
        }
    }
}

/// The seven agent preference distributions. Every draw is clamped into
/// `PREF_RANGE` entry by entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PreferenceDist {
    /// N(5, 2^2), the baseline.
    Normal,
    /// Uniform on the full range.
    Uniform,
    /// Heavy tail: 2 (Pareto(1, 2) - 1).
    Pareto,
    /// Heavy tail: LogNormal(1.3, 0.5).
    LogNormal,
    /// Equal mixture of N(3, 1) and N(7, 1).
    Bimodal,
    /// 10 Beta(2, 5), skewed low.
    Beta25,
    /// Exp(0.2), mean 5 before clamping.
    Exponential,
}

impl PreferenceDist {
    pub const ALL: [PreferenceDist; 7] = [
        PreferenceDist::Normal,
        PreferenceDist::Uniform,
        PreferenceDist::Pareto,
        PreferenceDist::LogNormal,
        PreferenceDist::Bimodal,
        PreferenceDist::Beta25,
        PreferenceDist::Exponential,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PreferenceDist::Normal => "normal",
            PreferenceDist::Uniform => "uniform",
            PreferenceDist::Pareto => "pareto",
            PreferenceDist::LogNormal => "lognormal",
            PreferenceDist::Bimodal => "bimodal",
            PreferenceDist::Beta25 => "beta25",
            PreferenceDist::Exponential => "exponential",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|d| d.name() == name.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown distribution '{name}'")))
    }

    fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            PreferenceDist::Normal => Normal::new(5.0, 2.0).unwrap().sample(rng),
            PreferenceDist::Uniform => rng.random_range(PREF_RANGE.0..PREF_RANGE.1),
            PreferenceDist::Pareto => {
                let p = Pareto::new(1.0, PARETO_SHAPE).unwrap().sample(rng);
                PARETO_SCALE_FACTOR * (p - 1.0)
            }
            PreferenceDist::LogNormal => {
                LogNormal::new(LOGNORMAL_MU, LOGNORMAL_SIGMA).unwrap().sample(rng)
            }
            PreferenceDist::Bimodal => {
                let mode = if rng.random_bool(0.5) {
                    BIMODAL_MODES.0
                } else {
                    BIMODAL_MODES.1
                };
                Normal::new(mode, BIMODAL_SIGMA).unwrap().sample(rng)
            }
            PreferenceDist::Beta25 => 10.0 * Beta::new(2.0, 5.0).unwrap().sample(rng),
            PreferenceDist::Exponential => Exp::new(EXPONENTIAL_RATE).unwrap().sample(rng),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_raw(rng).clamp(PREF_RANGE.0, PREF_RANGE.1)
    }
}

/// Draws a `j x X` feature matrix of independent gaussians (untruncated).
pub fn gen_features<R: Rng + ?Sized>(j: usize, spec: &FeatureGenSpec, rng: &mut R) -> Mat {
    let x = spec.features_per_object();
    let dists: Vec<Normal<f64>> = (0..x)
        .map(|c| Normal::new(spec.means[c], spec.std_devs[c]).expect("validated"))
        .collect();
    Mat::from_fn(j, x, |_, c| dists[c].sample(rng))
}

/// Draws an `i x x` preference matrix of i.i.d. clamped draws.
pub fn gen_preferences<R: Rng + ?Sized>(
    i: usize,
    x: usize,
    dist: PreferenceDist,
    rng: &mut R,
) -> Mat {
    Mat::from_fn(i, x, |_, _| dist.sample(rng))
}

/// The ten ground-truth utility families of the robustness study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UtilityModelKind {
    /// 1. u . f
    Linear,
    /// 2. u . f + s * sum_x (u_x f_x)^2
    QuadraticInteractions,
    /// 3. prod_x (max(u_x f_x, 0) + 0.1)^{u_x / sum u}
    CobbDouglas,
    /// 4. u . f + s * #{x : f_x > median_x(F)}
    ThresholdStep,
    /// 5. u . sqrt(max(f, 0)) elementwise
    Concave,
    /// 6. u . f^2 elementwise
    Convex,
    /// 7. sum_x u_x max(f_x - q25_x(F), 0)
    MaxFeature,
    /// 8. random two-layer tanh network over (u, f, u*f), plus an offset
    Mlp,
    /// 9. sum_x u_x rank(f_x) with ranks within the feature vector
    RankBased,
    /// 10. u . f + s * exp(-|u - f|^2 / (2 * 5^2))
    RbfBonus,
}

/// Cobb-Douglas interior shift.
pub const COBB_DOUGLAS_EPS: f64 = 0.1;
/// RBF similarity bandwidth.
pub const RBF_BANDWIDTH: f64 = 5.0;
/// Hidden width of the random network model.
pub const MLP_HIDDEN: usize = 16;
/// Constant added to the network output so utilities live on a positive scale.
pub const MLP_OFFSET: f64 = 20.0;

impl UtilityModelKind {
    pub const ALL: [UtilityModelKind; 10] = [
        UtilityModelKind::Linear,
        UtilityModelKind::QuadraticInteractions,
        UtilityModelKind::CobbDouglas,
        UtilityModelKind::ThresholdStep,
        UtilityModelKind::Concave,
        UtilityModelKind::Convex,
        UtilityModelKind::MaxFeature,
        UtilityModelKind::Mlp,
        UtilityModelKind::RankBased,
        UtilityModelKind::RbfBonus,
    ];

    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|k| k == self).unwrap() + 1
    }

    pub fn from_index(idx: usize) -> Result<Self> {
        Self::ALL
            .get(idx.wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("model index must be 1..=10, got {idx}")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            UtilityModelKind::Linear => "linear",
            UtilityModelKind::QuadraticInteractions => "quadratic",
            UtilityModelKind::CobbDouglas => "cobb-douglas",
            UtilityModelKind::ThresholdStep => "threshold",
            UtilityModelKind::Concave => "concave",
            UtilityModelKind::Convex => "convex",
            UtilityModelKind::MaxFeature => "max-feature",
            UtilityModelKind::Mlp => "mlp",
            UtilityModelKind::RankBased => "rank-based",
            UtilityModelKind::RbfBonus => "rbf-bonus",
        }
    }

    /// The "maximum non-linearity" strength used by the robustness table.
    /// Models without a strength knob return 0.
    pub fn max_strength(&self) -> f64 {
        match self {
            UtilityModelKind::QuadraticInteractions => 0.1,
            UtilityModelKind::ThresholdStep => 30.0,
            UtilityModelKind::RbfBonus => 200.0,
            _ => 0.0,
        }
    }
}

/// A utility model selection plus its strength knob and the seed for any
/// internal randomness (network weights).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UtilityModelSpec {
    pub kind: UtilityModelKind,
    pub strength: f64,
    pub seed: u64,
}

impl UtilityModelSpec {
    pub fn new(kind: UtilityModelKind, strength: f64, seed: u64) -> Self {
        UtilityModelSpec { kind, strength, seed }
    }

    pub fn at_max_strength(kind: UtilityModelKind, seed: u64) -> Self {
        UtilityModelSpec::new(kind, kind.max_strength(), seed)
    }
}

/// A utility model bound to one market's feature matrix: thresholds and
/// network weights are fixed here so evaluation is a pure function.
#[derive(Debug, Clone)]
pub struct PreparedUtilityModel {
    kind: UtilityModelKind,
    strength: f64,
    /// Per-feature column medians of F (threshold model).
    medians: Vec<f64>,
    /// Per-feature column lower quartiles of F (max-feature model).
    lower_quartiles: Vec<f64>,
    mlp: Option<MlpWeights>,
}

#[derive(Debug, Clone)]
struct MlpWeights {
    w1: Vec<Vec<f64>>, // MLP_HIDDEN rows of length 3X
    b1: Vec<f64>,
    w2: Vec<f64>,
}

fn column_quantile(features: &Mat, col: usize, p: f64) -> f64 {
    let mut v = features.column(col);
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = p * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] + frac * (v[hi] - v[lo])
}

impl PreparedUtilityModel {
    pub fn new(spec: &UtilityModelSpec, features: &Mat) -> Self {
        let x = features.cols();
        let medians = (0..x).map(|c| column_quantile(features, c, 0.5)).collect();
        let lower_quartiles = (0..x).map(|c| column_quantile(features, c, 0.25)).collect();
        let mlp = if spec.kind == UtilityModelKind::Mlp {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let std_normal = Normal::new(0.0, 1.0).unwrap();
            let w1 = (0..MLP_HIDDEN)
                .map(|_| (0..3 * x).map(|_| std_normal.sample(&mut rng)).collect())
                .collect();
            let b1 = (0..MLP_HIDDEN).map(|_| std_normal.sample(&mut rng)).collect();
            let w2 = (0..MLP_HIDDEN).map(|_| std_normal.sample(&mut rng)).collect();
            Some(MlpWeights { w1, b1, w2 })
        } else {
            None
        };
        PreparedUtilityModel {
            kind: spec.kind,
            strength: spec.strength,
            medians,
            lower_quartiles,
            mlp,
        }
    }

    pub fn kind(&self) -> UtilityModelKind {
        self.kind
    }
}

/// Average ranks (1-based) of the entries of `f`, ties averaged.
fn within_vector_ranks(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| f[a].partial_cmp(&f[b]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut k = 0;
    while k < n {
        let mut m = k;
        while m + 1 < n && f[order[m + 1]] == f[order[k]] {
            m += 1;
        }
        let avg = (k + m) as f64 / 2.0 + 1.0;
        for t in k..=m {
            ranks[order[t]] = avg;
        }
        k = m + 1;
    }
    ranks
}

/// Ground-truth utility of agent weights `u` for feature vector `f`.
pub fn true_utility(model: &PreparedUtilityModel, u: &[f64], f: &[f64]) -> f64 {
    match model.kind {
        UtilityModelKind::Linear => dot(u, f),
        UtilityModelKind::QuadraticInteractions => {
            let quad: f64 = u.iter().zip(f).map(|(a, b)| (a * b) * (a * b)).sum();
            dot(u, f) + model.strength * quad
        }
        UtilityModelKind::CobbDouglas => {
            let total: f64 = u.iter().sum();
            let x = u.len() as f64;
            let mut log_u = 0.0;
            for (a, b) in u.iter().zip(f) {
                let w = if total != 0.0 { a / total } else { 1.0 / x };
                let base = (a * b).max(0.0) + COBB_DOUGLAS_EPS;
                log_u += w * base.ln();
            }
            log_u.exp()
        }
        UtilityModelKind::ThresholdStep => {
            let above = f
                .iter()
                .zip(&model.medians)
                .filter(|(v, t)| v > t)
                .count() as f64;
            dot(u, f) + model.strength * above
        }
        UtilityModelKind::Concave => u
            .iter()
            .zip(f)
            .map(|(a, b)| a * b.max(0.0).sqrt())
            .sum(),
        UtilityModelKind::Convex => u.iter().zip(f).map(|(a, b)| a * b * b).sum(),
        UtilityModelKind::MaxFeature => u
            .iter()
            .zip(f)
            .zip(&model.lower_quartiles)
            .map(|((a, b), t)| a * (b - t).max(0.0))
            .sum(),
        UtilityModelKind::Mlp => {
            let weights = model.mlp.as_ref().expect("prepared for the network model");
            let z: Vec<f64> = u
                .iter()
                .chain(f)
                .copied()
                .chain(u.iter().zip(f).map(|(a, b)| a * b))
                .collect();
            let mut out = 0.0;
            for (row, (b, w)) in weights.w1.iter().zip(weights.b1.iter().zip(&weights.w2)) {
                out += w * (dot(row, &z) + b).tanh();
            }
            out + MLP_OFFSET
        }
        UtilityModelKind::RankBased => dot(u, &within_vector_ranks(f)),
        UtilityModelKind::RbfBonus => {
            let d2: f64 = u.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum();
            dot(u, f) + model.strength * (-d2 / (2.0 * RBF_BANDWIDTH * RBF_BANDWIDTH)).exp()
        }
    }
}

/// Ground-truth utility matrix for a whole market under one model.
pub fn true_utility_matrix(model: &PreparedUtilityModel, market: &Market) -> UtilityMatrix {
    let m = Mat::from_fn(market.agents(), market.objects(), |i, j| {
        true_utility(model, market.preferences().row(i), market.features().row(j))
    });
    UtilityMatrix::new(m).expect("model outputs are finite")
}

/// Outcome of one non-linear robustness trial.
#[derive(Debug, Clone)]
pub struct NonlinearTrial {
    pub allocation: Allocation,
    /// Welfare of the proxy allocation measured under the true utilities.
    pub true_report: WelfareReport,
    /// Mean per-agent rank correlation between the linear proxy ranking
    /// and the true ranking; `None` when undefined for every agent.
    pub mean_tau: Option<f64>,
    /// Agents for which the correlation was defined.
    pub tau_defined_agents: usize,
    pub svd_mean_true: f64,
    pub random_mean_true: f64,
    /// Percent utility gain of the mechanism over the random baseline,
    /// both measured under the true utilities.
    pub gain_over_random_pct: f64,
}

/// Runs the mechanism on the linear view of `market`, then evaluates the
/// allocation under the ground-truth `model`, including per-agent rank
/// correlation and the random-priority comparison.
pub fn nonlinear_trial<R: Rng + ?Sized>(
    market: &Market,
    model: &UtilityModelSpec,
    rng: &mut R,
) -> Result<NonlinearTrial> {
    let (allocation, _, _) = svd_match(market)?;
    let prepared = PreparedUtilityModel::new(model, market.features());
    let true_utilities = true_utility_matrix(&prepared, market);
    let proxy_utilities = utility_matrix(market);

    let true_report = welfare_report(&allocation, &true_utilities, DEFAULT_EPSILON)?;

    let mut tau_sum = 0.0;
    let mut tau_count = 0usize;
    for i in 0..market.agents() {
        match kendall_tau(proxy_utilities.agent_row(i), true_utilities.agent_row(i)) {
            Ok(t) => {
                tau_sum += t;
                tau_count += 1;
            }
            Err(Error::DegenerateAllTies) => {}
            Err(e) => return Err(e),
        }
    }

    let random = random_priority(market, rng);
    let svd_mean = mean(&realized_utilities(&allocation, &true_utilities));
    let random_mean = mean(&realized_utilities(&random, &true_utilities));
    let gain = 100.0 * (svd_mean - random_mean) / random_mean;

    Ok(NonlinearTrial {
        allocation,
        true_report,
        mean_tau: (tau_count > 0).then(|| tau_sum / tau_count as f64),
        tau_defined_agents: tau_count,
        svd_mean_true: svd_mean,
        random_mean_true: random_mean,
        gain_over_random_pct: gain,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
