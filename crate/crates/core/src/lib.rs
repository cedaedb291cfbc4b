//! Matching-market engine built around spectral dimensionality reduction.
//!
//! Agents report weights over object features instead of ranking whole
//! objects; the mechanism projects both sides onto the principal direction
//! of the object feature matrix and matches in sorted order, respecting
//! capacities. The crate also carries the evaluation metrics (Nash social
//! welfare, individual-rationality accounting, distributional-truthfulness
//! distances, rank correlation), exhaustive and bound-based oracles, the
//! pre-deployment spectral diagnostics with an exact rank-2 fallback, and
//! a synthetic-market lab for the robustness studies.

pub mod assignment;
pub mod error;
pub mod market;
pub mod matrix;
pub mod mechanism;
pub mod oracle;
pub mod pedagogical;
pub mod spectral;
pub mod synth;
pub mod welfare;

pub use error::{Error, Result};
pub use market::{
    disagreement_points, realized_utilities, utility_matrix, Allocation, FeatureMatrix, Market,
    PreferenceMatrix, UtilityMatrix,
};
pub use matrix::Mat;
pub use mechanism::{
    ir_repair, match_from_projections, random_priority, rank2_surrogate_total,
    serial_dictatorship, svd_match, svd_match_2d, MatchTrace,
};
pub use oracle::{greedy_log_nsw_upper_bound, optimal_nsw_bruteforce, OracleResult};
pub use spectral::{
    diagnose, effective_rank, explained_variance_ratio, principal_direction, project, svd, Band,
    DiagnosticReport, SpectralSummary,
};
pub use synth::{
    gen_features, gen_preferences, nonlinear_trial, true_utility, true_utility_matrix,
    FeatureGenSpec, NonlinearTrial, PreferenceDist, PreparedUtilityModel, UtilityModelKind,
    UtilityModelSpec,
};
pub use welfare::{
    dkwm_lambda, kendall_tau, ks_distance, truthfulness_trial, welfare_report, WelfareReport,
    DEFAULT_EPSILON,
};
