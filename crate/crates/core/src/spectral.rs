//! Singular value decomposition and the spectral deployment diagnostics.
//!
//! The decomposition is a one-sided Jacobi SVD over the columns of the
//! feature matrix: cyclic sweeps of plane rotations until every Gram
//! off-diagonal is below `JACOBI_TOL` relative to the column norms. All
//! singular values are produced, which the diagnostics need anyway.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, Mat};

/// Relative off-diagonal tolerance for Jacobi convergence.
pub const JACOBI_TOL: f64 = 1e-12;
/// Sweep budget before the decomposition reports failure.
pub const JACOBI_MAX_SWEEPS: usize = 60;
/// Relative gap under which the leading direction is flagged ill-determined.
pub const TIE_GAP: f64 = 1e-9;

/// Full SVD of a `J x X` matrix: `F = left . diag(sigma) . right^T`.
///
/// Singular values are sorted descending. Columns of `right_vectors` are
/// the right singular vectors; columns of `left_vectors` corresponding to
/// zero singular values are zero.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    singular_values: Vec<f64>,
    right_vectors: Mat,
    left_vectors: Mat,
}

impl SpectralSummary {
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// X-by-X orthonormal matrix; column `l` is the l-th right singular vector.
    pub fn right_vectors(&self) -> &Mat {
        &self.right_vectors
    }

    /// J-by-X matrix; column `l` is the l-th left singular vector.
    pub fn left_vectors(&self) -> &Mat {
        &self.left_vectors
    }

    /// The l-th right singular vector, without sign normalization.
    pub fn right_vector(&self, l: usize) -> Vec<f64> {
        self.right_vectors.column(l)
    }

    /// True when the two leading singular values are too close for the
    /// principal direction to be well determined.
    pub fn tie_warning(&self) -> bool {
        match self.singular_values.as_slice() {
            [s1, s2, ..] => s1 - s2 < TIE_GAP * s1,
            _ => false,
        }
    }

    /// Reconstructs `left . diag(sigma) . right^T`.
    pub fn reconstruct(&self) -> Mat {
        let j = self.left_vectors.rows();
        let x = self.right_vectors.rows();
        Mat::from_fn(j, x, |r, c| {
            (0..x)
                .map(|l| self.left_vectors[(r, l)] * self.singular_values[l] * self.right_vectors[(c, l)])
                .sum()
        })
    }
}

/// One-sided Jacobi SVD of `features`.
pub fn svd(features: &Mat) -> Result<SpectralSummary> {
    let j = features.rows();
    let x = features.cols();
    if j == 0 || x == 0 {
        return Err(Error::EmptyMarket);
    }
    if !features.is_finite() {
        return Err(Error::NonFinite);
    }

    // Working copy of the columns of F; rotations orthogonalize them.
    let mut a: Vec<Vec<f64>> = (0..x).map(|c| features.column(c)).collect();
    // Accumulated rotations; converges to V with columns v_l.
    let mut v: Vec<Vec<f64>> = (0..x)
        .map(|c| (0..x).map(|r| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..x {
            for q in (p + 1)..x {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rutishauser rotation zeroing the (p, q) Gram entry.
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..j {
                    let ap = a[p][r];
                    let aq = a[q][r];
                    a[p][r] = c * ap - s * aq;
                    a[q][r] = s * ap + c * aq;
                }
                for r in 0..x {
                    let vp = v[p][r];
                    let vq = v[q][r];
                    v[p][r] = c * vp - s * vq;
                    v[q][r] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..x).collect();
    let norms: Vec<f64> = a.iter().map(|col| dot(col, col).sqrt()).collect();
    order.sort_by(|&p, &q| norms[q].partial_cmp(&norms[p]).unwrap().then(p.cmp(&q)));

    let mut singular_values = Vec::with_capacity(x);
    let mut right = Mat::zeros(x, x);
    let mut left = Mat::zeros(j, x);
    for (l, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        singular_values.push(sigma);
        for r in 0..x {
            right[(r, l)] = v[src][r];
        }
        if sigma > 0.0 {
            for r in 0..j {
                left[(r, l)] = a[src][r] / sigma;
            }
        }
    }

    Ok(SpectralSummary {
        singular_values,
        right_vectors: right,
        left_vectors: left,
    })
}

/// Applies the deterministic sign convention: the entry of largest
/// absolute value is made positive, ties broken by lowest index.
pub fn sign_normalize(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// First right singular vector under the sign convention.
pub fn principal_direction(summary: &SpectralSummary) -> Result<Vec<f64>> {
    if summary.singular_values[0] == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let mut v1 = summary.right_vector(0);
    sign_normalize(&mut v1);
    Ok(v1)
}

/// Projects every row of `rows` onto `direction`.
pub fn project(rows: &Mat, direction: &[f64]) -> Result<Vec<f64>> {
    if rows.cols() != direction.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.cols(),
            got: direction.len(),
        });
    }
    Ok(rows.row_iter().map(|r| dot(r, direction)).collect())
}

/// Cumulative explained variance of the leading `k` singular values.
pub fn explained_variance_ratio(singular_values: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > singular_values.len() {
        return Err(Error::InvalidParameter(format!(
            "k must be in 1..={}, got {k}",
            singular_values.len()
        )));
    }
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(Error::AllZeroSpectrum);
    }
    let head: f64 = singular_values[..k].iter().map(|s| s * s).sum();
    Ok(head / total)
}

/// Effective rank `(sum sigma)^2 / sum sigma^2`, in `[1, X]`.
pub fn effective_rank(singular_values: &[f64]) -> Result<f64> {
    let total_sq: f64 = singular_values.iter().map(|s| s * s).sum();
    if total_sq == 0.0 {
        return Err(Error::AllZeroSpectrum);
    }
    let total: f64 = singular_values.iter().sum();
    Ok(total * total / total_sq)
}

/// Deployment recommendation derived from the explained variance ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    /// `rho1 >= 0.5`: the rank-1 welfare guarantee is operative.
    Proceed,
    /// `0.3 <= rho1 < 0.5`: run the mechanism alongside the 2-D variant.
    Compare2D,
    /// `rho1 < 0.3`: the rank-1 reduction is unreliable here.
    UseAlternative,
}

impl Band {
    pub fn from_rho1(rho1: f64) -> Band {
        if rho1 >= 0.5 {
            Band::Proceed
        } else if rho1 >= 0.3 {
            Band::Compare2D
        } else {
            Band::UseAlternative
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Band::Proceed => "Proceed",
            Band::Compare2D => "Compare2D",
            Band::UseAlternative => "UseAlternative",
        }
    }
}

/// Pre-deployment diagnostic report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub rho1: f64,
    pub effective_rank: f64,
    pub band: Band,
    pub approx_ratio_note: String,
    pub tie_warning: bool,
}

fn band_note(band: Band) -> String {
    match band {
        Band::Proceed => {
            "approximation ratio >= 50% guaranteed, typically >95% observed; proceed".into()
        }
        Band::Compare2D => {
            "approximation ratio 40-50% worst case; run the 2-D variant and compare".into()
        }
        Band::UseAlternative => {
            "approximation ratio below 40%; use a pseudo-market or direct welfare solver".into()
        }
    }
}

/// Computes the spectral diagnostics for a feature matrix.
pub fn diagnose(features: &Mat) -> Result<DiagnosticReport> {
    let summary = svd(features)?;
    diagnose_from_summary(&summary)
}

/// Diagnostics from an already-computed decomposition.
pub fn diagnose_from_summary(summary: &SpectralSummary) -> Result<DiagnosticReport> {
    let sv = summary.singular_values();
    let rho1 = explained_variance_ratio(sv, 1)?;
    let reff = effective_rank(sv)?;
    let band = Band::from_rho1(rho1);
    Ok(DiagnosticReport {
        rho1,
        effective_rank: reff,
        band,
        approx_ratio_note: band_note(band),
        tie_warning: summary.tie_warning(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pedagogical::{features as pedagogical_features, market as pedagogical_market};
    use approx::assert_abs_diff_eq;

    #[test]
    fn pedagogical_singular_values() {
        let s = svd(&pedagogical_features()).unwrap();
        let sv = s.singular_values();
        assert_abs_diff_eq!(sv[0], 19.017, epsilon = 5e-3);
        assert_abs_diff_eq!(sv[1], 7.003, epsilon = 5e-3);
        assert_abs_diff_eq!(sv[2], 0.250, epsilon = 5e-3);
    }

    #[test]
    fn rank_one_input_has_single_nonzero_value() {
        let v = [0.6, 0.8];
        let f = Mat::from_fn(4, 2, |i, j| (i as f64 + 1.0) * v[j]);
        let s = svd(&f).unwrap();
        assert!(s.singular_values()[1].abs() < 1e-9);
    }

    #[test]
    fn singular_values_match_gram_eigenvalue_oracle() {
        // Independent oracle: power iteration with deflation on F^T F.
        // Eigenvalues of the Gram matrix are the squared singular values.
        let f = Mat::from_rows(&[
            vec![0.91, -0.35, 1.62, 0.07],
            vec![-1.22, 0.48, 0.10, 0.95],
            vec![0.33, 1.71, -0.84, 0.52],
            vec![1.05, 0.26, 0.44, -1.38],
            vec![-0.57, 0.89, 1.23, 0.31],
            vec![0.12, -1.04, 0.66, 0.78],
        ])
        .unwrap();
        let x = f.cols();
        let mut gram = vec![vec![0.0; x]; x];
        for p in 0..x {
            for q in 0..x {
                gram[p][q] = dot(&f.column(p), &f.column(q));
            }
        }
        let mut eigs = Vec::new();
        let mut g = gram.clone();
        for k in 0..x {
            // power iteration
            let mut v: Vec<f64> = (0..x).map(|i| 1.0 + (i + k) as f64 * 0.1).collect();
            let mut lambda = 0.0;
            for _ in 0..10_000 {
                let mut w = vec![0.0; x];
                for r in 0..x {
                    for c in 0..x {
                        w[r] += g[r][c] * v[c];
                    }
                }
                lambda = dot(&w, &v);
                let n = dot(&w, &w).sqrt();
                if n == 0.0 {
                    break;
                }
                for r in 0..x {
                    v[r] = w[r] / n;
                }
            }
            eigs.push(lambda.max(0.0));
            // deflate
            for r in 0..x {
                for c in 0..x {
                    g[r][c] -= lambda * v[r] * v[c];
                }
            }
        }
        eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());

        let s = svd(&f).unwrap();
        for (sv, eig) in s.singular_values().iter().zip(&eigs) {
            assert_abs_diff_eq!(sv * sv, *eig, epsilon = 1e-6 * eig.max(1.0));
        }
    }

    #[test]
    fn pedagogical_principal_direction() {
        let s = svd(&pedagogical_features()).unwrap();
        let v1 = principal_direction(&s).unwrap();
        assert_abs_diff_eq!(v1[0], 0.4751, epsilon = 5e-4);
        assert_abs_diff_eq!(v1[1], 0.4668, epsilon = 5e-4);
        assert_abs_diff_eq!(v1[2], 0.7459, epsilon = 5e-4);
    }

    #[test]
    fn single_nonzero_column_gives_positive_basis_vector() {
        let f = Mat::from_fn(3, 4, |i, j| if j == 2 { i as f64 + 1.0 } else { 0.0 });
        let s = svd(&f).unwrap();
        let v1 = principal_direction(&s).unwrap();
        assert_abs_diff_eq!(v1[2], 1.0, epsilon = 1e-12);
        for x in [v1[0], v1[1], v1[3]] {
            assert_abs_diff_eq!(x, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn principal_direction_satisfies_definitional_identity() {
        let f = Mat::from_rows(&[
            vec![2.0, 0.5, -1.0],
            vec![1.5, 2.5, 0.0],
            vec![-0.5, 1.0, 3.0],
            vec![2.2, -0.3, 1.1],
        ])
        .unwrap();
        let s = svd(&f).unwrap();
        let v1 = principal_direction(&s).unwrap();
        let norm = dot(&v1, &v1).sqrt();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        let fv = project(&f, &v1).unwrap();
        assert_abs_diff_eq!(dot(&fv, &fv).sqrt(), s.singular_values()[0], epsilon = 1e-8);
    }

    #[test]
    fn degenerate_spectrum_is_an_error() {
        let f = Mat::zeros(3, 2);
        let s = svd(&f).unwrap();
        assert_eq!(principal_direction(&s).unwrap_err(), Error::DegenerateSpectrum);
    }

    #[test]
    fn pedagogical_projections_match_up_to_global_sign() {
        let m = pedagogical_market();
        let s = svd(m.features()).unwrap();
        let v1 = principal_direction(&s).unwrap();
        let fj = project(m.features(), &v1).unwrap();
        // Under the positive sign convention the projections are the
        // negatives of the originally reported orientation.
        assert_abs_diff_eq!(fj[0], 10.706, epsilon = 5e-3);
        assert_abs_diff_eq!(fj[1], 10.275, epsilon = 5e-3);
        assert_abs_diff_eq!(fj[2], 11.894, epsilon = 5e-3);
        let flipped: Vec<f64> = v1.iter().map(|x| -x).collect();
        let fj_neg = project(m.features(), &flipped).unwrap();
        assert_abs_diff_eq!(fj_neg[0], -10.706, epsilon = 5e-3);
    }

    #[test]
    fn projection_on_basis_vector_reads_column() {
        let f = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let p = project(&f, &[1.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, 3.0]);
    }

    #[test]
    fn project_rejects_dimension_mismatch() {
        let f = Mat::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            project(&f, &[1.0]).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn explained_variance_pedagogical() {
        let s = svd(&pedagogical_features()).unwrap();
        let rho1 = explained_variance_ratio(s.singular_values(), 1).unwrap();
        assert_abs_diff_eq!(rho1, 0.880, epsilon = 1e-3);
    }

    #[test]
    fn explained_variance_full_is_one() {
        assert_abs_diff_eq!(
            explained_variance_ratio(&[3.0, 2.0, 1.0], 3).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn explained_variance_from_reported_medium_scale_values() {
        // Direct arithmetic on the published singular-value list; the
        // originally reported 48.8% is inconsistent with this list.
        let sv = [38.2, 25.1, 18.4, 12.7, 7.9];
        assert_abs_diff_eq!(
            explained_variance_ratio(&sv, 1).unwrap(),
            0.5503,
            epsilon = 1e-3
        );
    }

    #[test]
    fn all_zero_spectrum_is_an_error() {
        assert_eq!(
            explained_variance_ratio(&[0.0, 0.0], 1).unwrap_err(),
            Error::AllZeroSpectrum
        );
        assert_eq!(effective_rank(&[0.0]).unwrap_err(), Error::AllZeroSpectrum);
    }

    #[test]
    fn effective_rank_extremes() {
        assert_abs_diff_eq!(effective_rank(&[2.0, 2.0, 2.0, 2.0]).unwrap(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(effective_rank(&[5.0, 0.0, 0.0]).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn effective_rank_pedagogical() {
        let s = svd(&pedagogical_features()).unwrap();
        assert_abs_diff_eq!(effective_rank(s.singular_values()).unwrap(), 1.680, epsilon = 5e-3);
    }

    #[test]
    fn diagnose_pedagogical_proceeds() {
        let report = diagnose(&pedagogical_features()).unwrap();
        assert_eq!(report.band, Band::Proceed);
        assert!(!report.tie_warning);
    }

    #[test]
    fn band_boundaries() {
        assert_eq!(Band::from_rho1(0.5), Band::Proceed);
        assert_eq!(Band::from_rho1(0.3), Band::Compare2D);
        assert_eq!(Band::from_rho1(0.2999), Band::UseAlternative);
    }

    #[test]
    fn identity_features_use_alternative() {
        let f = Mat::from_fn(5, 5, |i, j| if i == j { 1.0 } else { 0.0 });
        let report = diagnose(&f).unwrap();
        assert_abs_diff_eq!(report.rho1, 0.2, epsilon = 1e-12);
        assert_eq!(report.band, Band::UseAlternative);
        assert!(report.tie_warning);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let f = pedagogical_features();
        let s = svd(&f).unwrap();
        let rec = s.reconstruct();
        let mut err = 0.0;
        for i in 0..f.rows() {
            for j in 0..f.cols() {
                err += (f[(i, j)] - rec[(i, j)]).powi(2);
            }
        }
        assert!(err.sqrt() <= 1e-8 * f.frob_sq().sqrt());

        let r = s.right_vectors();
        for p in 0..3 {
            for q in 0..3 {
                let d = dot(&r.column(p), &r.column(q));
                let expected = if p == q { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(d, expected, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn wide_matrix_has_trailing_zero_values() {
        // J < X: rank is at most J.
        let f = Mat::from_rows(&[vec![1.0, 2.0, 3.0, 4.0], vec![4.0, 3.0, 2.0, 1.0]]).unwrap();
        let s = svd(&f).unwrap();
        assert!(s.singular_values()[2] < 1e-9);
        assert!(s.singular_values()[3] < 1e-9);
        let rec = s.reconstruct();
        for i in 0..2 {
            for j in 0..4 {
                assert_abs_diff_eq!(rec[(i, j)], f[(i, j)], epsilon = 1e-9);
            }
        }
    }
}
