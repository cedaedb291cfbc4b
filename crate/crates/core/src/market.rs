//! Core market data types: feature/preference matrices, capacities,
//! linear utilities and allocation bookkeeping.

use crate::error::{Error, Result};
use crate::matrix::{dot, Mat};

/// Object feature matrix: one row per object, one column per feature.
pub type FeatureMatrix = Mat;
/// Reported preference matrix: one row per agent, one column per feature.
pub type PreferenceMatrix = Mat;

/// A validated one-sided matching market.
///
/// Invariants established by [`Market::validate`]:
/// - features and preferences share the same column count `X >= 1`,
/// - all entries are finite,
/// - capacities sum to the number of agents (zero-capacity objects are
///   allowed and simply never assigned).
#[derive(Debug, Clone)]
pub struct Market {
    features: FeatureMatrix,
    preferences: PreferenceMatrix,
    capacities: Vec<usize>,
}

impl Market {
    pub fn validate(
        features: FeatureMatrix,
        preferences: PreferenceMatrix,
        capacities: Vec<usize>,
    ) -> Result<Self> {
        let agents = preferences.rows();
        let objects = features.rows();
        if agents == 0 || objects == 0 || features.cols() == 0 {
            return Err(Error::EmptyMarket);
        }
        if preferences.cols() != features.cols() {
            return Err(Error::DimensionMismatch {
                expected: features.cols(),
                got: preferences.cols(),
            });
        }
        if capacities.len() != objects {
            return Err(Error::DimensionMismatch {
                expected: objects,
                got: capacities.len(),
            });
        }
        if !features.is_finite() || !preferences.is_finite() {
            return Err(Error::NonFinite);
        }
        let total: usize = capacities.iter().sum();
        if total != agents {
            return Err(Error::CapacityMismatch {
                capacity: total,
                agents,
            });
        }
        Ok(Market {
            features,
            preferences,
            capacities,
        })
    }

    pub fn agents(&self) -> usize {
        self.preferences.rows()
    }

    pub fn objects(&self) -> usize {
        self.features.rows()
    }

    pub fn features_per_object(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn preferences(&self) -> &PreferenceMatrix {
        &self.preferences
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }
}

/// Agent-by-object utility matrix; entry `(i, j)` is agent `i`'s utility
/// for object `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix(Mat);

impl UtilityMatrix {
    pub fn new(values: Mat) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::EmptyMarket);
        }
        if !values.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(UtilityMatrix(values))
    }

    pub fn agents(&self) -> usize {
        self.0.rows()
    }

    pub fn objects(&self) -> usize {
        self.0.cols()
    }

    pub fn get(&self, agent: usize, object: usize) -> f64 {
        self.0[(agent, object)]
    }

    pub fn agent_row(&self, agent: usize) -> &[f64] {
        self.0.row(agent)
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }
}

/// Deterministic allocation: each agent is assigned exactly one object.
///
/// The canonical representation is the agent-to-object index vector; the
/// 0/1 assignment matrix is derived on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    assigned: Vec<usize>,
    objects: usize,
}

impl Allocation {
    /// Builds an allocation and checks it fills every object exactly to
    /// its capacity.
    pub fn new(assigned: Vec<usize>, capacities: &[usize]) -> Result<Self> {
        let mut counts = vec![0usize; capacities.len()];
        for &j in &assigned {
            if j >= capacities.len() {
                return Err(Error::DimensionMismatch {
                    expected: capacities.len(),
                    got: j + 1,
                });
            }
            counts[j] += 1;
        }
        if counts != capacities {
            let total: usize = capacities.iter().sum();
            return Err(Error::CapacityMismatch {
                capacity: total,
                agents: assigned.len(),
            });
        }
        Ok(Allocation {
            assigned,
            objects: capacities.len(),
        })
    }

    pub fn agents(&self) -> usize {
        self.assigned.len()
    }

    pub fn objects(&self) -> usize {
        self.objects
    }

    /// Object assigned to `agent`.
    pub fn object_of(&self, agent: usize) -> usize {
        self.assigned[agent]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assigned
    }

    /// Number of agents assigned to each object.
    pub fn object_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.objects];
        for &j in &self.assigned {
            counts[j] += 1;
        }
        counts
    }

    /// Derived 0/1 assignment matrix (rows = agents, columns = objects).
    pub fn matrix(&self) -> Mat {
        let mut m = Mat::zeros(self.assigned.len(), self.objects);
        for (i, &j) in self.assigned.iter().enumerate() {
            m[(i, j)] = 1.0;
        }
        m
    }
}

/// Linear utilities `U[i][j] = w_i . f_j`.
pub fn utility_matrix(market: &Market) -> UtilityMatrix {
    let w = market.preferences();
    let f = market.features();
    let m = Mat::from_fn(w.rows(), f.rows(), |i, j| dot(w.row(i), f.row(j)));
    UtilityMatrix(m)
}

/// Disagreement points: per-agent mean utility over all objects, i.e. the
/// expected utility of a uniformly random object. Capacities are not
/// weighted; zero-capacity objects still enter the average.
pub fn disagreement_points(utilities: &UtilityMatrix) -> Vec<f64> {
    let j = utilities.objects() as f64;
    (0..utilities.agents())
        .map(|i| utilities.agent_row(i).iter().sum::<f64>() / j)
        .collect()
}

/// Utility of each agent's assigned object.
pub fn realized_utilities(allocation: &Allocation, utilities: &UtilityMatrix) -> Vec<f64> {
    (0..allocation.agents())
        .map(|i| utilities.get(i, allocation.object_of(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pedagogical::market as pedagogical_market;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pedagogical_market_is_valid() {
        let m = pedagogical_market();
        assert_eq!(m.agents(), 3);
        assert_eq!(m.objects(), 3);
        assert_eq!(m.features_per_object(), 3);
    }

    #[test]
    fn zero_capacity_objects_are_permitted() {
        let features = Mat::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let prefs = Mat::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let m = Market::validate(features, prefs, vec![1, 0, 1]).unwrap();
        assert_eq!(m.capacities(), &[1, 0, 1]);
    }

    #[test]
    fn capacity_sum_must_match_agents() {
        let features = Mat::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let prefs = Mat::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let err = Market::validate(features, prefs, vec![1, 1]).unwrap_err();
        assert_eq!(err, Error::CapacityMismatch { capacity: 2, agents: 3 });
    }

    #[test]
    fn column_count_must_agree() {
        let features = Mat::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let prefs = Mat::from_rows(&[vec![1.0]]).unwrap();
        let err = Market::validate(features, prefs, vec![1]).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, got: 1 });
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        let features = Mat::from_rows(&[vec![f64::NAN]]).unwrap();
        let prefs = Mat::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(
            Market::validate(features, prefs, vec![1]).unwrap_err(),
            Error::NonFinite
        );
    }

    #[test]
    fn pedagogical_utilities() {
        let u = utility_matrix(&pedagogical_market());
        let expected = [
            [127.0, 81.5, 118.0],
            [85.0, 123.5, 118.0],
            [114.0, 110.0, 127.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(u.get(i, j), expected[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn basis_preference_reads_feature_column() {
        let features = Mat::from_rows(&[vec![3.0, 9.0], vec![4.0, 8.0]]).unwrap();
        let prefs = Mat::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let m = Market::validate(features, prefs, vec![1, 1]).unwrap();
        let u = utility_matrix(&m);
        assert_eq!(u.agent_row(0), &[9.0, 8.0]);
    }

    #[test]
    fn utility_matrix_matches_double_loop_oracle() {
        // Independent entry-by-entry recomputation on a fixed 4x3 market.
        let features = Mat::from_rows(&[
            vec![0.3, -1.2, 2.0],
            vec![1.5, 0.0, -0.7],
            vec![-2.2, 0.9, 0.4],
        ])
        .unwrap();
        let prefs = Mat::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![-0.5, 0.25, 0.0],
            vec![2.0, 2.0, 2.0],
            vec![0.0, -1.0, 1.0],
        ])
        .unwrap();
        let market = Market::validate(features.clone(), prefs.clone(), vec![2, 1, 1]).unwrap();
        let u = utility_matrix(&market);
        for i in 0..4 {
            for j in 0..3 {
                let mut acc = 0.0;
                for x in 0..3 {
                    acc += prefs[(i, x)] * features[(j, x)];
                }
                assert_abs_diff_eq!(u.get(i, j), acc, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn disagreement_is_row_mean() {
        let u = UtilityMatrix::new(Mat::from_rows(&[vec![1.0, 3.0], vec![0.0, 0.0]]).unwrap())
            .unwrap();
        assert_eq!(disagreement_points(&u), vec![2.0, 0.0]);
    }

    #[test]
    fn pedagogical_disagreement() {
        let u = utility_matrix(&pedagogical_market());
        let o = disagreement_points(&u);
        assert_abs_diff_eq!(o[0], 108.83, epsilon = 0.01);
        assert_abs_diff_eq!(o[1], 108.83, epsilon = 0.01);
        assert_abs_diff_eq!(o[2], 117.00, epsilon = 0.01);
    }

    #[test]
    fn realized_utilities_look_up_assigned_column() {
        let u = utility_matrix(&pedagogical_market());
        let identity = Allocation::new(vec![0, 1, 2], &[1, 1, 1]).unwrap();
        let r = realized_utilities(&identity, &u);
        assert_abs_diff_eq!(r[0], 127.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1], 123.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r[2], 127.0, epsilon = 1e-12);
    }

    #[test]
    fn allocation_rejects_wrong_counts() {
        let err = Allocation::new(vec![0, 0, 1], &[1, 1, 1]).unwrap_err();
        assert!(matches!(err, Error::CapacityMismatch { .. }));
    }
}
