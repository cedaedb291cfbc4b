//! Ground-truth comparators: exhaustive maximization of strict Nash
//! social welfare over all capacity-feasible deterministic allocations,
//! and a certified greedy upper bound usable at any scale.

use crate::error::{Error, Result};
use crate::market::{disagreement_points, Allocation, UtilityMatrix};

/// Hard cap on the number of allocations the exhaustive search may visit.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

/// Result of the exhaustive welfare maximization.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_allocation: Allocation,
    /// Sum of log gains of the maximizer, negative infinity when no
    /// feasible allocation attains positive welfare.
    pub best_log_nsw: f64,
    /// Whether the maximizer among positive-welfare allocations is unique
    /// (value ties within 1e-12 count as non-unique).
    pub unique: bool,
    /// Total number of capacity-feasible deterministic allocations,
    /// `I! / prod_j M_j!`.
    pub enumerated_count: u128,
}

fn feasible_count(agents: usize, capacities: &[usize]) -> Option<u128> {
    // I! / prod M_j!, computed incrementally to dodge overflow on the
    // instances the budget would admit anyway.
    let mut numer: u128 = 1;
    for k in 1..=agents as u128 {
        numer = numer.checked_mul(k)?;
        if numer > ENUMERATION_BUDGET.checked_mul(1 << 20)? {
            // far past any admissible size, give up on exactness
            return None;
        }
    }
    let mut denom: u128 = 1;
    for &m in capacities {
        for k in 1..=m as u128 {
            denom = denom.checked_mul(k)?;
        }
    }
    Some(numer / denom)
}

/// Exhaustive maximizer of strict NSW over all feasible 0/1 allocations.
///
/// Enumerates assignments in lexicographic agent-to-object order with a
/// branch-and-bound prune: a partial assignment is abandoned when its log
/// gains plus every remaining agent's best possible log gain cannot beat
/// the incumbent. Ties within 1e-12 keep the first (lexicographically
/// lowest) maximizer and mark the result non-unique.
pub fn optimal_nsw_bruteforce(
    utilities: &UtilityMatrix,
    capacities: &[usize],
) -> Result<OracleResult> {
    let agents = utilities.agents();
    let objects = utilities.objects();
    if capacities.len() != objects {
        return Err(Error::DimensionMismatch {
            expected: objects,
            got: capacities.len(),
        });
    }
    let total: usize = capacities.iter().sum();
    if total != agents {
        return Err(Error::CapacityMismatch {
            capacity: total,
            agents,
        });
    }
    let count = feasible_count(agents, capacities).unwrap_or(u128::MAX);
    if count > ENUMERATION_BUDGET {
        return Err(Error::TooLarge {
            count,
            budget: ENUMERATION_BUDGET,
        });
    }

    let o = disagreement_points(utilities);
    // Per-agent ceiling on the log gain, used both for pruning and for
    // detecting agents that can never gain.
    let best_log_gain: Vec<f64> = (0..agents)
        .map(|i| {
            let max_gain = utilities
                .agent_row(i)
                .iter()
                .map(|u| u - o[i])
                .fold(f64::NEG_INFINITY, f64::max);
            if max_gain > 0.0 {
                max_gain.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    // Suffix sums of the ceilings: bound on any completion from agent i on.
    let mut suffix_bound = vec![0.0; agents + 1];
    for i in (0..agents).rev() {
        suffix_bound[i] = suffix_bound[i + 1] + best_log_gain[i];
    }

    struct Search<'a> {
        utilities: &'a UtilityMatrix,
        o: &'a [f64],
        suffix_bound: &'a [f64],
        remaining: Vec<usize>,
        current: Vec<usize>,
        best: f64,
        best_assignment: Option<Vec<usize>>,
        tied: bool,
        first_fallback: Option<Vec<usize>>,
    }

    impl Search<'_> {
        fn run(&mut self, agent: usize, log_sum: f64) {
            let agents = self.o.len();
            if agent == agents {
                if self.first_fallback.is_none() {
                    self.first_fallback = Some(self.current.clone());
                }
                if log_sum > self.best + 1e-12 {
                    self.best = log_sum;
                    self.best_assignment = Some(self.current.clone());
                    self.tied = false;
                } else if log_sum.is_finite() && (log_sum - self.best).abs() <= 1e-12 {
                    self.tied = true;
                }
                return;
            }
            // Bound: even granting every later agent its best object
            // (ignoring capacities) cannot beat the incumbent.
            if self.best.is_finite() && log_sum + self.suffix_bound[agent] < self.best - 1e-12 {
                // Lexicographic fallback still needs one full completion.
                if self.first_fallback.is_some() {
                    return;
                }
            }
            for j in 0..self.remaining.len() {
                if self.remaining[j] == 0 {
                    continue;
                }
                let gain = self.utilities.get(agent, j) - self.o[agent];
                let step = if gain > 0.0 {
                    gain.ln()
                } else {
                    f64::NEG_INFINITY
                };
                self.remaining[j] -= 1;
                self.current.push(j);
                self.run(agent + 1, log_sum + step);
                self.current.pop();
                self.remaining[j] += 1;
            }
        }
    }

    let mut search = Search {
        utilities,
        o: &o,
        suffix_bound: &suffix_bound,
        remaining: capacities.to_vec(),
        current: Vec::with_capacity(agents),
        best: f64::NEG_INFINITY,
        best_assignment: None,
        tied: false,
        first_fallback: None,
    };
    search.run(0, 0.0);

    let (assignment, unique) = match search.best_assignment {
        Some(a) => (a, !search.tied),
        // No positive-welfare allocation exists; return the
        // lexicographically lowest feasible one and flag non-uniqueness.
        None => (search.first_fallback.expect("at least one feasible allocation"), false),
    };
    Ok(OracleResult {
        best_allocation: Allocation::new(assignment, capacities)?,
        best_log_nsw: search.best,
        unique,
        enumerated_count: count,
    })
}

/// Certified ceiling on any feasible clipped log-NSW: every agent is
/// granted their best object, capacities ignored.
pub fn greedy_log_nsw_upper_bound(utilities: &UtilityMatrix, epsilon: f64) -> f64 {
    let o = disagreement_points(utilities);
    (0..utilities.agents())
        .map(|i| {
            let max_gain = utilities
                .agent_row(i)
                .iter()
                .map(|u| u - o[i])
                .fold(f64::NEG_INFINITY, f64::max);
            max_gain.max(epsilon).ln()
        })
        .sum()
}
