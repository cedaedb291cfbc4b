//! The spectral matching mechanism, its exact rank-2 variant, the
//! post-hoc individual-rationality repair, and the baseline mechanisms.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::assignment::max_value_assignment;
use crate::error::{Error, Result};
use crate::market::{
    disagreement_points, realized_utilities, utility_matrix, Allocation, Market, UtilityMatrix,
};
use crate::matrix::{dot, Mat};
use crate::spectral::{diagnose_from_summary, principal_direction, project, svd, DiagnosticReport};

/// Audit trail of one spectral match: projected scores in original index
/// order plus the sort permutations actually used.
#[derive(Debug, Clone)]
pub struct MatchTrace {
    /// Objects sorted by descending projected score (ties by index).
    pub object_order: Vec<usize>,
    /// Agents sorted by descending projected score (ties by index).
    pub agent_order: Vec<usize>,
    /// Projected object scores, indexed by object.
    pub projected_object_scores: Vec<f64>,
    /// Projected agent scores, indexed by agent.
    pub projected_agent_scores: Vec<f64>,
}

/// Descending stable order: ties broken by ascending original index.
fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    order
}

/// Matches sorted agents to sorted object slots, each object filled to
/// capacity before the next. This is the mechanism's final step and is
/// deliberately independent of how the scores were produced.
pub fn match_from_projections(
    object_scores: &[f64],
    agent_scores: &[f64],
    capacities: &[usize],
) -> Result<(Allocation, MatchTrace)> {
    if object_scores.len() != capacities.len() {
        return Err(Error::DimensionMismatch {
            expected: capacities.len(),
            got: object_scores.len(),
        });
    }
    let agents = agent_scores.len();
    let total: usize = capacities.iter().sum();
    if total != agents {
        return Err(Error::CapacityMismatch {
            capacity: total,
            agents,
        });
    }
    let object_order = descending_order(object_scores);
    let agent_order = descending_order(agent_scores);

    let mut assigned = vec![0usize; agents];
    let mut slot = agent_order.iter();
    for &j in &object_order {
        for _ in 0..capacities[j] {
            let &i = slot.next().expect("capacity sum equals agent count");
            assigned[i] = j;
        }
    }
    let allocation = Allocation::new(assigned, capacities)?;
    Ok((
        allocation,
        MatchTrace {
            object_order,
            agent_order,
            projected_object_scores: object_scores.to_vec(),
            projected_agent_scores: agent_scores.to_vec(),
        },
    ))
}

/// The spectral mechanism: project both sides onto the principal feature
/// direction and match in sorted order respecting capacities.
pub fn svd_match(market: &Market) -> Result<(Allocation, MatchTrace, DiagnosticReport)> {
    let summary = svd(market.features())?;
    let report = diagnose_from_summary(&summary)?;
    let v1 = principal_direction(&summary)?;
    let object_scores = project(market.features(), &v1)?;
    let agent_scores = project(market.preferences(), &v1)?;
    let (allocation, trace) =
        match_from_projections(&object_scores, &agent_scores, market.capacities())?;
    Ok((allocation, trace, report))
}

/// Exact maximizer of the rank-2 surrogate objective: total utility under
/// `U2[i][j] = (w_i.v1)(f_j.v1) + (w_i.v2)(f_j.v2)`, solved as a square
/// assignment over capacity slots.
pub fn svd_match_2d(market: &Market) -> Result<Allocation> {
    let x = market.features_per_object();
    if x < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: x });
    }
    let summary = svd(market.features())?;
    if summary.singular_values()[0] == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let v1 = summary.right_vector(0);
    let v2 = summary.right_vector(1);

    let f1 = project(market.features(), &v1)?;
    let f2 = project(market.features(), &v2)?;
    let w1 = project(market.preferences(), &v1)?;
    let w2 = project(market.preferences(), &v2)?;

    // Expand objects into unit slots, highest projected score first so the
    // solver's deterministic tie handling lines up with the 1-D mechanism.
    let mut slots = Vec::with_capacity(market.agents());
    for &j in &descending_order(&f1) {
        for _ in 0..market.capacities()[j] {
            slots.push(j);
        }
    }

    let value = Mat::from_fn(market.agents(), slots.len(), |i, s| {
        let j = slots[s];
        w1[i] * f1[j] + w2[i] * f2[j]
    });
    let assign = max_value_assignment(&value);
    let assigned: Vec<usize> = assign.iter().map(|&s| slots[s]).collect();
    Allocation::new(assigned, market.capacities())
}

/// Total surrogate utility of an allocation under the rank-2 projection,
/// for comparing the mechanism against the exact rank-2 maximizer.
pub fn rank2_surrogate_total(market: &Market, allocation: &Allocation) -> Result<f64> {
    let x = market.features_per_object();
    if x < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: x });
    }
    let summary = svd(market.features())?;
    let v1 = summary.right_vector(0);
    let v2 = summary.right_vector(1);
    let mut total = 0.0;
    for i in 0..market.agents() {
        let j = allocation.object_of(i);
        let w = market.preferences().row(i);
        let f = market.features().row(j);
        total += dot(w, &v1) * dot(f, &v1) + dot(w, &v2) * dot(f, &v2);
    }
    Ok(total)
}

/// Reassigns every agent whose realized utility falls strictly below
/// their disagreement point to a uniformly random slot among the slots
/// those agents free up. Satisfied agents keep their objects, so capacity
/// counts are preserved exactly.
pub fn ir_repair<R: Rng + ?Sized>(
    allocation: &Allocation,
    utilities: &UtilityMatrix,
    rng: &mut R,
) -> Result<Allocation> {
    if allocation.agents() != utilities.agents() || allocation.objects() != utilities.objects() {
        return Err(Error::DimensionMismatch {
            expected: utilities.agents(),
            got: allocation.agents(),
        });
    }
    let realized = realized_utilities(allocation, utilities);
    let o = disagreement_points(utilities);
    let violators: Vec<usize> = (0..allocation.agents())
        .filter(|&i| realized[i] < o[i])
        .collect();
    if violators.is_empty() {
        return Ok(allocation.clone());
    }
    let mut freed: Vec<usize> = violators.iter().map(|&i| allocation.object_of(i)).collect();
    freed.shuffle(rng);
    let mut assigned = allocation.assignments().to_vec();
    for (&i, &j) in violators.iter().zip(&freed) {
        assigned[i] = j;
    }
    Allocation::new(assigned, &allocation.object_counts())
}

/// Random priority baseline: agents in uniformly random order each draw a
/// uniformly random object among those with remaining capacity.
pub fn random_priority<R: Rng + ?Sized>(market: &Market, rng: &mut R) -> Allocation {
    let agents = market.agents();
    let mut order: Vec<usize> = (0..agents).collect();
    order.shuffle(rng);
    let mut remaining = market.capacities().to_vec();
    let mut assigned = vec![0usize; agents];
    for &i in &order {
        let available: Vec<usize> = (0..remaining.len()).filter(|&j| remaining[j] > 0).collect();
        let j = available[rng.random_range(0..available.len())];
        assigned[i] = j;
        remaining[j] -= 1;
    }
    Allocation::new(assigned, market.capacities()).expect("construction respects capacities")
}

/// Serial dictatorship baseline: agents pick in the given order, each
/// taking a maximum-utility object (ties to the lowest index) among those
/// with remaining capacity. Utilities are linear in reported preferences.
pub fn serial_dictatorship(market: &Market, agent_order: &[usize]) -> Result<Allocation> {
    let agents = market.agents();
    if agent_order.len() != agents {
        return Err(Error::DimensionMismatch {
            expected: agents,
            got: agent_order.len(),
        });
    }
    let mut seen = vec![false; agents];
    for &i in agent_order {
        if i >= agents || seen[i] {
            return Err(Error::InvalidParameter(
                "agent order must be a permutation of all agents".into(),
            ));
        }
        seen[i] = true;
    }
    let utilities = utility_matrix(market);
    let mut remaining = market.capacities().to_vec();
    let mut assigned = vec![0usize; agents];
    for &i in agent_order {
        let row = utilities.agent_row(i);
        let mut best: Option<usize> = None;
        for j in 0..remaining.len() {
            if remaining[j] == 0 {
                continue;
            }
            match best {
                Some(b) if row[j] <= row[b] => {}
                _ => best = Some(j),
            }
        }
        let j = best.expect("capacities sum to agent count");
        assigned[i] = j;
        remaining[j] -= 1;
    }
    Allocation::new(assigned, market.capacities())
}
