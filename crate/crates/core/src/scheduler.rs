//! Budget-constrained subset scheduling and per-round effective mixing.
//!
//! Each round every collision-free subset is activated by an independent
//! Bernoulli draw. Activated nodes broadcast to all neighbors; a link is kept
//! for averaging only if both of its endpoints broadcast, which yields the
//! symmetric effective adjacency `Ã = Q A Q`, its Laplacian
//! `L̃ = diag(Ã u) − Ã` and the mixing matrix `W = I − ε L̃`.

use crate::error::ScheduleError;
use crate::graph::{CentralityVector, Topology};
use crate::linalg::Matrix;
use crate::partition::CollisionFreePartition;
use crate::rng::{bernoulli, SimRng};
use crate::scalar::Scalar;

/// Sum of node centralities inside each subset.
pub fn subset_betweenness<T: Scalar>(
    b: &CentralityVector<T>,
    partition: &CollisionFreePartition,
) -> Vec<T> {
    partition
        .subsets()
        .iter()
        .map(|s| s.iter().fold(T::zero(), |acc, &i| acc + b.values()[i]))
        .collect()
}

/// Output of [`solve_probabilities`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilitySolution<T> {
    pub probs: Vec<T>,
    /// Scale in `p = min{1, γ b}`; `None` when every weighted subset ended up
    /// capped, so the form no longer pins γ down.
    pub gamma: Option<T>,
    /// Probability handed to zero-weight subsets. Zero unless the weighted
    /// subsets alone cannot absorb the budget.
    pub fill: T,
}

impl<T: Scalar> ProbabilitySolution<T> {
    pub fn total(&self) -> T {
        self.probs.iter().fold(T::zero(), |acc, &p| acc + p)
    }
}

/// Chooses `p_j = min{1, γ b_j}` with `Σ p_j = budget`.
///
/// Cap-aware iteration: `γ` is the remaining budget over the weight of the
/// uncapped subsets; any subset reaching 1 is fixed there and the rest are
/// re-solved until no new cap appears. When every positive-weight subset is
/// capped and budget is still left, the remainder is spread evenly over the
/// zero-weight subsets.
pub fn solve_probabilities<T: Scalar>(
    subset_b: &[T],
    budget: T,
) -> Result<ProbabilitySolution<T>, ScheduleError> {
    let q = subset_b.len();
    if budget < T::zero() {
        return Err(ScheduleError::NegativeBudget(budget.as_f64()));
    }
    if budget > T::of_usize(q) {
        return Err(ScheduleError::InfeasibleBudget {
            budget: budget.as_f64(),
            units: q,
        });
    }
    if subset_b.iter().any(|&b| b < T::zero() || !b.as_f64().is_finite()) {
        return Err(ScheduleError::BadWeights);
    }

    let mut capped = vec![false; q];
    let mut n_capped = 0usize;
    let gamma = loop {
        let mass = subset_b
            .iter()
            .zip(&capped)
            .filter(|(_, &c)| !c)
            .fold(T::zero(), |acc, (&b, _)| acc + b);
        if mass == T::zero() {
            break None;
        }
        let g = (budget - T::of_usize(n_capped)) / mass;
        let mut changed = false;
        for (j, &b) in subset_b.iter().enumerate() {
            if !capped[j] && b > T::zero() && g * b >= T::one() {
                capped[j] = true;
                n_capped += 1;
                changed = true;
            }
        }
        if !changed {
            break Some(g);
        }
    };

    let mut probs: Vec<T> = subset_b
        .iter()
        .zip(&capped)
        .map(|(&b, &c)| match (c, gamma) {
            (true, _) => T::one(),
            (false, Some(g)) => g * b,
            (false, None) => T::zero(),
        })
        .collect();

    let mut fill = T::zero();
    if gamma.is_none() {
        let leftover = budget - T::of_usize(n_capped);
        let zeros = q - n_capped;
        if leftover > T::zero() && zeros > 0 {
            fill = (leftover / T::of_usize(zeros)).min_of(T::one());
            for (p, &c) in probs.iter_mut().zip(&capped) {
                if !c {
                    *p = fill;
                }
            }
        }
    }
    Ok(ProbabilitySolution { probs, gamma, fill })
}

/// [`solve_probabilities`] with a lower bound on every subset:
/// `p_j = f + (1 − f)·p'_j` where `p'` solves the reduced budget
/// `(B − q f)/(1 − f)`. With `f = 0` this is exactly the plain solve.
pub fn solve_probabilities_with_floor<T: Scalar>(
    subset_b: &[T],
    budget: T,
    floor: T,
) -> Result<ProbabilitySolution<T>, ScheduleError> {
    if floor == T::zero() {
        return solve_probabilities(subset_b, budget);
    }
    if floor < T::zero() || floor >= T::one() {
        return Err(ScheduleError::BadFloor(floor.as_f64()));
    }
    let q = T::of_usize(subset_b.len());
    if q * floor > budget {
        return Err(ScheduleError::FloorExceedsBudget {
            floor: floor.as_f64(),
            units: subset_b.len(),
            budget: budget.as_f64(),
        });
    }
    let span = T::one() - floor;
    let inner = solve_probabilities(subset_b, (budget - q * floor) / span)?;
    Ok(ProbabilitySolution {
        probs: inner.probs.iter().map(|&p| floor + span * p).collect(),
        gamma: inner.gamma,
        fill: floor + span * inner.fill,
    })
}

/// Per-subset activation probabilities, the budget they were designed for,
/// and the mixing step size ε.
#[derive(Clone, Debug, PartialEq)]
pub struct SchedulingPolicy<T> {
    subset_probs: Vec<T>,
    budget: T,
    epsilon: T,
}

impl<T: Scalar> SchedulingPolicy<T> {
    /// Policy with explicit probabilities; ε starts at zero.
    pub fn from_probs(subset_probs: Vec<T>) -> Result<Self, ScheduleError> {
        if subset_probs
            .iter()
            .any(|&p| p < T::zero() || p > T::one() || !p.as_f64().is_finite())
        {
            return Err(ScheduleError::BadWeights);
        }
        let budget = subset_probs.iter().fold(T::zero(), |acc, &p| acc + p);
        Ok(Self {
            subset_probs,
            budget,
            epsilon: T::zero(),
        })
    }

    /// Betweenness-weighted probabilities for `budget` expected slots.
    pub fn bass(
        t: &Topology,
        partition: &CollisionFreePartition,
        budget: T,
        floor: T,
    ) -> Result<Self, crate::Error> {
        let b = t.betweenness_centrality::<T>()?;
        let sb = subset_betweenness(&b, partition);
        let sol = solve_probabilities_with_floor(&sb, budget, floor)?;
        Ok(Self {
            subset_probs: sol.probs,
            budget,
            epsilon: T::zero(),
        })
    }

    /// Every subset with the same probability `budget / q`.
    pub fn uniform(partition: &CollisionFreePartition, budget: T) -> Result<Self, ScheduleError> {
        let q = partition.len();
        if budget < T::zero() {
            return Err(ScheduleError::NegativeBudget(budget.as_f64()));
        }
        if budget > T::of_usize(q) {
            return Err(ScheduleError::InfeasibleBudget {
                budget: budget.as_f64(),
                units: q,
            });
        }
        let p = if q == 0 { T::zero() } else { budget / T::of_usize(q) };
        Ok(Self {
            subset_probs: vec![p; q],
            budget,
            epsilon: T::zero(),
        })
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn subset_probs(&self) -> &[T] {
        &self.subset_probs
    }

    pub fn budget(&self) -> T {
        self.budget
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// Expected slots per round, `Σ p_S`.
    pub fn expected_slots(&self) -> T {
        self.subset_probs.iter().fold(T::zero(), |acc, &p| acc + p)
    }

    /// `p_i = p_S` for the subset `S` holding node `i`.
    pub fn node_probs(&self, partition: &CollisionFreePartition) -> Vec<T> {
        (0..partition.num_nodes())
            .map(|i| self.subset_probs[partition.subset_of(i)])
            .collect()
    }
}

/// One independent draw per entry, in order, one `u64` each.
pub fn draw_activations<T: Scalar>(probs: &[T], rng: &mut SimRng) -> Vec<bool> {
    probs.iter().map(|&p| bernoulli(rng, p.as_f64())).collect()
}

/// `QAQ` for a 0/1 node mask.
pub fn masked_adjacency<T: Scalar>(t: &Topology, node_mask: &[bool]) -> Matrix<T> {
    let mut a = Matrix::zeros(t.n(), t.n());
    for &(i, j) in t.edges() {
        if node_mask[i] && node_mask[j] {
            a[(i, j)] = T::one();
            a[(j, i)] = T::one();
        }
    }
    a
}

/// `diag(A u) − A`.
pub fn laplacian_of<T: Scalar>(adjacency: &Matrix<T>) -> Matrix<T> {
    let degrees = adjacency.row_sums();
    let mut l = adjacency.map(|v| -v);
    for (i, d) in degrees.into_iter().enumerate() {
        l[(i, i)] = d;
    }
    l
}

/// `I − ε L`.
pub fn mixing_matrix<T: Scalar>(laplacian: &Matrix<T>, epsilon: T) -> Matrix<T> {
    let mut w = laplacian.scale(-epsilon);
    for i in 0..w.rows() {
        w[(i, i)] += T::one();
    }
    w
}

/// One sampled round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundActivation<T> {
    pub active_subsets: Vec<bool>,
    pub node_mask: Vec<bool>,
    pub effective_adjacency: Matrix<T>,
    pub effective_laplacian: Matrix<T>,
    pub mixing_matrix: Matrix<T>,
    pub slots_used: usize,
}

impl<T: Scalar> RoundActivation<T> {
    /// Builds the round's matrices from explicit subset decisions.
    pub fn from_active(
        t: &Topology,
        partition: &CollisionFreePartition,
        active_subsets: Vec<bool>,
        epsilon: T,
    ) -> Self {
        let node_mask: Vec<bool> = (0..t.n())
            .map(|i| active_subsets[partition.subset_of(i)])
            .collect();
        let effective_adjacency = masked_adjacency::<T>(t, &node_mask);
        let effective_laplacian = laplacian_of(&effective_adjacency);
        let mixing_matrix = mixing_matrix(&effective_laplacian, epsilon);
        let slots_used = active_subsets.iter().filter(|&&a| a).count();
        Self {
            active_subsets,
            node_mask,
            effective_adjacency,
            effective_laplacian,
            mixing_matrix,
            slots_used,
        }
    }
}

/// Draws one round: `q` Bernoulli draws in subset order, then the effective
/// adjacency, Laplacian and mixing matrix.
pub fn sample_round<T: Scalar>(
    policy: &SchedulingPolicy<T>,
    partition: &CollisionFreePartition,
    t: &Topology,
    rng: &mut SimRng,
) -> RoundActivation<T> {
    let active = draw_activations(policy.subset_probs(), rng);
    RoundActivation::from_active(t, partition, active, policy.epsilon())
}

/// The effective graph of one round, as seen by the training loop.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledGraph<T> {
    pub adjacency: Matrix<T>,
    /// Activated scheduling units (subsets or matchings).
    pub active_units: usize,
    pub slots_used: usize,
}

/// A per-round random graph generator with a fixed mixing step.
pub trait RoundSampler<T: Scalar>: Send + Sync {
    fn num_nodes(&self) -> usize;
    fn epsilon(&self) -> T;
    /// Expected slots per round.
    fn expected_slots(&self) -> T;
    fn draw(&self, rng: &mut SimRng) -> SampledGraph<T>;
}

/// Broadcast subset sampling over a fixed partition.
#[derive(Clone, Debug)]
pub struct BroadcastSampler<T> {
    topology: Topology,
    partition: CollisionFreePartition,
    policy: SchedulingPolicy<T>,
}

impl<T: Scalar> BroadcastSampler<T> {
    pub fn new(
        topology: Topology,
        partition: CollisionFreePartition,
        policy: SchedulingPolicy<T>,
    ) -> Self {
        assert_eq!(
            policy.subset_probs().len(),
            partition.len(),
            "policy and partition disagree on subset count"
        );
        Self {
            topology,
            partition,
            policy,
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn partition(&self) -> &CollisionFreePartition {
        &self.partition
    }

    pub fn policy(&self) -> &SchedulingPolicy<T> {
        &self.policy
    }

    pub fn set_epsilon(&mut self, epsilon: T) {
        self.policy = self.policy.clone().with_epsilon(epsilon);
    }
}

impl<T: Scalar> RoundSampler<T> for BroadcastSampler<T> {
    fn num_nodes(&self) -> usize {
        self.topology.n()
    }

    fn epsilon(&self) -> T {
        self.policy.epsilon()
    }

    fn expected_slots(&self) -> T {
        self.policy.expected_slots()
    }

    fn draw(&self, rng: &mut SimRng) -> SampledGraph<T> {
        let active = draw_activations(self.policy.subset_probs(), rng);
        let node_mask: Vec<bool> = (0..self.topology.n())
            .map(|i| active[self.partition.subset_of(i)])
            .collect();
        let slots = active.iter().filter(|&&a| a).count();
        SampledGraph {
            adjacency: masked_adjacency(&self.topology, &node_mask),
            active_units: slots,
            slots_used: slots,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::greedy_partition;
    use crate::rng::seeded;
    use num_rational::Rational64;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn k2() -> Topology {
        Topology::new(2, &[(0, 1)]).unwrap()
    }

    #[test]
    fn subset_betweenness_sums() {
        let p3 = Topology::new(3, &[(0, 1), (1, 2)]).unwrap();
        let b = p3.betweenness_centrality::<Rational64>().unwrap();
        let part =
            CollisionFreePartition::from_subsets(&p3, vec![vec![1], vec![0], vec![2]]).unwrap();
        assert_eq!(
            subset_betweenness(&b, &part),
            vec![r(1, 1), r(0, 1), r(0, 1)]
        );

        let c6 = Topology::new(6, &(0..6).map(|i| (i, (i + 1) % 6)).collect::<Vec<_>>()).unwrap();
        let b = c6.betweenness_centrality::<Rational64>().unwrap();
        let sb = subset_betweenness(&b, &greedy_partition(&c6));
        assert_eq!(sb, vec![r(1, 3); 3]);
    }

    #[test]
    fn single_subset_carries_all_mass() {
        let t = Topology::new(1, &[]).unwrap();
        let b = t.betweenness_centrality::<f64>().unwrap();
        assert_eq!(subset_betweenness(&b, &greedy_partition(&t)), vec![1.0]);
    }

    #[test]
    fn solve_without_caps() {
        let sol = solve_probabilities(&[r(1, 2), r(3, 10), r(1, 5)], r(3, 2)).unwrap();
        assert_eq!(sol.probs, vec![r(3, 4), r(9, 20), r(3, 10)]);
        assert_eq!(sol.gamma, Some(r(3, 2)));
        assert_eq!(sol.total(), r(3, 2));
    }

    #[test]
    fn solve_with_one_cap() {
        let sol = solve_probabilities(&[r(1, 2), r(3, 10), r(1, 5)], r(12, 5)).unwrap();
        assert_eq!(sol.probs, vec![r(1, 1), r(21, 25), r(14, 25)]);
        assert_eq!(sol.gamma, Some(r(14, 5)));
        assert_eq!(sol.total(), r(12, 5));
    }

    #[test]
    fn solve_full_budget() {
        let sol = solve_probabilities(&[r(1, 3); 3], r(3, 1)).unwrap();
        assert_eq!(sol.probs, vec![r(1, 1); 3]);
    }

    #[test]
    fn solve_rejects_infeasible_budget() {
        assert!(matches!(
            solve_probabilities(&[0.5, 0.5], 2.5),
            Err(ScheduleError::InfeasibleBudget { units: 2, .. })
        ));
        assert!(solve_probabilities(&[0.5, 0.5], -1.0).is_err());
    }

    #[test]
    fn zero_weight_subsets_stay_silent_until_caps_saturate() {
        // Star: the center holds all betweenness.
        let b = [r(1, 1), r(0, 1), r(0, 1), r(0, 1), r(0, 1)];
        let sol = solve_probabilities(&b, r(1, 2)).unwrap();
        assert_eq!(sol.probs, vec![r(1, 2), r(0, 1), r(0, 1), r(0, 1), r(0, 1)]);

        let sol = solve_probabilities(&b, r(2, 1)).unwrap();
        assert_eq!(sol.probs, vec![r(1, 1), r(1, 4), r(1, 4), r(1, 4), r(1, 4)]);
        assert_eq!(sol.gamma, None);
        assert_eq!(sol.fill, r(1, 4));
    }

    #[test]
    fn floor_redistributes_budget() {
        let b = [r(1, 1), r(0, 1), r(0, 1), r(0, 1)];
        let sol = solve_probabilities_with_floor(&b, r(1, 1), r(1, 10)).unwrap();
        assert_eq!(sol.total(), r(1, 1));
        assert!(sol.probs.iter().all(|&p| p >= r(1, 10)));
        assert_eq!(sol.probs[1], r(1, 10));
        assert!(solve_probabilities_with_floor(&b, r(1, 5), r(1, 10)).is_err());
    }

    #[test]
    fn k2_both_active() {
        let t = k2();
        let part = greedy_partition(&t);
        let round = RoundActivation::from_active(&t, &part, vec![true, true], 0.5);
        assert_eq!(round.effective_adjacency, t.adjacency());
        assert_eq!(
            round.mixing_matrix,
            Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]])
        );
        assert_eq!(round.slots_used, 2);
    }

    #[test]
    fn k2_one_direction_is_dropped() {
        let t = k2();
        let part = greedy_partition(&t);
        let s0 = part.subset_of(0);
        let mut active = vec![false; 2];
        active[s0] = true;
        let round = RoundActivation::from_active(&t, &part, active, 0.5);
        assert_eq!(round.effective_adjacency, Matrix::zeros(2, 2));
        assert_eq!(round.mixing_matrix, Matrix::identity(2));
        assert_eq!(round.node_mask, vec![true, false]);
        assert_eq!(round.slots_used, 1);
    }

    #[test]
    fn all_active_reproduces_base_graph() {
        let t = Topology::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
        let part = greedy_partition(&t);
        let policy = SchedulingPolicy::from_probs(vec![1.0; part.len()])
            .unwrap()
            .with_epsilon(0.2);
        let mut rng = seeded(3);
        for _ in 0..20 {
            let round = sample_round(&policy, &part, &t, &mut rng);
            assert_eq!(round.effective_adjacency, t.adjacency());
            assert_eq!(round.effective_laplacian, t.laplacian());
            assert_eq!(round.slots_used, part.len());
        }
    }

    #[test]
    fn sampler_consumes_one_draw_per_subset() {
        let t = Topology::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let part = greedy_partition(&t);
        let policy = SchedulingPolicy::from_probs(vec![0.5; part.len()]).unwrap();
        let sampler = BroadcastSampler::new(t, part.clone(), policy);
        let mut a = seeded(11);
        let mut b = seeded(11);
        for _ in 0..10 {
            let g = sampler.draw(&mut a);
            let active = draw_activations(&vec![0.5; part.len()], &mut b);
            assert_eq!(g.slots_used, active.iter().filter(|&&x| x).count());
        }
    }
}
