//! Comparison schedules: full communication and a link-matching scheduler
//! in the style of MATCHA.
//!
//! The matching scheduler decomposes the base graph into matchings by
//! greedy edge coloring, activates each matching independently with a
//! common probability, and charges two slots per active matching (one per
//! direction of every link in it).

use std::fmt::Write as _;

use crate::error::ScheduleError;
use crate::graph::Topology;
use crate::linalg::Matrix;
use crate::partition::CollisionFreePartition;
use crate::rng::SimRng;
use crate::scalar::Scalar;
use crate::scheduler::{draw_activations, RoundSampler, SampledGraph, SchedulingPolicy};

/// Slots needed to use one matching in both directions.
pub const SLOTS_PER_MATCHING: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingDecomposition {
    matchings: Vec<Vec<(usize, usize)>>,
}

impl MatchingDecomposition {
    pub fn len(&self) -> usize {
        self.matchings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchings.is_empty()
    }

    pub fn matchings(&self) -> &[Vec<(usize, usize)>] {
        &self.matchings
    }

    /// One matching per line, `i-j` tokens separated by spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.matchings {
            let toks: Vec<String> = m.iter().map(|(i, j)| format!("{i}-{j}")).collect();
            let _ = writeln!(out, "{}", toks.join(" "));
        }
        out
    }
}

/// Greedy edge coloring: edges in lexicographic order, each taking the
/// smallest color free at both endpoints. Uses at most `2Δ − 1` colors.
pub fn matching_decomposition(t: &Topology) -> MatchingDecomposition {
    let mut used: Vec<Vec<bool>> = vec![Vec::new(); t.n()];
    let mut matchings: Vec<Vec<(usize, usize)>> = Vec::new();
    for &(i, j) in t.edges() {
        let taken = |node: &Vec<bool>, c: usize| node.get(c).copied().unwrap_or(false);
        let color = (0..)
            .find(|&c| !taken(&used[i], c) && !taken(&used[j], c))
            .expect("some color is free");
        for v in [i, j] {
            if used[v].len() <= color {
                used[v].resize(color + 1, false);
            }
            used[v][color] = true;
        }
        if matchings.len() <= color {
            matchings.resize(color + 1, Vec::new());
        }
        matchings[color].push((i, j));
    }
    MatchingDecomposition { matchings }
}

/// Uniform activation probability for every matching.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchaPolicy<T> {
    probs: Vec<T>,
    budget: T,
    epsilon: T,
}

impl<T: Scalar> MatchaPolicy<T> {
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn budget(&self) -> T {
        self.budget
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// `2 Σ p_m`.
    pub fn expected_slots(&self) -> T {
        T::of_usize(SLOTS_PER_MATCHING) * self.probs.iter().fold(T::zero(), |acc, &p| acc + p)
    }
}

/// `p_m = min{1, B / (2r)}` for each of the `r` matchings.
pub fn matcha_policy<T: Scalar>(
    md: &MatchingDecomposition,
    budget_slots: T,
) -> Result<MatchaPolicy<T>, ScheduleError> {
    let r = md.len();
    let max_slots = SLOTS_PER_MATCHING * r;
    if budget_slots < T::zero() {
        return Err(ScheduleError::NegativeBudget(budget_slots.as_f64()));
    }
    if budget_slots > T::of_usize(max_slots) {
        return Err(ScheduleError::InfeasibleBudget {
            budget: budget_slots.as_f64(),
            units: max_slots,
        });
    }
    let p = if r == 0 {
        T::zero()
    } else {
        (budget_slots / T::of_usize(max_slots)).min_of(T::one())
    };
    Ok(MatchaPolicy {
        probs: vec![p; r],
        budget: budget_slots,
        epsilon: T::zero(),
    })
}

/// Every subset every round: `q` slots, `W = I − ε L` fixed.
pub fn full_comm_policy<T: Scalar>(partition: &CollisionFreePartition) -> SchedulingPolicy<T> {
    SchedulingPolicy::from_probs(vec![T::one(); partition.len()]).expect("unit probabilities")
}

/// Per-round link-matching sampler.
#[derive(Clone, Debug)]
pub struct MatchingSampler<T> {
    n: usize,
    decomposition: MatchingDecomposition,
    policy: MatchaPolicy<T>,
}

impl<T: Scalar> MatchingSampler<T> {
    pub fn new(t: &Topology, decomposition: MatchingDecomposition, policy: MatchaPolicy<T>) -> Self {
        assert_eq!(decomposition.len(), policy.probs.len());
        Self {
            n: t.n(),
            decomposition,
            policy,
        }
    }

    pub fn policy(&self) -> &MatchaPolicy<T> {
        &self.policy
    }

    pub fn decomposition(&self) -> &MatchingDecomposition {
        &self.decomposition
    }

    pub fn set_epsilon(&mut self, epsilon: T) {
        self.policy.epsilon = epsilon;
    }
}

impl<T: Scalar> RoundSampler<T> for MatchingSampler<T> {
    fn num_nodes(&self) -> usize {
        self.n
    }

    fn epsilon(&self) -> T {
        self.policy.epsilon
    }

    fn expected_slots(&self) -> T {
        self.policy.expected_slots()
    }

    fn draw(&self, rng: &mut SimRng) -> SampledGraph<T> {
        let active = draw_activations(&self.policy.probs, rng);
        let mut adjacency = Matrix::zeros(self.n, self.n);
        let mut count = 0;
        for (m, _) in self.decomposition.matchings.iter().zip(&active).filter(|(_, &a)| a) {
            count += 1;
            for &(i, j) in m {
                adjacency[(i, j)] = T::one();
                adjacency[(j, i)] = T::one();
            }
        }
        SampledGraph {
            adjacency,
            active_units: count,
            slots_used: SLOTS_PER_MATCHING * count,
        }
    }
}
