//! First and second moments of the effective Laplacian under subset
//! sampling.
//!
//! With node activations `n_i` (perfectly correlated inside a subset,
//! independent across subsets) every moment reduces to expectations of
//! products of two or three activations. For nodes `i, j, m`:
//!
//! ```text
//! E[n_i n_j]     = p_i · max{φ(i,j), p_j}
//! E[n_i n_j n_m] = p_i · max{φ(i,j), p_j} · max{φ(i,m), φ(j,m), p_m}
//! ```
//!
//! where `φ(i,j) = 1` iff `i` and `j` share a subset. The closed forms below
//! evaluate these sums term by term over all node indices. They hold for any
//! partition, collision-free or not.

use crate::graph::Topology;
use crate::linalg::Matrix;
use crate::partition::CollisionFreePartition;
use crate::rng::SimRng;
use crate::scalar::Scalar;
use crate::scheduler::{sample_round, RoundSampler, SchedulingPolicy};

/// `E[L̃]`, `E[L̃ᵀL̃]` and the four terms of
/// `E[L̃ᵀL̃] = E[D²] − E[DÃ] − E[ÃD] + E[Ã²]` with `D = diag(Ã u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSet<T> {
    pub e_l: Matrix<T>,
    pub e_ltl: Matrix<T>,
    pub e_diag2: Matrix<T>,
    pub e_diag_a: Matrix<T>,
    pub e_a_diag: Matrix<T>,
    pub e_a2: Matrix<T>,
}

impl<T: Scalar> MomentSet<T> {
    fn zeros(n: usize) -> Self {
        Self {
            e_l: Matrix::zeros(n, n),
            e_ltl: Matrix::zeros(n, n),
            e_diag2: Matrix::zeros(n, n),
            e_diag_a: Matrix::zeros(n, n),
            e_a_diag: Matrix::zeros(n, n),
            e_a2: Matrix::zeros(n, n),
        }
    }

    /// Largest entrywise gap over both `E[L̃]` and `E[L̃ᵀL̃]`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.e_l
            .max_abs_diff(&other.e_l)
            .max_of(self.e_ltl.max_abs_diff(&other.e_ltl))
    }

    /// Largest entrywise gap over all six matrices.
    pub fn max_abs_diff_all(&self, other: &Self) -> T {
        [
            self.e_diag2.max_abs_diff(&other.e_diag2),
            self.e_diag_a.max_abs_diff(&other.e_diag_a),
            self.e_a_diag.max_abs_diff(&other.e_a_diag),
            self.e_a2.max_abs_diff(&other.e_a2),
        ]
        .into_iter()
        .fold(self.max_abs_diff(other), T::max_of)
    }

    /// Adds `weight` times one realization. Works from the nonzero pattern
    /// of `adjacency`; `L̃ᵀL̃` is assembled as `D² − DÃ − ÃD + Ã²`.
    fn accumulate(&mut self, adjacency: &Matrix<T>, weight: T) {
        let n = adjacency.rows();
        let links: Vec<Vec<(usize, T)>> = (0..n)
            .map(|i| {
                adjacency
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a != T::zero())
                    .map(|(j, &a)| (j, a))
                    .collect()
            })
            .collect();
        let degrees: Vec<T> = links
            .iter()
            .map(|row| row.iter().fold(T::zero(), |acc, &(_, a)| acc + a))
            .collect();
        for i in 0..n {
            let d2 = degrees[i] * degrees[i] * weight;
            self.e_l[(i, i)] += degrees[i] * weight;
            self.e_diag2[(i, i)] += d2;
            self.e_ltl[(i, i)] += d2;
            for &(j, a) in &links[i] {
                let w = a * weight;
                self.e_l[(i, j)] -= w;
                self.e_diag_a[(i, j)] += degrees[i] * w;
                self.e_a_diag[(i, j)] += w * degrees[j];
                self.e_ltl[(i, j)] -= (degrees[i] + degrees[j]) * w;
                for &(k, b) in &links[j] {
                    let v = w * b;
                    self.e_a2[(i, k)] += v;
                    self.e_ltl[(i, k)] += v;
                }
            }
        }
    }
}

/// φ(i, j): one when `i` and `j` belong to the same subset (so φ(i, i) = 1).
pub fn same_subset_indicator<T: Scalar>(partition: &CollisionFreePartition, i: usize, j: usize) -> T {
    if partition.same_subset(i, j) {
        T::one()
    } else {
        T::zero()
    }
}

struct Correlations<'a, T> {
    partition: &'a CollisionFreePartition,
    p: &'a [T],
}

impl<T: Scalar> Correlations<'_, T> {
    #[inline]
    fn phi(&self, i: usize, j: usize) -> T {
        same_subset_indicator(self.partition, i, j)
    }

    /// `p_i max{φ(i,j), p_j}`
    #[inline]
    fn pair(&self, i: usize, j: usize) -> T {
        self.p[i] * self.phi(i, j).max_of(self.p[j])
    }

    /// `p_i max{φ(i,j), p_j} max{φ(i,m), φ(j,m), p_m}`
    #[inline]
    fn triple(&self, i: usize, j: usize, m: usize) -> T {
        self.pair(i, j) * self.phi(i, m).max_of(self.phi(j, m)).max_of(self.p[m])
    }
}

fn check_inputs<T: Scalar>(t: &Topology, partition: &CollisionFreePartition, p: &[T]) {
    assert_eq!(partition.num_nodes(), t.n(), "partition size mismatch");
    assert_eq!(p.len(), t.n(), "one probability per node");
}

/// Closed-form `E[L̃]`.
pub fn expected_laplacian<T: Scalar>(
    t: &Topology,
    partition: &CollisionFreePartition,
    node_probs: &[T],
) -> Matrix<T> {
    check_inputs(t, partition, node_probs);
    let n = t.n();
    let a = t.adjacency::<T>();
    let c = Correlations {
        partition,
        p: node_probs,
    };
    Matrix::from_fn(n, n, |i, j| {
        if i != j {
            -c.pair(i, j) * a[(i, j)]
        } else {
            (0..n).fold(T::zero(), |acc, m| acc + c.pair(i, m) * a[(i, m)] * a[(m, i)])
        }
    })
}

/// Closed-form `E[L̃]` and `E[L̃ᵀL̃]` with its four constituent terms.
pub fn expected_laplacian_gram<T: Scalar>(
    t: &Topology,
    partition: &CollisionFreePartition,
    node_probs: &[T],
) -> MomentSet<T> {
    check_inputs(t, partition, node_probs);
    let n = t.n();
    let a = t.adjacency::<T>();
    let c = Correlations {
        partition,
        p: node_probs,
    };
    let zero = T::zero();

    let e_diag2 = Matrix::from_fn(n, n, |i, j| {
        if i != j {
            return zero;
        }
        let mut s = zero;
        for m in 0..n {
            if a[(i, m)] == zero {
                continue;
            }
            for k in 0..n {
                s += c.triple(i, m, k) * a[(i, m)] * a[(i, k)];
            }
        }
        s
    });
    let e_diag_a = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            return zero;
        }
        (0..n).fold(zero, |acc, m| acc + c.triple(i, j, m) * a[(i, j)] * a[(i, m)])
    });
    let e_a_diag = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            return zero;
        }
        (0..n).fold(zero, |acc, m| acc + c.triple(i, j, m) * a[(i, j)] * a[(j, m)])
    });
    let e_a2 = Matrix::from_fn(n, n, |i, j| {
        if i != j {
            (0..n).fold(zero, |acc, m| acc + c.triple(i, j, m) * a[(i, m)] * a[(m, j)])
        } else {
            (0..n).fold(zero, |acc, m| acc + c.pair(i, m) * a[(i, m)] * a[(i, m)])
        }
    });
    let e_ltl = &(&(&e_diag2 - &e_diag_a) - &e_a_diag) + &e_a2;

    MomentSet {
        e_l: expected_laplacian(t, partition, node_probs),
        e_ltl,
        e_diag2,
        e_diag_a,
        e_a_diag,
        e_a2,
    }
}

/// Subset probabilities from per-node ones; panics if two members of one
/// subset disagree.
pub fn subset_probs_from_nodes<T: Scalar>(partition: &CollisionFreePartition, node_probs: &[T]) -> Vec<T> {
    partition
        .subsets()
        .iter()
        .map(|s| {
            let p = node_probs[s[0]];
            assert!(
                s.iter().all(|&i| node_probs[i] == p),
                "node probabilities must be constant within a subset"
            );
            p
        })
        .collect()
}

/// Empirical moments over `samples` rounds drawn with [`sample_round`].
pub fn monte_carlo_moments<T: Scalar>(
    t: &Topology,
    partition: &CollisionFreePartition,
    node_probs: &[T],
    samples: usize,
    rng: &mut SimRng,
) -> MomentSet<T> {
    assert!(samples >= 1, "need at least one sample");
    check_inputs(t, partition, node_probs);
    let policy = SchedulingPolicy::from_probs(subset_probs_from_nodes(partition, node_probs))
        .expect("probabilities in [0, 1]");
    let mut acc = MomentSet::zeros(t.n());
    for _ in 0..samples {
        let round = sample_round(&policy, partition, t, rng);
        acc.accumulate(&round.effective_adjacency, T::one());
    }
    scale_all(acc, T::one() / T::of_usize(samples))
}

/// Empirical moments of any round sampler, e.g. link-matching schedules
/// whose correlation structure the closed forms do not describe.
pub fn sampler_moments<T: Scalar, S: RoundSampler<T> + ?Sized>(
    sampler: &S,
    samples: usize,
    rng: &mut SimRng,
) -> MomentSet<T> {
    assert!(samples >= 1, "need at least one sample");
    let mut acc = MomentSet::zeros(sampler.num_nodes());
    for _ in 0..samples {
        let g = sampler.draw(rng);
        acc.accumulate(&g.adjacency, T::one());
    }
    scale_all(acc, T::one() / T::of_usize(samples))
}

/// Exact moments by enumerating all `2^q` subset activation patterns and
/// building `Ã = QAQ` directly for each. Intended for small `q`.
pub fn exhaustive_moments<T: Scalar>(
    t: &Topology,
    partition: &CollisionFreePartition,
    node_probs: &[T],
) -> MomentSet<T> {
    check_inputs(t, partition, node_probs);
    let q = partition.len();
    assert!(q <= 24, "exhaustive enumeration is limited to q <= 24");
    let sp = subset_probs_from_nodes(partition, node_probs);
    let n = t.n();
    let a = t.adjacency::<T>();
    let mut acc = MomentSet::zeros(n);
    for pattern in 0u32..(1u32 << q) {
        let on = |k: usize| pattern >> k & 1 == 1;
        let weight = (0..q).fold(T::one(), |w, k| {
            w * if on(k) { sp[k] } else { T::one() - sp[k] }
        });
        if weight == T::zero() {
            continue;
        }
        let mask: Vec<T> = (0..n)
            .map(|i| if on(partition.subset_of(i)) { T::one() } else { T::zero() })
            .collect();
        let a_t = Matrix::from_fn(n, n, |i, j| mask[i] * a[(i, j)] * mask[j]);
        acc.accumulate(&a_t, weight);
    }
    acc
}

fn scale_all<T: Scalar>(m: MomentSet<T>, s: T) -> MomentSet<T> {
    MomentSet {
        e_l: m.e_l.scale(s),
        e_ltl: m.e_ltl.scale(s),
        e_diag2: m.e_diag2.scale(s),
        e_diag_a: m.e_diag_a.scale(s),
        e_a_diag: m.e_a_diag.scale(s),
        e_a2: m.e_a2.scale(s),
    }
}
