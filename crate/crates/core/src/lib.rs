//! Broadcast-based probabilistic subgraph sampling for decentralized SGD
//! over wireless networks.
//!
//! The pipeline, bottom up:
//!
//! * [`graph`]: base topology, Laplacian, auxiliary (two-hop) graph and
//!   betweenness centrality.
//! * [`partition`]: collision-free broadcast subsets by greedy coloring.
//! * [`scheduler`]: betweenness-weighted activation probabilities under a
//!   slot budget, per-round sampling and the symmetric effective mixing
//!   matrix `W(t) = I − ε L̃(t)`.
//! * [`moments`]: closed-form `E[L̃]` and `E[L̃ᵀL̃]`, with Monte Carlo and
//!   exhaustive-enumeration counterparts.
//! * [`mixing`]: the ε minimizing `λ_max(E[W²] − J)`.
//! * [`dsgd`]: the training loop, objectives and non-iid sharding.
//! * [`baselines`]: full communication and link-matching scheduling.
//!
//! Numeric code is generic over [`Scalar`] / [`Real`]; the `*64` aliases
//! below fix `f64`, which is what the command-line runner uses.

pub mod baselines;
pub mod dsgd;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod mixing;
pub mod moments;
pub mod partition;
pub mod rng;
pub mod scalar;
pub mod scheduler;

pub use error::Error;
pub use graph::{CentralityVector, Topology};
pub use linalg::Matrix;
pub use partition::{greedy_partition, validate_partition, CollisionFreePartition};
pub use scalar::{Real, Scalar};

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type MatrixQ = linalg::Matrix<num_rational::Rational64>;
pub type SchedulingPolicy64 = scheduler::SchedulingPolicy<f64>;
pub type RoundActivation64 = scheduler::RoundActivation<f64>;
pub type BroadcastSampler64 = scheduler::BroadcastSampler<f64>;
pub type MomentSet64 = moments::MomentSet<f64>;
pub type MomentSetQ = moments::MomentSet<num_rational::Rational64>;
pub type SpectralObjective64 = mixing::SpectralObjective<f64>;
pub type ModelState64 = dsgd::ModelState<f64>;
pub type MetricsLog64 = dsgd::MetricsLog<f64>;
pub type TrainConfig64 = dsgd::TrainConfig<f64>;
pub type MatchingSampler64 = baselines::MatchingSampler<f64>;
