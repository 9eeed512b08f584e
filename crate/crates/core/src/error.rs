use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) has an endpoint outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("topology is disconnected")]
    Disconnected,
    #[error("topology has no nodes")]
    Empty,
    #[error("topology file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("node {0} is not covered by any subset")]
    Uncovered(usize),
    #[error("node {0} appears in more than one subset")]
    Overlap(usize),
    #[error("node {0} is outside the topology")]
    OutOfRange(usize),
    #[error("nodes {0} and {1} share a subset but would collide")]
    Collision(usize, usize),
    #[error("partition text line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("budget {budget} exceeds the {units} available scheduling units")]
    InfeasibleBudget { budget: f64, units: usize },
    #[error("budget must be nonnegative, got {0}")]
    NegativeBudget(f64),
    #[error("probability floor {0} must lie in [0, 1)")]
    BadFloor(f64),
    #[error("floor {floor} over {units} units already exceeds budget {budget}")]
    FloorExceedsBudget { floor: f64, units: usize, budget: f64 },
    #[error("subset weights must be nonnegative and finite")]
    BadWeights,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("empty matrix")]
    Empty,
    #[error("Jacobi iteration did not converge in {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixingError {
    #[error("moment matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("moment matrices have mismatched sizes")]
    ShapeMismatch,
    #[error("epsilon must be nonnegative, got {0}")]
    NegativeEpsilon(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("non-finite gradient at node {node}, round {round}")]
    NonFiniteGradient { node: usize, round: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("need at least {needed} samples to shard across {nodes} nodes, got {got}")]
    TooFewSamples { needed: usize, nodes: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Union of the module errors, for call paths that cross modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Mixing(#[from] MixingError),
    #[error(transparent)]
    Train(#[from] TrainError),
}
