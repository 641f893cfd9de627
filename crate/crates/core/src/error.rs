use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid instance `{name}`: {reason}")]
    InvalidInstance { name: String, reason: String },

    #[error("invalid constraint set for `{instance}`: {reason}")]
    InvalidSet { instance: String, reason: String },

    #[error("point is infeasible: constraint {constraint} violated by {violation:e}")]
    InfeasiblePoint { constraint: usize, violation: f64 },

    #[error("cycling suspected after {0} simplex iterations")]
    CyclingSuspected(usize),

    #[error("branch-and-bound node limit of {0} exceeded")]
    NodeLimit(usize),

    #[error("integer grid of {points} points exceeds the enumeration limit of {limit}")]
    GridTooLarge { points: f64, limit: usize },

    #[error("integer variable {0} has no finite range; enumeration impossible")]
    UnboundedIntegerRange(usize),

    #[error("instance `{0}` is infeasible over its full constraint set")]
    Infeasible(String),

    #[error("instance `{0}` is genuinely unbounded over its full constraint set")]
    GenuinelyUnbounded(String),

    #[error("k = {k} out of range for {train} training instances")]
    KOutOfRange { k: usize, train: usize },

    #[error("empty training set")]
    EmptyTraining,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid generator config: {0}")]
    InvalidConfig(String),

    #[error("could not draw a feasible instance after {0} attempts")]
    ResamplingExhausted(usize),

    #[error(
        "objective mismatch on `{instance}` ({method}, k={k:?}): got {objective}, full problem {full}"
    )]
    ObjectiveMismatch {
        instance: String,
        method: String,
        k: Option<usize>,
        objective: f64,
        full: f64,
    },

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
