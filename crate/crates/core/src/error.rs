use thiserror::Error;

/// Errors produced anywhere in the load-shedding toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("case file line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("case file is missing the required `{0}` table")]
    MissingTable(&'static str),

    #[error("reference to unknown bus {0}")]
    UnknownBus(u32),

    #[error("multiple slack buses ({0} found)")]
    MultipleSlack(usize),

    #[error("no slack bus in case")]
    NoSlack,

    #[error("invalid case: {0}")]
    InvalidCase(String),

    #[error("unknown branch index {index} (case has {count} branches)")]
    UnknownBranch { index: usize, count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cost ordering violated at bus {bus}: marginal shed cost {shed:.4} < required {required:.4} $/MWh")]
    CostOrdering { bus: u32, shed: f64, required: f64 },

    #[error("network is disconnected: buses {0:?} are islanded from the slack")]
    Disconnected(Vec<u32>),

    #[error("singular linear system")]
    Singular,

    #[error("bus {0} has no demand and is not a load center")]
    NotLoadCenter(u32),

    #[error("solution is not optimal (status {0})")]
    NonOptimal(String),

    #[error("no feasible grid point found")]
    NoFeasiblePoint,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
