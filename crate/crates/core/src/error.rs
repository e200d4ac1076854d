use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("particle {0} is not part of the configuration")]
    UnknownParticle(u64),
    #[error("configuration is empty; no dynamics to run")]
    EmptyConfiguration,
    #[error("quadrature grid does not cover the support box")]
    GridDoesNotCover,
    #[error("bin edge {edge} exceeds half the box side {half}")]
    BinBeyondHalfBox { edge: f64, half: f64 },
    #[error("no snapshots supplied")]
    NoSnapshots,
    #[error("tuple of order {order} with Q_y order {qy_order} exceeds closure reach (N_max = {n_max})")]
    ClosureReach {
        order: usize,
        qy_order: usize,
        n_max: usize,
    },
    #[error("time {t} is not below the horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error("overflow guard tripped: |k| = {value} > {guard} at t = {t}")]
    Overflow { value: f64, guard: f64, t: f64 },
    #[error("state space of {states} configurations exceeds the limit {limit}")]
    SectorTooLarge { states: u128, limit: u128 },
    #[error("ladder anomaly after {steps} steps at cumulative time {reached}: {reason}")]
    LadderAnomaly {
        steps: usize,
        reached: f64,
        reason: String,
    },
    #[error("lattice storage of {entries} entries is too large")]
    StorageTooLarge { entries: usize },
    #[error("fields are not compatible: {0}")]
    Incompatible(String),
    #[error("linear solve failed: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;
