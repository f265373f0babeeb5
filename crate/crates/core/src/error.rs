use thiserror::Error;

use crate::lattice_dp::LawKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("step law has empty support")]
    EmptySupport,
    #[error("step law has nonzero mean {0}")]
    NonZeroMean(String),
    #[error("step law has zero variance")]
    DegenerateVariance,
    #[error("invalid step law: {0}")]
    InvalidLaw(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("state x={x} at step {i} of a {kind} path of length {n} has zero conditioning weight")]
    UnreachableState { kind: LawKind, n: usize, i: usize, x: i64 },
    #[error("{kind} of length {n} is undefined (period {period}, n0 {n0})")]
    UnsupportedLength { kind: LawKind, n: usize, period: usize, n0: usize },
    #[error("length {n} exceeds table horizon {horizon}")]
    HorizonExceeded { n: usize, horizon: usize },
    #[error("table `{0}` was not built")]
    MissingTable(&'static str),
    #[error("operation requires a lattice step law")]
    NotLattice,
    #[error("law kind {kind} is not supported by this operation")]
    UnsupportedKind { kind: LawKind },

    #[error(
        "rejection budget exhausted after {attempts} attempts for {kind} of length {n} \
         (expected acceptance ~{expected_acceptance:.2e})"
    )]
    RejectionBudgetExhausted { kind: LawKind, n: usize, attempts: u64, expected_acceptance: f64 },

    #[error("excursion family has no law for length {0}")]
    MissingExcursionLength(usize),
    #[error("domain error: {0}")]
    DomainError(String),

    #[error("continuous pinning requires nonnegative rewards, got xi_{site} = {value}")]
    NegativeXiContinuous { site: usize, value: f64 },

    #[error("cannot merge reports: {0}")]
    GridMismatch(String),

    #[error("cache: {0}")]
    Cache(String),
    #[error("i/o: {0}")]
    Io(String),
}
