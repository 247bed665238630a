use thiserror::Error;

/// Errors raised by the identification engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("universe has {count} states, more than the enumeration cap of {cap}")]
    EnumerationOverflow { count: u128, cap: u128 },

    #[error("universe is not enumerable: {0}")]
    NotEnumerable(String),

    #[error("no state satisfies assumption `{assumption}`")]
    EmptyUniverse { assumption: String },

    #[error("observation {0} is not in the image of the observation mapping")]
    UnreachableObservation(String),

    #[error("inconsistent observation: {0}")]
    InconsistentObservation(String),

    #[error("linear program is infeasible: the observation is unreachable under the constraints")]
    Infeasible,

    #[error("linear program is unbounded (internal error: the feasible set lies in the simplex)")]
    Unbounded,

    #[error("not a linear functional: {0}")]
    NotLinear(String),

    #[error("combiner `{0}` is not monotone in its free argument; enumerate the free region instead")]
    NonMonotoneCombiner(String),

    #[error("input `{0}` carries no identifiability certificate")]
    UncertifiedInput(String),

    #[error("estimand is not identified at the observation: region has {size} values")]
    NotIdentified { size: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),

    #[error("evaluation point {0} is outside the support")]
    OutOfSupport(f64),

    #[error("invalid universe: {0}")]
    InvalidUniverse(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("malformed relation: {0}")]
    MalformedRelation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
