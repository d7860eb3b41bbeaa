use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("clock moved backwards: requested {requested_s} s, clock at {clock_s} s")]
    ClockBackwards { requested_s: f64, clock_s: f64 },

    #[error("tag is already {0}")]
    PowerState(&'static str),

    #[error("tag is not powered")]
    Unpowered,

    #[error("bit range {offset}..{end} outside memory of {len} bits")]
    OutOfRange { offset: usize, end: usize, len: usize },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("expected {expected} words, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("need at least {needed} bits, have {available}")]
    InsufficientInput { needed: usize, available: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    Empty,

    #[error("sequence has zero variance, correlation undefined")]
    ZeroVariance,

    #[error("no fit: {0}")]
    NoFit(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("insufficient entropy in round {round}: need {needed} bits, pool holds {available}")]
    InsufficientEntropy {
        round: usize,
        needed: usize,
        available: usize,
    },

    #[error("unknown {kind}: {name}")]
    Unknown { kind: &'static str, name: String },
}
