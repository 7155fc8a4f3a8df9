use thiserror::Error;

/// Every failure the kernel can report. Variants map one-to-one onto the
/// error names used in the module documentation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ring mismatch: {0}")]
    RingMismatch(String),
    #[error("derivation {0} is not admissible here")]
    UnknownDerivation(String),
    #[error("unsupported derivative: {0}")]
    UnsupportedDerivative(String),
    #[error("pole at evaluation point: {0}")]
    PoleEvaluation(String),
    #[error("missing value for {0}")]
    MissingAssignment(String),
    #[error("illegal radicand: {0}")]
    IllegalRadicand(String),
    #[error("cannot divide by a non-monomial: {0}")]
    NonMonomialDivision(String),
    #[error("parity violation: {0}")]
    ParityViolation(String),
    #[error("unknown monomial: {0}")]
    UnknownMonomial(String),
    #[error("form is not closed")]
    NotClosed,
    #[error("operation needs a chart model")]
    NotChart,
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is not antisymmetric")]
    NotAntisymmetric,
    #[error("odd dimension")]
    OddDimension,
    #[error("exponential series does not terminate in the requested mode")]
    NonTerminating,
    #[error("conjugation mismatch: {0}")]
    ConjugationMismatch(String),
    #[error("body is not invertible: {0}")]
    NonInvertible(String),
    #[error("wrong ring: {0}")]
    WrongRing(String),
    #[error("element is not a cocycle")]
    NotCocycle,
    #[error("no witness exists in the model")]
    NoWitness,
    #[error("dH differs from p1: not a string structure")]
    NotStringStructure,
    #[error("parse error at {pos}: expected one of {expected:?}")]
    ParseError { pos: usize, expected: Vec<String> },
    #[error("validation error: {0}")]
    ValidationError(String),
    #[error("io error: {0}")]
    IoError(String),
}

pub type Result<T> = std::result::Result<T, Error>;
