//! Error type shared across the library.
//!
//! Numeric conventions (0*log 0 = 0, 0/0 = 0, 0^0 = 1) are handled inline by
//! the factor kernels; everything outside those conventions is an `Error`.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Graph operation that requires chordality got a non-chordal input.
    #[error("graph is not chordal: {0}")]
    NonChordalInput(String),

    /// Directed structure contains a cycle.
    #[error("directed graph contains a cycle involving vertex {0}")]
    CyclicInput(u32),

    /// Two objects disagree on the variable table (names, arity, or order).
    #[error("variable tables do not match: {0}")]
    VariableMismatch(String),

    /// A scope was required to be contained in another and is not.
    #[error("scope not contained: {0}")]
    ScopeNotContained(String),

    /// A factor table would exceed the configured cell cap.
    #[error("table of {cells} cells exceeds the cap of {cap} cells")]
    TableTooLarge { cells: u128, cap: u64 },

    /// Full joint enumeration would exceed the configured state cap.
    #[error("joint domain of {states} states exceeds the cap of {cap} states")]
    DomainTooLarge { states: u128, cap: u64 },

    /// x/0 with x != 0 during factor division (0/0 is defined as 0).
    #[error("division by zero at cell {0} (numerator is nonzero)")]
    DivisionByZero(usize),

    /// 0 raised to a negative exponent.
    #[error("zero raised to negative exponent {0}")]
    NegativePowerOfZero(f64),

    /// Logarithm or power of a negative table entry.
    #[error("negative value {0} where a nonnegative one is required")]
    NegativeInput(f64),

    /// log 0 in a context with no weight to silence it.
    #[error("logarithm of zero in a strictly positive context: {0}")]
    LogOfZero(String),

    /// A log term is infinite at a point of positive probability, so the
    /// requested quantity diverges.
    #[error("log of zero on the support of the outer distribution: {0}")]
    LogOfZeroOnSupport(String),

    /// An assignment lies outside a variable's domain.
    #[error("value {value} out of domain for variable {variable} (cardinality {cardinality})")]
    OutOfDomainValue {
        variable: String,
        value: usize,
        cardinality: usize,
    },

    /// A dataset with zero rows was supplied where data is required.
    #[error("dataset is empty")]
    EmptyData,

    /// Requested edge does not exist.
    #[error("no edge {from} -> {to}")]
    NoSuchEdge { from: String, to: String },

    /// Clique and separator tables do not agree on shared margins, or a
    /// table is not normalized.
    #[error("inconsistent model: {0}")]
    InconsistentModel(String),

    /// A Monte Carlo estimator hit a sample with zero probability under a
    /// distribution it must divide by or take logs of.
    #[error("sampled state has zero probability where a positive one is required: {0}")]
    ZeroProbabilitySample(String),

    /// Structural or file-content validation failure.
    #[error("validation error: {0}")]
    Validation(String),

    /// Two redundant computation paths disagreed beyond tolerance. This
    /// indicates a bug, not bad input.
    #[error("internal cross-check failed: {0}")]
    InternalInconsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}
