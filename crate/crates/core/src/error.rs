//! Error type shared by all modules.

use thiserror::Error;

/// Everything that can go wrong across the crate.
///
/// Variants that are "assertion-level" (documented as impossible for the
/// supported fields) still surface as errors rather than panics so that
/// callers can log the offending inputs.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("unsupported field: m = {0} (must be squarefree and in {{2, 5, 13, 17}})")]
    UnsupportedField(i64),
    #[error("euclidean division failed to reduce the norm (bug for supported fields): {0}")]
    EuclideanFailure(String),
    #[error("element is not totally positive: {0}")]
    NotTotallyPositive(String),
    #[error("zero generator")]
    ZeroGenerator,
    #[error("ideal is not divisible by the requested divisor")]
    NotDivisible,
    #[error("no totally positive generator found (bug when h+ = 1): {0}")]
    NoGenerator(String),
    #[error("element is not invertible modulo the given ideal")]
    NotInvertible,
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("missing Hecke eigenvalue for prime ideal of norm {0}")]
    MissingPrime(i64),
    #[error("series truncation {have} is insufficient (need at least {need})")]
    InsufficientTruncation { have: i64, need: i64 },
    #[error("s = {s} is not beyond the abscissa implied by growth exponent {growth}")]
    AbscissaViolation { s: f64, growth: f64 },
    #[error("coefficient series is not Hecke-multiplicative: {0}")]
    NotMultiplicative(String),
    #[error("evaluation point is not in the upper half plane")]
    NotUpperHalfPlane,
    #[error("incompatible levels in binary operation")]
    IncompatibleLevels,
    #[error("matrix is not in the congruence group: {0}")]
    NotInGroup(String),
    #[error("bad weight: {0}")]
    BadWeight(String),
    #[error("bad level: {0}")]
    BadLevel(String),
    #[error("Bessel argument {0} exceeds the supported cap {1}; shrink the truncation instead")]
    ArgumentTooLarge(f64, f64),
    #[error("zero modulus in Kloosterman sum")]
    ZeroModulus,
    #[error("sum did not converge: last increment {last_increment} >= tol {tol} at cmax {cmax}, eps_window {eps_window}")]
    NotConverged {
        last_increment: f64,
        tol: f64,
        cmax: i64,
        eps_window: i64,
    },
    #[error("cannot complete (c, d) to a group element: {0}")]
    CompletionFailure(String),
    #[error("parameters outside the admissible region: {0}")]
    RegionViolation(String),
    #[error("bracket index n must be parallel here")]
    NonParallelN,
    #[error("theorem hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("parse error: {0}")]
    Parse(String),
}
