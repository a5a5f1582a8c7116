//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building landscapes, assembling
/// operators, or running the iteration schemes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid patch partition: {0}")]
    InvalidPartition(String),

    #[error("invalid kernel specification: {0}")]
    InvalidKernel(String),

    #[error("invalid growth function: {0}")]
    InvalidGrowth(String),

    #[error("invalid piecewise profile: {0}")]
    InvalidProfile(String),

    #[error("point x = {x} lies outside the open domain (-{half_length}, {half_length})")]
    PointOutsideDomain { x: f64, half_length: f64 },

    #[error("point x = {x} coincides with a patch interface; the kernel is discontinuous there")]
    PointOnInterface { x: f64 },

    #[error("sample count {got} is too small; need at least 2 per axis")]
    InvalidSampleCount { got: usize },

    #[error("invalid discretization: {0}")]
    InvalidResolution(String),

    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("iterate lost positivity at step {iteration}, entry {index} = {value}")]
    NonPositiveIterate {
        iteration: usize,
        index: usize,
        value: f64,
    },

    #[error(
        "no convergence after {iterations} iterations; last estimate {last_estimate}, residual {residual}"
    )]
    NoConvergence {
        iterations: usize,
        last_estimate: f64,
        residual: f64,
    },

    #[error("no admissible sub-solution scale found after {halvings} halvings")]
    EpsilonSearchFailed { halvings: usize },

    #[error("precondition not met: {0}")]
    PreconditionUnmet(String),

    #[error(
        "upper and lower iteration limits disagree: gap {gap} exceeds allowance {allowance}"
    )]
    BracketMismatch { gap: f64, allowance: f64 },

    #[error(
        "bracket ordering violated at generation {generation} by {violation}; this indicates a corrupted operator or inputs"
    )]
    BracketOrderViolated { generation: usize, violation: f64 },

    #[error(
        "stationary limits from seeds {seed_a} and {seed_b} differ by {gap} (tolerance {tol})"
    )]
    Disagreement {
        seed_a: usize,
        seed_b: usize,
        gap: f64,
        tol: f64,
    },

    #[error("parameter sweep found {} sign changes; brackets: {brackets:?}", brackets.len())]
    NonMonotoneCrossing { brackets: Vec<(f64, f64)> },

    #[error(
        "principal eigenvalue decreased along the sweep at parameter {parameter_value}: {lambda0} after {previous}"
    )]
    MonotonicityViolated {
        parameter_value: f64,
        lambda0: f64,
        previous: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
