//! Error type shared by every module of the toolkit.

use thiserror::Error;

/// Errors produced by the decoherence toolkit.
///
/// Variants are split between domain errors (invalid inputs, violated
/// preconditions) and numerical failures (guards tripped at run time).
/// The CLI maps the former to exit code 2 and the latter to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received a value outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A delta-correlated kernel was asked for a pointwise value.
    #[error("kernel has no pointwise value")]
    NoPointwiseValue,

    /// A correlation-function lag or closure argument ran backwards.
    #[error("negative time lag")]
    NegativeLag,

    /// The thermal rate integrand diverges at zero frequency.
    #[error("infrared-divergent spectral density")]
    InfraredDivergent,

    /// Zero noise strength: the coherence never decays.
    #[error("no decoherence")]
    NoDecoherence,

    /// The memory kernel degenerates to a delta function.
    #[error("Markovian case; use tegmark_decay")]
    MarkovianCase,

    /// A memoryless bath does not need an auxiliary mode.
    #[error("Markovian bath needs no pseudomode")]
    NoPseudomodeNeeded,

    /// The requested integration step violates a stability guard.
    #[error("step exceeds stability guard")]
    StepExceedsGuard,

    /// The bosonic ladder truncation leaked population into the top level.
    #[error("Fock truncation not converged")]
    TruncationNotConverged,

    /// Doubling the truncation hit the hard cap without converging.
    #[error("truncation runaway; check parameters")]
    TruncationRunaway,

    /// The coherence never crossed the threshold on the sampled grid.
    #[error("horizon exceeded; extend t_max")]
    HorizonExceeded,

    /// The short-time fit window holds too few grid points.
    #[error("insufficient samples in quadratic window")]
    InsufficientSamples,

    /// Matrix operands do not share compatible dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A coherence series violated a structural invariant.
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    /// Malformed input data (for example a tabulated spectrum file).
    #[error("parse error: {0}")]
    Parse(String),

    /// A sweep aborted; reports which grid point and method failed.
    #[error("sweep point failed at tau_c={tau_c}, method={method}: {source}")]
    SweepPoint {
        tau_c: f64,
        method: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
