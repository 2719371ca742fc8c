//! Numerical toolkit for decoherence under exponentially correlated
//! (Ornstein-Uhlenbeck) environments.
//!
//! The crate cross-validates four routes to the same physics:
//!
//! * [`analytic`] - closed-form coherence laws: the memoryless
//!   exponential decay, the universal quadratic short-time law, the full
//!   damped-oscillator solution of the finite-memory coherence equation,
//!   and the exact pure-dephasing solution used as an oracle;
//! * [`nmqsd`] - the memory-resolved Volterra integro-differential route,
//!   equivalent to the damped-oscillator form;
//! * [`pseudomode`] - an exact Lindblad simulation that maps the bath
//!   onto one damped auxiliary bosonic mode;
//! * [`analysis`] - decoherence-time extraction, correlation-time sweeps
//!   with power-law fits, and the memoryless-limit convergence study.
//!
//! [`model`] holds the shared parameter set, bath kernels, and spectral
//! densities. All computation is deterministic: fixed-step integrators,
//! no randomness, identical inputs give identical outputs.

pub mod analysis;
pub mod analytic;
pub mod error;
pub mod model;
pub mod nmqsd;
pub mod pseudomode;
pub mod quad;

pub use analysis::{
    default_threshold, extract_tau_dec, fit_quadratic_coefficient, generate_series,
    markov_limit_study, sweep, DecoherenceTime, MarkovLimitStudy, Method, PowerLawFit,
    QuadraticFit, SweepOptions, SweepResult, SweepRow,
};
pub use analytic::{
    dephasing_oracle, memory_parameter, quadratic_law, tau_dec_formula, tegmark_decay,
    tegmark_time, CoherenceSeries, OscillatorSolution, Regime,
};
pub use error::{Error, Result};
pub use model::{
    eval_kernel, gamma_rate, integrated_strength, kernel_from_spectrum_roundtrip, normalize,
    BathKernel, PhysicalParams, SpectralDensity,
};
pub use nmqsd::{
    closure_ode_residual, closure_value, integrate_volterra, integrate_volterra_states,
    ClosureFunction, VolterraState,
};
pub use pseudomode::{
    adapt_truncation, build_generators, build_pseudomode, evolve, evolve_with_report,
    lindblad_rhs, ComplexMatrix, ConservationReport, DensityMatrix, PseudomodeConfig,
    DEFAULT_FOCK_CAP,
};
