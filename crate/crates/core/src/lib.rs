//! Solver library for dynamic viscoelastic contact with rate-and-state
//! friction, discretized in time by implicit Euler and in space by either a
//! 1D chain or 2D P1 triangles.
//!
//! The central object is a decoupled outer iteration: each sweep solves a
//! full trajectory of per-timestep nonsmooth convex minimizations with the
//! memory, penetration, state and slip-rate slots frozen from the previous
//! sweep, then re-integrates the interfacial state ODE. An incremental
//! (single-pass) mode computes the same fixed point directly and serves as a
//! cross-check. The `conditions` module evaluates the smallness inequalities
//! that guarantee contraction of the outer iteration, from a mix of analytic
//! material constants and numerically estimated trace-operator norms.

pub mod assembly;
pub mod conditions;
pub mod friction;
pub mod history;
pub mod opnorm;
pub mod problem;
pub mod rng;
pub mod scheme;
pub mod step;

/// Crate-wide error type. Variants map to the failure classes the public
/// contracts distinguish: bad shapes, bad values, lost positive-definiteness,
/// iteration failures, and requests outside a law's capabilities.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("{what}: no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: String,
        iterations: usize,
        residual: f64,
    },
    #[error("not supported: {0}")]
    Capability(String),
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_step(self, step: usize) -> Error {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
