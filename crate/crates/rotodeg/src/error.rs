//! Error types shared across the toolkit.

use crate::flow::NullSetHit;
use crate::linear::RadiusProbe;

/// Everything that can go wrong while evaluating fields, integrating,
/// winding, or searching for orbits.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("|z| = {norm:.3e} exceeds the field's norm cap {cap:.3e}")]
    NormCapExceeded { norm: f64, cap: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("solution blew past the norm cap at t = {t:.6e} (|z| = {norm:.3e})")]
    BlowUp { t: f64, norm: f64 },

    #[error("integration exceeded the step limit ({0} steps)")]
    StepLimit(usize),

    #[error(
        "trajectory from ({:.6e}, {:.6e}) entered the origin clearance ball at t = {:.6e}",
        .0.start_point.x, .0.start_point.y, .0.hit_time
    )]
    OriginCrossing(NullSetHit),

    #[error("refinement depth limit reached")]
    RefinementLimit,

    #[error(
        "boundary map comes within {clearance:.3e} of the target near ({:.6e}, {:.6e}); degree undefined",
        .at.0, .at.1
    )]
    BoundaryZero { clearance: f64, at: (f64, f64) },

    #[error("rotation hull endpoint {value:.8} grazes an integer (margin {margin:.1e})")]
    IntegerGrazing { value: f64, margin: f64 },

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("finite-difference monodromy is ill-conditioned")]
    IllConditioned,

    #[error("det(M - I) = {0:.3e} sits in the marginal band; nonresonance undecidable")]
    Marginal(f64),

    #[error("inconsistent numerical data: {0}")]
    Inconsistent(String),

    #[error("no radius matched the linearized rotation data after {} probes", .trace.len())]
    AsymptoticNotFound { trace: Vec<RadiusProbe> },

    #[error("field carries no linearization at {0}")]
    MissingLinearization(&'static str),

    #[error("system is not Hamiltonian")]
    NotHamiltonian,
}

pub type Result<T> = std::result::Result<T, Error>;
