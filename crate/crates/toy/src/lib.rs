//! Signed point charges with pair energy `-4 m_i m_j |x_i - x_j|^{-p}`:
//! analytic derivatives, stationarity and stability classification, gradient
//! descent, and seeded multistart sweeps.

pub mod charges;
pub mod classify;
pub mod dynamics;

pub use charges::{energy, euler_residual, gradient, hessian, pair_hessian, pair_trace, ChargeConfig};
pub use classify::{classify, collinear_stationary, Classification, StationarityReport};
pub use dynamics::{conjecture_sweep, descend, trial_rng, Descent, StepRule, SweepParams, SweepSummary, Termination, TrialRecord};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("points {0} and {1} coincide")]
    CoincidentPoints(usize, usize),
    #[error("squared masses sum to {0}, expected 1")]
    MassNormalization(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
