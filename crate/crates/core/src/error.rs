use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid machine parameters: {0}")]
    InvalidSpec(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("element ({row},{col}) = {magnitude:e} lies outside the |010>/|101> coherence")]
    Structure { row: usize, col: usize, magnitude: f64 },

    #[error("reduced qubit state is not diagonal (off-diagonal magnitude {0:e})")]
    NonDiagonal(f64),

    #[error("generator is singular or ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("eigensolver failed after {iterations} iterations: {detail}")]
    NoConvergence { iterations: usize, detail: String },

    #[error(
        "eigenvector basis is near-defective (condition number {condition:e}); \
         fall back to direct integration"
    )]
    DefectiveBasis { condition: f64 },

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("integration needs {needed} steps, more than the configured maximum {max}")]
    TooManySteps { needed: u64, max: u64 },

    #[error("integration diverged at step {step}")]
    Diverged { step: u64 },

    #[error("virtual temperature is undefined: E_R/T_R equals E_H/T_H")]
    DegenerateVirtualQubit,

    #[error("value out of floating-point range: {0}")]
    Overflow(String),

    #[error("fit window [{t1}, {t2}] starts before coherent dynamics has damped (need t1 >= {min_start})")]
    FitWindow { t1: f64, t2: f64, min_start: f64 },

    #[error("trace distance fell below {floor:e} inside the fit window; nothing to fit")]
    Underflow { floor: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
