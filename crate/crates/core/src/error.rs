use thiserror::Error;

/// Errors surfaced by basis construction, Hamiltonian assembly, dynamics and
/// analysis. Numerical tolerances quoted in messages are the ones enforced.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis mismatch: expected {expected}, got {got}")]
    BasisMismatch { expected: String, got: String },

    #[error("operator is not Hermitian (max |H - H^dag| = {0:.3e})")]
    NotHermitian(f64),

    #[error("density matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositiveSemidefinite(f64),

    #[error("density matrix trace deviates from one by {0:.3e}")]
    BadTrace(f64),

    #[error("closed form degenerate: B_z + lambda(1-N) + phi is {0:.3e}")]
    DegenerateClosedForm(f64),

    #[error("radicand {0:.3e} is negative beyond roundoff; parameters outside the closed form's validity")]
    OutsideValidity(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
