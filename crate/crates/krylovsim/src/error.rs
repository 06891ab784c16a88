use thiserror::Error;

pub type Result<T, E = SimError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] wqed_core::Error),

    #[error("invalid simulation setting `{name}` = {value}: {reason}")]
    Config {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{what} does not fit on the lattice: N = {n}, need N >= {required}")]
    Clearance {
        what: &'static str,
        n: usize,
        required: usize,
    },

    #[error("state lives in the {found:?} sector, expected {expected:?}")]
    WrongSector {
        expected: crate::basis::Sector,
        found: crate::basis::Sector,
    },

    #[error("vector length {found} does not match basis dimension {expected}")]
    Dimension { expected: usize, found: usize },

    #[error("Lanczos step at t = {t} kept an error estimate of {estimate:.3e} after {halvings} halvings of dt")]
    StepFailed { t: f64, estimate: f64, halvings: u32 },

    #[error("scattering incomplete at t = {t}: residual flux {flux:.3e} per unit time")]
    Incomplete { t: f64, flux: f64 },

    #[error("iterative solve stalled after {iterations} iterations at relative residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
