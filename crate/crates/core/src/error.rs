use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("energy {omega} lies outside the band [{lo}, {hi}]")]
    OutOfBand { omega: f64, lo: f64, hi: f64 },

    #[error("z = {re} is real and inside the band [-2J, 2J]; supply a positive imaginary part")]
    RealInBand { re: f64 },

    #[error("resolvent evaluated on the pole at z = {z} (bound-state energy {omega_b})")]
    Pole { z: f64, omega_b: f64 },

    #[error("root finder did not converge on [{lo}, {hi}] after {iterations} iterations")]
    RootFinding { lo: f64, hi: f64, iterations: usize },

    #[error(
        "adaptive quadrature did not reach tolerance: error {error:.3e} on [{a}, {b}] (worst subinterval, depth limit {max_depth})"
    )]
    Quadrature {
        a: f64,
        b: f64,
        error: f64,
        max_depth: usize,
    },

    #[error("survival amplitude |e({t})| = {magnitude} exceeds 1; cancellation failure")]
    Cancellation { t: f64, magnitude: f64 },

    #[error("time t = {t} beyond the supported horizon {horizon}; use a higher-precision evaluator")]
    Horizon { t: f64, horizon: f64 },

    #[error("Nyström system is ill-conditioned (condition estimate {condition:.3e}); increase eta")]
    IllConditioned { condition: f64 },

    #[error("wavevector k = {k} sits at a band edge where the group speed vanishes")]
    BandEdge { k: f64 },

    #[error("wavepacket width s = {s} leaks {leak:.3e} of its norm outside [-pi, pi]")]
    PacketTruncation { s: f64, leak: f64 },

    #[error("arguments are off the energy shell by {mismatch:.3e}")]
    OffShell { mismatch: f64 },

    #[error("grid too coarse: {reason}")]
    GridTooCoarse { reason: String },

    #[error("Ω = {omega} is not supported here; this channel formula assumes Ω = 0")]
    NonzeroOmega { omega: f64 },
}
