//! Physical parameters of the waveguide + emitter system and the cosine band.
//!
//! All energies are in the same units as the hopping `J`; the lattice
//! constant is 1, so wavevectors live in `[-pi, pi]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Hopping `J`, emitter splitting `Omega` and discrete coupling `g'`.
///
/// The continuum coupling `g = g' / sqrt(2 pi)` is derived on demand and is
/// never stored separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    j: f64,
    omega: f64,
    g_prime: f64,
}

impl ModelParams {
    pub fn new(j: f64, omega: f64, g_prime: f64) -> Result<Self> {
        if !(j.is_finite() && j > 0.0) {
            return Err(Error::InvalidParameter {
                name: "J",
                value: j,
                reason: "hopping must be positive and finite",
            });
        }
        if !omega.is_finite() {
            return Err(Error::InvalidParameter {
                name: "Omega",
                value: omega,
                reason: "must be finite",
            });
        }
        if !(g_prime.is_finite() && g_prime >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "g'",
                value: g_prime,
                reason: "coupling must be non-negative and finite",
            });
        }
        Ok(Self { j, omega, g_prime })
    }

    /// `J = 1`, `Omega = 0` with the given discrete coupling.
    pub fn with_coupling(g_prime: f64) -> Result<Self> {
        Self::new(1.0, 0.0, g_prime)
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn g_prime(&self) -> f64 {
        self.g_prime
    }

    /// Continuum coupling `g = g' / sqrt(2 pi)`.
    pub fn g(&self) -> f64 {
        self.g_prime / (2.0 * PI).sqrt()
    }

    pub fn g2(&self) -> f64 {
        self.g_prime * self.g_prime / (2.0 * PI)
    }

    pub fn band_edge(&self) -> f64 {
        2.0 * self.j
    }

    /// `omega_k = -2J cos k`.
    pub fn dispersion(&self, k: f64) -> f64 {
        -2.0 * self.j * k.cos()
    }

    /// `|d omega_k / dk| = 2J |sin k|`. Zero at the band edges.
    pub fn group_speed(&self, k: f64) -> f64 {
        2.0 * self.j * k.sin().abs()
    }

    /// Inverse dispersion `sign * arccos(-omega / 2J)`, with arccos in `[0, pi]`.
    pub fn wavevector_from_energy(&self, omega: f64, sign: f64) -> Result<f64> {
        let edge = self.band_edge();
        if !(omega.abs() <= edge) {
            return Err(Error::OutOfBand {
                omega,
                lo: -edge,
                hi: edge,
            });
        }
        let c = (-omega / edge).clamp(-1.0, 1.0);
        Ok(sign.signum() * c.acos())
    }

    /// `sqrt(4J^2 - omega^2)`, the co-area Jacobian `2J |sin k(omega)|`.
    pub fn band_jacobian(&self, omega: f64) -> f64 {
        let e = self.band_edge();
        ((e - omega) * (e + omega)).max(0.0).sqrt()
    }
}

/// A wavevector in `[-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Momentum(f64);

impl Momentum {
    pub fn new(k: f64) -> Result<Self> {
        if (-PI..=PI).contains(&k) {
            Ok(Self(k))
        } else {
            Err(Error::InvalidParameter {
                name: "k",
                value: k,
                reason: "wavevector must lie in [-pi, pi]",
            })
        }
    }

    /// Folds any real wavevector into `(-pi, pi]`.
    pub fn wrapped(k: f64) -> Self {
        let mut w = (k + PI).rem_euclid(2.0 * PI) - PI;
        if w == -PI {
            w = PI;
        }
        Self(w)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn energy(self, params: &ModelParams) -> f64 {
        params.dispersion(self.0)
    }

    pub fn group_speed(self, params: &ModelParams) -> f64 {
        params.group_speed(self.0)
    }
}

impl From<Momentum> for f64 {
    fn from(k: Momentum) -> f64 {
        k.0
    }
}
