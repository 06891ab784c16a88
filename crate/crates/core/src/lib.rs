//! Few-photon scattering off a two-level emitter embedded in a tight-binding
//! (cosine-band) waveguide.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: physical parameters and the dispersion relation.
//! - [`resolvent`]: the band self-energy `I(z)`, one-excitation resolvent
//!   elements and the two atom-photon bound states.
//! - [`emission`]: survival amplitude of an initially excited emitter.
//! - [`vertex`]: the two-photon kernel `H(z;p)`, the vertex series
//!   `V0, V1, V2, ...` and a Nyström solver for the kernel equation.
//! - [`smatrix`]: on-shell S-matrix elements for the three two-photon
//!   channels and wavepacket out-states.
//!
//! [`quadrature`] and [`special`] hold the numerical machinery shared by these.

pub mod emission;
pub mod error;
pub mod model;
pub mod quadrature;
pub mod resolvent;
pub mod smatrix;
pub mod special;
pub mod vertex;

pub use error::{Error, Result};
pub use model::{ModelParams, Momentum};
pub use num_complex::Complex64 as C64;
