//! Time-domain lattice simulator for a two-level emitter in a tight-binding
//! waveguide, restricted to one or two excitations.
//!
//! - [`basis`]: site bases and index maps of the two sectors.
//! - [`hamiltonian`]: the sparse lattice Hamiltonian.
//! - [`lanczos`]: Krylov propagation with step-size control.
//! - [`state`]: lattice states and the preparation of packets and bound states.
//! - [`sim`]: configuration, stepping, sampling and completion detection.
//! - [`measure`], [`spectrum`]: region probabilities and the momentum spectrum.
//! - [`oracle`]: dense and iterative reference solutions on the lattice.
//! - [`snapshot`]: binary checkpoints.

pub mod basis;
pub mod error;
pub mod hamiltonian;
pub mod lanczos;
pub mod measure;
pub mod oracle;
pub mod sim;
pub mod snapshot;
pub mod spectrum;
pub mod state;

pub use basis::{LatticeBasis, Sector};
pub use error::{Result, SimError};
pub use hamiltonian::{build_hamiltonian, Boundary, SparseHamiltonian};
pub use measure::Region;
pub use sim::{evolve, SimConfig, Simulation, Trajectory};
pub use state::LatticeState;
