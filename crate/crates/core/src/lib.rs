//! Circuit-to-Hamiltonian compiler for stoquastic 2-local constructions.
pub mod analysis;
pub mod bundle;
pub mod circuit;
pub mod construction;
pub mod error;
pub mod grid2d;
pub mod kitaev;
pub mod line1d;
pub mod spectral;
pub use error::{Error, Result};
