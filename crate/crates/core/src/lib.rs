//! Simulation of heralded polarization-entanglement distribution by
//! single-click swapping of hybrid (polarization / photon-number) entangled
//! states, in a truncated Fock space.
//!
//! `examples/quickstart.rs` runs one swap end to end.

pub mod bell;
pub mod error;
pub mod fock;
pub mod optics;
pub mod qubit;
pub mod rates;
pub mod sources;
pub mod swap;
pub mod tomography;

pub use error::{Error, Result};
pub use qubit::QubitDensity;
pub use sources::{SourceParams, Station};
pub use swap::{run_swap, ChannelParams, HeraldedResult};
