//! Truncated multi-mode Fock space: sparse pure states, dense density
//! operators, loss channels and threshold detectors.

mod density;
mod mixture;
mod mode;
mod state;

pub use density::{detector_povm, DensityOperator, DetectorOutcome, FockBasis, FockOperator};
pub use mixture::Mixture;
pub use mode::{ModeLabel, ModeRegistry, Party, Polarization};
pub use state::{beamsplitter_matrix, Occupation, OccupationState, TwoModeUnitary, PRUNE_THRESHOLD};

pub(crate) use state::factorial;

/// Default total-photon cutoff.
pub const DEFAULT_CUTOFF: u32 = 4;
