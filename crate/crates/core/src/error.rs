use thiserror::Error;

use crate::fock::ModeLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode {0} is registered more than once")]
    RegistryConflict(ModeLabel),

    #[error("mode {0} is not present in the registry")]
    UnknownMode(ModeLabel),

    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("cutoff {cutoff} is too small: {reason}")]
    Cutoff { cutoff: u32, reason: &'static str },

    #[error("cutoff leakage {leakage:.3e} exceeds the tolerated {limit:.1e}")]
    Leakage { leakage: f64, limit: f64 },

    #[error("states were built with different cutoffs ({0} vs {1})")]
    CutoffMismatch(u32, u32),

    #[error("mode {0} is expected to be empty but carries photons")]
    NotVacuum(ModeLabel),

    #[error("herald is impossible: success probability {0:.3e} is below 1e-15")]
    HeraldImpossible(f64),

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("no measurement records to reconstruct from")]
    EmptyRecords,

    #[error("all measurement records have zero counts")]
    ZeroCounts,

    #[error("unknown measurement setting label {0:?}")]
    UnknownSetting(String),

    #[error("no sign change of the rate difference inside [{lo_db}, {hi_db}] dB")]
    NoCrossing { lo_db: f64, hi_db: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Checks that `value` lies in the closed unit interval.
pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(domain(name, value, "[0, 1]"))
    }
}

pub(crate) fn domain(name: &'static str, value: f64, range: &'static str) -> Error {
    Error::Domain { name, value, range }
}
