use std::path::Path;

use hybrid_swap::bell::ThetaGrid;
use hybrid_swap::rates::{db_to_eta, LossGrid, RateParams};
use hybrid_swap::{ChannelParams, SourceParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Flat experiment description. Every field has a default taken from the
/// experimental operating point, so `{}` is a valid config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha2_a: f64,
    pub alpha2_b: f64,
    pub gamma2_a: f64,
    pub gamma2_b: f64,
    pub m_a: f64,
    pub m_b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_db: Option<f64>,
    pub eta_lc: f64,
    pub eta_d: f64,
    pub f_rep: f64,
    pub cutoff: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub shots_per_setting: u64,
    pub phase_drift_sigma: f64,
    pub theta_grid: ThetaGrid,
    pub loss_grid: LossGrid,
    pub kappa_ghz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

/// Channel transmittance used when neither `eta_c` nor `loss_db` is given.
pub const DEFAULT_ETA_C: f64 = 0.066;

impl Default for ExperimentConfig {
    fn default() -> Self {
        let r = RateParams::default();
        Self {
            alpha2_a: r.alpha2,
            alpha2_b: r.alpha2,
            gamma2_a: r.gamma2,
            gamma2_b: r.gamma2,
            m_a: 1.0,
            m_b: 1.0,
            eta_c: None,
            loss_db: None,
            eta_lc: r.eta_lc,
            eta_d: r.eta_d,
            f_rep: r.f_rep,
            cutoff: hybrid_swap::fock::DEFAULT_CUTOFF,
            seed: None,
            shots_per_setting: 100_000,
            phase_drift_sigma: 0.0,
            theta_grid: ThetaGrid::default(),
            loss_grid: LossGrid::default(),
            kappa_ghz: r.kappa_ghz,
            output_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Structural checks. Physical ranges are left to the library so they
    /// surface as domain errors.
    pub fn check(&self) -> Result<(), CliError> {
        if self.eta_c.is_some() && self.loss_db.is_some() {
            return Err(CliError::Config("give either eta_c or loss_db, not both".into()));
        }
        Ok(())
    }

    pub fn eta_c(&self) -> f64 {
        match (self.eta_c, self.loss_db) {
            (Some(e), _) => e,
            (None, Some(db)) => db_to_eta(db),
            (None, None) => DEFAULT_ETA_C,
        }
    }

    pub fn source_a(&self) -> SourceParams {
        SourceParams::from_intensities(self.alpha2_a, self.gamma2_a, self.m_a, self.cutoff)
    }

    pub fn source_b(&self) -> SourceParams {
        SourceParams::from_intensities(self.alpha2_b, self.gamma2_b, self.m_b, self.cutoff)
    }

    pub fn channel(&self) -> ChannelParams {
        ChannelParams {
            eta_c: self.eta_c(),
            eta_lc: self.eta_lc,
            eta_d: self.eta_d,
            phase_drift_sigma: self.phase_drift_sigma,
        }
    }

    /// Rate model for station A's source; the comparison protocols use
    /// `r_gen = alpha2_a`.
    pub fn rate_params(&self) -> RateParams {
        RateParams {
            kappa_ghz: self.kappa_ghz,
            ..RateParams::new(self.alpha2_a, self.gamma2_a, self.eta_lc, self.eta_d, self.f_rep)
        }
    }
}
