use std::sync::Arc;

use super::density::{DensityOperator, FockBasis};
use super::mode::{ModeLabel, ModeRegistry};
use super::state::OccupationState;
use crate::error::{Error, Result};

/// Mixed state kept as an ensemble of unnormalised pure branches,
/// `rho = sum_k |psi_k><psi_k|`. Loss and partial traces only add branches,
/// which keeps large registries tractable where a dense matrix is not.
#[derive(Clone, Debug)]
pub struct Mixture {
    branches: Vec<OccupationState>,
}

impl Mixture {
    pub fn pure(state: OccupationState) -> Self {
        Self {
            branches: vec![state],
        }
    }

    pub fn from_branches(branches: Vec<OccupationState>) -> Result<Self> {
        if let Some(first) = branches.first() {
            if branches.iter().any(|b| b.registry() != first.registry()) {
                return Err(Error::InvalidState("mixture branches on different registries".into()));
            }
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[OccupationState] {
        &self.branches
    }

    pub fn into_branches(self) -> Vec<OccupationState> {
        self.branches
    }

    pub fn registry(&self) -> Option<&Arc<ModeRegistry>> {
        self.branches.first().map(|b| b.registry())
    }

    pub fn trace(&self) -> f64 {
        self.branches.iter().map(OccupationState::norm_sqr).sum()
    }

    pub fn leakage(&self) -> f64 {
        self.branches.iter().map(OccupationState::leakage).sum()
    }

    /// Applies a pure-state map to every branch.
    pub fn map(&self, f: impl Fn(&OccupationState) -> Result<OccupationState>) -> Result<Self> {
        Ok(Self {
            branches: self.branches.iter().map(f).collect::<Result<_>>()?,
        })
    }

    pub fn apply_loss(&self, mode: ModeLabel, eta: f64) -> Result<Self> {
        let mut out = Vec::new();
        for b in &self.branches {
            out.extend(b.loss_branches(mode, eta)?);
        }
        Ok(Self { branches: out })
    }

    /// Traces out `modes`: every branch splits by the occupation of those modes.
    pub fn trace_out(&self, modes: &[ModeLabel]) -> Result<Self> {
        let mut out = Vec::new();
        for b in &self.branches {
            out.extend(b.split_on(modes)?.into_values());
        }
        Ok(Self { branches: out })
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        let reg = self
            .registry()
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let cutoff = self.branches[0].cutoff();
        let basis = Arc::new(FockBasis::new(Arc::clone(reg), cutoff));
        DensityOperator::from_branches(basis, &self.branches)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Party, Polarization};
    use crate::sources::coherent_state;
    use num_complex::Complex64;

    const A: ModeLabel = ModeLabel::new(Party::Alice, Polarization::H);

    #[test]
    fn branch_loss_matches_dense_loss() {
        let s = coherent_state(Complex64::new(0.5, -0.2), A, 6).unwrap();
        let dense = DensityOperator::from_pure(&s).apply_loss(A, 0.4).unwrap();
        let mix = Mixture::pure(s).apply_loss(A, 0.4).unwrap().to_density().unwrap();
        assert!((dense.matrix() - mix.matrix()).camax() < 1e-14);
    }
}
