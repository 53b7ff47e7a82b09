use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
    Channel1,
    Channel2,
    /// Reserved for mode-mismatch and environment modes.
    Aux(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
    Scalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeLabel {
    pub party: Party,
    pub pol: Polarization,
}

impl ModeLabel {
    pub const fn new(party: Party, pol: Polarization) -> Self {
        Self { party, pol }
    }

    pub const fn scalar(party: Party) -> Self {
        Self::new(party, Polarization::Scalar)
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.party {
            Party::Alice => write!(f, "A")?,
            Party::Bob => write!(f, "B")?,
            Party::Channel1 => write!(f, "C1")?,
            Party::Channel2 => write!(f, "C2")?,
            Party::Aux(k) => write!(f, "aux{k}")?,
        }
        match self.pol {
            Polarization::H => write!(f, "_H"),
            Polarization::V => write!(f, "_V"),
            Polarization::Scalar => Ok(()),
        }
    }
}

/// Ordered set of distinct modes. A mode's index is its position.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModeRegistry {
    labels: Vec<ModeLabel>,
}

impl ModeRegistry {
    pub fn new(labels: impl IntoIterator<Item = ModeLabel>) -> Result<Self> {
        let mut out: Vec<ModeLabel> = Vec::new();
        for label in labels {
            if out.contains(&label) {
                return Err(Error::RegistryConflict(label));
            }
            out.push(label);
        }
        Ok(Self { labels: out })
    }

    pub fn single(label: ModeLabel) -> Self {
        Self {
            labels: vec![label],
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn contains(&self, label: ModeLabel) -> bool {
        self.labels.contains(&label)
    }

    pub fn index_of(&self, label: ModeLabel) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(Error::UnknownMode(label))
    }

    /// Registry of `self` followed by `other`; the two must be disjoint.
    pub fn concat(&self, other: &ModeRegistry) -> Result<Self> {
        Self::new(self.labels.iter().chain(other.labels.iter()).copied())
    }

    /// Keeps the listed modes in registry order. Returns the reduced registry
    /// and the original indices of the kept modes.
    pub fn subset(&self, keep: &[ModeLabel]) -> Result<(Self, Vec<usize>)> {
        for &label in keep {
            self.index_of(label)?;
        }
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| keep.contains(&self.labels[i]))
            .collect();
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        Ok((Self { labels }, idx))
    }

    pub fn without(&self, label: ModeLabel) -> Result<(Self, usize)> {
        let i = self.index_of(label)?;
        let mut labels = self.labels.clone();
        labels.remove(i);
        Ok((Self { labels }, i))
    }
}
