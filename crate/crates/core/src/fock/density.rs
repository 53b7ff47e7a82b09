use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::mode::{ModeLabel, ModeRegistry};
use super::state::{loss_kraus_coeff, Occupation, OccupationState};
use crate::error::{check_unit, Error, Result};

/// Ordered truncated occupation basis: every occupation vector with total
/// photon number at most `cutoff`, in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct FockBasis {
    registry: Arc<ModeRegistry>,
    cutoff: u32,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

fn enumerate(modes: usize, budget: u32, prefix: &mut Occupation, out: &mut Vec<Occupation>) {
    if prefix.len() == modes {
        out.push(prefix.clone());
        return;
    }
    for n in 0..=budget {
        prefix.push(n as u8);
        enumerate(modes, budget - n, prefix, out);
        prefix.pop();
    }
}

impl FockBasis {
    pub fn new(registry: Arc<ModeRegistry>, cutoff: u32) -> Self {
        let mut states = Vec::new();
        enumerate(registry.len(), cutoff, &mut Vec::new(), &mut states);
        let index = states.iter().enumerate().map(|(i, o)| (o.clone(), i)).collect();
        Self {
            registry,
            cutoff,
            states,
            index,
        }
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }
}

/// Dense operator over a [`FockBasis`].
#[derive(Clone, Debug)]
pub struct FockOperator {
    basis: Arc<FockBasis>,
    matrix: DMatrix<Complex64>,
}

impl FockOperator {
    pub fn new(basis: Arc<FockBasis>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::InvalidState(format!(
                "{}x{} matrix on a basis of dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                basis.dim()
            )));
        }
        Ok(Self { basis, matrix })
    }

    pub fn identity(basis: Arc<FockBasis>) -> Self {
        let d = basis.dim();
        Self {
            basis,
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `Tr(self * rho)`.
    pub fn expectation(&self, rho: &DensityOperator) -> Result<f64> {
        if self.basis != rho.basis {
            return Err(Error::InvalidState("operator and state bases differ".into()));
        }
        Ok((&self.matrix * &rho.matrix).trace().re)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectorOutcome {
    Click,
    NoClick,
}

/// Threshold-detector POVM element on `mode`:
/// `no-click = sum_n (1 - eta_d)^n |n><n|`, `click = I - no-click`.
pub fn detector_povm(
    basis: Arc<FockBasis>,
    mode: ModeLabel,
    eta_d: f64,
    outcome: DetectorOutcome,
) -> Result<FockOperator> {
    check_unit("detector efficiency", eta_d)?;
    let m = basis.registry.index_of(mode)?;
    let d = basis.dim();
    let mut matrix = DMatrix::zeros(d, d);
    for (i, occ) in basis.states.iter().enumerate() {
        let no = (1.0 - eta_d).powi(i32::from(occ[m]));
        matrix[(i, i)] = Complex64::new(
            match outcome {
                DetectorOutcome::NoClick => no,
                DetectorOutcome::Click => 1.0 - no,
            },
            0.0,
        );
    }
    FockOperator::new(basis, matrix)
}

/// Dense density operator over a truncated occupation basis.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    basis: Arc<FockBasis>,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    pub fn new(basis: Arc<FockBasis>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let op = FockOperator::new(basis, matrix)?;
        Ok(Self {
            basis: op.basis,
            matrix: op.matrix,
        })
    }

    pub fn zero(basis: Arc<FockBasis>) -> Self {
        let d = basis.dim();
        Self {
            basis,
            matrix: DMatrix::zeros(d, d),
        }
    }

    /// `|psi><psi|` without normalisation.
    pub fn from_pure(state: &OccupationState) -> Self {
        let basis = Arc::new(FockBasis::new(Arc::clone(state.registry()), state.cutoff()));
        let mut rho = Self::zero(basis);
        rho.add_pure(state);
        rho
    }

    /// Sum of `|psi_k><psi_k|` over unnormalised branches sharing one registry.
    pub fn from_branches<'a>(
        basis: Arc<FockBasis>,
        branches: impl IntoIterator<Item = &'a OccupationState>,
    ) -> Result<Self> {
        let mut rho = Self::zero(basis);
        for b in branches {
            if b.registry() != rho.basis.registry() {
                return Err(Error::InvalidState("branch registry differs from basis".into()));
            }
            rho.add_pure(b);
        }
        Ok(rho)
    }

    fn add_pure(&mut self, state: &OccupationState) {
        let entries: Vec<(usize, Complex64)> = state
            .iter()
            .filter_map(|(o, a)| self.basis.index_of(o).map(|i| (i, *a)))
            .collect();
        for &(i, a) in &entries {
            for &(j, b) in &entries {
                self.matrix[(i, j)] += a * b.conj();
            }
        }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn expectation_pure(&self, state: &OccupationState) -> f64 {
        let v: Vec<(usize, Complex64)> = state
            .iter()
            .filter_map(|(o, a)| self.basis.index_of(o).map(|i| (i, *a)))
            .collect();
        let mut acc = Complex64::default();
        for &(i, a) in &v {
            for &(j, b) in &v {
                acc += a.conj() * self.matrix[(i, j)] * b;
            }
        }
        acc.re
    }

    /// Pure-loss channel with transmissivity `eta` on one mode, via its Kraus
    /// family. Trace preserving.
    pub fn apply_loss(&self, mode: ModeLabel, eta: f64) -> Result<Self> {
        check_unit("loss transmissivity", eta)?;
        let m = self.basis.registry.index_of(mode)?;
        let states = &self.basis.states;
        let d = self.basis.dim();
        let mut out = DMatrix::zeros(d, d);
        // Index of the occupation with k photons removed from mode m.
        let lowered = |i: usize, k: u32| -> Option<usize> {
            let mut o = states[i].clone();
            o[m] -= k as u8;
            self.basis.index_of(&o)
        };
        for i in 0..d {
            let ni = u32::from(states[i][m]);
            for (j, sj) in states.iter().enumerate() {
                let rij = self.matrix[(i, j)];
                if rij == Complex64::default() {
                    continue;
                }
                let nj = u32::from(sj[m]);
                for k in 0..=ni.min(nj) {
                    let c = loss_kraus_coeff(ni, k, eta) * loss_kraus_coeff(nj, k, eta);
                    if c == 0.0 {
                        continue;
                    }
                    if let (Some(a), Some(b)) = (lowered(i, k), lowered(j, k)) {
                        out[(a, b)] += rij * c;
                    }
                }
            }
        }
        Ok(Self {
            basis: Arc::clone(&self.basis),
            matrix: out,
        })
    }

    /// Reduced operator on the listed modes (kept in registry order).
    pub fn partial_trace(&self, keep: &[ModeLabel]) -> Result<Self> {
        let (reg, kept_idx) = self.basis.registry.subset(keep)?;
        let basis = Arc::new(FockBasis::new(Arc::new(reg), self.basis.cutoff));
        let traced_idx: Vec<usize> = (0..self.basis.registry.len())
            .filter(|i| !kept_idx.contains(i))
            .collect();
        let mut groups: BTreeMap<Occupation, Vec<(usize, usize)>> = BTreeMap::new();
        for (i, occ) in self.basis.states.iter().enumerate() {
            let env: Occupation = traced_idx.iter().map(|&t| occ[t]).collect();
            let sys: Occupation = kept_idx.iter().map(|&k| occ[k]).collect();
            let r = basis
                .index_of(&sys)
                .expect("reduced occupation lies inside the cutoff");
            groups.entry(env).or_default().push((i, r));
        }
        let mut out = DMatrix::zeros(basis.dim(), basis.dim());
        for members in groups.values() {
            for &(i, a) in members {
                for &(j, b) in members {
                    out[(a, b)] += self.matrix[(i, j)];
                }
            }
        }
        Ok(Self { basis, matrix: out })
    }

    /// Splits off the trace: returns the unit-trace operator and the weight.
    pub fn normalize(&self) -> Result<(Self, f64)> {
        let w = self.trace();
        if w < 1e-15 {
            return Err(Error::HeraldImpossible(w));
        }
        Ok((
            Self {
                basis: Arc::clone(&self.basis),
                matrix: self.matrix.map(|z| z / w),
            },
            w,
        ))
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()).map(|z| z * 0.5);
        h.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity, positivity and trace bounds.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::InvalidState(format!("not Hermitian (error {herm:e})")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-9 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        let tr = self.trace();
        if tr <= 0.0 || tr > 1.0 + 1e-9 {
            return Err(Error::InvalidState(format!("trace {tr} outside (0, 1]")));
        }
        Ok(())
    }
}
