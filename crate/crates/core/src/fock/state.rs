use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::mode::{ModeLabel, ModeRegistry};
use crate::error::{check_unit, Error, Result};

/// Amplitudes below this magnitude are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Photon counts per mode, in registry order.
pub type Occupation = Vec<u8>;

/// Creation-operator transfer matrix of a two-mode passive element:
/// `a_j^† -> sum_i u[i][j] a_i^†`.
pub type TwoModeUnitary = [[Complex64; 2]; 2];

/// Sparse (possibly unnormalised) pure state over a truncated multi-mode
/// Fock space. The total photon number of every stored occupation is at most
/// `cutoff`; norm that had to be discarded by the truncation is accumulated
/// in `leakage`.
#[derive(Clone, Debug)]
pub struct OccupationState {
    registry: Arc<ModeRegistry>,
    cutoff: u32,
    amps: BTreeMap<Occupation, Complex64>,
    leakage: f64,
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Matrix element `<n-k| E_k |n>` of the pure-loss Kraus operator.
pub(crate) fn loss_kraus_coeff(n: u32, k: u32, eta: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    (binomial(n, k) * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt()
}

fn total(occ: &[u8]) -> u32 {
    occ.iter().map(|&n| u32::from(n)).sum()
}

impl OccupationState {
    pub fn vacuum(registry: Arc<ModeRegistry>, cutoff: u32) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(vec![0; registry.len()], Complex64::new(1.0, 0.0));
        Self {
            registry,
            cutoff,
            amps,
            leakage: 0.0,
        }
    }

    /// Empty (zero) vector on the given registry.
    pub fn zero(registry: Arc<ModeRegistry>, cutoff: u32) -> Self {
        Self {
            registry,
            cutoff,
            amps: BTreeMap::new(),
            leakage: 0.0,
        }
    }

    /// Builds a state from explicit terms. Terms above the cutoff are
    /// discarded and counted as leakage; repeated occupations add up.
    pub fn from_terms(
        registry: Arc<ModeRegistry>,
        cutoff: u32,
        terms: impl IntoIterator<Item = (Occupation, Complex64)>,
    ) -> Result<Self> {
        let mut state = Self::zero(registry, cutoff);
        for (occ, amp) in terms {
            if occ.len() != state.registry.len() {
                return Err(Error::InvalidState(format!(
                    "occupation of length {} on a {}-mode registry",
                    occ.len(),
                    state.registry.len()
                )));
            }
            if total(&occ) > cutoff {
                state.leakage += amp.norm_sqr();
                continue;
            }
            *state.amps.entry(occ).or_default() += amp;
        }
        state.prune();
        Ok(state)
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    /// Squared norm discarded by truncation at the cutoff.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amps.iter()
    }

    pub fn amplitude(&self, occ: &[u8]) -> Complex64 {
        self.amps.get(occ).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`; both states must live on the same registry.
    pub fn inner(&self, other: &OccupationState) -> Complex64 {
        debug_assert_eq!(self.registry, other.registry);
        self.amps
            .iter()
            .filter_map(|(occ, a)| other.amps.get(occ).map(|b| a.conj() * b))
            .sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for a in out.amps.values_mut() {
            *a *= factor;
        }
        out.leakage *= factor.norm_sqr();
        out.prune();
        out
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n < 1e-30 {
            return Err(Error::InvalidState("cannot normalise a zero vector".into()));
        }
        Ok(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn photons_in(&self, occ: &[u8], modes: &[usize]) -> u32 {
        let _ = self;
        modes.iter().map(|&i| u32::from(occ[i])).sum()
    }

    fn prune(&mut self) {
        self.amps.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
    }

    /// Tensor product on the concatenated registry. Products that exceed the
    /// shared cutoff are dropped and added to the leakage.
    pub fn tensor(&self, other: &OccupationState) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch(self.cutoff, other.cutoff));
        }
        let registry = Arc::new(self.registry.concat(&other.registry)?);
        let mut amps = BTreeMap::new();
        let mut dropped = 0.0;
        for (o1, a1) in &self.amps {
            let n1 = total(o1);
            for (o2, a2) in &other.amps {
                let amp = a1 * a2;
                if n1 + total(o2) > self.cutoff {
                    dropped += amp.norm_sqr();
                    continue;
                }
                let mut occ = o1.clone();
                occ.extend_from_slice(o2);
                amps.insert(occ, amp);
            }
        }
        let (n1, n2) = (self.norm_sqr(), other.norm_sqr());
        let ideal = (n1 + self.leakage) * (n2 + other.leakage);
        let mut out = Self {
            registry,
            cutoff: self.cutoff,
            amps,
            leakage: (ideal - n1 * n2 + dropped).max(0.0),
        };
        out.prune();
        Ok(out)
    }

    /// Multiplies the amplitude of `n` photons in `mode` by `exp(i n phi)`.
    pub fn apply_phase(&self, mode: ModeLabel, phi: f64) -> Result<Self> {
        let m = self.registry.index_of(mode)?;
        let mut out = self.clone();
        for (occ, a) in out.amps.iter_mut() {
            *a *= Complex64::from_polar(1.0, phi * f64::from(occ[m]));
        }
        Ok(out)
    }

    /// Applies a passive two-mode transformation given by its creation-operator
    /// transfer matrix. Photon number is conserved, so nothing leaks.
    pub fn apply_two_mode_unitary(
        &self,
        first: ModeLabel,
        second: ModeLabel,
        u: &TwoModeUnitary,
    ) -> Result<Self> {
        let i = self.registry.index_of(first)?;
        let j = self.registry.index_of(second)?;
        if i == j {
            return Err(Error::InvalidState(format!(
                "two-mode operation needs distinct modes, got {first} twice"
            )));
        }
        let mut amps: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in &self.amps {
            let (m, n) = (u32::from(occ[i]), u32::from(occ[j]));
            if m == 0 && n == 0 {
                *amps.entry(occ.clone()).or_default() += amp;
                continue;
            }
            let norm_in = (factorial(m) * factorial(n)).sqrt();
            // (u00 a + u10 b)^m (u01 a + u11 b)^n acting on vacuum.
            for p in 0..=m {
                let cp = binomial(m, p) * u[0][0].powu(p) * u[1][0].powu(m - p);
                if cp == Complex64::default() {
                    continue;
                }
                for q in 0..=n {
                    let cq = binomial(n, q) * u[0][1].powu(q) * u[1][1].powu(n - q);
                    if cq == Complex64::default() {
                        continue;
                    }
                    let out_a = p + q;
                    let out_b = m + n - out_a;
                    let norm_out = (factorial(out_a) * factorial(out_b)).sqrt();
                    let mut target = occ.clone();
                    target[i] = out_a as u8;
                    target[j] = out_b as u8;
                    *amps.entry(target).or_default() += amp * cp * cq * (norm_out / norm_in);
                }
            }
        }
        let mut out = Self {
            registry: Arc::clone(&self.registry),
            cutoff: self.cutoff,
            amps,
            leakage: self.leakage,
        };
        out.prune();
        Ok(out)
    }

    /// Beamsplitter with intensity transmissivity `t` and phase `phi`:
    /// `a^† -> sqrt(t) a^† + e^{i phi} sqrt(1-t) b^†`,
    /// `b^† -> -e^{-i phi} sqrt(1-t) a^† + sqrt(t) b^†`.
    pub fn apply_beamsplitter(
        &self,
        a: ModeLabel,
        b: ModeLabel,
        t: f64,
        phi: f64,
    ) -> Result<Self> {
        check_unit("beamsplitter transmissivity", t)?;
        self.apply_two_mode_unitary(a, b, &beamsplitter_matrix(t, phi))
    }

    /// Kraus decomposition of pure loss with transmissivity `eta` on `mode`.
    /// Entry `k` is the (unnormalised) branch in which `k` photons were lost.
    pub fn loss_branches(&self, mode: ModeLabel, eta: f64) -> Result<Vec<Self>> {
        check_unit("loss transmissivity", eta)?;
        let m = self.registry.index_of(mode)?;
        let n_max = self.amps.keys().map(|o| o[m]).max().unwrap_or(0);
        let mut branches = Vec::with_capacity(usize::from(n_max) + 1);
        for k in 0..=u32::from(n_max) {
            let mut amps = BTreeMap::new();
            for (occ, amp) in &self.amps {
                let n = u32::from(occ[m]);
                if k > n {
                    continue;
                }
                let c = loss_kraus_coeff(n, k, eta);
                if c == 0.0 {
                    continue;
                }
                let mut target = occ.clone();
                target[m] = (n - k) as u8;
                amps.insert(target, amp * c);
            }
            let mut branch = Self {
                registry: Arc::clone(&self.registry),
                cutoff: self.cutoff,
                amps,
                leakage: 0.0,
            };
            branch.prune();
            if !branch.is_empty() {
                branches.push(branch);
            }
        }
        if let Some(first) = branches.first_mut() {
            first.leakage = self.leakage;
        }
        Ok(branches)
    }

    /// Partial projection onto the Fock basis of `modes`: groups the state by
    /// the occupation pattern of those modes and returns, per pattern, the
    /// unnormalised conditional state of the remaining modes.
    pub fn split_on(&self, modes: &[ModeLabel]) -> Result<BTreeMap<Occupation, Self>> {
        let idx: Vec<usize> = modes
            .iter()
            .map(|&m| self.registry.index_of(m))
            .collect::<Result<_>>()?;
        let rest_labels: Vec<ModeLabel> = self
            .registry
            .labels()
            .iter()
            .copied()
            .filter(|l| !modes.contains(l))
            .collect();
        let rest_idx: Vec<usize> = (0..self.registry.len())
            .filter(|i| !idx.contains(i))
            .collect();
        let rest = Arc::new(ModeRegistry::new(rest_labels)?);
        let mut out: BTreeMap<Occupation, Self> = BTreeMap::new();
        for (occ, amp) in &self.amps {
            let key: Occupation = idx.iter().map(|&i| occ[i]).collect();
            let sub: Occupation = rest_idx.iter().map(|&i| occ[i]).collect();
            out.entry(key)
                .or_insert_with(|| Self::zero(Arc::clone(&rest), self.cutoff))
                .amps
                .insert(sub, *amp);
        }
        Ok(out)
    }

    /// Keeps only amplitudes whose occupation satisfies `keep`.
    pub fn filtered(&self, keep: impl Fn(&[u8]) -> bool) -> Self {
        let mut out = self.clone();
        out.amps.retain(|occ, _| keep(occ));
        out
    }

    /// Removes a mode that is known to be empty.
    pub fn drop_vacuum_mode(&self, mode: ModeLabel) -> Result<Self> {
        let (registry, i) = self.registry.without(mode)?;
        let mut amps = BTreeMap::new();
        for (occ, amp) in &self.amps {
            if occ[i] != 0 {
                return Err(Error::NotVacuum(mode));
            }
            let mut o = occ.clone();
            o.remove(i);
            amps.insert(o, *amp);
        }
        Ok(Self {
            registry: Arc::new(registry),
            cutoff: self.cutoff,
            amps,
            leakage: self.leakage,
        })
    }

    /// Same amplitudes on a registry with identical size but different labels.
    pub fn relabeled(&self, registry: Arc<ModeRegistry>) -> Result<Self> {
        if registry.len() != self.registry.len() {
            return Err(Error::InvalidState("relabel must preserve the mode count".into()));
        }
        Ok(Self {
            registry,
            ..self.clone()
        })
    }

    /// Records norm known to be lost to truncation (for closed-form tails).
    pub(crate) fn with_leakage(mut self, leakage: f64) -> Self {
        self.leakage = leakage;
        self
    }

    pub(crate) fn add_assign(&mut self, other: &OccupationState) {
        debug_assert_eq!(self.registry, other.registry);
        for (occ, amp) in &other.amps {
            *self.amps.entry(occ.clone()).or_default() += amp;
        }
        self.leakage += other.leakage;
        self.prune();
    }
}

pub fn beamsplitter_matrix(t: f64, phi: f64) -> TwoModeUnitary {
    let r = (1.0 - t).sqrt();
    let s = t.sqrt();
    [
        [Complex64::new(s, 0.0), -Complex64::from_polar(r, -phi)],
        [Complex64::from_polar(r, phi), Complex64::new(s, 0.0)],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ModeLabel, Party, Polarization};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    const A: ModeLabel = ModeLabel::new(Party::Alice, Polarization::H);
    const B: ModeLabel = ModeLabel::new(Party::Bob, Polarization::H);

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn two_mode(terms: &[([u8; 2], Complex64)], cutoff: u32) -> OccupationState {
        let reg = Arc::new(ModeRegistry::new([A, B]).unwrap());
        OccupationState::from_terms(reg, cutoff, terms.iter().map(|(o, a)| (o.to_vec(), *a)))
            .unwrap()
    }

    fn single(label: ModeLabel, terms: &[(u8, Complex64)]) -> OccupationState {
        let reg = Arc::new(ModeRegistry::single(label));
        OccupationState::from_terms(reg, 4, terms.iter().map(|(n, a)| (vec![*n], *a))).unwrap()
    }

    #[test]
    fn tensor_of_vacua_is_vacuum() {
        let s = single(A, &[(0, c(1.0))]).tensor(&single(B, &[(0, c(1.0))])).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.amplitude(&[0, 0]), c(1.0));
    }

    #[test]
    fn tensor_places_photon_in_first_mode() {
        let s = single(A, &[(1, c(1.0))]).tensor(&single(B, &[(0, c(1.0))])).unwrap();
        assert_eq!(s.amplitude(&[1, 0]), c(1.0));
    }

    #[test]
    fn tensor_distributes_over_superposition() {
        let (a, b) = (c(0.6), Complex64::new(0.0, 0.8));
        let s = single(A, &[(0, a), (1, b)])
            .tensor(&single(B, &[(1, c(1.0))]))
            .unwrap();
        assert_eq!(s.amplitude(&[0, 1]), a);
        assert_eq!(s.amplitude(&[1, 1]), b);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn tensor_rejects_overlapping_registries() {
        let r = single(A, &[(0, c(1.0))]).tensor(&single(A, &[(1, c(1.0))]));
        assert!(matches!(r, Err(Error::RegistryConflict(_))));
    }

    #[test]
    fn tensor_reports_truncation() {
        let a = single(A, &[(3, c(1.0))]);
        let b = single(B, &[(0, c(0.6)), (2, c(0.8))]);
        let s = a.tensor(&b).unwrap();
        assert!((s.leakage() - 0.64).abs() < 1e-12);
        assert!((s.norm_sqr() - 0.36).abs() < 1e-12);
    }

    #[test]
    fn balanced_beamsplitter_splits_single_photon() {
        let s = two_mode(&[([1, 0], c(1.0))], 4);
        let out = s.apply_beamsplitter(A, B, 0.5, 0.0).unwrap();
        assert!((out.amplitude(&[1, 0]) - c(FRAC_1_SQRT_2)).norm() < 1e-14);
        assert!((out.amplitude(&[0, 1]) - c(FRAC_1_SQRT_2)).norm() < 1e-14);
    }

    #[test]
    fn hong_ou_mandel_cancels_coincidences() {
        let s = two_mode(&[([1, 1], c(1.0))], 4);
        let out = s.apply_beamsplitter(A, B, 0.5, 0.0).unwrap();
        assert_eq!(out.amplitude(&[1, 1]), Complex64::default());
        // (|2,0> - |0,2>)/sqrt2 up to the global sign fixed by the convention.
        let a20 = out.amplitude(&[2, 0]);
        let a02 = out.amplitude(&[0, 2]);
        assert!((a20.norm() - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((a20 + a02).norm() < 1e-14);
    }

    #[test]
    fn beamsplitter_leaves_vacuum_alone() {
        let s = two_mode(&[([0, 0], c(1.0))], 4);
        for (t, phi) in [(0.0, 0.0), (0.3, 1.2), (1.0, -2.0)] {
            let out = s.apply_beamsplitter(A, B, t, phi).unwrap();
            assert_eq!(out.amplitude(&[0, 0]), c(1.0));
            assert_eq!(out.len(), 1);
        }
    }

    #[test]
    fn beamsplitter_rejects_bad_transmissivity() {
        let s = two_mode(&[([1, 0], c(1.0))], 4);
        assert!(matches!(
            s.apply_beamsplitter(A, B, 1.5, 0.0),
            Err(Error::Domain { .. })
        ));
        assert!(s.apply_beamsplitter(A, A, 0.5, 0.0).is_err());
    }

    #[test]
    fn phase_examples() {
        let one = single(A, &[(1, c(1.0))]).apply_phase(A, PI).unwrap();
        assert!((one.amplitude(&[1]) + c(1.0)).norm() < 1e-15);
        let two = single(A, &[(2, c(1.0))]).apply_phase(A, PI / 2.0).unwrap();
        assert!((two.amplitude(&[2]) + c(1.0)).norm() < 1e-15);
        let vac = single(A, &[(0, c(1.0))]).apply_phase(A, 0.7).unwrap();
        assert_eq!(vac.amplitude(&[0]), c(1.0));
    }

    #[test]
    fn loss_branches_of_single_photon() {
        let s = single(A, &[(1, c(1.0))]);
        let br = s.loss_branches(A, 0.3).unwrap();
        assert_eq!(br.len(), 2);
        assert!((br[0].amplitude(&[1]).norm_sqr() - 0.3).abs() < 1e-15);
        assert!((br[1].amplitude(&[0]).norm_sqr() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn split_on_groups_by_pattern() {
        let s = two_mode(&[([0, 1], c(0.6)), ([1, 1], c(0.8))], 4);
        let parts = s.split_on(&[A]).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[&vec![0u8]].amplitude(&[1]), c(0.6));
        assert_eq!(parts[&vec![1u8]].amplitude(&[1]), c(0.8));
    }

    #[test]
    fn drop_vacuum_mode_checks_occupation() {
        let s = two_mode(&[([0, 1], c(1.0))], 4);
        let d = s.drop_vacuum_mode(A).unwrap();
        assert_eq!(d.registry().labels(), &[B]);
        assert!(matches!(s.drop_vacuum_mode(B), Err(Error::NotVacuum(_))));
    }
}
