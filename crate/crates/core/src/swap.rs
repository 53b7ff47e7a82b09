//! Single-click entanglement swapping between two hybrid sources, and the
//! leading-order analytic noise model.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, domain, Error, Result};
use crate::fock::{DensityOperator, FockBasis, Mixture, ModeLabel, ModeRegistry, OccupationState};
use crate::optics::{rotate_to_analyzer, Port};
use crate::qubit::{psi_plus, QubitDensity};
use crate::sources::{hybrid_source, SourceParams, Station};
use crate::tomography::{
    reconstruct_linear_weights, reconstruct_mle_weights, settings, MeasurementSetting, SettingSet,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};

/// Dense A/B density operators are only built up to this dimension.
pub const FULL_DENSITY_MAX_DIM: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Total transmittance of both arms; each arm gets `sqrt(eta_c)`.
    pub eta_c: f64,
    /// Local collection efficiency on the user modes.
    pub eta_lc: f64,
    /// Detector efficiency, identical for every detector.
    pub eta_d: f64,
    /// Standard deviation of the residual relative phase (radians).
    pub phase_drift_sigma: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            eta_c: 0.066,
            eta_lc: 0.2,
            eta_d: 0.12,
            phase_drift_sigma: 0.0,
        }
    }
}

impl ChannelParams {
    /// Lossless channel with perfect local optics and detectors.
    pub fn ideal(eta_c: f64) -> Self {
        Self {
            eta_c,
            eta_lc: 1.0,
            eta_d: 1.0,
            phase_drift_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("eta_c", self.eta_c)?;
        check_unit("eta_lc", self.eta_lc)?;
        check_unit("eta_d", self.eta_d)?;
        if !(self.phase_drift_sigma >= 0.0 && self.phase_drift_sigma.is_finite()) {
            return Err(domain("phase_drift_sigma", self.phase_drift_sigma, "[0, inf)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct HeraldedResult {
    /// Coincidence-post-selected polarization state.
    pub rho_qubit: QubitDensity,
    /// Normalised click-conditioned state of all user modes (when small enough).
    pub rho_full: Option<DensityOperator>,
    /// Probability per pulse of a herald click with at least one photon at
    /// each user.
    pub herald_prob: f64,
    /// Raw probability per pulse of a herald click.
    pub click_prob: f64,
    /// Share of `herald_prob` with exactly one photon per user.
    pub qubit_weight: f64,
    /// `<psi+|rho_qubit|psi+>`
    pub fidelity: f64,
    /// Overlap of the click-conditioned user state with the ideal
    /// one-photon-per-side state.
    pub sector_fidelity: f64,
    /// Whether linear inversion already gave a positive matrix.
    pub linear_physical: bool,
    /// Norm lost to the photon-number cutoff.
    pub leakage: f64,
}

struct Layout {
    a_ports: Vec<Port>,
    b_ports: Vec<Port>,
    aux_channels: Vec<ModeLabel>,
}

fn layout(src_a: &SourceParams, src_b: &SourceParams) -> Layout {
    let (ma, mb) = (Station::Alice.modes(), Station::Bob.modes());
    let mut l = Layout {
        a_ports: vec![ma.port],
        b_ports: vec![mb.port],
        aux_channels: Vec::new(),
    };
    if src_a.m < 1.0 {
        l.a_ports.push(ma.aux_port);
        l.aux_channels.push(ma.aux_channel);
    }
    if src_b.m < 1.0 {
        l.b_ports.push(mb.aux_port);
        l.aux_channels.push(mb.aux_channel);
    }
    l
}

/// Gaussian dephasing of `mode`: coherences between photon numbers k and l
/// are damped by `exp(-sigma^2 (k - l)^2 / 2)`. Exact, via the eigenvectors
/// of the (positive) damping kernel.
fn dephase(mix: &Mixture, mode: ModeLabel, sigma: f64) -> Result<Mixture> {
    if sigma == 0.0 {
        return Ok(mix.clone());
    }
    let mut out = Vec::new();
    for b in mix.branches() {
        let idx = b.registry().index_of(mode)?;
        let mut ns: Vec<u8> = b.iter().map(|(occ, _)| occ[idx]).collect();
        ns.sort_unstable();
        ns.dedup();
        let parts: BTreeMap<u8, OccupationState> = ns
            .iter()
            .map(|&n| (n, b.filtered(|occ| occ[idx] == n)))
            .collect();
        let k = ns.len();
        let g = DMatrix::from_fn(k, k, |i, j| {
            let d = f64::from(ns[i]) - f64::from(ns[j]);
            (-sigma * sigma * d * d / 2.0).exp()
        });
        let eig = g.symmetric_eigen();
        for m in 0..k {
            let lam = eig.eigenvalues[m];
            if lam <= 1e-15 {
                continue;
            }
            let mut acc = OccupationState::zero(Arc::clone(b.registry()), b.cutoff());
            for (i, n) in ns.iter().enumerate() {
                let c = eig.eigenvectors[(i, m)] * lam.sqrt();
                acc.add_assign(&parts[n].scaled(Complex64::new(c, 0.0)));
            }
            if !acc.is_empty() {
                out.push(acc);
            }
        }
    }
    Mixture::from_branches(out)
}

/// Heralded user-mode ensemble plus the raw click probability.
fn herald(
    src_a: &SourceParams,
    src_b: &SourceParams,
    ch: &ChannelParams,
) -> Result<(Mixture, f64, f64)> {
    ch.validate()?;
    if src_a.cutoff != src_b.cutoff {
        return Err(Error::CutoffMismatch(src_a.cutoff, src_b.cutoff));
    }
    let (ma, mb) = (Station::Alice.modes(), Station::Bob.modes());
    let (c1, c2) = (ma.channel, mb.channel);
    let lay = layout(src_a, src_b);

    let joint = hybrid_source(src_a, Station::Alice)?.tensor(&hybrid_source(src_b, Station::Bob)?)?;
    let leakage = joint.leakage();
    let arm = ch.eta_c.sqrt();
    let mix = Mixture::pure(joint).apply_loss(c1, arm)?.apply_loss(c2, arm)?;
    let mix = dephase(&mix, c2, ch.phase_drift_sigma)?;
    let mix = mix.map(|s| s.apply_beamsplitter(c1, c2, 0.5, 0.0))?;

    // Herald detector sits on C2, which carries (C1 + C2)/sqrt2. Auxiliary
    // channel photons are orthogonal to everything else and reach that port
    // with probability 1/2.
    let eta_aux = arm * 0.5 * ch.eta_d;
    let mut traced = vec![c1, c2];
    traced.extend(&lay.aux_channels);
    let mut branches = Vec::new();
    let mut click_prob = 0.0;
    for b in mix.branches() {
        for (pattern, cond) in b.split_on(&traced)? {
            let n_main = i32::from(pattern[1]);
            let n_aux: i32 = pattern[2..].iter().map(|&n| i32::from(n)).sum();
            let miss = (1.0 - ch.eta_d).powi(n_main) * (1.0 - eta_aux).powi(n_aux);
            let w = 1.0 - miss;
            if w <= 0.0 || cond.is_empty() {
                continue;
            }
            click_prob += w * cond.norm_sqr();
            branches.push(cond.scaled(Complex64::new(w.sqrt(), 0.0)));
        }
    }
    if click_prob < 1e-15 {
        return Err(Error::HeraldImpossible(click_prob));
    }
    Ok((Mixture::from_branches(branches)?, click_prob, leakage))
}

/// Coincidence probability of the two user analyzers, each realised as a
/// polarization rotation followed by threshold detection of the accepted
/// output with efficiency `eff` (local collection times detector).
fn analyzer_coincidence(
    mix: &Mixture,
    lay: &Layout,
    s: &MeasurementSetting,
    eff: f64,
) -> Result<f64> {
    let q = 1.0 - eff;
    let mut total = 0.0;
    for b in mix.branches() {
        let mut r = b.clone();
        for &p in &lay.a_ports {
            r = rotate_to_analyzer(&r, p, s.a)?;
        }
        for &p in &lay.b_ports {
            r = rotate_to_analyzer(&r, p, s.b)?;
        }
        let reg = r.registry();
        let ia: Vec<usize> = lay.a_ports.iter().map(|p| reg.index_of(p.h)).collect::<Result<_>>()?;
        let ib: Vec<usize> = lay.b_ports.iter().map(|p| reg.index_of(p.h)).collect::<Result<_>>()?;
        for (occ, amp) in r.iter() {
            let na = r.photons_in(occ, &ia) as i32;
            let nb = r.photons_in(occ, &ib) as i32;
            if na > 0 && nb > 0 {
                total += amp.norm_sqr() * (1.0 - q.powi(na)) * (1.0 - q.powi(nb));
            }
        }
    }
    Ok(total)
}

fn side_indices(reg: &ModeRegistry, ports: &[Port]) -> Result<Vec<usize>> {
    let mut v = Vec::new();
    for p in ports {
        v.push(reg.index_of(p.h)?);
        v.push(reg.index_of(p.v)?);
    }
    Ok(v)
}

/// Runs the full protocol: hybrid sources, lossy arms, 50:50 interference,
/// threshold herald, then coincidence-post-selected tomography of the users'
/// polarization state over the 36 analyzer settings.
pub fn run_swap(
    src_a: &SourceParams,
    src_b: &SourceParams,
    ch: &ChannelParams,
) -> Result<HeraldedResult> {
    let (mix, click_prob, leakage) = herald(src_a, src_b, ch)?;
    let lay = layout(src_a, src_b);
    let reg = Arc::clone(mix.registry().expect("non-empty after a click"));
    let ia = side_indices(&reg, &lay.a_ports)?;
    let ib = side_indices(&reg, &lay.b_ports)?;

    let (mut both, mut single) = (0.0, 0.0);
    for b in mix.branches() {
        for (occ, amp) in b.iter() {
            let (na, nb) = (b.photons_in(occ, &ia), b.photons_in(occ, &ib));
            if na > 0 && nb > 0 {
                both += amp.norm_sqr();
                if na == 1 && nb == 1 {
                    single += amp.norm_sqr();
                }
            }
        }
    }
    let herald_prob = both;
    let qubit_weight = if both > 0.0 { single / both } else { 0.0 };

    let sm = settings(SettingSet::Full36);
    let eff = ch.eta_lc * ch.eta_d;
    let weights = sm
        .iter()
        .map(|s| analyzer_coincidence(&mix, &lay, s, eff))
        .collect::<Result<Vec<f64>>>()?;
    if weights.iter().sum::<f64>() < 1e-300 {
        return Err(Error::HeraldImpossible(0.0));
    }
    let lin = reconstruct_linear_weights(&sm, &weights)?;
    let rho_qubit = if lin.physical {
        lin.rho
    } else {
        reconstruct_mle_weights(&sm, &weights, Some(&lin.rho), DEFAULT_MAX_ITER, DEFAULT_TOL)?.rho
    };

    let (ma, mb) = (Station::Alice.modes(), Station::Bob.modes());
    let target = OccupationState::from_terms(
        Arc::clone(&reg),
        src_a.cutoff,
        [
            (occupation(&reg, &[ma.port.h, mb.port.v])?, Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
            (occupation(&reg, &[ma.port.v, mb.port.h])?, Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
        ],
    )?;
    let sector_fidelity = mix
        .branches()
        .iter()
        .map(|b| b.inner(&target).norm_sqr())
        .sum::<f64>()
        / click_prob;

    let basis_dim = {
        // C(n + k, k) occupation vectors of n modes with at most k photons.
        let (n, k) = (reg.len() as u64, u64::from(src_a.cutoff));
        (1..=k).fold(1u64, |acc, i| acc * (n + i) / i) as usize
    };
    let rho_full = if basis_dim <= FULL_DENSITY_MAX_DIM {
        let basis = Arc::new(FockBasis::new(Arc::clone(&reg), src_a.cutoff));
        Some(DensityOperator::from_branches(basis, mix.branches())?.normalize()?.0)
    } else {
        None
    };

    Ok(HeraldedResult {
        fidelity: rho_qubit.fidelity_pure(&psi_plus()),
        rho_qubit,
        rho_full,
        herald_prob,
        click_prob,
        qubit_weight,
        sector_fidelity,
        linear_physical: lin.physical,
        leakage,
    })
}

fn occupation(reg: &ModeRegistry, ones: &[ModeLabel]) -> Result<Vec<u8>> {
    let mut occ = vec![0u8; reg.len()];
    for &m in ones {
        occ[reg.index_of(m)?] += 1;
    }
    Ok(occ)
}

/// Leading-order herald probabilities `(p_ideal, p_noise)`.
pub fn analytic_herald(alpha2: f64, gamma2: f64, eta_c: f64) -> (f64, f64) {
    let s = eta_c.sqrt();
    let ideal = s * alpha2 * gamma2;
    let noise = s * gamma2 * (1.5 * alpha2 * alpha2 + (2.0 - s) * gamma2);
    (ideal, noise)
}

/// `1 / (1 + 3/2 alpha^2 + (2 - sqrt(eta_c)) gamma^2 / alpha^2)`
pub fn analytic_fidelity(alpha2: f64, gamma2: f64, eta_c: f64) -> Result<f64> {
    if alpha2 <= 0.0 {
        return Err(domain("alpha2", alpha2, "(0, 1]"));
    }
    Ok(1.0 / (1.0 + 1.5 * alpha2 + (2.0 - eta_c.sqrt()) * gamma2 / alpha2))
}

/// `(1 + m_a m_b) / 2`
pub fn mismatch_fidelity(m_a: f64, m_b: f64) -> f64 {
    (1.0 + m_a * m_b) / 2.0
}

/// Leading-order unnormalised heralded state on `A_H, A_V, B_H, B_V`.
#[derive(Clone, Debug)]
pub struct AnalyticState {
    pub rho: DensityOperator,
    pub p_ideal: f64,
    pub p_noise: f64,
    /// Weights of `|psi+>`, `|phi1>`, `|phi2>`, `|phi3>`.
    pub weights: [f64; 4],
}

/// Mixture of `|psi+>` with the three leading noise components
/// `|phi1> = (|1_H>|2_V> + |2_V>|1_H>)/sqrt2`,
/// `|phi2> = (|1_H 1_V>|1_V> + |1_V>|1_H 1_V>)/sqrt2`, `|phi3> = |1_H>|1_H>`,
/// weighted so that the trace is `p_ideal + p_noise`.
pub fn analytic_state(alpha2: f64, gamma2: f64, eta_c: f64) -> Result<AnalyticState> {
    for (n, v) in [("alpha2", alpha2), ("gamma2", gamma2), ("eta_c", eta_c)] {
        check_unit(n, v)?;
    }
    let (ma, mb) = (Station::Alice.modes(), Station::Bob.modes());
    let reg = Arc::new(ModeRegistry::new([ma.port.h, ma.port.v, mb.port.h, mb.port.v])?);
    let s = eta_c.sqrt();
    let (p_ideal, p_noise) = analytic_herald(alpha2, gamma2, eta_c);
    let a4g2 = s * alpha2 * alpha2 * gamma2;
    let weights = [p_ideal, 0.5 * a4g2, a4g2, s * (2.0 - s) * gamma2 * gamma2];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let kets: [Vec<([u8; 4], f64)>; 4] = [
        vec![([1, 0, 0, 1], h), ([0, 1, 1, 0], h)],
        vec![([1, 0, 0, 2], h), ([0, 2, 1, 0], h)],
        vec![([1, 1, 0, 1], h), ([0, 1, 1, 1], h)],
        vec![([1, 0, 1, 0], 1.0)],
    ];
    let basis = Arc::new(FockBasis::new(Arc::clone(&reg), 4));
    let branches = kets
        .iter()
        .zip(weights)
        .map(|(k, w)| {
            OccupationState::from_terms(
                Arc::clone(&reg),
                4,
                k.iter().map(|(o, a)| (o.to_vec(), Complex64::new(a * w.sqrt(), 0.0))),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalyticState {
        rho: DensityOperator::from_branches(basis, &branches)?,
        p_ideal,
        p_noise,
        weights,
    })
}

/// Ideal `(|1_H>_A|1_V>_B + |1_V>_A|1_H>_B)/sqrt2` on the registry used by
/// [`analytic_state`].
pub fn analytic_target() -> Result<OccupationState> {
    let (ma, mb) = (Station::Alice.modes(), Station::Bob.modes());
    let reg = Arc::new(ModeRegistry::new([ma.port.h, ma.port.v, mb.port.h, mb.port.v])?);
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    OccupationState::from_terms(reg, 4, [(vec![1, 0, 0, 1], h), (vec![0, 1, 1, 0], h)])
}
