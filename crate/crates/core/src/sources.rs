//! State preparation: coherent light, two-mode squeezed vacuum, the hybrid
//! polarization/photon-number source and the mode-overlap fringe experiment.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, domain, Error, Result};
use crate::fock::{factorial, ModeLabel, ModeRegistry, OccupationState, Party, Polarization};
use crate::optics::{apply_pbs, rotate_to_analyzer, AnalyzerSetting, Port};

/// Largest truncation loss tolerated when preparing a single-source state.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Coherent amplitude of the V-polarized weak laser.
    pub alpha: Complex64,
    /// Squeezing parameter of the pair source.
    pub gamma: Complex64,
    /// H-polarized probe amplitude, used only by the fringe experiment.
    pub beta: Complex64,
    /// Mode overlap between the pair photons and the laser light.
    pub m: f64,
    pub cutoff: u32,
}

impl SourceParams {
    /// Real, non-negative amplitudes from mean photon numbers.
    pub fn from_intensities(alpha2: f64, gamma2: f64, m: f64, cutoff: u32) -> Self {
        Self {
            alpha: Complex64::new(alpha2.max(0.0).sqrt(), 0.0),
            gamma: Complex64::new(gamma2.max(0.0).sqrt(), 0.0),
            beta: Complex64::default(),
            m,
            cutoff,
        }
    }

    pub fn with_beta(mut self, beta2: f64) -> Self {
        self.beta = Complex64::new(beta2.max(0.0).sqrt(), 0.0);
        self
    }

    /// `|alpha beta| / |gamma|`; the fringe estimates `M` only when this is 1.
    pub fn balance_ratio(&self) -> f64 {
        self.alpha.norm() * self.beta.norm() / self.gamma.norm()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("|alpha|^2", self.alpha.norm_sqr()),
            ("|gamma|^2", self.gamma.norm_sqr()),
            ("|beta|^2", self.beta.norm_sqr()),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(domain(name, v, "[0, 1)"));
            }
        }
        check_unit("mode overlap M", self.m)
    }
}

/// Which end user a hybrid source belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Station {
    Alice,
    Bob,
}

/// Mode labels used by one station's hybrid source.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StationModes {
    /// Polarization qubit port kept by the user.
    pub port: Port,
    /// Orthogonal temporal mode of the user's port (mode mismatch).
    pub aux_port: Port,
    /// Photon-number qubit mode sent to the middle station.
    pub channel: ModeLabel,
    /// Orthogonal temporal mode of the channel photon.
    pub aux_channel: ModeLabel,
}

impl Station {
    pub const fn modes(self) -> StationModes {
        let (user, chan, k) = match self {
            Station::Alice => (Party::Alice, Party::Channel1, 0),
            Station::Bob => (Party::Bob, Party::Channel2, 2),
        };
        StationModes {
            port: Port::new(
                ModeLabel::new(user, Polarization::H),
                ModeLabel::new(user, Polarization::V),
            ),
            aux_port: Port::new(
                ModeLabel::new(Party::Aux(k), Polarization::H),
                ModeLabel::new(Party::Aux(k), Polarization::V),
            ),
            channel: ModeLabel::scalar(chan),
            aux_channel: ModeLabel::scalar(Party::Aux(k + 1)),
        }
    }
}

fn check_leakage(state: OccupationState) -> Result<OccupationState> {
    if state.leakage() > LEAKAGE_LIMIT {
        return Err(Error::Leakage {
            leakage: state.leakage(),
            limit: LEAKAGE_LIMIT,
        });
    }
    Ok(state)
}

/// `e^{-|alpha|^2/2} sum_n alpha^n / sqrt(n!) |n>` truncated at `cutoff`.
pub fn coherent_state(alpha: Complex64, m: ModeLabel, cutoff: u32) -> Result<OccupationState> {
    if cutoff < 1 {
        return Err(Error::Cutoff {
            cutoff,
            reason: "a coherent state needs at least one photon",
        });
    }
    let reg = Arc::new(ModeRegistry::single(m));
    let pre = (-alpha.norm_sqr() / 2.0).exp();
    let terms = (0..=cutoff).map(|n| {
        let amp = alpha.powu(n) * (pre / factorial(n).sqrt());
        (vec![n as u8], amp)
    });
    let s = OccupationState::from_terms(reg, cutoff, terms)?;
    let leak = (1.0 - s.norm_sqr()).max(0.0);
    check_leakage(s.with_leakage(leak))
}

/// `sqrt(1-|gamma|^2) sum_n gamma^n |n>_mh |n>_mv`, keeping `2n <= cutoff`.
pub fn tmsv_state(
    gamma: Complex64,
    mh: ModeLabel,
    mv: ModeLabel,
    cutoff: u32,
) -> Result<OccupationState> {
    let g2 = gamma.norm_sqr();
    if g2 >= 1.0 {
        return Err(domain("|gamma|^2", g2, "[0, 1)"));
    }
    if cutoff < 2 {
        return Err(Error::Cutoff {
            cutoff,
            reason: "a pair source needs room for one pair",
        });
    }
    let reg = Arc::new(ModeRegistry::new([mh, mv])?);
    let pre = (1.0 - g2).sqrt();
    let terms = (0..=cutoff / 2).map(|n| (vec![n as u8, n as u8], gamma.powu(n) * pre));
    let s = OccupationState::from_terms(reg, cutoff, terms)?;
    let leak = (1.0 - s.norm_sqr()).max(0.0);
    check_leakage(s.with_leakage(leak))
}

fn vacuum(labels: &[ModeLabel], cutoff: u32) -> Result<OccupationState> {
    Ok(OccupationState::vacuum(
        Arc::new(ModeRegistry::new(labels.iter().copied())?),
        cutoff,
    ))
}

/// Hybrid entangled state of one station: pair source and V-polarized weak
/// laser combined on a PBS. The user keeps `port`; `channel` carries the
/// photon-number qubit. For `M < 1` each pair photon is split with amplitude
/// `sqrt(M)` into the laser's temporal mode and `sqrt(1-M)` into an
/// orthogonal auxiliary mode.
///
/// Registry order: `port.h, port.v, channel` and, when `M < 1`,
/// `aux_port.h, aux_port.v, aux_channel`. Joint truncation of the two input
/// states is reported through [`OccupationState::leakage`].
pub fn hybrid_source(p: &SourceParams, station: Station) -> Result<OccupationState> {
    p.validate()?;
    if p.cutoff < 4 {
        return Err(Error::Cutoff {
            cutoff: p.cutoff,
            reason: "the hybrid source needs 4 photons for its second-order terms",
        });
    }
    let sm = station.modes();
    let chan_party = sm.channel.party;
    let ch_h = ModeLabel::new(chan_party, Polarization::H);
    let ch_v = ModeLabel::new(chan_party, Polarization::V);

    let pair = tmsv_state(p.gamma, sm.port.h, sm.port.v, p.cutoff)?;
    let laser = coherent_state(p.alpha, ch_v, p.cutoff)?;
    let joint = pair.tensor(&laser)?.tensor(&vacuum(&[ch_h], p.cutoff)?)?;
    let mixed = apply_pbs(&joint, sm.port, Port::new(ch_h, ch_v))?;
    let mixed = mixed.drop_vacuum_mode(ch_h)?;
    let labels = mixed
        .registry()
        .labels()
        .iter()
        .map(|&l| if l == ch_v { sm.channel } else { l });
    let mut state = mixed.relabeled(Arc::new(ModeRegistry::new(labels)?))?;

    if p.m < 1.0 {
        state = state.tensor(&vacuum(
            &[sm.aux_port.h, sm.aux_port.v, sm.aux_channel],
            p.cutoff,
        )?)?;
        state = state.apply_beamsplitter(sm.port.h, sm.aux_port.h, p.m, 0.0)?;
        state = state.apply_beamsplitter(sm.channel, sm.aux_channel, p.m, 0.0)?;
    }
    Ok(state)
}

/// Modes of the fringe experiment: the user port, the channel port (with
/// both polarizations) and one auxiliary temporal mode pair for each.
#[derive(Clone, Copy, Debug)]
pub struct FringeModes {
    pub a: Port,
    pub a_aux: Port,
    pub c: Port,
    pub c_aux: Port,
}

pub const FRINGE_MODES: FringeModes = FringeModes {
    a: Port::new(
        ModeLabel::new(Party::Alice, Polarization::H),
        ModeLabel::new(Party::Alice, Polarization::V),
    ),
    a_aux: Port::new(
        ModeLabel::new(Party::Aux(0), Polarization::H),
        ModeLabel::new(Party::Aux(0), Polarization::V),
    ),
    c: Port::new(
        ModeLabel::new(Party::Channel1, Polarization::H),
        ModeLabel::new(Party::Channel1, Polarization::V),
    ),
    c_aux: Port::new(
        ModeLabel::new(Party::Aux(1), Polarization::H),
        ModeLabel::new(Party::Aux(1), Polarization::V),
    ),
};

/// Input of the fringe experiment before the phase is applied: pair photons
/// in `A_H` and `C_V`, laser `alpha` in `A_V`, probe `beta` in `C_H`, and the
/// mismatch split on both pair photons.
fn fringe_state(p: &SourceParams) -> Result<OccupationState> {
    p.validate()?;
    let f = FRINGE_MODES;
    let pair = tmsv_state(p.gamma, f.a.h, f.c.v, p.cutoff)?;
    let s = pair
        .tensor(&coherent_state(p.alpha, f.a.v, p.cutoff)?)?
        .tensor(&coherent_state(p.beta, f.c.h, p.cutoff)?)?
        .tensor(&vacuum(
            &[f.a_aux.h, f.a_aux.v, f.c_aux.h, f.c_aux.v],
            p.cutoff,
        )?)?;
    s.apply_beamsplitter(f.a.h, f.a_aux.h, p.m, 0.0)?
        .apply_beamsplitter(f.c.v, f.c_aux.v, p.m, 0.0)
}

/// Probability that threshold detectors behind analyzers `a` (user port)
/// and `c` (channel port) both click. Photons in the auxiliary temporal
/// modes are detected as well.
fn fringe_coincidence(
    s: &OccupationState,
    a: AnalyzerSetting,
    c: AnalyzerSetting,
) -> Result<f64> {
    let f = FRINGE_MODES;
    let mut r = s.clone();
    for port in [f.a, f.a_aux] {
        r = rotate_to_analyzer(&r, port, a)?;
    }
    for port in [f.c, f.c_aux] {
        r = rotate_to_analyzer(&r, port, c)?;
    }
    let reg = r.registry();
    let ia = [reg.index_of(f.a.h)?, reg.index_of(f.a_aux.h)?];
    let ic = [reg.index_of(f.c.h)?, reg.index_of(f.c_aux.h)?];
    Ok(r.iter()
        .filter(|(occ, _)| r.photons_in(occ, &ia) > 0 && r.photons_in(occ, &ic) > 0)
        .map(|(_, amp)| amp.norm_sqr())
        .sum())
}

/// Diagonal-basis coincidence probability for each relative phase.
pub fn visibility_scan(p: &SourceParams, thetas: &[f64]) -> Result<Vec<f64>> {
    let base = fringe_state(p)?;
    let point = |&theta: &f64| -> Result<f64> {
        let s = base.apply_phase(FRINGE_MODES.a.v, -theta)?;
        fringe_coincidence(&s, AnalyzerSetting::D, AnalyzerSetting::D)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        thetas.par_iter().map(point).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        thetas.iter().map(point).collect()
    }
}

/// Evenly spaced phases over `[0, 2 pi)`.
pub fn default_theta_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| TAU * k as f64 / points as f64).collect()
}

pub const DEFAULT_SCAN_POINTS: usize = 64;

/// Coincidences after projecting onto `|1_V>_A|1_V>_C` and `|1_H>_A|1_H>_C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Backgrounds {
    pub p_vv: f64,
    pub p_hh: f64,
}

pub fn visibility_background(p: &SourceParams) -> Result<Backgrounds> {
    let s = fringe_state(p)?;
    Ok(Backgrounds {
        p_vv: fringe_coincidence(&s, AnalyzerSetting::V, AnalyzerSetting::V)?,
        p_hh: fringe_coincidence(&s, AnalyzerSetting::H, AnalyzerSetting::H)?,
    })
}

/// Fraction of each background that leaks into the diagonal coincidence:
/// both photons of a multiphoton term pass a diagonal analyzer with
/// probability 1/2 each.
pub const BACKGROUND_WEIGHT: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibilityFit {
    pub visibility: f64,
    /// Fitted offset after background subtraction.
    pub offset: f64,
    /// Fitted fringe amplitude.
    pub amplitude: f64,
    /// Phase of the fringe maximum.
    pub phase_max: f64,
}

/// Least-squares fit of `a + b cos(theta) + c sin(theta)` to the
/// background-subtracted scan; visibility `sqrt(b^2 + c^2) / a`.
pub fn extract_visibility(
    thetas: &[f64],
    scan: &[f64],
    backgrounds: Option<Backgrounds>,
) -> Result<VisibilityFit> {
    if thetas.len() != scan.len() || thetas.len() < 3 {
        return Err(Error::InvalidState(
            "visibility fit needs at least three matching phase/probability points".into(),
        ));
    }
    let bg = backgrounds.map_or(0.0, |b| BACKGROUND_WEIGHT * (b.p_vv + b.p_hh));
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (&t, &y) in thetas.iter().zip(scan) {
        let row = Vector3::new(1.0, t.cos(), t.sin());
        ata += row * row.transpose();
        aty += row * (y - bg);
    }
    let coef = ata
        .lu()
        .solve(&aty)
        .ok_or_else(|| Error::Numerical("singular fringe fit (degenerate phase grid)".into()))?;
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    let amp = b.hypot(c);
    let scale = scan.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let visibility = if a <= 0.0 || amp <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        0.0
    } else {
        amp / a
    };
    Ok(VisibilityFit {
        visibility,
        offset: a,
        amplitude: amp,
        phase_max: c.atan2(b),
    })
}

/// Interference balance `|alpha||beta| / |gamma|`; the fitted visibility
/// equals the mode overlap only when this is 1.
pub fn balance_ratio(p: &SourceParams) -> f64 {
    p.alpha.norm() * p.beta.norm() / p.gamma.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    const AH: ModeLabel = ModeLabel::new(Party::Alice, Polarization::H);
    const AV: ModeLabel = ModeLabel::new(Party::Alice, Polarization::V);

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn coherent_examples() {
        let v = coherent_state(c(0.0), AH, 4).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.amplitude(&[0]), c(1.0));
        let alpha = 0.1f64.sqrt();
        let s = coherent_state(c(alpha), AH, 4).unwrap();
        let ratio = s.amplitude(&[1]) / s.amplitude(&[0]);
        assert!((ratio.re - alpha).abs() < 1e-15);
        assert!(1.0 - s.norm_sqr() < 1e-6);
        assert!(matches!(coherent_state(c(0.3), AH, 0), Err(Error::Cutoff { .. })));
        assert!(matches!(coherent_state(c(1.0), AH, 2), Err(Error::Leakage { .. })));
    }

    #[test]
    fn tmsv_examples() {
        let v = tmsv_state(c(0.0), AH, AV, 4).unwrap();
        assert_eq!(v.len(), 1);
        let g2: f64 = 6.0e-3;
        let s = tmsv_state(c(g2.sqrt()), AH, AV, 4).unwrap();
        let ratio = s.amplitude(&[2, 2]).norm_sqr() / s.amplitude(&[1, 1]).norm_sqr();
        assert!((ratio - g2).abs() < 1e-15);
        let s = tmsv_state(c(0.1), AH, AV, 6).unwrap();
        assert!((s.amplitude(&[0, 0]).re - 0.99499).abs() < 5e-6);
        assert!((s.amplitude(&[1, 1]).re - 0.099499).abs() < 5e-7);
        assert!((s.amplitude(&[2, 2]).re - 0.0099499).abs() < 5e-8);
    }

    #[test]
    fn hybrid_vacuum_and_first_order() {
        let p = SourceParams::from_intensities(0.0, 0.0, 1.0, 4);
        let v = hybrid_source(&p, Station::Alice).unwrap();
        assert_eq!(v.len(), 1);

        let (a2, g2) = (1e-6, 1e-8);
        let p = SourceParams::from_intensities(a2, g2, 1.0, 4);
        let s = hybrid_source(&p, Station::Alice).unwrap();
        let labels: Vec<String> = s.registry().labels().iter().map(|l| l.to_string()).collect();
        assert_eq!(labels, ["A_H", "A_V", "C1"]);
        let vac = s.amplitude(&[0, 0, 0]);
        let rel = |occ: [u8; 3], want: f64| {
            let got = (s.amplitude(&occ) / vac).re;
            assert!((got - want).abs() <= 1e-4 * want, "{occ:?}: {got} vs {want}");
        };
        rel([0, 1, 0], a2.sqrt());
        rel([1, 0, 1], g2.sqrt());
    }

    #[test]
    fn hybrid_second_order_weights() {
        let (a2, g2): (f64, f64) = (0.1, 6e-3);
        let p = SourceParams::from_intensities(a2, g2, 1.0, 4);
        let s = hybrid_source(&p, Station::Bob).unwrap();
        let vac = s.amplitude(&[0, 0, 0]);
        let r = |occ: [u8; 3]| (s.amplitude(&occ) / vac).re;
        let (a, g) = (a2.sqrt(), g2.sqrt());
        assert!((r([0, 2, 0]) - a * a * FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((r([2, 0, 2]) - g * g).abs() < 1e-14);
        assert!((r([1, 1, 1]) - a * g).abs() < 1e-14);
    }

    #[test]
    fn hybrid_rejects_small_cutoff() {
        let p = SourceParams::from_intensities(0.1, 6e-3, 1.0, 3);
        assert!(matches!(hybrid_source(&p, Station::Alice), Err(Error::Cutoff { .. })));
    }

    #[test]
    fn hybrid_with_mismatch_adds_aux_modes() {
        let p = SourceParams::from_intensities(1e-4, 1e-6, 0.5, 4);
        let s = hybrid_source(&p, Station::Alice).unwrap();
        assert_eq!(s.registry().len(), 6);
        let vac = s.amplitude(&[0; 6]);
        // gamma * sqrt(M) * sqrt(M) stays in the reference modes.
        let r = (s.amplitude(&[1, 0, 1, 0, 0, 0]) / vac).re;
        assert!((r - 1e-3 * 0.5).abs() < 1e-9);
    }

    fn balanced(m: f64) -> SourceParams {
        SourceParams::from_intensities(1e-4, 1e-8, m, 4).with_beta(1e-4)
    }

    #[test]
    fn perfect_fringe() {
        let p = balanced(1.0);
        let scan = visibility_scan(&p, &[0.0, PI]).unwrap();
        let g2 = 1e-8;
        assert!((scan[0] - g2).abs() < 1e-3 * g2);
        assert!(scan[1] < 1e-3 * g2);
    }

    #[test]
    fn recovers_overlap() {
        let thetas = default_theta_grid(DEFAULT_SCAN_POINTS);
        for m in [0.0, 0.25, 0.881, 1.0] {
            let p = balanced(m);
            let scan = visibility_scan(&p, &thetas).unwrap();
            let bg = visibility_background(&p).unwrap();
            let fit = extract_visibility(&thetas, &scan, Some(bg)).unwrap();
            assert!((fit.visibility - m).abs() < 1e-3, "M={m}: {}", fit.visibility);
        }
    }

    #[test]
    fn background_examples() {
        let p = SourceParams::from_intensities(1e-4, 0.0, 1.0, 4).with_beta(1e-4);
        let bg = visibility_background(&p).unwrap();
        assert_eq!((bg.p_vv, bg.p_hh), (0.0, 0.0));
        let p = SourceParams::from_intensities(0.0, 1e-6, 1.0, 4).with_beta(1e-4);
        assert_eq!(visibility_background(&p).unwrap().p_vv, 0.0);
        let p = SourceParams::from_intensities(1e-4, 1e-6, 1.0, 4).with_beta(4e-4);
        let bg = visibility_background(&p).unwrap();
        assert!((bg.p_vv / (1e-6 * 1e-4) - 1.0).abs() < 1e-3);
        assert!((bg.p_hh / (1e-6 * 4e-4) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn balance_ratio_examples() {
        let p = SourceParams::from_intensities(1e-4, 1e-8, 1.0, 4).with_beta(1e-4);
        assert!((p.balance_ratio() - 1.0).abs() < 1e-12);
        let p = SourceParams::from_intensities(1e-4, 1e-6, 1.0, 4).with_beta(4e-4);
        assert!((p.balance_ratio() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn flat_scan_has_no_visibility() {
        let thetas = default_theta_grid(16);
        let fit = extract_visibility(&thetas, &[0.3; 16], None).unwrap();
        assert_eq!(fit.visibility, 0.0);
    }
}
