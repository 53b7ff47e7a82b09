//! Passive polarization optics and analyzers.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_unit, Error, Result};
use crate::fock::{
    DensityOperator, FockBasis, FockOperator, ModeLabel, OccupationState, TwoModeUnitary,
};

/// One spatial port with its two polarization modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Port {
    pub h: ModeLabel,
    pub v: ModeLabel,
}

impl Port {
    pub const fn new(h: ModeLabel, v: ModeLabel) -> Self {
        Self { h, v }
    }
}

/// Polarizing beamsplitter: H stays in its port, V swaps ports.
pub fn apply_pbs(s: &OccupationState, a: Port, b: Port) -> Result<OccupationState> {
    let modes = [a.h, a.v, b.h, b.v];
    for i in 0..4 {
        for j in i + 1..4 {
            if modes[i] == modes[j] {
                return Err(Error::RegistryConflict(modes[i]));
            }
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    s.apply_two_mode_unitary(a.v, b.v, &[[zero, one], [one, zero]])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveplateKind {
    Half,
    Quarter,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveplateSetting {
    kind: WaveplateKind,
    angle: f64,
}

impl WaveplateSetting {
    /// Fast-axis angle from H, reduced to `[0, pi)`.
    pub fn new(kind: WaveplateKind, angle: f64) -> Self {
        Self {
            kind,
            angle: angle.rem_euclid(PI),
        }
    }

    pub fn half(angle: f64) -> Self {
        Self::new(WaveplateKind::Half, angle)
    }

    pub fn quarter(angle: f64) -> Self {
        Self::new(WaveplateKind::Quarter, angle)
    }

    pub fn kind(&self) -> WaveplateKind {
        self.kind
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Jones matrix on (H, V); also the creation-operator transfer matrix.
    pub fn jones(&self) -> TwoModeUnitary {
        let (s, c) = self.angle.sin_cos();
        match self.kind {
            WaveplateKind::Half => {
                let (s2, c2) = (2.0 * self.angle).sin_cos();
                [
                    [Complex64::new(c2, 0.0), Complex64::new(s2, 0.0)],
                    [Complex64::new(s2, 0.0), Complex64::new(-c2, 0.0)],
                ]
            }
            WaveplateKind::Quarter => {
                let g = Complex64::from_polar(1.0, -FRAC_PI_4);
                let i = Complex64::i();
                let off = (Complex64::new(1.0, 0.0) - i) * (s * c);
                [
                    [g * (c * c + i * s * s), g * off],
                    [g * off, g * (s * s + i * c * c)],
                ]
            }
        }
    }
}

pub fn apply_waveplate(
    s: &OccupationState,
    port: Port,
    w: WaveplateSetting,
) -> Result<OccupationState> {
    s.apply_two_mode_unitary(port.h, port.v, &w.jones())
}

/// Projection vector `cos(theta)|H> + e^{i delta} sin(theta)|V>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyzerSetting {
    pub theta: f64,
    pub delta: f64,
}

impl AnalyzerSetting {
    pub const H: Self = Self::new(0.0, 0.0);
    pub const V: Self = Self::new(FRAC_PI_2, 0.0);
    pub const D: Self = Self::new(FRAC_PI_4, 0.0);
    pub const A: Self = Self::new(-FRAC_PI_4, 0.0);
    pub const R: Self = Self::new(FRAC_PI_4, FRAC_PI_2);
    pub const L: Self = Self::new(FRAC_PI_4, -FRAC_PI_2);

    pub const fn new(theta: f64, delta: f64) -> Self {
        Self { theta, delta }
    }

    /// Linear polarization at angle `theta` from H.
    pub const fn linear(theta: f64) -> Self {
        Self::new(theta, 0.0)
    }

    pub fn from_letter(c: char) -> Option<Self> {
        Some(match c {
            'H' => Self::H,
            'V' => Self::V,
            'D' => Self::D,
            'A' => Self::A,
            'R' => Self::R,
            'L' => Self::L,
            _ => return None,
        })
    }

    pub fn vector(&self) -> [Complex64; 2] {
        [
            Complex64::new(self.theta.cos(), 0.0),
            Complex64::from_polar(self.theta.sin(), self.delta),
        ]
    }

    pub fn orthogonal(&self) -> Self {
        Self::new(self.theta + FRAC_PI_2, self.delta)
    }

    /// Bloch vector (x, y, z) with z = +1 for H.
    pub fn bloch(&self) -> [f64; 3] {
        let (s2, c2) = (2.0 * self.theta).sin_cos();
        [s2 * self.delta.cos(), s2 * self.delta.sin(), c2]
    }

    /// Transfer matrix that sends this polarization to H and its orthogonal
    /// complement to V (up to a phase).
    pub fn rotation(&self) -> TwoModeUnitary {
        let (s, c) = self.theta.sin_cos();
        let e = Complex64::from_polar(1.0, -self.delta);
        [
            [Complex64::new(c, 0.0), e * s],
            [Complex64::new(-s, 0.0), e * c],
        ]
    }
}

/// Rotates `port` so that the analyzer's accepted polarization sits in H.
pub fn rotate_to_analyzer(
    s: &OccupationState,
    port: Port,
    a: AnalyzerSetting,
) -> Result<OccupationState> {
    s.apply_two_mode_unitary(port.h, port.v, &a.rotation())
}

/// Analyzer followed by threshold detectors of efficiency `eta_d` on both
/// outputs. Returns (click on the accepted port, click on the orthogonal port).
pub fn analyzer_povm(
    basis: Arc<FockBasis>,
    port: Port,
    a: AnalyzerSetting,
    eta_d: f64,
) -> Result<(FockOperator, FockOperator)> {
    check_unit("detector efficiency", eta_d)?;
    let reg = Arc::clone(basis.registry());
    let ih = reg.index_of(port.h)?;
    let iv = reg.index_of(port.v)?;
    let d = basis.dim();
    let rotated: Vec<OccupationState> = basis
        .states()
        .iter()
        .map(|occ| {
            let s = OccupationState::from_terms(
                Arc::clone(&reg),
                basis.cutoff(),
                [(occ.clone(), Complex64::new(1.0, 0.0))],
            )?;
            rotate_to_analyzer(&s, port, a)
        })
        .collect::<Result<_>>()?;
    let click = |n: u8| 1.0 - (1.0 - eta_d).powi(i32::from(n));
    let mut acc = DMatrix::zeros(d, d);
    let mut orth = DMatrix::zeros(d, d);
    for x in 0..d {
        for y in 0..d {
            let (mut p, mut q) = (Complex64::default(), Complex64::default());
            for (occ, ax) in rotated[x].iter() {
                let ay = rotated[y].amplitude(occ);
                let w = ax.conj() * ay;
                p += w * click(occ[ih]);
                q += w * click(occ[iv]);
            }
            acc[(x, y)] = p;
            orth[(x, y)] = q;
        }
    }
    Ok((
        FockOperator::new(Arc::clone(&basis), acc)?,
        FockOperator::new(basis, orth)?,
    ))
}

/// Attenuator specified in dB.
pub fn attenuate(rho: &DensityOperator, mode: ModeLabel, loss_db: f64) -> Result<DensityOperator> {
    rho.apply_loss(mode, crate::rates::db_to_eta(loss_db))
}
