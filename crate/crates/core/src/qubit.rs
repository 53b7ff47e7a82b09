//! Two-qubit polarization states in the basis HH, HV, VH, VV.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Ket2 = Vector4<Complex64>;

pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn ket(hh: Complex64, hv: Complex64, vh: Complex64, vv: Complex64) -> Ket2 {
    Vector4::new(hh, hv, vh, vv)
}

/// `(|HV> + |VH>)/sqrt2`
pub fn psi_plus() -> Ket2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ket(c(0.0), c(s), c(s), c(0.0))
}

/// `(|HV> - |VH>)/sqrt2`
pub fn psi_minus() -> Ket2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ket(c(0.0), c(s), c(-s), c(0.0))
}

/// `(|HH> + |VV>)/sqrt2`
pub fn phi_plus() -> Ket2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ket(c(s), c(0.0), c(0.0), c(s))
}

/// `(|HH> - |VV>)/sqrt2`
pub fn phi_minus() -> Ket2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ket(c(s), c(0.0), c(0.0), c(-s))
}

/// Single-qubit Pauli matrices with Z = diag(1, -1) in (H, V).
pub fn pauli(k: usize) -> Matrix2<Complex64> {
    let (o, z, i) = (c(1.0), c(0.0), Complex64::i());
    match k {
        0 => Matrix2::new(o, z, z, o),
        1 => Matrix2::new(z, o, o, z),
        2 => Matrix2::new(z, -i, i, z),
        3 => Matrix2::new(o, z, z, -o),
        _ => panic!("Pauli index {k} out of range"),
    }
}

pub fn kron(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// Density operator of two polarization qubits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RhoJson", into = "RhoJson")]
pub struct QubitDensity {
    matrix: Matrix4<Complex64>,
}

impl QubitDensity {
    pub fn new(matrix: Matrix4<Complex64>) -> Self {
        Self { matrix }
    }

    pub fn from_pure(psi: &Ket2) -> Self {
        Self::new(psi * psi.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self::new(Matrix4::identity() * c(0.25))
    }

    /// `p |psi+><psi+| + (1-p) I/4`
    pub fn werner(p: f64) -> Self {
        Self::new(
            Self::from_pure(&psi_plus()).matrix * c(p) + Self::maximally_mixed().matrix * c(1.0 - p),
        )
    }

    /// Mixture of two density operators with weight `p` on `self`.
    pub fn mix(&self, other: &Self, p: f64) -> Self {
        Self::new(self.matrix * c(p) + other.matrix * c(1.0 - p))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn expectation(&self, op: &Matrix4<Complex64>) -> f64 {
        (op * self.matrix).trace().re
    }

    /// `<sigma_i (x) sigma_j>`
    pub fn correlator(&self, i: usize, j: usize) -> f64 {
        self.expectation(&kron(&pauli(i), &pauli(j)))
    }

    /// `<psi|rho|psi>`
    pub fn fidelity_pure(&self, psi: &Ket2) -> f64 {
        (psi.adjoint() * self.matrix * psi)[(0, 0)].re
    }

    /// Swaps the two qubits.
    pub fn swap_parties(&self) -> Self {
        const P: [usize; 4] = [0, 2, 1, 3];
        Self::new(Matrix4::from_fn(|r, col| self.matrix[(P[r], P[col])]))
    }

    pub fn eigenvalues(&self) -> Vector4<f64> {
        let h = (self.matrix + self.matrix.adjoint()) * c(0.5);
        h.symmetric_eigen().eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().min()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.matrix - self.matrix.adjoint()).camax()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
            && self.min_eigenvalue() >= -tol
            && (self.trace() - 1.0).abs() <= tol
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_valid(1e-9) {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "two-qubit operator is not a density matrix (trace {}, min eigenvalue {:e})",
                self.trace(),
                self.min_eigenvalue()
            )))
        }
    }

    /// `||a - b||_1 / 2`
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let d = self.matrix - other.matrix;
        let h = (d + d.adjoint()) * c(0.5);
        h.symmetric_eigen().eigenvalues.iter().map(|e| e.abs()).sum::<f64>() / 2.0
    }

    /// Hermitian, unit-trace part.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t.abs() < 1e-15 {
            return Err(Error::HeraldImpossible(t));
        }
        let h = (self.matrix + self.matrix.adjoint()) * c(0.5 / t);
        Ok(Self::new(h))
    }

    /// Random full-rank state from the Hilbert-Schmidt measure.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let g = Matrix4::from_fn(|_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = g * g.adjoint();
        let t = m.trace();
        Self::new(m / t)
    }

    /// Random pure product state.
    pub fn random_product<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut qubit = || {
            let v = nalgebra::Vector2::from_fn(|_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            v / c(v.norm())
        };
        let (a, b) = (qubit(), qubit());
        let psi = ket(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]);
        Self::from_pure(&psi)
    }
}

#[derive(Serialize, Deserialize)]
struct RhoJson {
    basis: Vec<String>,
    rho: Vec<Vec<[f64; 2]>>,
}

impl From<QubitDensity> for RhoJson {
    fn from(q: QubitDensity) -> Self {
        Self {
            basis: BASIS_LABELS.iter().map(|s| s.to_string()).collect(),
            rho: (0..4)
                .map(|r| (0..4).map(|k| [q.matrix[(r, k)].re, q.matrix[(r, k)].im]).collect())
                .collect(),
        }
    }
}

impl TryFrom<RhoJson> for QubitDensity {
    type Error = String;

    fn try_from(j: RhoJson) -> std::result::Result<Self, String> {
        if j.basis != BASIS_LABELS {
            return Err(format!("unexpected basis order {:?}", j.basis));
        }
        if j.rho.len() != 4 || j.rho.iter().any(|r| r.len() != 4) {
            return Err("rho must be 4x4".into());
        }
        Ok(Self::new(Matrix4::from_fn(|r, k| {
            Complex64::new(j.rho[r][k][0], j.rho[r][k][1])
        })))
    }
}
