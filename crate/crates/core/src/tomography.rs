//! Two-qubit polarization tomography: settings, count simulation, linear and
//! maximum-likelihood reconstruction, fidelity estimates.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::AnalyzerSetting;
use crate::qubit::{kron, pauli, psi_plus, QubitDensity};

/// Nominal acquisition time attached to simulated count records.
pub const DEFAULT_DURATION_S: f64 = 15.0;
pub const DEFAULT_MAX_ITER: usize = 5000;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const BOOTSTRAP_REPLICAS: usize = 250;

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSetting {
    pub label: String,
    pub a: AnalyzerSetting,
    pub b: AnalyzerSetting,
}

impl MeasurementSetting {
    /// Two-letter label such as `"HD"` or `"RL"`.
    pub fn from_label(label: &str) -> Result<Self> {
        let mut chars = label.chars();
        let (Some(x), Some(y), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(Error::UnknownSetting(label.to_string()));
        };
        let look = |ch| AnalyzerSetting::from_letter(ch).ok_or_else(|| Error::UnknownSetting(label.to_string()));
        Ok(Self {
            label: label.to_string(),
            a: look(x)?,
            b: look(y)?,
        })
    }

    /// Projector `|a><a| (x) |b><b|`.
    pub fn projector(&self) -> Matrix4<Complex64> {
        kron(&projector1(&self.a), &projector1(&self.b))
    }
}

fn projector1(a: &AnalyzerSetting) -> Matrix2<Complex64> {
    let v = nalgebra::Vector2::from(a.vector());
    v * v.adjoint()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SettingSet {
    /// Every pair from {H, V, D, A, R, L}.
    Full36,
    /// Minimal informationally complete set.
    Minimal16,
}

pub fn settings(set: SettingSet) -> Vec<MeasurementSetting> {
    let labels: Vec<String> = match set {
        SettingSet::Full36 => {
            let l = "HVDARL";
            l.chars()
                .flat_map(|x| l.chars().map(move |y| format!("{x}{y}")))
                .collect()
        }
        SettingSet::Minimal16 => [
            "HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH", "DR", "DD", "RD", "HD", "VD", "VL",
            "HL", "RL",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    };
    labels
        .iter()
        .map(|l| MeasurementSetting::from_label(l).expect("static labels are valid"))
        .collect()
}

/// Born-rule coincidence probability for each setting.
pub fn expected_probs(rho: &QubitDensity, settings: &[MeasurementSetting]) -> Vec<f64> {
    settings
        .iter()
        .map(|s| rho.expectation(&s.projector()).clamp(0.0, 1.0))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: String,
    pub counts: u64,
    pub duration_s: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expected_rate: Option<f64>,
}

/// Poisson counts with mean `prob * shots`. Setting `k` draws from stream `k`
/// of the seeded generator, so results do not depend on evaluation order.
pub fn sample_counts(
    settings: &[MeasurementSetting],
    probs: &[f64],
    shots_per_setting: u64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    if settings.len() != probs.len() {
        return Err(Error::InvalidState("one probability per setting required".into()));
    }
    settings
        .iter()
        .zip(probs)
        .enumerate()
        .map(|(k, (s, &p))| {
            let mean = p * shots_per_setting as f64;
            Ok(CountRecord {
                setting: s.label.clone(),
                counts: poisson(mean, seed, k as u64)?,
                duration_s: DEFAULT_DURATION_S,
                expected_rate: Some(mean / DEFAULT_DURATION_S),
            })
        })
        .collect()
}

fn poisson(mean: f64, seed: u64, stream: u64) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let d = Poisson::new(mean).map_err(|e| Error::Numerical(format!("Poisson mean {mean}: {e}")))?;
    Ok(d.sample(&mut rng) as u64)
}

pub fn write_counts_csv<W: std::io::Write>(records: &[CountRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["setting", "counts", "duration_s"])?;
    for r in records {
        wr.write_record([r.setting.clone(), r.counts.to_string(), r.duration_s.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_counts_csv<R: std::io::Read>(r: R) -> Result<Vec<CountRecord>> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or_default();
        out.push(CountRecord {
            setting: field(0).to_string(),
            counts: field(1)
                .parse()
                .map_err(|_| Error::InvalidState(format!("bad count {:?}", field(1))))?,
            duration_s: field(2)
                .parse()
                .map_err(|_| Error::InvalidState(format!("bad duration {:?}", field(2))))?,
            expected_rate: None,
        });
    }
    Ok(out)
}

fn resolve(records: &[CountRecord]) -> Result<(Vec<MeasurementSetting>, Vec<f64>)> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let settings = records
        .iter()
        .map(|r| MeasurementSetting::from_label(&r.setting))
        .collect::<Result<_>>()?;
    Ok((settings, records.iter().map(|r| r.counts as f64).collect()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearReconstruction {
    pub rho: QubitDensity,
    /// False when the estimate has a negative eigenvalue below -1e-9.
    pub physical: bool,
}

/// Least-squares fit of the 16 Pauli moments to the counts, normalized to
/// unit trace. The result is Hermitian but not necessarily positive.
pub fn reconstruct_linear(records: &[CountRecord]) -> Result<LinearReconstruction> {
    let (settings, counts) = resolve(records)?;
    reconstruct_linear_weights(&settings, &counts)
}

/// Linear inversion from non-negative weights (counts or probabilities).
pub fn reconstruct_linear_weights(
    rows: &[MeasurementSetting],
    weights: &[f64],
) -> Result<LinearReconstruction> {
    if rows.is_empty() {
        return Err(Error::EmptyRecords);
    }
    if rows.len() != weights.len() {
        return Err(Error::InvalidState("one weight per setting required".into()));
    }
    let mut design = DMatrix::<f64>::zeros(rows.len(), 16);
    let mut y = DVector::<f64>::zeros(rows.len());
    for (k, (s, &w)) in rows.iter().zip(weights).enumerate() {
        let (ba, bb) = (bloch4(&s.a), bloch4(&s.b));
        for mu in 0..4 {
            for nu in 0..4 {
                design[(k, 4 * mu + nu)] = 0.25 * ba[mu] * bb[nu];
            }
        }
        y[k] = w;
    }
    let svd = design.svd(true, true);
    if svd.rank(1e-10) < 16 {
        return Err(Error::Numerical("settings are not informationally complete".into()));
    }
    let x = svd
        .solve(&y, 1e-12)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    if x[0] <= 0.0 {
        return Err(Error::ZeroCounts);
    }
    let mut m = Matrix4::<Complex64>::zeros();
    for mu in 0..4 {
        for nu in 0..4 {
            m += kron(&pauli(mu), &pauli(nu)) * Complex64::new(x[4 * mu + nu] / (4.0 * x[0]), 0.0);
        }
    }
    let rho = QubitDensity::new((m + m.adjoint()) * Complex64::new(0.5, 0.0));
    Ok(LinearReconstruction {
        physical: rho.min_eigenvalue() >= -1e-9,
        rho,
    })
}

fn bloch4(a: &AnalyzerSetting) -> [f64; 4] {
    let [x, y, z] = a.bloch();
    [1.0, x, y, z]
}

fn herm_pow(m: &Matrix4<Complex64>, p: f64) -> Matrix4<Complex64> {
    let e = m.symmetric_eigen();
    let d = Matrix4::from_diagonal(&e.eigenvalues.map(|l| Complex64::new(l.max(0.0).powf(p), 0.0)));
    e.eigenvectors * d * e.eigenvectors.adjoint()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleReport {
    pub rho: QubitDensity,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
}

pub fn reconstruct_mle(records: &[CountRecord], max_iter: usize, tol: f64) -> Result<MleReport> {
    reconstruct_mle_from(records, None, max_iter, tol)
}

pub fn reconstruct_mle_from(
    records: &[CountRecord],
    start: Option<&QubitDensity>,
    max_iter: usize,
    tol: f64,
) -> Result<MleReport> {
    let (settings, counts) = resolve(records)?;
    reconstruct_mle_weights(&settings, &counts, start, max_iter, tol)
}

/// Iterative `R rho R` maximum-likelihood estimate. Steps that would lower
/// the likelihood are replaced by diluted steps `(I + eps R)/(1 + eps)` with
/// `eps` starting at 0.1 and halving, so the likelihood never decreases.
pub fn reconstruct_mle_weights(
    settings: &[MeasurementSetting],
    weights: &[f64],
    start: Option<&QubitDensity>,
    max_iter: usize,
    tol: f64,
) -> Result<MleReport> {
    if settings.is_empty() {
        return Err(Error::EmptyRecords);
    }
    if settings.len() != weights.len() {
        return Err(Error::InvalidState("one weight per setting required".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroCounts);
    }
    let data: Vec<(Matrix4<Complex64>, f64)> = settings
        .iter()
        .zip(weights)
        .map(|(s, &w)| (s.projector(), w))
        .collect();
    let g: Matrix4<Complex64> = data.iter().map(|(p, _)| p).sum();
    let g_half = herm_pow(&g, 0.5);
    let g_inv_half = herm_pow(&g, -0.5);
    // Completed POVM: sum_s pi_s = I on the measured support.
    let povm: Vec<(Matrix4<Complex64>, f64)> = data
        .iter()
        .map(|(p, n)| (g_inv_half * p * g_inv_half, n / total))
        .collect();
    let loglik = |s: &Matrix4<Complex64>| -> f64 {
        povm.iter()
            .filter(|(_, f)| *f > 0.0)
            .map(|(pi, f)| f * (pi * s).trace().re.max(1e-300).ln())
            .sum()
    };
    let r_op = |s: &Matrix4<Complex64>| -> Matrix4<Complex64> {
        povm.iter()
            .filter(|(_, f)| *f > 0.0)
            .map(|(pi, f)| pi * Complex64::new(f / (pi * s).trace().re.max(1e-300), 0.0))
            .sum()
    };
    let normalize = |m: Matrix4<Complex64>| -> Matrix4<Complex64> {
        let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let t = h.trace();
        h / t
    };

    let mut sigma = match start {
        Some(r) => normalize(g_half * r.matrix() * g_half),
        None => normalize(g),
    };
    let mut ll = loglik(&sigma);
    let id = Matrix4::<Complex64>::identity();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let r = r_op(&sigma);
        let grad = ((r - id) * sigma).norm();
        if grad < tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut next = normalize(r * sigma * r);
        let mut next_ll = loglik(&next);
        let mut eps = 0.1;
        while next_ll < ll && eps > 1e-12 {
            let re = (id + r * Complex64::new(eps, 0.0)) / Complex64::new(1.0 + eps, 0.0);
            next = normalize(re * sigma * re);
            next_ll = loglik(&next);
            eps *= 0.5;
        }
        if next_ll < ll {
            converged = true;
            break;
        }
        sigma = next;
        ll = next_ll;
    }
    let rho = QubitDensity::new(normalize(g_inv_half * sigma * g_inv_half));
    Ok(MleReport {
        rho,
        iterations,
        converged,
        log_likelihood: ll,
    })
}

/// `<psi|rho|psi>`
pub fn state_fidelity(rho: &QubitDensity, target: &crate::qubit::Ket2) -> f64 {
    rho.fidelity_pure(target)
}

/// `(-<ZZ> + <XX>)/2`, a lower bound on the overlap with `|psi+>`.
pub fn fidelity_lower_bound(rho: &QubitDensity) -> f64 {
    (-rho.correlator(3, 3) + rho.correlator(1, 1)) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicas: usize,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
}

/// Parametric bootstrap: every count is redrawn from a Poisson distribution
/// with the observed value as its mean and the MLE is recomputed (warm
/// started from `rho`). Replica `r`, setting `k` uses stream `r * n + k`.
pub fn bootstrap_fidelity(
    records: &[CountRecord],
    rho: &QubitDensity,
    replicas: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    let n = records.len() as u64;
    let one = |r: usize| -> Result<f64> {
        let resampled = records
            .iter()
            .enumerate()
            .map(|(k, rec)| {
                Ok(CountRecord {
                    counts: poisson(rec.counts as f64, seed, r as u64 * n + k as u64)?,
                    ..rec.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let fit = reconstruct_mle_from(&resampled, Some(rho), 500, 1e-8)?;
        Ok(fit.rho.fidelity_pure(&psi_plus()))
    };
    #[cfg(feature = "parallel")]
    let fids: Vec<f64> = {
        use rayon::prelude::*;
        (0..replicas).into_par_iter().map(one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let fids: Vec<f64> = (0..replicas).map(one).collect::<Result<_>>()?;
    let mean = fids.iter().sum::<f64>() / replicas.max(1) as f64;
    let var = fids.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (replicas.max(2) - 1) as f64;
    Ok(BootstrapSummary {
        replicas,
        fidelity_mean: mean,
        fidelity_std: var.sqrt(),
    })
}

/// Exact (noise-free) records: counts proportional to the probabilities.
/// Probabilities are scaled by `scale` and rounded.
pub fn exact_records(settings: &[MeasurementSetting], probs: &[f64], scale: f64) -> Vec<CountRecord> {
    settings
        .iter()
        .zip(probs)
        .map(|(s, p)| CountRecord {
            setting: s.label.clone(),
            counts: (p * scale).round() as u64,
            duration_s: DEFAULT_DURATION_S,
            expected_rate: None,
        })
        .collect()
}
