//! CHSH evaluation with Alice in {Q = H/V, R = +/-} and Bob in
//! {S = theta, T = -theta}.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::AnalyzerSetting;
use crate::qubit::QubitDensity;
use crate::tomography::MeasurementSetting;

/// Correlator `P(++) - P(+-) - P(-+) + P(--)` normalised by the coincidence
/// total, with `+1` assigned to the analyzer vector and `-1` to its
/// orthogonal partner.
pub fn correlator(rho: &QubitDensity, a: AnalyzerSetting, b: AnalyzerSetting) -> f64 {
    let p = |x: AnalyzerSetting, y: AnalyzerSetting| {
        rho.expectation(
            &MeasurementSetting {
                label: String::new(),
                a: x,
                b: y,
            }
            .projector(),
        )
    };
    let (ao, bo) = (a.orthogonal(), b.orthogonal());
    let (pp, pm, mp, mm) = (p(a, b), p(a, bo), p(ao, b), p(ao, bo));
    let total = pp + pm + mp + mm;
    if total <= 0.0 {
        return 0.0;
    }
    (pp - pm - mp + mm) / total
}

/// `|<QS> + <QT> + <RS> - <RT>|` at Bob angle `theta` (radians).
pub fn chsh_value(rho: &QubitDensity, theta: f64) -> Result<f64> {
    rho.validate()?;
    Ok(chsh_unchecked(rho, theta))
}

fn chsh_unchecked(rho: &QubitDensity, theta: f64) -> f64 {
    let q = AnalyzerSetting::linear(0.0);
    let r = AnalyzerSetting::linear(FRAC_PI_4);
    let s = AnalyzerSetting::linear(theta);
    let t = AnalyzerSetting::linear(-theta);
    (correlator(rho, q, s) + correlator(rho, q, t) + correlator(rho, r, s) - correlator(rho, r, t))
        .abs()
}

/// Scan grid in degrees; `stop` is excluded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaGrid {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl Default for ThetaGrid {
    fn default() -> Self {
        Self {
            start_deg: -90.0,
            stop_deg: 90.0,
            step_deg: 0.1,
        }
    }
}

impl ThetaGrid {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn points(&self) -> Result<Vec<f64>> {
        let span = self.stop_deg - self.start_deg;
        if !(self.step_deg > 0.0) || !(span > 0.0) || !span.is_finite() {
            return Err(Error::Domain {
                name: "theta_grid",
                value: self.step_deg,
                range: "step > 0 and stop > start",
            });
        }
        let n = (span / self.step_deg - 1e-9).ceil() as usize;
        Ok((0..n).map(|k| self.start_deg + k as f64 * self.step_deg).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshOptimum {
    pub theta_deg: f64,
    pub s: f64,
}

/// `(theta_deg, S)` for every grid point.
pub fn chsh_scan(rho: &QubitDensity, grid: &ThetaGrid) -> Result<Vec<(f64, f64)>> {
    rho.validate()?;
    let pts = grid.points()?;
    let eval = |&d: &f64| (d, chsh_unchecked(rho, d.to_radians()));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok(pts.par_iter().map(eval).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(pts.iter().map(eval).collect())
    }
}

/// Grid maximum (ties go to the smallest angle), refined by a parabola
/// through the best point and its neighbours.
pub fn chsh_optimize(rho: &QubitDensity, grid: &ThetaGrid) -> Result<ChshOptimum> {
    let scan = chsh_scan(rho, grid)?;
    let mut best = 0;
    for (k, &(_, s)) in scan.iter().enumerate() {
        if s > scan[best].1 + 1e-12 {
            best = k;
        }
    }
    let (theta0, s0) = scan[best];
    let mut opt = ChshOptimum {
        theta_deg: theta0,
        s: s0,
    };
    if best > 0 && best + 1 < scan.len() {
        let (ym, y0, yp) = (scan[best - 1].1, s0, scan[best + 1].1);
        let curv = ym - 2.0 * y0 + yp;
        if curv < 0.0 {
            let shift = 0.5 * (ym - yp) / curv;
            if shift.abs() <= 1.0 {
                let theta = theta0 + shift * grid.step_deg;
                let s = chsh_unchecked(rho, theta.to_radians());
                if s >= s0 {
                    opt = ChshOptimum { theta_deg: theta, s };
                }
            }
        }
    }
    Ok(opt)
}

pub fn write_scan_csv<W: std::io::Write>(scan: &[(f64, f64)], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["theta_deg", "S"])?;
    for (t, s) in scan {
        wr.write_record([format!("{t:.6}"), format!("{s:.12}")])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{ket, psi_plus};
    use num_complex::Complex64;
    use std::f64::consts::SQRT_2;

    #[test]
    fn bell_state_examples() {
        let r = QubitDensity::from_pure(&psi_plus());
        assert!((chsh_value(&r, (-22.5f64).to_radians()).unwrap() - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((chsh_value(&r, 0.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(chsh_value(&QubitDensity::maximally_mixed(), 0.3).unwrap().abs() < 1e-15);
    }

    #[test]
    fn optimizer_finds_bell_angle() {
        let r = QubitDensity::from_pure(&psi_plus());
        let o = chsh_optimize(&r, &ThetaGrid::default()).unwrap();
        assert!((o.theta_deg + 22.5).abs() < 0.01);
        assert!((o.s - 2.0 * SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn product_state_stays_classical() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let hh = QubitDensity::from_pure(&ket(c(1.0), c(0.0), c(0.0), c(0.0)));
        let o = chsh_optimize(&hh, &ThetaGrid::default()).unwrap();
        assert!((o.s - 2.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_state_is_rejected() {
        let bad = QubitDensity::new(nalgebra::Matrix4::identity());
        assert!(chsh_value(&bad, 0.0).is_err());
    }

    #[test]
    fn grid_has_expected_length() {
        assert_eq!(ThetaGrid::default().points().unwrap().len(), 1800);
        let g = ThetaGrid {
            start_deg: 0.0,
            stop_deg: 1.0,
            step_deg: 0.0,
        };
        assert!(g.points().is_err());
    }
}
