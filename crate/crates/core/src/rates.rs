//! Closed-form distribution rates and rate-loss scaling.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, domain, Error, Result};

/// Loss in dB to transmittance.
pub fn db_to_eta(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

pub fn eta_to_db(eta: f64) -> f64 {
    -10.0 * eta.log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub alpha2: f64,
    pub gamma2: f64,
    /// Pair-generation probability of the comparison protocols.
    pub r_gen: f64,
    pub eta_lc: f64,
    pub eta_d: f64,
    pub f_rep: f64,
    /// Unknown proportionality constant of the GHZ rate.
    pub kappa_ghz: f64,
}

impl Default for RateParams {
    fn default() -> Self {
        Self::new(0.10, 6.0e-3, 0.2, 0.12, 1e9)
    }
}

impl RateParams {
    /// `r_gen` tied to `alpha2`, `kappa_ghz = 1`.
    pub fn new(alpha2: f64, gamma2: f64, eta_lc: f64, eta_d: f64, f_rep: f64) -> Self {
        Self {
            alpha2,
            gamma2,
            r_gen: alpha2,
            eta_lc,
            eta_d,
            f_rep,
            kappa_ghz: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("alpha2", self.alpha2),
            ("gamma2", self.gamma2),
            ("r_gen", self.r_gen),
            ("eta_lc", self.eta_lc),
            ("eta_d", self.eta_d),
        ] {
            check_unit(n, v)?;
        }
        if !(self.f_rep > 0.0 && self.f_rep.is_finite()) {
            return Err(domain("f_rep", self.f_rep, "(0, inf)"));
        }
        if !(self.kappa_ghz > 0.0 && self.kappa_ghz.is_finite()) {
            return Err(domain("kappa_ghz", self.kappa_ghz, "(0, inf)"));
        }
        Ok(())
    }
}

/// `|alpha|^2 |gamma|^2 sqrt(eta_c) eta_lc^2 eta_d^3 f_rep`
pub fn rate_hybrid(p: &RateParams, eta_c: f64) -> f64 {
    p.alpha2 * p.gamma2 * eta_c.sqrt() * p.eta_lc.powi(2) * p.eta_d.powi(3) * p.f_rep
}

/// `R_gen eta_c eta_d^2 f_rep`
pub fn rate_direct(p: &RateParams, eta_c: f64) -> f64 {
    p.r_gen * eta_c * p.eta_d.powi(2) * p.f_rep
}

/// `R_gen^2 eta_c eta_d^4 eta_lc^2 f_rep / 2`
pub fn rate_pol_swap(p: &RateParams, eta_c: f64) -> f64 {
    0.5 * p.r_gen.powi(2) * eta_c * p.eta_d.powi(4) * p.eta_lc.powi(2) * p.f_rep
}

/// Four-party W state: `|alpha|^6 |gamma|^2 eta_c^{1/4} f_rep`
pub fn rate_w(p: &RateParams, eta_c: f64) -> f64 {
    p.alpha2.powi(3) * p.gamma2 * eta_c.powf(0.25) * p.f_rep
}

/// Four-party GHZ state: `kappa |alpha|^4 |gamma|^4 sqrt(eta_c) f_rep`
pub fn rate_ghz(p: &RateParams, eta_c: f64) -> f64 {
    p.kappa_ghz * p.alpha2.powi(2) * p.gamma2.powi(2) * eta_c.sqrt() * p.f_rep
}

/// Direct-transmission reference for the multipartite comparison,
/// `eta_c f_rep`.
pub fn rate_direct_multipartite(p: &RateParams, eta_c: f64) -> f64 {
    eta_c * p.f_rep
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Hybrid,
    Direct,
    PolSwap,
    W,
    Ghz,
    DirectMultipartite,
}

impl Protocol {
    pub fn rate(self, p: &RateParams, eta_c: f64) -> f64 {
        match self {
            Protocol::Hybrid => rate_hybrid(p, eta_c),
            Protocol::Direct => rate_direct(p, eta_c),
            Protocol::PolSwap => rate_pol_swap(p, eta_c),
            Protocol::W => rate_w(p, eta_c),
            Protocol::Ghz => rate_ghz(p, eta_c),
            Protocol::DirectMultipartite => rate_direct_multipartite(p, eta_c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossGrid {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl Default for LossGrid {
    fn default() -> Self {
        Self {
            start_db: 0.0,
            stop_db: 120.0,
            step_db: 1.0,
        }
    }
}

impl LossGrid {
    /// Grid points including `stop_db` when it lies on the grid.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn points(&self) -> Result<Vec<f64>> {
        let span = self.stop_db - self.start_db;
        if !(self.step_db > 0.0) || !(span >= 0.0) || !span.is_finite() || self.start_db < 0.0 {
            return Err(domain("loss_grid", self.step_db, "start >= 0, step > 0, stop >= start"));
        }
        let n = (span / self.step_db + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| self.start_db + k as f64 * self.step_db).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub loss_db: f64,
    pub eta_c: f64,
    pub rate_hybrid_hz: f64,
    pub rate_direct_hz: f64,
    pub rate_polswap_hz: f64,
    pub rate_w_hz: f64,
    pub rate_ghz_hz: f64,
}

pub fn sweep_loss(p: &RateParams, loss_db: &[f64]) -> Vec<SweepRow> {
    loss_db
        .iter()
        .map(|&db| {
            let eta = db_to_eta(db);
            SweepRow {
                loss_db: db,
                eta_c: eta,
                rate_hybrid_hz: rate_hybrid(p, eta),
                rate_direct_hz: rate_direct(p, eta),
                rate_polswap_hz: rate_pol_swap(p, eta),
                rate_w_hz: rate_w(p, eta),
                rate_ghz_hz: rate_ghz(p, eta),
            }
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 7] = [
    "loss_db",
    "eta_c",
    "rate_hybrid_hz",
    "rate_direct_hz",
    "rate_polswap_hz",
    "rate_w_hz",
    "rate_ghz_hz",
];

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SWEEP_HEADER)?;
    for r in rows {
        wr.write_record(
            [
                r.loss_db,
                r.eta_c,
                r.rate_hybrid_hz,
                r.rate_direct_hz,
                r.rate_polswap_hz,
                r.rate_w_hz,
                r.rate_ghz_hz,
            ]
            .map(|v| format!("{v:e}")),
        )?;
    }
    wr.flush()?;
    Ok(())
}

/// Loss (dB) where the two protocols have equal rate, found by bisection on
/// the log-rate difference inside `[lo_db, hi_db]`.
pub fn crossover(p: &RateParams, a: Protocol, b: Protocol, lo_db: f64, hi_db: f64) -> Result<f64> {
    let diff = |db: f64| {
        let eta = db_to_eta(db);
        a.rate(p, eta).ln() - b.rate(p, eta).ln()
    };
    let (mut lo, mut hi) = (lo_db, hi_db);
    let (mut flo, fhi) = (diff(lo), diff(hi));
    if !(flo.is_finite() && fhi.is_finite()) || flo * fhi > 0.0 || (flo == 0.0 && fhi == 0.0) {
        return Err(Error::NoCrossing { lo_db, hi_db });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = diff(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Least-squares slope of `log10(rate)` against `log10(eta_c)`.
pub fn scaling_exponent(p: &RateParams, proto: Protocol, loss_db: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = loss_db
        .iter()
        .map(|&db| {
            let eta = db_to_eta(db);
            (eta.log10(), proto.rate(p, eta).log10())
        })
        .collect();
    log_slope(&pts)
}

/// Least-squares slope of `y` against `x`.
pub fn log_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unity() -> RateParams {
        RateParams::new(1.0, 1.0, 1.0, 1.0, 1e9)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn unity_parameters() {
        let p = unity();
        assert_eq!(rate_hybrid(&p, 1.0), 1e9);
        assert_eq!(rate_direct(&p, 1.0), 1e9);
        assert_eq!(rate_pol_swap(&p, 1.0), 5e8);
        assert_eq!(rate_w(&p, 1.0), 1e9);
        assert_eq!(rate_ghz(&p, 1.0), 1e9);
    }

    #[test]
    fn operating_point() {
        let p = RateParams::default();
        assert!(rel(rate_hybrid(&p, 0.066), 10.65) < 1e-3);
        assert!(rel(rate_direct(&p, 0.066), 9.504e4) < 1e-3);
        assert!(rel(rate_pol_swap(&p, 0.066), 2.737) < 1e-3);
        assert!(rel(rate_w(&p, 1e-4), 600.0) < 1e-12);
        assert!(rel(rate_ghz(&p, 1.0), 360.0) < 1e-12);
    }

    #[test]
    fn scaling_examples() {
        let p = RateParams::default();
        assert!(rel(rate_hybrid(&p, 0.0066) / rate_hybrid(&p, 0.66), 0.1) < 1e-12);
        assert!(rel(rate_direct(&p, 0.0066) / rate_direct(&p, 0.66), 0.01) < 1e-12);
        let grid: Vec<f64> = (20..=80).map(f64::from).collect();
        for (proto, s) in [
            (Protocol::Hybrid, 0.5),
            (Protocol::Direct, 1.0),
            (Protocol::PolSwap, 1.0),
            (Protocol::W, 0.25),
            (Protocol::Ghz, 0.5),
        ] {
            assert!((scaling_exponent(&p, proto, &grid) - s).abs() < 1e-6);
        }
    }

    #[test]
    fn crossovers() {
        let p = RateParams::default();
        let x = crossover(&p, Protocol::Hybrid, Protocol::Direct, 0.0, 200.0).unwrap();
        assert!((x - 90.81).abs() < 0.01, "{x}");
        let ideal = RateParams::new(0.1, 6e-3, 1.0, 1.0, 1e9);
        let x = crossover(&ideal, Protocol::Hybrid, Protocol::Direct, 0.0, 200.0).unwrap();
        assert!((x - 44.44).abs() < 0.01, "{x}");
        assert!(matches!(
            crossover(&p, Protocol::Direct, Protocol::Direct, 0.0, 200.0),
            Err(Error::NoCrossing { .. })
        ));
    }

    #[test]
    fn sweep_rows() {
        let p = RateParams::default();
        let pts = LossGrid::default().points().unwrap();
        assert_eq!(pts.len(), 121);
        let rows = sweep_loss(&p, &pts);
        assert_eq!(rows[0].eta_c, 1.0);
        assert!(rel(rows[20].rate_hybrid_hz / rows[0].rate_hybrid_hz, 0.1) < 1e-12);
        for w in rows.windows(2) {
            assert!(w[1].rate_hybrid_hz < w[0].rate_hybrid_hz);
            assert!(w[1].rate_w_hz < w[0].rate_w_hz);
        }
    }
}
