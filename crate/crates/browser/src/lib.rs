//! WebAssembly entry points for the static demo page in `www/`.
//!
//! Every export returns flat `f64` arrays (Float64Array on the JS side) so the
//! page can draw them straight onto a canvas.

use hybrid_swap::bell::{chsh_optimize, chsh_scan, ThetaGrid};
use hybrid_swap::rates::{sweep_loss, LossGrid, RateParams};
use hybrid_swap::sources::{
    default_theta_grid, extract_visibility, visibility_background, visibility_scan,
};
use hybrid_swap::{run_swap, ChannelParams, SourceParams};
use wasm_bindgen::prelude::*;

/// Columns per row returned by [`rate_loss_curves`].
pub const RATE_COLUMNS: usize = 7;

/// Rows of `loss_db, eta_c, hybrid, direct, pol-swap, W, GHZ` (Hz), flattened.
pub fn rate_rows(alpha2: f64, gamma2: f64, eta_lc: f64, eta_d: f64, stop_db: f64) -> Result<Vec<f64>, String> {
    let p = RateParams::new(alpha2, gamma2, eta_lc, eta_d, 1e9);
    p.validate().map_err(|e| e.to_string())?;
    let grid = LossGrid { start_db: 0.0, stop_db, step_db: 1.0 };
    let rows = sweep_loss(&p, &grid.points().map_err(|e| e.to_string())?);
    Ok(rows
        .iter()
        .flat_map(|r| {
            [r.loss_db, r.eta_c, r.rate_hybrid_hz, r.rate_direct_hz, r.rate_polswap_hz, r.rate_w_hz, r.rate_ghz_hz]
        })
        .collect())
}

/// `S(theta)` of the heralded state on a 1-degree grid over [-90, 90),
/// followed by `theta*`, `S*` and the fidelity to `|psi+>`.
pub fn chsh_rows(alpha2: f64, gamma2: f64, m_a: f64, m_b: f64, eta_c: f64) -> Result<Vec<f64>, String> {
    let a = SourceParams::from_intensities(alpha2, gamma2, m_a, 4);
    let b = SourceParams::from_intensities(alpha2, gamma2, m_b, 4);
    let ch = ChannelParams { eta_c, ..Default::default() };
    let r = run_swap(&a, &b, &ch).map_err(|e| e.to_string())?;
    let grid = ThetaGrid { start_deg: -90.0, stop_deg: 90.0, step_deg: 1.0 };
    let scan = chsh_scan(&r.rho_qubit, &grid).map_err(|e| e.to_string())?;
    let opt = chsh_optimize(&r.rho_qubit, &ThetaGrid::default()).map_err(|e| e.to_string())?;
    let mut out: Vec<f64> = scan.iter().map(|&(_, s)| s).collect();
    out.extend([opt.theta_deg, opt.s, r.fidelity]);
    Ok(out)
}

/// Fringe coincidences at `points` phases over one period, followed by the
/// background-corrected visibility.
pub fn fringe_rows(m: f64, points: usize) -> Result<Vec<f64>, String> {
    let p = SourceParams::from_intensities(1e-4, 1e-8, m, 4).with_beta(1e-4);
    let thetas = default_theta_grid(points.max(3));
    let scan = visibility_scan(&p, &thetas).map_err(|e| e.to_string())?;
    let bg = visibility_background(&p).map_err(|e| e.to_string())?;
    let fit = extract_visibility(&thetas, &scan, Some(bg)).map_err(|e| e.to_string())?;
    let mut out = scan;
    out.push(fit.visibility);
    Ok(out)
}

#[wasm_bindgen]
pub fn rate_loss_curves(alpha2: f64, gamma2: f64, eta_lc: f64, eta_d: f64, stop_db: f64) -> Result<Vec<f64>, JsError> {
    rate_rows(alpha2, gamma2, eta_lc, eta_d, stop_db).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn chsh_curve(alpha2: f64, gamma2: f64, m_a: f64, m_b: f64, eta_c: f64) -> Result<Vec<f64>, JsError> {
    chsh_rows(alpha2, gamma2, m_a, m_b, eta_c).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn visibility_fringe(m: f64, points: usize) -> Result<Vec<f64>, JsError> {
    fringe_rows(m, points).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_rows_shape() {
        let v = rate_rows(0.1, 6e-3, 0.2, 0.12, 120.0).unwrap();
        assert_eq!(v.len(), 121 * RATE_COLUMNS);
        assert_eq!(v[1], 1.0);
        assert!(rate_rows(1.5, 6e-3, 0.2, 0.12, 120.0).is_err());
    }

    #[test]
    fn chsh_rows_end_with_optimum() {
        let v = chsh_rows(1e-3, 1e-6, 1.0, 1.0, 0.1).unwrap();
        assert_eq!(v.len(), 180 + 3);
        let (theta, s) = (v[180], v[181]);
        assert!(s > 2.7 && s <= 2.0 * std::f64::consts::SQRT_2 + 1e-9);
        assert!((theta + 22.5).abs() < 1.0);
        assert!(v[..180].iter().all(|&x| x <= s + 1e-9));
    }

    #[test]
    fn fringe_recovers_overlap() {
        let v = fringe_rows(0.9, 32).unwrap();
        assert_eq!(v.len(), 33);
        assert!((v[32] - 0.9).abs() < 1e-3);
    }
}
