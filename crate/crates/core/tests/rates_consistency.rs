use hybrid_swap::rates::{
    rate_direct, rate_ghz, rate_hybrid, rate_pol_swap, rate_w, sweep_loss, LossGrid, RateParams,
};
use hybrid_swap::{run_swap, ChannelParams, SourceParams};
use proptest::prelude::*;

#[test]
fn closed_form_matches_simulated_herald() {
    let (a2, g2) = (1e-3, 1e-5);
    let s = SourceParams::from_intensities(a2, g2, 1.0, 4);
    let p = RateParams::new(a2, g2, 0.2, 0.12, 1e9);
    for eta in [1.0, 0.066, 1e-3] {
        let ch = ChannelParams { eta_c: eta, eta_lc: p.eta_lc, eta_d: p.eta_d, phase_drift_sigma: 0.0 };
        let r = run_swap(&s, &s, &ch).unwrap();
        let sim = r.herald_prob * p.eta_lc.powi(2) * p.eta_d.powi(2);
        let closed = rate_hybrid(&p, eta) / p.f_rep;
        assert!((sim / closed - 1.0).abs() < 0.05, "eta {eta}: {sim:e} vs {closed:e}");
    }
}

#[test]
fn sweep_rows_follow_grid() {
    let p = RateParams::default();
    let grid = LossGrid::default().points().unwrap();
    let rows = sweep_loss(&p, &grid);
    assert_eq!(rows.len(), 121);
    assert_eq!(rows[0].eta_c, 1.0);
    assert!((rows[20].rate_hybrid_hz / rows[0].rate_hybrid_hz - 0.1).abs() < 1e-12);
}

proptest! {
    #[test]
    fn rates_decrease_with_loss_and_scale_with_rep_rate(
        db in 0.0..119.0f64, step in 0.01..1.0f64, f in 1.0..1e10f64,
    ) {
        let mut p = RateParams::default();
        let (hi, lo) = (10f64.powf(-db / 10.0), 10f64.powf(-(db + step) / 10.0));
        for rate in [rate_hybrid, rate_direct, rate_pol_swap, rate_w, rate_ghz] {
            prop_assert!(rate(&p, lo) < rate(&p, hi));
        }
        let base = rate_hybrid(&p, hi);
        p.f_rep *= f;
        prop_assert!((rate_hybrid(&p, hi) / base - f).abs() < 1e-9 * f);
    }
}
