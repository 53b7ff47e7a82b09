use std::collections::BTreeMap;

use clap::ValueEnum;
use hybrid_swap::bell::{chsh_optimize, chsh_scan, write_scan_csv};
use hybrid_swap::qubit::{psi_minus, psi_plus, QubitDensity};
use hybrid_swap::rates::{
    crossover, eta_to_db, scaling_exponent, sweep_loss, write_sweep_csv, LossGrid, Protocol,
};
use hybrid_swap::sources::{
    default_theta_grid, extract_visibility, visibility_background, visibility_scan,
    DEFAULT_SCAN_POINTS,
};
use hybrid_swap::swap::{analytic_fidelity, analytic_herald, mismatch_fidelity};
use hybrid_swap::tomography::{
    bootstrap_fidelity, expected_probs, fidelity_lower_bound, reconstruct_linear, reconstruct_mle,
    sample_counts, settings, write_counts_csv, SettingSet, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use hybrid_swap::{run_swap, SourceParams};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{Emitter, Format};

/// Two-qubit state fed to `tomo` and `bell`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StateChoice {
    /// Heralded state from the full swap simulation.
    Swap,
    PsiPlus,
    /// `I/4`
    Mixed,
    /// `|psi+>` and `|psi->` mixed so that `<XX> = m_a m_b`.
    Mismatch,
}

impl StateChoice {
    fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

fn qubit_state(cfg: &ExperimentConfig, choice: StateChoice) -> Result<QubitDensity, CliError> {
    Ok(match choice {
        StateChoice::Swap => run_swap(&cfg.source_a(), &cfg.source_b(), &cfg.channel())?.rho_qubit,
        StateChoice::PsiPlus => QubitDensity::from_pure(&psi_plus()),
        StateChoice::Mixed => QubitDensity::maximally_mixed(),
        StateChoice::Mismatch => QubitDensity::from_pure(&psi_plus())
            .mix(&QubitDensity::from_pure(&psi_minus()), mismatch_fidelity(cfg.m_a, cfg.m_b)),
    })
}

#[derive(Serialize)]
struct AnalyticComparison {
    fidelity: f64,
    p_ideal: f64,
    p_noise: f64,
    mismatch_fidelity: f64,
}

#[derive(Serialize)]
struct SwapReport {
    fidelity: f64,
    sector_fidelity: f64,
    herald_prob: f64,
    click_prob: f64,
    qubit_weight: f64,
    linear_physical: bool,
    leakage: f64,
    eta_c: f64,
    analytic: Option<AnalyticComparison>,
    rho_qubit: QubitDensity,
}

pub fn swap(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<(), CliError> {
    let r = run_swap(&cfg.source_a(), &cfg.source_b(), &cfg.channel())?;
    let eta = cfg.eta_c();
    // The closed forms describe identical stations.
    let analytic = (cfg.alpha2_a == cfg.alpha2_b && cfg.gamma2_a == cfg.gamma2_b && cfg.alpha2_a > 0.0)
        .then(|| -> Result<_, CliError> {
            let (p_ideal, p_noise) = analytic_herald(cfg.alpha2_a, cfg.gamma2_a, eta);
            Ok(AnalyticComparison {
                fidelity: analytic_fidelity(cfg.alpha2_a, cfg.gamma2_a, eta)?,
                p_ideal,
                p_noise,
                mismatch_fidelity: mismatch_fidelity(cfg.m_a, cfg.m_b),
            })
        })
        .transpose()?;
    out.write_json("swap_rho.json", &r.rho_qubit)?;
    out.write_report(
        "swap_report",
        &SwapReport {
            fidelity: r.fidelity,
            sector_fidelity: r.sector_fidelity,
            herald_prob: r.herald_prob,
            click_prob: r.click_prob,
            qubit_weight: r.qubit_weight,
            linear_physical: r.linear_physical,
            leakage: r.leakage,
            eta_c: eta,
            analytic,
            rho_qubit: r.rho_qubit,
        },
    )
}

pub fn sweep(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<(), CliError> {
    let p = cfg.rate_params();
    p.validate()?;
    let rows = sweep_loss(&p, &cfg.loss_grid.points()?);
    match out.format {
        Format::Csv => {
            let mut body = Vec::new();
            write_sweep_csv(&rows, &mut body)?;
            out.write("rates_sweep.csv", &body)
        }
        Format::Json => out.write_json("rates_sweep.json", &rows),
    }
}

#[derive(Serialize)]
struct ProtocolRate {
    rate_hz: f64,
    exponent: f64,
}

#[derive(Serialize)]
struct RatesReport {
    eta_c: f64,
    loss_db: f64,
    kappa_ghz: f64,
    crossover_hybrid_direct_db: Option<f64>,
    rates: BTreeMap<String, ProtocolRate>,
}

/// Loss window of the scaling-exponent regression.
const EXPONENT_WINDOW: LossGrid = LossGrid {
    start_db: 20.0,
    stop_db: 80.0,
    step_db: 1.0,
};

/// Bracket searched for the hybrid/direct crossover.
const CROSSOVER_BRACKET_DB: (f64, f64) = (0.0, 200.0);

pub fn rates(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<(), CliError> {
    let p = cfg.rate_params();
    p.validate()?;
    let eta = cfg.eta_c();
    let window = EXPONENT_WINDOW.points()?;
    let rates = [
        Protocol::Hybrid,
        Protocol::Direct,
        Protocol::PolSwap,
        Protocol::W,
        Protocol::Ghz,
        Protocol::DirectMultipartite,
    ]
    .into_iter()
    .map(|proto| -> Result<_, CliError> {
        let name = serde_json::to_value(proto)?.as_str().unwrap_or_default().to_string();
        let rate = ProtocolRate {
            rate_hz: proto.rate(&p, eta),
            exponent: scaling_exponent(&p, proto, &window),
        };
        Ok((name, rate))
    })
    .collect::<Result<_, _>>()?;
    let (lo, hi) = CROSSOVER_BRACKET_DB;
    let cross = match crossover(&p, Protocol::Hybrid, Protocol::Direct, lo, hi) {
        Ok(db) => Some(db),
        Err(hybrid_swap::Error::NoCrossing { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    out.write_report(
        "rates_report",
        &RatesReport {
            eta_c: eta,
            loss_db: eta_to_db(eta),
            kappa_ghz: p.kappa_ghz,
            crossover_hybrid_direct_db: cross,
            rates,
        },
    )
}

#[derive(Serialize)]
struct TomoReport {
    state: String,
    settings: usize,
    shots_per_setting: u64,
    fidelity: f64,
    fidelity_lower_bound: f64,
    true_fidelity: f64,
    linear_fidelity: f64,
    linear_physical: bool,
    mle_iterations: usize,
    mle_converged: bool,
    bootstrap_replicas: usize,
    bootstrap_fidelity_mean: f64,
    bootstrap_fidelity_std: f64,
}

pub struct TomoOptions {
    pub state: StateChoice,
    pub minimal: bool,
    pub replicas: usize,
}

pub fn tomo(cfg: &ExperimentConfig, opts: &TomoOptions, out: &mut Emitter) -> Result<(), CliError> {
    let seed = cfg
        .seed
        .ok_or_else(|| CliError::Config("tomo samples counts and needs a seed".into()))?;
    let rho = qubit_state(cfg, opts.state)?;
    let set = settings(if opts.minimal { SettingSet::Minimal16 } else { SettingSet::Full36 });
    let records = sample_counts(&set, &expected_probs(&rho, &set), cfg.shots_per_setting, seed)?;
    let lin = reconstruct_linear(&records)?;
    let mle = reconstruct_mle(&records, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
    let boot = bootstrap_fidelity(&records, &mle.rho, opts.replicas, seed)?;
    let target = psi_plus();

    let mut counts = Vec::new();
    write_counts_csv(&records, &mut counts)?;
    out.write("tomo_counts.csv", &counts)?;
    out.write_json("tomo_rho.json", &mle.rho)?;
    out.write_report(
        "tomo_report",
        &TomoReport {
            state: opts.state.name(),
            settings: set.len(),
            shots_per_setting: cfg.shots_per_setting,
            fidelity: mle.rho.fidelity_pure(&target),
            fidelity_lower_bound: fidelity_lower_bound(&mle.rho),
            true_fidelity: rho.fidelity_pure(&target),
            linear_fidelity: lin.rho.fidelity_pure(&target),
            linear_physical: lin.physical,
            mle_iterations: mle.iterations,
            mle_converged: mle.converged,
            bootstrap_replicas: boot.replicas,
            bootstrap_fidelity_mean: boot.fidelity_mean,
            bootstrap_fidelity_std: boot.fidelity_std,
        },
    )
}

#[derive(Serialize)]
struct BellReport {
    state: String,
    theta_star_deg: f64,
    s_star: f64,
    violates: bool,
}

pub fn bell(cfg: &ExperimentConfig, state: StateChoice, out: &mut Emitter) -> Result<(), CliError> {
    let rho = qubit_state(cfg, state)?;
    let scan = chsh_scan(&rho, &cfg.theta_grid)?;
    let opt = chsh_optimize(&rho, &cfg.theta_grid)?;
    let mut body = Vec::new();
    write_scan_csv(&scan, &mut body)?;
    out.write("bell_scan.csv", &body)?;
    out.write_report(
        "bell_report",
        &BellReport {
            state: state.name(),
            theta_star_deg: opt.theta_deg,
            s_star: opt.s,
            violates: opt.s > 2.0,
        },
    )
}

/// Weak, balanced probe intensities of the fringe measurement
/// (`alpha2 = beta2`, `gamma2 = alpha2 * beta2`).
pub const PROBE_ALPHA2: f64 = 1e-4;
pub const PROBE_GAMMA2: f64 = 1e-8;

#[derive(Serialize)]
struct StationFit {
    m_injected: f64,
    m_estimate: f64,
    raw_visibility: f64,
    background_vv: f64,
    background_hh: f64,
    /// Visibility equals `M` only when this is 1.
    balance_ratio: f64,
}

#[derive(Serialize)]
struct VisibilityReport {
    probe_alpha2: f64,
    probe_gamma2: f64,
    points: usize,
    station_a: StationFit,
    station_b: StationFit,
}

fn fringe(m: f64, cutoff: u32, thetas: &[f64]) -> Result<(Vec<f64>, StationFit), CliError> {
    let p = SourceParams::from_intensities(PROBE_ALPHA2, PROBE_GAMMA2, m, cutoff).with_beta(PROBE_ALPHA2);
    let scan = visibility_scan(&p, thetas)?;
    let bg = visibility_background(&p)?;
    let fit = extract_visibility(thetas, &scan, Some(bg))?;
    let raw = extract_visibility(thetas, &scan, None)?;
    Ok((
        scan,
        StationFit {
            m_injected: m,
            m_estimate: fit.visibility,
            raw_visibility: raw.visibility,
            background_vv: bg.p_vv,
            background_hh: bg.p_hh,
            balance_ratio: p.balance_ratio(),
        },
    ))
}

pub fn visibility(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<(), CliError> {
    let thetas = default_theta_grid(DEFAULT_SCAN_POINTS);
    let (scan_a, fit_a) = fringe(cfg.m_a, cfg.cutoff, &thetas)?;
    let (scan_b, fit_b) = fringe(cfg.m_b, cfg.cutoff, &thetas)?;
    let mut body = String::from("theta_rad,coincidence_a,coincidence_b\n");
    for ((t, a), b) in thetas.iter().zip(&scan_a).zip(&scan_b) {
        body.push_str(&format!("{t:.12},{a:e},{b:e}\n"));
    }
    out.write("visibility_scan.csv", body.as_bytes())?;
    out.write_report(
        "visibility_report",
        &VisibilityReport {
            probe_alpha2: PROBE_ALPHA2,
            probe_gamma2: PROBE_GAMMA2,
            points: thetas.len(),
            station_a: fit_a,
            station_b: fit_b,
        },
    )
}
