use std::sync::OnceLock;

use xva_core::engine::{incremental_from_states, incremental_xva, run_engine, xva_profiles, EngineConfig, EngineInputs, Hyper, XvaRunState};
use xva_core::market::{simulate_defaults, simulate_risk_factors, CirParams, DefaultScenario, ModelParams, RiskFactorCube, ShockStructure, SimulationGrid};
use xva_core::portfolio::{build_mtm_cube, generate_portfolio, CollateralSpec, Direction, MtMCube, PortfolioSpec, Swap};
use xva_core::XvaError;

fn quick_config() -> EngineConfig {
    EngineConfig { hyper: Hyper::default().scaled_iterations(0.3), min_alive: 60, ..EngineConfig::default() }
}

fn flat_params(n_cpty: usize, gamma: f64) -> ModelParams {
    let mut p = ModelParams::desk(1, n_cpty, n_cpty);
    p.rates[0].vol = 0.0;
    for c in &mut p.intensities {
        *c = CirParams { kappa: 0.0, theta: gamma, sigma: 0.0, lambda0: gamma };
    }
    p
}

/// Cube with the same clean value and gap target on every path and time
/// before the horizon.
fn constant_mtm(n_paths: usize, n_times: usize, n_sets: usize, clean: f64, gap: f64) -> MtMCube {
    let mut c = vec![clean; n_paths * n_times * n_sets];
    let mut g = vec![gap; n_paths * n_times * n_sets];
    for p in 0..n_paths {
        for s in 0..n_sets {
            c[(p * n_times + n_times - 1) * n_sets + s] = 0.0;
            g[(p * n_times + n_times - 1) * n_sets + s] = 0.0;
        }
    }
    MtMCube::from_values(n_paths, n_times, n_sets, 2, 1, c, g)
}

struct Desk {
    cube: RiskFactorCube,
    shocks: ShockStructure,
    defaults: DefaultScenario,
    swaps: Vec<Swap>,
}

fn desk(paths: usize, horizon: f64, n_cpty: usize, n_trades: usize, seed: u64) -> Desk {
    let grid = SimulationGrid { horizon_years: horizon, fine_steps_per_year: 16, coarse_steps_per_year: 4, paths };
    let shocks = ShockStructure::desk(n_cpty);
    let mut params = ModelParams::desk(2, n_cpty, shocks.catalog_len());
    // a riskier book keeps enough defaults in a small sample
    for c in &mut params.intensities {
        c.theta *= 3.0;
        c.lambda0 *= 3.0;
    }
    let cube = simulate_risk_factors(&grid, &params, seed).unwrap();
    let defaults = simulate_defaults(&cube, &shocks, seed + 1).unwrap();
    let spec = PortfolioSpec {
        n_trades,
        n_counterparties: n_cpty,
        n_currencies: 2,
        resets_max: (horizon * 2.0) as usize,
        ..PortfolioSpec::desk()
    };
    let swaps = generate_portfolio(&spec, seed + 2).unwrap();
    Desk { cube, shocks, defaults, swaps }
}

fn run(d: &Desk, swaps: &[Swap], coll: &CollateralSpec, cfg: &EngineConfig) -> XvaRunState {
    let mtm = build_mtm_cube(&d.cube, &d.defaults, swaps, d.shocks.n_names).unwrap();
    run_engine(EngineInputs { cube: &d.cube, shocks: &d.shocks, mtm: &mtm, collateral: coll }, cfg).unwrap()
}

/// One realistic run shared by the invariant tests.
fn shared() -> &'static (Desk, XvaRunState) {
    static RUN: OnceLock<(Desk, XvaRunState)> = OnceLock::new();
    RUN.get_or_init(|| {
        let d = desk(768, 3.0, 3, 60, 11);
        let state = run(&d, &d.swaps.clone(), &CollateralSpec::with_csa(3, &[1]), &quick_config());
        (d, state)
    })
}

fn mean0(s: &xva_core::engine::Surface) -> f64 {
    xva_core::stats::mean(s.at(0))
}

#[test]
fn full_recovery_gives_zero_cva() {
    let mut d = desk(200, 2.0, 2, 20, 3);
    let mut params = d.cube.params().clone();
    params.counterparty_recovery = vec![1.0; 2];
    d.cube = simulate_risk_factors(d.cube.grid(), &params, 3).unwrap();
    let swaps = d.swaps.clone();
    let s = run(&d, &swaps, &CollateralSpec::with_csa(2, &[0]), &quick_config());
    assert!(s.cva.total.values().iter().all(|&v| v == 0.0));
    assert!(s.cva.losses.iter().flatten().flatten().all(|l| l.amount == 0.0));
}

#[test]
fn deterministic_exposure_cva_matches_closed_form() {
    let (gamma, e, r) = (0.03, 1000.0, 0.4);
    let grid = SimulationGrid { horizon_years: 5.0, fine_steps_per_year: 8, coarse_steps_per_year: 4, paths: 40 };
    let cube = simulate_risk_factors(&grid, &flat_params(1, gamma), 5).unwrap();
    let mtm = constant_mtm(40, 21, 1, e, e);
    let shocks = ShockStructure::singletons(1);
    let s = run_engine(EngineInputs { cube: &cube, shocks: &shocks, mtm: &mtm, collateral: &CollateralSpec::no_csa(1) }, &quick_config()).unwrap();
    let dt: f64 = 0.25;
    for i in [0usize, 5, 19] {
        // left-point sum of the default density over the remaining periods
        let discrete: f64 = (i..20).map(|j| (1.0 - r) * e * gamma * dt * (-gamma * dt * (j - i) as f64).exp()).sum();
        for p in [0, 17, 39] {
            let v = s.cva.total.get(p, i);
            assert!((v - discrete).abs() < 1e-9 * discrete, "i={i}: {v} vs {discrete}");
        }
    }
    let continuous = (1.0 - r) * e * (1.0 - (-gamma * 5.0f64).exp());
    let v = s.cva.total.get(0, 0);
    assert!((v - continuous).abs() < gamma * dt * continuous, "{v} vs {continuous}");
}

#[test]
fn csa_cva_vanishes_as_the_received_im_level_goes_to_one() {
    let d = desk(600, 2.0, 1, 30, 21);
    let swaps = d.swaps.clone();
    let cfg = quick_config();
    let nocsa = run(&d, &swaps, &CollateralSpec::no_csa(1), &cfg);
    let mut tight = CollateralSpec::with_csa(1, &[0]);
    tight.alpha_rim = 0.9999;
    tight.alpha_pim = 0.9999;
    let csa = run(&d, &swaps, &tight, &cfg);
    let (a, b) = (mean0(&csa.cva.total), mean0(&nocsa.cva.total));
    assert!(b > 0.0);
    assert!(a < 1e-3 * b, "{a} vs {b}");
}

fn mva_setup(gap: f64, bank_recovery: f64, gamma: f64) -> XvaRunState {
    let grid = SimulationGrid { horizon_years: 3.0, fine_steps_per_year: 8, coarse_steps_per_year: 4, paths: 30 };
    let mut params = flat_params(1, gamma);
    params.bank.recovery = bank_recovery;
    let cube = simulate_risk_factors(&grid, &params, 2).unwrap();
    let mtm = constant_mtm(30, 13, 1, 0.0, gap);
    let shocks = ShockStructure::singletons(1);
    let coll = CollateralSpec::with_csa(1, &[0]);
    run_engine(EngineInputs { cube: &cube, shocks: &shocks, mtm: &mtm, collateral: &coll }, &quick_config()).unwrap()
}

#[test]
fn constant_posted_im_gives_closed_form_mva() {
    let p = 500.0;
    let s = mva_setup(-p, 0.4, 0.0);
    let spread = 0.6 * 0.02;
    assert!((s.mva.total.get(0, 0) - spread * p * 3.0).abs() < 1e-9 * spread * p * 3.0);
    assert!((s.collateral.pim[0].get(4, 6) - p).abs() < 1e-9 * p);
    assert_eq!(s.collateral.rim[0].get(4, 6), 0.0);
    assert_eq!(s.collateral.pim[0].get(4, 12), 0.0);
}

#[test]
fn mva_vanishes_without_posted_im_or_with_full_bank_recovery() {
    let s = mva_setup(500.0, 0.4, 0.0);
    assert!(s.collateral.pim[0].values().iter().all(|&v| v == 0.0));
    assert!(s.mva.total.values().iter().all(|&v| v == 0.0));
    let s = mva_setup(-500.0, 1.0, 0.0);
    assert!(s.mva.total.values().iter().all(|&v| v == 0.0));
    assert!(s.fva.values().iter().all(|&v| v == 0.0));
}

#[test]
fn one_period_fva_matches_the_static_formula() {
    let (m, gamma) = (1000.0, 0.05);
    let grid = SimulationGrid { horizon_years: 0.25, fine_steps_per_year: 8, coarse_steps_per_year: 4, paths: 20 };
    let params = flat_params(1, gamma);
    let cube = simulate_risk_factors(&grid, &params, 2).unwrap();
    let mtm = constant_mtm(20, 2, 1, m, m);
    let shocks = ShockStructure::singletons(1);
    let s = run_engine(EngineInputs { cube: &cube, shocks: &shocks, mtm: &mtm, collateral: &CollateralSpec::no_csa(1) }, &quick_config()).unwrap();
    let cva = 0.6 * m * gamma * 0.25;
    let g = 0.25 * params.funding_spread();
    let expected = g / (1.0 + g) * (m - cva);
    assert!((s.cva.total.get(0, 0) - cva).abs() < 1e-9 * cva);
    assert!((s.naive.fva_no_capital.get(0, 0) - expected).abs() < 1e-9 * expected);
}

#[test]
fn no_funding_spread_and_no_hurdle_give_zero_fva_and_kva() {
    let d = desk(200, 2.0, 2, 20, 5);
    let mut params = d.cube.params().clone();
    params.bank.intensity = 0.0;
    params.hurdle = 0.0;
    let cube = simulate_risk_factors(d.cube.grid(), &params, 5).unwrap();
    let defaults = simulate_defaults(&cube, &d.shocks, 6).unwrap();
    let d = Desk { cube, defaults, ..d };
    let swaps = d.swaps.clone();
    let s = run(&d, &swaps, &CollateralSpec::with_csa(2, &[1]), &quick_config());
    assert!(s.fva.values().iter().all(|&v| v == 0.0));
    assert!(s.kva.values().iter().all(|&v| v == 0.0));
    assert!(s.mva.total.values().iter().all(|&v| v == 0.0));
    // the loss process no longer depends on the capital
    assert_eq!(s.snapshots[1].mean_loss, s.snapshots[0].mean_loss);
    assert!(s.diagnostics.converged);
}

#[test]
fn full_variation_margin_gives_zero_fva() {
    let d = desk(200, 2.0, 2, 20, 8);
    let swaps = d.swaps.clone();
    let s = run(&d, &swaps, &CollateralSpec::with_csa(2, &[0, 1]), &quick_config());
    assert!(s.balance.values().iter().all(|&v| v == 0.0));
    assert!(s.naive.fva_no_capital.values().iter().all(|&v| v == 0.0));
    assert!(s.fva.values().iter().all(|&v| v == 0.0));
}

#[test]
fn surfaces_vanish_at_the_horizon() {
    let (_, s) = shared();
    let n = s.times.len() - 1;
    let mut all = vec![&s.cva.total, &s.mva.total, &s.fva, &s.kva, &s.ec, &s.cr, &s.naive.kva, &s.naive.fva_no_offset];
    all.extend(s.collateral.pim.iter().chain(&s.collateral.rim).chain(&s.collateral.vm));
    for surf in all {
        assert!(surf.at(n).iter().all(|&v| v == 0.0));
    }
    assert_eq!(s.naive.ec_unconditional[n], 0.0);
}

#[test]
fn surfaces_are_non_negative() {
    let (_, s) = shared();
    let mut all = vec![&s.cva.total, &s.mva.total, &s.fva, &s.kva, &s.ec];
    all.extend(s.collateral.pim.iter().chain(&s.collateral.rim));
    for surf in all {
        assert!(surf.values().iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn semilinear_equations_hold_pathwise() {
    let (_, s) = shared();
    assert!(s.diagnostics.fva_residual < 1e-12, "{}", s.diagnostics.fva_residual);
    assert!(s.diagnostics.kva_residual < 1e-12, "{}", s.diagnostics.kva_residual);
}

#[test]
fn loss_process_is_centred() {
    let (_, s) = shared();
    let n = s.times.len();
    let horizon = s.times[n - 1];
    for snap in &s.snapshots {
        for i in (0..n).filter(|&i| s.times[i] >= horizon / 6.0) {
            let se = snap.stdev_loss[i] / (s.mtm.n_paths() as f64).sqrt();
            assert!(snap.mean_loss[i].abs() <= 3.0 * se + 1e-9, "k={} i={i}: {} vs se {se}", snap.iteration, snap.mean_loss[i]);
        }
    }
}

#[test]
fn offsets_and_capital_discounting_reduce_fva_and_kva() {
    let (_, s) = shared();
    let (a, b, c) = (s.naive.fva_no_offset.mean_profile(), s.naive.fva_no_capital.mean_profile(), s.fva.mean_profile());
    let (kn, kr) = (s.naive.kva.mean_profile(), s.kva.mean_profile());
    for i in 0..a.len() {
        assert!(a[i] >= b[i] && b[i] >= c[i], "i={i}: {} {} {}", a[i], b[i], c[i]);
        assert!(kn[i] >= kr[i], "i={i}: {} {}", kn[i], kr[i]);
    }
    assert!(a[0] > b[0] && b[0] > c[0] && kn[0] > kr[0]);
}

#[test]
fn profiles_cover_every_metric_with_ordered_bands() {
    let (_, s) = shared();
    let prof = xva_profiles(s);
    for name in ["mtm", "cva", "mva", "fva", "ec", "kva", "pim", "rim", "fva_no_offset", "kva_naive", "ec_unconditional", "pim_unconditional"] {
        let bands = prof.get(name).unwrap_or_else(|| panic!("{name}"));
        assert_eq!(bands.len(), s.times.len());
        assert!(bands.iter().all(|b| b.p05 <= b.p95));
    }
}

#[test]
fn conditional_posted_im_differs_from_the_unconditional_level() {
    let (_, s) = shared();
    let cond = s.pim_total().mean_profile();
    let unc = &s.naive.pim_unconditional;
    let n = cond.len() - 1;
    assert!((1..n).any(|i| (cond[i] - unc[i]).abs() > 0.02 * unc[i]), "{cond:?} vs {unc:?}");
    assert!((1..n).any(|i| s.pim_total().band(i).stdev > 0.0));
}

#[test]
fn runs_are_deterministic() {
    let d = desk(150, 1.0, 2, 10, 31);
    let swaps = d.swaps.clone();
    let coll = CollateralSpec::with_csa(2, &[0]);
    let a = run(&d, &swaps, &coll, &quick_config());
    let b = run(&d, &swaps, &coll, &quick_config());
    assert_eq!(a.fva, b.fva);
    assert_eq!(a.kva, b.kva);
    assert_eq!(a.cva.total, b.cva.total);
    assert_eq!(a.loss, b.loss);
}

#[test]
fn incremental_on_an_empty_book_is_the_standalone_run() {
    let d = desk(150, 2.0, 2, 6, 41);
    let coll = CollateralSpec::with_csa(2, &[1]);
    let cfg = quick_config();
    let (rep, _, after) = incremental_xva(&d.cube, &d.shocks, &d.defaults, &[], &d.swaps, &coll, &cfg).unwrap();
    let alone = run(&d, &d.swaps, &coll, &cfg);
    assert_eq!(after.cva.total, alone.cva.total);
    assert_eq!(rep.delta("cva").unwrap(), alone.cva.total.mean_profile().as_slice());
    assert_eq!(rep.delta("kva").unwrap(), alone.kva.mean_profile().as_slice());
    assert_eq!(rep.delta("fva").unwrap(), alone.fva.mean_profile().as_slice());
}

#[test]
fn trade_plus_mirror_changes_nothing() {
    let d = desk(200, 2.0, 2, 12, 51);
    let coll = CollateralSpec::with_csa(2, &[1]);
    let cfg = quick_config();
    let t = &d.swaps[0];
    let package = vec![t.clone(), t.mirror(1000)];
    let (rep, before, _) = incremental_xva(&d.cube, &d.shocks, &d.defaults, &d.swaps, &package, &coll, &cfg).unwrap();
    let scale = mean0(&before.cva.total);
    assert!(scale > 0.0);
    for (name, delta, _) in &rep.metrics {
        assert!(delta.iter().all(|v| v.abs() < 5e-3 * scale), "{name}: {delta:?}");
    }
    assert!(rep.delta_mtm.abs() < 1e-9 * t.notional);
}

#[test]
fn risk_reducing_trade_may_have_a_negative_price() {
    let d = desk(200, 2.0, 2, 12, 61);
    let coll = CollateralSpec::no_csa(2);
    let cfg = quick_config();
    // offset the largest receive-fixed trade of counterparty 0
    let t = d.swaps.iter().filter(|s| s.counterparty == 0 && s.direction == Direction::ReceiveFixed).max_by(|a, b| a.notional.total_cmp(&b.notional)).unwrap();
    let hedge = Swap { direction: Direction::PayFixed, id: 999, ..t.clone() };
    let (rep, _, _) = incremental_xva(&d.cube, &d.shocks, &d.defaults, &d.swaps, &[hedge], &coll, &cfg).unwrap();
    assert!(rep.ftp.is_finite());
    assert!((rep.ftp - (rep.delta0("cva") + rep.delta0("fva") + rep.delta0("mva") + rep.delta0("kva"))).abs() < 1e-9 * (1.0 + rep.ftp.abs()));
}

#[test]
fn runs_on_different_simulations_are_not_compared() {
    let d = desk(120, 1.0, 2, 6, 71);
    let e = desk(120, 1.0, 2, 6, 72);
    let coll = CollateralSpec::no_csa(2);
    let a = run(&d, &d.swaps, &coll, &quick_config());
    let b = run(&e, &e.swaps, &coll, &quick_config());
    assert!(matches!(incremental_from_states(&a, &b), Err(XvaError::RunMismatch(_))));
}
